"""Continued fractions and rational approximation of times t / 2 pi.

All convergents are exact integers; the input float is expanded as the exact
binary rational it stores, and the expansion is cut once a convergent rounds
back to the input (beyond that point the float carries no information).
"""
from __future__ import annotations

from dataclasses import dataclass
import random
from fractions import Fraction
from math import log, sqrt

import numpy as np

from .regularity import DEFAULT_SEED

__all__ = [
    "MAX_DEPTH",
    "PrecisionError",
    "ContinuedFractionExpansion",
    "DirichletApproximation",
    "WeylBoundReport",
    "continued_fraction",
    "dirichlet_q",
    "weyl_bound",
    "weyl_bound_report",
    "khinchin_levy_diagnostic",
    "is_generic_time",
    "sample_generic_times",
    "sample_uniform_fractions",
]

MAX_DEPTH = 40


class PrecisionError(ValueError):
    """The expansion ended (rational input or depth cap) before the requested scale."""


@dataclass(frozen=True)
class ContinuedFractionExpansion:
    value: Fraction
    quotients: tuple
    convergents: tuple
    terminated: bool
    degenerate: bool = False

    @property
    def denominators(self) -> list:
        return [c.denominator for c in self.convergents]

    def reconstruct(self) -> Fraction:
        """Value of the finite continued fraction [0; a_1, ..., a_d]."""
        acc = Fraction(0)
        for a in reversed(self.quotients):
            acc = 1 / (a + acc)
        return acc


def continued_fraction(x, depth: int = MAX_DEPTH) -> ContinuedFractionExpansion:
    """Euclidean expansion of x in (0, 1) into [0; a_1, a_2, ...].

    Fractions are expanded exactly and terminate. For floats the expansion
    stops at the first convergent that rounds to ``x``, which is flagged as
    ``terminated`` (the float is that rational to double precision).
    """
    if depth > MAX_DEPTH:
        raise ValueError(f"depth is capped at {MAX_DEPTH} for double-precision input")
    is_float = not isinstance(x, (Fraction, int))
    X = Fraction(x)
    if X <= 0 or X >= 1:
        return ContinuedFractionExpansion(X, (), (), True, degenerate=True)
    quotients, convergents = [], []
    p0, q0, p1, q1 = 0, 1, 1, 0  # p_{k-1}, q_{k-1}, p_{k-2}, q_{k-2}
    r = X
    terminated = False
    while len(quotients) < depth:
        inv = 1 / r
        a = inv.numerator // inv.denominator
        quotients.append(a)
        p0, q0, p1, q1 = a * p0 + p1, a * q0 + q1, p0, q0
        c = Fraction(p0, q0)
        convergents.append(c)
        r = inv - a
        if r == 0 or (is_float and float(c) == float(x)):
            terminated = True
            break
    return ContinuedFractionExpansion(X, tuple(quotients), tuple(convergents), terminated)


@dataclass(frozen=True)
class DirichletApproximation:
    p: int
    q: int
    within: bool  # q <= N^(1 + eps)


def dirichlet_q(x, N: int, eps: float = 0.2, depth: int = MAX_DEPTH) -> DirichletApproximation:
    """Smallest convergent denominator q >= N; |x - p/q| <= 1/q^2 holds by construction."""
    cf = continued_fraction(x, depth)
    for c in cf.convergents:
        if c.denominator >= N:
            return DirichletApproximation(c.numerator, c.denominator, c.denominator <= N ** (1 + eps))
    why = "expansion terminated (rational input)" if cf.terminated else f"depth {depth} exhausted"
    raise PrecisionError(f"no convergent denominator >= {N}: {why}")


def weyl_bound(N: int, q: int) -> float:
    """N / sqrt(q) + sqrt(N log q) + sqrt(q log q)."""
    if N < 1 or q < 1:
        raise ValueError("N and q must be >= 1")
    return N / sqrt(q) + sqrt(N * log(q)) + sqrt(q * log(q))


@dataclass(frozen=True)
class WeylBoundReport:
    N: int
    q: int
    bound: float
    measured: float


def weyl_bound_report(x: float, N: int, eps: float = 0.2) -> WeylBoundReport:
    """Compare the measured Weyl-sum supremum at t = 2 pi x against the bound at q = dirichlet_q."""
    from .linear import weyl_sum_sup

    d = dirichlet_q(x, N, eps)
    return WeylBoundReport(N, d.q, weyl_bound(N, d.q), weyl_sum_sup(2 * np.pi * x, N))


def khinchin_levy_diagnostic(x, depth: int = 30) -> list:
    """q_k^(1/k) for k = 1..depth (shorter if the expansion terminates)."""
    cf = continued_fraction(x, depth)
    return [q ** (1.0 / k) for k, q in enumerate(cf.denominators, start=1)]


def sample_uniform_fractions(n: int, seed: int = DEFAULT_SEED, bits: int = 256) -> list:
    """Seeded uniform draws in (0, 1) as exact binary fractions with ``bits`` bits.

    A double carries only about 20 meaningful partial quotients of a typical
    real; wider draws keep the expansion typical far beyond that depth.
    """
    rng = random.Random(seed)
    return [Fraction(rng.getrandbits(bits) | 1, 1 << bits) for _ in range(n)]


def is_generic_time(tau: float, resolution: int, max_quotient: int = 16) -> bool:
    """Screen t / 2 pi for irrational-type behaviour at a given mode resolution.

    Accepts ``tau`` when its expansion reaches a denominator above
    ``2 * resolution`` and every partial quotient met on the way is at most
    ``max_quotient``; a large quotient means ``tau`` sits unusually close to a
    rational with a small denominator, which looks quantized at this resolution.
    """
    cf = continued_fraction(float(tau) % 1.0)
    if cf.degenerate:
        return False
    for a, q in zip(cf.quotients, cf.denominators):
        if a > max_quotient:
            return False
        if q > 2 * resolution:
            return True
    return False


def sample_generic_times(n: int, resolution: int, seed: int = DEFAULT_SEED, max_quotient: int = 16, max_draws: int = 100000) -> np.ndarray:
    """Seeded uniform draws of t / 2 pi in (0, 1) kept only if :func:`is_generic_time`."""
    rng = np.random.default_rng(seed)
    out = []
    draws = 0
    while len(out) < n:
        if draws >= max_draws:
            raise RuntimeError("could not find enough screened times")
        tau = float(rng.uniform(0.0, 1.0))
        draws += 1
        if is_generic_time(tau, resolution, max_quotient):
            out.append(tau)
    return np.array(out)
