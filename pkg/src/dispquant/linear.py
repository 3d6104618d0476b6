"""Exact linear dispersive flows and rational-time quantization.

Sign conventions (pinned by tests):

* ``k = 2``: ``u_n(t) = exp(-i t n^2) u_n(0)``, the flow of ``i u_t + u_xx = 0``.
* ``k >= 3``: ``u_n(t) = exp(+i t n^k) u_n(0)``, the flow of ``i u_t + (-i d/dx)^k u = 0``.

Real times are floats ``t``; internally the phase uses ``tau = t / 2 pi`` as an
exact binary number, see :func:`dispquant.spectral.frac_phase`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .spectral import (
    GridField,
    SpectralField,
    StepFunction,
    _int_power,
    frac_phase,
    from_spectral,
    grid_points,
    step_fourier,
)
from ._validation import check_power_of_two

__all__ = [
    "SCHRODINGER_SIGN",
    "HIGHER_ORDER_SIGN",
    "DispersionLaw",
    "RationalTime",
    "TalbotDecomposition",
    "evolve_linear",
    "talbot_weights",
    "talbot_rational",
    "kernel_H",
    "kernel_H_points",
    "partial_sums_T",
    "kernel_H_by_parts",
    "evolve_via_kernel",
    "weyl_sum_sup",
    "density_spectrum",
    "admissible_eps",
    "density_bracket",
    "density_fourier_asymptotic",
    "set_S_density",
]

SCHRODINGER_SIGN = -1
HIGHER_ORDER_SIGN = +1


@dataclass(frozen=True)
class DispersionLaw:
    """Monomial dispersion of order ``k``; ``k = 2`` is the Schroedinger case."""

    k: int = 2

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"dispersion order must be an integer >= 2, got {self.k}")

    @property
    def sign(self) -> int:
        return SCHRODINGER_SIGN if self.k == 2 else HIGHER_ORDER_SIGN

    def phase_turns(self, n: np.ndarray, t) -> np.ndarray:
        """Phase of the multiplier in turns: ``sign * t n^k / 2 pi`` modulo 1."""
        n = np.asarray(n, dtype=np.int64)
        if isinstance(t, RationalTime):
            # exact residues a n^k mod q
            q = t.q
            if q < 2**31:
                base = n % q
                r = np.ones_like(base)
                for _ in range(self.k):
                    r = r * base % q
                r = r * (t.a % q) % q
            else:
                r = np.array([(t.a * pow(int(v), self.k, q)) % q for v in n], dtype=np.int64)
            return self.sign * r.astype(float) / q
        return self.sign * frac_phase(float(t) / (2 * np.pi), _int_power(n, self.k))

    def multiplier(self, n: np.ndarray, t) -> np.ndarray:
        return np.exp(2j * np.pi * self.phase_turns(n, t))


@dataclass(frozen=True)
class RationalTime:
    """The time ``t = 2 pi a / q`` with ``gcd(a, q) = 1``."""

    a: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("denominator q must be positive")
        if gcd(self.a, self.q) != 1:
            raise ValueError(f"{self.a}/{self.q} is not reduced")

    @classmethod
    def parse(cls, text: str) -> "RationalTime":
        a, _, q = text.partition("/")
        return cls(int(a), int(q or 1))

    @property
    def t(self) -> float:
        return 2 * np.pi * self.a / self.q

    @property
    def turns(self) -> Fraction:
        return Fraction(self.a, self.q)


@dataclass(frozen=True)
class TalbotDecomposition:
    """Weights of the translated copies ``g(x - 2 pi r / q)``, r = 0..q-1."""

    weights: np.ndarray
    q: int

    @property
    def shift_step(self) -> float:
        return 2 * np.pi / self.q


def _law(k) -> DispersionLaw:
    return k if isinstance(k, DispersionLaw) else DispersionLaw(int(k))


def evolve_linear(f: SpectralField, law=2, t=0.0) -> SpectralField:
    """Apply the linear propagator of order ``law`` for time ``t`` (float or RationalTime)."""
    law = _law(law)
    return SpectralField(f.coeffs * law.multiplier(f.modes, t))


def talbot_weights(rt: RationalTime) -> np.ndarray:
    """w_r = (1/q) sum_m exp(-2 pi i a m^2 / q + 2 pi i m r / q), from exact residues."""
    q = rt.q
    m = np.arange(q, dtype=np.int64)
    res = (rt.a % q) * (m * m % q) % q
    phases = np.exp(-2j * np.pi * res / q)
    return np.fft.ifft(phases)


def talbot_rational(g: StepFunction, rt: RationalTime, tol: float = 1e-13):
    """Schroedinger evolution of step data at ``t = 2 pi a / q`` as a finite superposition.

    Returns the decomposition and the evolved step function
    ``sum_r w_r g(x - 2 pi r / q)``. Weights below ``tol`` in modulus are exact
    zeros of the Gauss sum and are dropped.
    """
    w = talbot_weights(rt)
    dec = TalbotDecomposition(weights=w, q=rt.q)
    funcs, ws = [], []
    for r, wr in enumerate(w):
        if abs(wr) > tol:
            funcs.append(g.shift(Fraction(2 * r, rt.q)))
            ws.append(complex(wr))
    out = StepFunction.combine(funcs, ws)
    return dec, _snap_levels(out, tol=1e-12)


def _snap_levels(g: StepFunction, tol: float) -> StepFunction:
    """Merge adjacent levels that differ only by rounding."""
    levels = list(g.levels)
    scale = max(1.0, max(abs(v) for v in levels))
    for i in range(1, len(levels)):
        if abs(levels[i] - levels[i - 1]) <= tol * scale:
            levels[i] = levels[i - 1]
    out = [complex(round(v.real, 15), round(v.imag, 15)) for v in levels]
    return StepFunction(g.breaks, tuple(out))


# ---------------------------------------------------------------------------
# the kernel H_{N,t}


def _schrodinger_phases(t, n: np.ndarray) -> np.ndarray:
    return DispersionLaw(2).multiplier(n, t)


def kernel_H(t, N: int, M: int) -> GridField:
    """H_{N,t}(x) = sum_{0<|n|<=N} exp(-i t n^2 + i n x) / n on the M-point grid."""
    check_power_of_two(M, "M")
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(1, N + 1)
    h = _schrodinger_phases(t, n) / n
    bins = np.zeros(M, dtype=complex)
    np.add.at(bins, n % M, h)
    np.add.at(bins, (-n) % M, -h)
    return GridField(np.fft.ifft(bins) * M)


def _chunks(x: np.ndarray, N: int, budget: int = 2**22):
    step = max(1, budget // max(N, 1))
    for i in range(0, x.size, step):
        yield slice(i, i + step)


def kernel_H_points(t, N: int, x) -> np.ndarray:
    """Direct evaluation of H_{N,t} at arbitrary points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = np.arange(1, N + 1)
    ph = _schrodinger_phases(t, n) / n
    out = np.empty(x.size, dtype=complex)
    for sl in _chunks(x, N):
        s = np.sin(np.outer(x[sl], n))
        out[sl] = 2j * (s @ ph)
    return out


def partial_sums_T(t, N: int, x) -> np.ndarray:
    """T_{n,t}(x) = (1/n) sum_{m<=n} exp(-i t m^2) (e^{imx} - e^{-imx}), shape (N, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = np.arange(1, N + 1)
    ph = _schrodinger_phases(t, n)
    terms = 2j * ph[:, None] * np.sin(np.outer(n, x))
    return np.cumsum(terms, axis=0) / n[:, None]


def kernel_H_by_parts(t, N: int, x) -> np.ndarray:
    """Summation-by-parts form H_{N,t} = T_{N,t} + sum_{n<N} T_{n,t} / (n+1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.size, dtype=complex)
    for sl in _chunks(x, N, budget=2**21):
        T = partial_sums_T(t, N, x[sl])
        w = 1.0 / np.arange(2, N + 1)
        out[sl] = T[-1] + w @ T[:-1]
    return out


@dataclass(frozen=True)
class KernelEvolution:
    grid: GridField
    l2_tail_bound: float


def evolve_via_kernel(g: StepFunction, t, N: int, M: int) -> KernelEvolution:
    """Linear Schroedinger evolution as ``g_0 + (1 / 2 pi i) sum_j delta_j H_{N,t}(x - y_j)``.

    The convolution with the jump measure is done in physical space: the
    kernel is computed once on the grid and translated by rolling when the
    jump sits on a grid point, or evaluated directly otherwise. The returned
    bound controls the discarded modes |n| > N in the normalized L2 norm.
    """
    check_power_of_two(M, "M")
    x = grid_points(M)
    H = kernel_H(t, N, M).samples
    acc = np.full(M, g.mean(), dtype=complex)
    for y, delta in g.jumps():
        shift = y * M / 2
        if shift.denominator == 1:
            Hy = np.roll(H, int(shift))
        else:
            Hy = kernel_H_points(t, N, x - float(y) * np.pi)
        acc += delta / (2j * np.pi) * Hy
    bound = g.total_variation() / (2 * np.pi) * np.sqrt(2.0 / N)
    return KernelEvolution(GridField(acc), bound)


def weyl_sum_sup(t, N: int, oversample: int = 8) -> float:
    """max_x |sum_{n=1}^N exp(-i t n^2 + i n x)| over a grid of >= oversample*N points.

    Grid maxima bound the true supremum from below.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    M = 1 << int(np.ceil(np.log2(oversample * N)))
    n = np.arange(1, N + 1)
    bins = np.zeros(M, dtype=complex)
    bins[n % M] = _schrodinger_phases(t, n)
    return float(np.max(np.abs(np.fft.ifft(bins) * M)))


# ---------------------------------------------------------------------------
# density |u|^2


def density_spectrum(f: SpectralField) -> SpectralField:
    """Exact spectrum of |u|^2 for the trigonometric polynomial ``f`` (cutoff 2N)."""
    N = f.N
    M = 8 * N  # |u|^2 has modes up to 2N; 4N would fold +-2N onto each other
    u = np.fft.ifft(_bins(f, M)) * M
    h = np.fft.fft(np.abs(u) ** 2) / M
    n = np.arange(-2 * N, 2 * N + 1)
    return SpectralField(h[n % M])


def _bins(f: SpectralField, M: int) -> np.ndarray:
    bins = np.zeros(M, dtype=complex)
    bins[f.modes % M] = f.coeffs
    return bins


def admissible_eps(g: StepFunction) -> float:
    """Largest admissible window: min of piece lengths and of gaps between non-touching pieces."""
    pieces = g.pieces
    if not pieces:
        raise ValueError("zero function has no pieces")
    lengths = [float(b - a) * np.pi for a, b, _ in pieces]
    gaps = []
    for i, (_, b, _) in enumerate(pieces):
        a_next = pieces[i + 1][0] if i + 1 < len(pieces) else pieces[0][0] + 2
        if (a_next - b) % 2 != 0:
            gaps.append(float((a_next - b) % 2) * np.pi)
    return float(min(lengths + gaps))


def density_bracket(g: StepFunction) -> complex:
    """sum_l |c_l|^2 - sum_l c_l conj(c_{l-1}) [a_l == b_{l-1}] (cyclic in l)."""
    pieces = g.pieces
    total = sum(abs(c) ** 2 for _, _, c in pieces)
    for i, (a, _, c) in enumerate(pieces):
        _, b_prev, c_prev = pieces[i - 1]
        if a % 2 == b_prev % 2:
            total -= c * np.conj(c_prev)
    return complex(total)


def _turns(t) -> float:
    return float(t) / (2 * np.pi)


def density_fourier_asymptotic(g: StepFunction, t, k: int, eps: float | None = None):
    """Leading term of the k-th Fourier coefficient of |exp(i t d_xx) g|^2.

    Returns ``(predicted, valid)``. ``valid`` requires that K divides k, with
    K the least integer making every jump a multiple of 2 pi / K, and that
    ``(-2 k t) mod 2 pi`` lies in ``(0, eps)``. The prediction uses the
    indicator form

        -sin(k^2 t) / (pi k) * sum_{l,m} c_l conj(c_m)
            (chi_l((-2kt + b_m) mod 2 pi) - chi_l((-2kt + a_m) mod 2 pi)).
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    if not g.pieces:
        return 0j, False
    if eps is None:
        eps = 0.9 * admissible_eps(g)
    K = g.denominator()
    tau = _turns(t)
    s = frac_phase(tau, np.array([-2 * k]))[0] * 2 * np.pi
    valid = (k % K == 0) and (0 < s < eps)
    sk2 = np.sin(2 * np.pi * frac_phase(tau, _int_power(np.array([k]), 2))[0])
    total = 0j
    for a_l, b_l, c_l in g.pieces:
        lo, hi = float(a_l) * np.pi, float(b_l) * np.pi
        for a_m, b_m, c_m in g.pieces:
            pb = (s + float(b_m) * np.pi) % (2 * np.pi)
            pa = (s + float(a_m) * np.pi) % (2 * np.pi)
            chi_b = 1.0 if lo <= pb < hi else 0.0
            chi_a = 1.0 if lo <= pa < hi else 0.0
            total += c_l * np.conj(c_m) * (chi_b - chi_a)
    return complex(-sk2 / (np.pi * k) * total), bool(valid)


def set_S_density(g: StepFunction, t, k_max: int, eps: float | None = None) -> float:
    """Relative frequency of S = {k : K | k, (-2kt) mod 2pi in (0, eps), (k^2 t) mod 2pi in [pi/4, 3pi/4]}.

    Normalized by the number of multiples of K up to ``k_max``. Float times
    are rational; the estimate is meaningful only while k_max stays far below
    the denominators of the convergents of t / 2 pi.
    """
    K = g.denominator()
    if k_max < K:
        return 0.0
    if eps is None:
        eps = 0.9 * admissible_eps(g)
    k = np.arange(K, k_max + 1, K, dtype=np.int64)
    tau = _turns(t)
    s = frac_phase(tau, -2 * k) * 2 * np.pi
    r = frac_phase(tau, _int_power(k, 2)) * 2 * np.pi
    hit = (s > 0) & (s < eps) & (r >= np.pi / 4) & (r <= 3 * np.pi / 4)
    return float(np.count_nonzero(hit) / (k_max / K))
