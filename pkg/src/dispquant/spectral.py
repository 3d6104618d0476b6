"""Fourier representations of 2*pi-periodic functions.

Coefficients follow the normalization

    u_k = (1 / 2 pi) * integral_0^{2 pi} u(x) exp(-i k x) dx,   u(x) = sum_k u_k exp(i k x),

so a grid of M samples maps to ``fft(samples) / M``.
"""
from __future__ import annotations

import csv
import io
import json
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._validation import (
    as_pi_fraction,
    check_finite,
    check_power_of_two,
    check_samples,
)

__all__ = [
    "SpectralField",
    "GridField",
    "StepFunction",
    "to_spectral",
    "from_spectral",
    "step_fourier",
    "sobolev_norm",
    "mean_zero",
    "frac_phase",
    "grid_points",
]


def grid_points(M: int) -> np.ndarray:
    """Uniform grid x_j = 2 pi j / M."""
    return 2 * np.pi * np.arange(M) / M


def frac_phase(tau: float, m) -> np.ndarray:
    """Fractional part of ``tau * m`` for a float ``tau`` and integer array ``m``.

    ``tau`` is taken as the exact binary number it stores, so the product is
    reduced modulo 1 without the cancellation a plain ``tau * m`` suffers for
    large ``m``. Entries of ``m`` may wrap modulo 2**64 (e.g. ``n**4``); the
    result is unaffected because only ``m`` modulo the denominator of ``tau``
    matters.
    """
    num, den = float(tau).as_integer_ratio()
    num %= den
    m = np.asarray(m)
    if den <= 2**64:
        mask = np.uint64(den - 1)
        with np.errstate(over="ignore"):
            r = (np.uint64(num) * m.astype(np.uint64)) & mask
        return r.astype(float) / float(den)
    # tiny tau: denominator beyond 64 bits, fall back to Python integers
    flat = [(num * int(v)) % den / den for v in m.ravel()]
    return np.array(flat, dtype=float).reshape(m.shape)


def _int_power(n: np.ndarray, k: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        return n.astype(np.uint64) ** np.uint64(k)


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients for |n| <= N, stored in the order n = -N..N.

    Coefficients beyond the cutoff are zero; truncation is sharp.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValueError("coefficient array must be 1-D with odd length 2N+1")
        check_power_of_two((c.size - 1) // 2, "N")
        check_finite(c, "coeffs")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def coeff(self, n: int) -> complex:
        if abs(n) > self.N:
            return 0j
        return complex(self.coeffs[n + self.N])

    def positive(self) -> np.ndarray:
        """Coefficients for n = 1..N."""
        return self.coeffs[self.N + 1:]

    def negative(self) -> np.ndarray:
        """Coefficients for n = -1..-N (note the order)."""
        return self.coeffs[self.N - 1::-1]

    def is_real(self, tol: float = 1e-12) -> bool:
        """Whether the represented function is real-valued (conjugate symmetry)."""
        c = self.coeffs
        scale = max(1.0, float(np.max(np.abs(c))))
        return bool(np.max(np.abs(c - np.conj(c[::-1]))) <= tol * scale)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(coeffs)

    def resize(self, N: int) -> "SpectralField":
        """Zero-pad or sharply truncate to cutoff ``N``."""
        check_power_of_two(N, "N")
        out = np.zeros(2 * N + 1, dtype=complex)
        keep = min(N, self.N)
        out[N - keep:N + keep + 1] = self.coeffs[self.N - keep:self.N + keep + 1]
        return SpectralField(out)

    def derivative(self, order: int = 1) -> "SpectralField":
        return SpectralField(self.coeffs * (1j * self.modes) ** order)

    def conj(self) -> "SpectralField":
        """Spectrum of the complex conjugate function."""
        return SpectralField(np.conj(self.coeffs[::-1]))

    def real_part(self) -> "SpectralField":
        return SpectralField(0.5 * (self.coeffs + np.conj(self.coeffs[::-1])))

    def imag_part(self) -> "SpectralField":
        return SpectralField((self.coeffs - np.conj(self.coeffs[::-1])) / 2j)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        N = max(self.N, other.N)
        return SpectralField(self.resize(N).coeffs + other.resize(N).coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        N = max(self.N, other.N)
        return SpectralField(self.resize(N).coeffs - other.resize(N).coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.coeffs * scalar)

    __rmul__ = __mul__

    def l2(self) -> float:
        """l2 norm of the coefficients, i.e. the L2 norm for the measure dx / 2 pi."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def to_json(self) -> str:
        return json.dumps(
            {"N": self.N, "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        d = json.loads(text)
        c = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        if c.size != 2 * int(d["N"]) + 1:
            raise ValueError("length of re/im does not match N")
        return cls(c)

    @classmethod
    def zeros(cls, N: int) -> "SpectralField":
        return cls(np.zeros(2 * check_power_of_two(N, "N") + 1, dtype=complex))

    @classmethod
    def from_modes(cls, N: int, modes: dict) -> "SpectralField":
        c = np.zeros(2 * check_power_of_two(N, "N") + 1, dtype=complex)
        for n, v in modes.items():
            if abs(n) > N:
                raise ValueError(f"mode {n} exceeds cutoff {N}")
            c[n + N] = v
        return cls(c)


@dataclass(frozen=True)
class GridField:
    """Samples at x_j = 2 pi j / M."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(check_samples(self.samples), dtype=complex)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def M(self) -> int:
        return self.samples.size

    @property
    def x(self) -> np.ndarray:
        return grid_points(self.M)

    def l2(self) -> float:
        """Unnormalized L2 norm, (integral |u|^2 dx)^(1/2) by the rectangle rule."""
        return float(np.sqrt(2 * np.pi / self.M * np.sum(np.abs(self.samples) ** 2)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re", "im"])
        for x, v in zip(self.x, self.samples):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridField":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty grid CSV")
        re = np.array([float(r["re"]) for r in rows])
        im = np.array([float(r["im"]) for r in rows]) if "im" in rows[0] else 0.0
        return cls(re + 1j * im)


def to_spectral(g: GridField, N: int | None = None) -> SpectralField:
    """Discrete Fourier coefficients of grid samples.

    With the default ``N = M // 2`` nothing is lost: the unpaired Nyquist bin
    is split evenly between n = -M/2 and n = +M/2, which keeps real data
    conjugate-symmetric and round-trips exactly through :func:`from_spectral`.
    """
    if not isinstance(g, GridField):
        g = GridField(g)
    M = g.M
    full = np.fft.fft(g.samples) / M
    if N is None:
        N = M // 2
    check_power_of_two(N, "N")
    out = np.zeros(2 * N + 1, dtype=complex)
    keep = min(N, M // 2 - 1)
    n = np.arange(-keep, keep + 1)
    out[n + N] = full[n % M]
    if N >= M // 2:
        half = full[M // 2] / 2
        out[N - M // 2] = half
        out[N + M // 2] = half
    return SpectralField(out)


def from_spectral(f: SpectralField, M: int) -> GridField:
    """Evaluate the trigonometric polynomial on the M-point grid.

    Modes with |n| >= M/2 are folded onto their aliases, so the result is
    always the exact point evaluation of the truncated series.
    """
    check_power_of_two(M, "M")
    if M < 2:
        raise ValueError("M must be at least 2")
    return GridField(_eval_grid(f.coeffs, f.N, M))


def _eval_grid(coeffs: np.ndarray, N: int, M: int) -> np.ndarray:
    if 2 * N + 1 <= M:
        bins = np.zeros(M, dtype=complex)
        bins[np.arange(-N, N + 1) % M] = coeffs
    else:
        idx = np.arange(-N, N + 1) % M
        bins = np.bincount(idx, weights=coeffs.real, minlength=M) + 1j * np.bincount(
            idx, weights=coeffs.imag, minlength=M
        )
    return np.fft.ifft(bins) * M


def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = False) -> float:
    """(sum_k w_k^{2s} |f_k|^2)^{1/2} with w_k = 1 + |k|, or |k| (k != 0) if homogeneous."""
    k = np.abs(f.modes).astype(float)
    power = np.abs(f.coeffs) ** 2
    if homogeneous:
        nz = k > 0
        return float(np.sqrt(np.sum(k[nz] ** (2 * s) * power[nz])))
    return float(np.sqrt(np.sum((1 + k) ** (2 * s) * power)))


def mean_zero(f: SpectralField) -> SpectralField:
    c = f.coeffs.copy()
    c[f.N] = 0
    return SpectralField(c)


# ---------------------------------------------------------------------------
# step functions


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function on [0, 2 pi) with jumps at rational multiples of pi.

    Stored as sorted breakpoints ``0 = s_0 < s_1 < ... < s_{L-1} < 2`` (in units
    of pi) with ``levels[i]`` on ``[s_i pi, s_{i+1} pi)``; ``s_L = 2``. Adjacent
    equal levels are merged so the representation is canonical.
    """

    breaks: tuple = field(default=(Fraction(0),))
    levels: tuple = field(default=(0j,))

    def __post_init__(self):
        br = tuple(as_pi_fraction(b) for b in self.breaks)
        lv = tuple(complex(v) for v in self.levels)
        if len(br) != len(lv) or not br:
            raise ValueError("breaks and levels must be non-empty and of equal length")
        if br[0] != 0 or any(b >= 2 for b in br) or any(a >= b for a, b in zip(br, br[1:])):
            raise ValueError("breaks must increase strictly from 0 and stay below 2")
        if not all(np.isfinite(v.real) and np.isfinite(v.imag) for v in lv):
            raise ValueError("levels must be finite")
        mb, ml = [br[0]], [lv[0]]
        for b, v in zip(br[1:], lv[1:]):
            if v != ml[-1]:
                mb.append(b)
                ml.append(v)
        object.__setattr__(self, "breaks", tuple(mb))
        object.__setattr__(self, "levels", tuple(ml))

    @classmethod
    def from_pieces(cls, pieces: Iterable[Sequence]) -> "StepFunction":
        """Build from ``(a, b, c)`` triples meaning ``c * chi_[a pi, b pi)``.

        Pieces must be disjoint; uncovered parts of the circle are zero.
        """
        pieces = [(as_pi_fraction(a), as_pi_fraction(b), complex(c)) for a, b, c in pieces]
        if not pieces:
            raise ValueError("a step function needs at least one piece")
        pieces.sort(key=lambda p: p[0])
        for a, b, _ in pieces:
            if not (0 <= a < b <= 2):
                raise ValueError(f"piece [{a}, {b}) must satisfy 0 <= a < b <= 2 (units of pi)")
        for (_, b0, _), (a1, _, _) in zip(pieces, pieces[1:]):
            if a1 < b0:
                raise ValueError("pieces overlap")
        breaks, levels = [Fraction(0)], [0j]
        for a, b, c in pieces:
            if a == breaks[-1]:
                levels[-1] = c
            else:
                breaks.append(a)
                levels.append(c)
            if b < 2:
                breaks.append(b)
                levels.append(0j)
        return cls(tuple(breaks), tuple(levels))

    @classmethod
    def indicator(cls, a, b, c: complex = 1.0) -> "StepFunction":
        return cls.from_pieces([(a, b, c)])

    @property
    def pieces(self) -> list:
        """Nonzero pieces ``(a, b, c)`` in units of pi; ``b`` may equal 2."""
        ends = list(self.breaks[1:]) + [Fraction(2)]
        return [(a, b, c) for a, b, c in zip(self.breaks, ends, self.levels) if c != 0]

    @property
    def n_pieces(self) -> int:
        return len(self.breaks)

    def jumps(self) -> list:
        """``(y, delta)`` with ``delta = g(y+) - g(y-)``, y in units of pi, nonzero deltas only."""
        out = []
        L = len(self.levels)
        for i, y in enumerate(self.breaks):
            d = self.levels[i] - self.levels[i - 1] if L > 1 else 0j
            if d != 0:
                out.append((y, d))
        return out

    def total_variation(self) -> float:
        return float(sum(abs(d) for _, d in self.jumps()))

    def mean(self) -> complex:
        ends = list(self.breaks[1:]) + [Fraction(2)]
        return sum(float(b - a) * c for a, b, c in zip(self.breaks, ends, self.levels)) / 2

    def __call__(self, x) -> np.ndarray:
        x = np.mod(np.asarray(x, dtype=float), 2 * np.pi)
        edges = np.array([float(b) * np.pi for b in self.breaks])
        idx = np.searchsorted(edges, x, side="right") - 1
        return np.asarray(self.levels, dtype=complex)[idx]

    def level_at(self, y: Fraction) -> complex:
        """Exact value at ``y`` (units of pi), right-continuous."""
        y = Fraction(y) % 2
        return self.levels[bisect_right(self.breaks, y) - 1]

    def shift(self, s) -> "StepFunction":
        """``x -> g(x - s pi)``."""
        s = as_pi_fraction(s) % 2
        pts = sorted(((b + s) % 2, v) for b, v in zip(self.breaks, self.levels))
        if pts[0][0] != 0:
            pts.insert(0, (Fraction(0), self.level_at(-s)))
        return StepFunction(tuple(p for p, _ in pts), tuple(v for _, v in pts))

    def scale(self, c: complex) -> "StepFunction":
        return StepFunction(self.breaks, tuple(c * v for v in self.levels))

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return StepFunction.combine([self, other], [1.0, 1.0])

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return StepFunction.combine([self, other], [1.0, -1.0])

    @staticmethod
    def combine(funcs: Sequence["StepFunction"], weights: Sequence[complex]) -> "StepFunction":
        """Exact linear combination on the common refinement of breakpoints."""
        pts = sorted(set().union(*(f.breaks for f in funcs)))
        levels = tuple(sum(w * f.level_at(p) for f, w in zip(funcs, weights)) for p in pts)
        return StepFunction(tuple(pts), levels)

    def add_constant(self, c: complex) -> "StepFunction":
        return StepFunction(self.breaks, tuple(v + c for v in self.levels))

    def denominator(self) -> int:
        """Least K with K * y = 0 mod 2 pi for every breakpoint y (in units of pi: K y even)."""
        K = 1
        for y in self.breaks:
            # need K * y in 2Z
            q = (y / 2).denominator
            K = K * q // np.gcd(K, q)
        return int(K)

    def to_json(self) -> str:
        return json.dumps(
            {
                "pieces": [
                    [str(a), str(b), c.real, c.imag] for a, b, c in self.pieces
                ]
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "StepFunction":
        d = json.loads(text)
        pieces = []
        for p in d["pieces"]:
            if isinstance(p, dict):
                pieces.append((p["a"], p["b"], complex(p.get("re", 0.0), p.get("im", 0.0))))
            else:
                a, b, re = p[0], p[1], p[2]
                im = p[3] if len(p) > 3 else 0.0
                pieces.append((a, b, complex(re, im)))
        return cls.from_pieces(pieces)


def _exp_minus_i_pi(n: np.ndarray, y: Fraction) -> np.ndarray:
    """exp(-i n y pi) with n*y reduced exactly modulo 2."""
    num, den = y.numerator, y.denominator
    two_den = 2 * den
    if abs(num) * (int(np.max(np.abs(n))) + 1) < 2**62:
        r = (n.astype(np.int64) * num) % two_den
    else:
        r = np.array([(int(v) * num) % two_den for v in n], dtype=np.int64)
    if two_den < r.size:
        # few distinct residues: look them up instead of evaluating exp per mode
        return np.exp(-1j * np.pi * np.arange(two_den) / den)[r]
    return np.exp(-1j * np.pi * r / den)


def step_fourier(g: StepFunction, N: int) -> SpectralField:
    """Exact Fourier coefficients of a step function for |n| <= N.

    For n != 0 the coefficient is (i / 2 pi n) * sum_l c_l (e^{-i n b_l} - e^{-i n a_l}),
    which regroups over the jumps as -(i / 2 pi n) * sum_y delta_y e^{-i n y}.
    """
    check_power_of_two(N, "N")
    pieces = g.pieces
    out = np.zeros(2 * N + 1, dtype=complex)
    if not pieces:
        return SpectralField(out)
    n = np.arange(1, N + 1)
    pos = np.zeros(N, dtype=complex)
    neg = np.zeros(N, dtype=complex)
    for y, d in g.jumps():
        e = _exp_minus_i_pi(n, y)
        pos -= d * e
        neg -= d * np.conj(e)
    out[N + 1:] = 1j * pos / (2 * np.pi * n)
    out[N - 1::-1] = 1j * neg / (2 * np.pi * -n)
    out[N] = sum(float(b - a) * c for a, b, c in pieces) / 2
    return SpectralField(out)
