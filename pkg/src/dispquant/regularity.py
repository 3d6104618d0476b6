"""Dyadic block norms, decay exponents, and box-counting dimension of graphs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralField, sobolev_norm
from ._validation import check_power_of_two

__all__ = [
    "DEFAULT_SEED",
    "FLAT_TOL",
    "DyadicBlockNorms",
    "DimensionEstimate",
    "SobolevDivergence",
    "lp_blocks",
    "besov_exponent",
    "box_counts",
    "box_dimension",
    "dimension_sandwich",
    "sobolev_divergence",
    "bilinear_check",
    "fit_window",
]

DEFAULT_SEED = 0x5EED
FLAT_TOL = 1e-12


@dataclass(frozen=True)
class DyadicBlockNorms:
    """Norms of P_j f for p = 1, 2, inf; P_0 keeps n = 0, P_j keeps 2^(j-1) <= |n| < 2^j.

    L^p norms use the normalized measure dx / 2 pi.
    """

    j: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray

    def norms(self, p) -> np.ndarray:
        if p == 1:
            return self.l1
        if p == 2:
            return self.l2
        if p in (np.inf, "inf"):
            return self.linf
        raise ValueError(f"p must be 1, 2 or inf, got {p!r}")


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    scales: tuple
    residual: float
    method: str = "box-count"
    log_eps: np.ndarray = field(default=None, repr=False)
    log_counts: np.ndarray = field(default=None, repr=False)


def _block_index(n: np.ndarray) -> np.ndarray:
    an = np.abs(n)
    j = np.zeros_like(an)
    nz = an > 0
    j[nz] = np.floor(np.log2(an[nz])).astype(int) + 1
    return j


def lp_blocks(f: SpectralField, oversample: int = 8) -> DyadicBlockNorms:
    """Littlewood-Paley block norms with sharp dyadic cutoffs.

    Each block is evaluated on a grid of at least ``oversample * 2^j`` points.
    """
    n = f.modes
    jn = _block_index(n)
    J = int(jn.max())
    l1, l2, linf = np.zeros(J + 1), np.zeros(J + 1), np.zeros(J + 1)
    for j in range(J + 1):
        sel = jn == j
        c = f.coeffs[sel]
        if not np.any(c):
            continue
        M = max(8, 1 << int(np.ceil(np.log2(oversample * 2**j))))
        bins = np.zeros(M, dtype=complex)
        bins[n[sel] % M] = c
        vals = np.abs(np.fft.ifft(bins) * M)
        l1[j] = vals.mean()
        l2[j] = np.sqrt(np.sum(np.abs(c) ** 2))
        linf[j] = vals.max()
    return DyadicBlockNorms(np.arange(J + 1), l1, l2, linf)


def fit_window(n_scales: int, window=None, trim: int = 2) -> tuple:
    """Default fit window drops ``trim`` scales at both ends."""
    if window is not None:
        lo, hi = window
        return int(lo), int(hi)
    return trim, n_scales - 1 - trim


def _linfit(x: np.ndarray, y: np.ndarray):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def besov_exponent(blocks: DyadicBlockNorms, p=np.inf, window=None, return_residual: bool = False):
    """Least-squares decay rate s of ||P_j f||_p ~ 2^(-s j) over a window of blocks.

    Zero blocks are skipped; at least four usable blocks are required.
    """
    norms = blocks.norms(p)
    lo, hi = fit_window(len(norms), window)
    j = blocks.j[lo:hi + 1]
    v = norms[lo:hi + 1]
    use = v > 0
    if np.count_nonzero(use) < 4:
        if not np.any(norms > 0):
            raise ValueError("all blocks are zero")
        raise ValueError("fewer than four usable blocks in the fit window")
    slope, resid = _linfit(j[use].astype(float), np.log2(v[use]))
    return (-slope, resid) if return_residual else -slope


def box_counts(y: np.ndarray) -> tuple:
    """Column-oscillation box counts of the graph of periodic samples ``y``.

    The graph is mapped into the unit square. For eps = 2^-l the count is
    sum over columns of (ceil(osc / eps) + 1), each column including the
    first sample of the next so the graph stays connected.
    """
    y = np.asarray(y, dtype=float)
    M = y.size
    m = check_power_of_two(M, "len(samples)").bit_length() - 1
    lo, hi = y.min(), y.max()
    z = (y - lo) / (hi - lo) if hi > lo else np.zeros_like(y)
    ext = np.append(z, z[0])
    levels = np.arange(m + 1)
    counts = np.empty(m + 1)
    for ell in levels:
        w = M >> ell
        blocks = z.reshape(-1, w)
        nxt = ext[w::w]
        mx = np.maximum(blocks.max(axis=1), nxt)
        mn = np.minimum(blocks.min(axis=1), nxt)
        eps = 2.0**-ell
        counts[ell] = np.sum(np.ceil((mx - mn) / eps - 1e-12) + 1)
    return levels, counts


def box_dimension(samples, window=None) -> DimensionEstimate:
    """Box-counting dimension of the graph of real periodic samples (M = 2^m)."""
    y = np.real(np.asarray(samples))
    levels, counts = box_counts(y)
    # a graph flat to round-off is a line; rescaling its noise would fake roughness
    if np.ptp(y) <= FLAT_TOL * (1.0 + np.max(np.abs(y))):
        return DimensionEstimate(1.0, (0, int(levels[-1])), 0.0, "box-count", levels, np.log2(counts))
    lo, hi = fit_window(len(levels), window)
    sel = slice(lo, hi + 1)
    slope, resid = _linfit(levels[sel].astype(float), np.log2(counts[sel]))
    return DimensionEstimate(slope, (lo, hi), resid, "box-count", levels, np.log2(counts))


def dimension_sandwich(s_inf: float, s_1: float | None = None) -> tuple:
    """Bounds on the upper Minkowski dimension of a graph from decay exponents.

    Upper: Hoelder bound 2 - s_inf. Lower: 2 - s_1 where s_1 is the B^s_{1,inf}
    membership threshold. Both are clamped to [1, 2] and lower <= upper.
    """
    upper = float(np.clip(2.0 - s_inf, 1.0, 2.0))
    if s_1 is None:
        return 1.0, upper
    lower = float(np.clip(2.0 - s_1, 1.0, 2.0))
    return min(lower, upper), upper


@dataclass(frozen=True)
class SobolevDivergence:
    K: np.ndarray
    partial_sums: np.ndarray
    increments: np.ndarray
    sum_slope: float
    increment_slope: float
    diverging: bool


def _part_coeffs(f: SpectralField, part: str) -> np.ndarray:
    pos, neg = f.positive(), f.negative()
    if part in ("re", "Re", "real"):
        return 0.5 * (pos + np.conj(neg))
    if part in ("im", "Im", "imag"):
        return (pos - np.conj(neg)) / 2j
    raise ValueError(f"part must be 're' or 'im', got {part!r}")


def sobolev_divergence(f: SpectralField, r: float, part: str = "re", tail: int = 4) -> SobolevDivergence:
    """Dyadic partial sums S_K = sum_{k<=K} k^{2r} |c_k|^2 of the real or imaginary part.

    ``diverging`` is declared when the dyadic increments S_{2K} - S_K stop
    decaying (log2-slope above -0.1 over the last ``tail`` blocks). A finite
    number of scales can only ever be consistent with divergence.
    """
    c = _part_coeffs(f, part)
    k = np.arange(1, f.N + 1)
    terms = k.astype(float) ** (2 * r) * np.abs(c) ** 2
    csum = np.cumsum(terms)
    J = int(np.log2(f.N))
    K = 2 ** np.arange(J + 1)
    S = csum[K - 1]
    inc = np.diff(np.concatenate([[0.0], S]))
    jj = np.arange(J + 1)[-tail:].astype(float)
    ti = inc[-tail:]
    ts = S[-tail:]
    if np.all(ti <= 0):
        return SobolevDivergence(K, S, inc, 0.0, -np.inf, False)
    good = ti > 0
    inc_slope, _ = _linfit(jj[good], np.log2(ti[good])) if np.count_nonzero(good) >= 2 else (-np.inf, 0)
    sum_slope, _ = _linfit(jj, np.log2(np.maximum(ts, 1e-300)))
    return SobolevDivergence(K, S, inc, sum_slope, inc_slope, bool(inc_slope > -0.1))


def bilinear_check(trials: int, alpha: float, delta: float, N: int = 128, seed: int = DEFAULT_SEED, decay: float | None = None) -> float:
    """max ||fg||_{H^alpha} / (||f||_{H^{1/2+delta}} ||g||_{H^alpha}) over random band-limited pairs.

    Random coefficients are Gaussian with optional power-law decay
    ``<n>^-decay`` (drawn per trial when ``decay`` is None). Products are exact
    (cutoff 2N).
    """
    if not -0.5 <= alpha <= 0.5:
        raise ValueError("alpha must lie in [-1/2, 1/2]")
    if delta <= 0:
        raise ValueError("delta must be positive")
    rng = np.random.default_rng(seed)
    n = np.arange(-N, N + 1)
    worst = 0.0
    for _ in range(trials):
        df, dg = (rng.uniform(0.0, 2.0, size=2) if decay is None else (decay, decay))
        f = (rng.standard_normal(n.size) + 1j * rng.standard_normal(n.size)) * (1 + np.abs(n)) ** -df
        g = (rng.standard_normal(n.size) + 1j * rng.standard_normal(n.size)) * (1 + np.abs(n)) ** -dg
        ratio = _bilinear_ratio(f, g, N, alpha, delta)
        if ratio is not None:
            worst = max(worst, ratio)
    return worst


def _bilinear_ratio(f: np.ndarray, g: np.ndarray, N: int, alpha: float, delta: float):
    F, G = SpectralField(f), SpectralField(g)
    den = sobolev_norm(F, 0.5 + delta) * sobolev_norm(G, alpha)
    if den == 0:
        return None
    prod = _product(F, G)
    return sobolev_norm(prod, alpha) / den


def _product(F: SpectralField, G: SpectralField) -> SpectralField:
    """Exact spectrum of the pointwise product (cutoff 2N)."""
    N = max(F.N, G.N)
    full = np.convolve(F.resize(N).coeffs, G.resize(N).coeffs)
    return SpectralField(full)
