from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dispquant.spectral import (
    GridField,
    SpectralField,
    StepFunction,
    frac_phase,
    from_spectral,
    grid_points,
    mean_zero,
    sobolev_norm,
    step_fourier,
    to_spectral,
)


def direct_dft(samples: np.ndarray, N: int) -> np.ndarray:
    """(1/M) sum_j u_j exp(-i n x_j) for n = -N..N by explicit summation."""
    M = samples.size
    x = grid_points(M)
    n = np.arange(-N, N + 1)
    return np.exp(-1j * np.outer(n, x)) @ samples / M


def random_field(N: int, seed: int) -> SpectralField:
    rng = np.random.default_rng(seed)
    return SpectralField(rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1))


@st.composite
def step_functions(draw, dens=(1, 2, 3, 4, 6, 8, 12, 16), max_pieces=5):
    den = draw(st.sampled_from(dens))
    cuts = sorted(draw(st.sets(st.integers(0, 2 * den - 1), min_size=1, max_size=max_pieces)))
    if cuts[0] != 0:
        cuts = [0] + cuts
    levels = draw(st.lists(
        st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
        min_size=len(cuts), max_size=len(cuts)))
    return StepFunction(tuple(Fraction(c, den) for c in cuts), tuple(levels))


# -- grid / spectrum -------------------------------------------------------


def test_constant_grid_has_only_mean():
    f = to_spectral(GridField(np.ones(32)))
    assert f.coeff(0) == pytest.approx(1.0)
    assert np.max(np.abs(np.delete(f.coeffs, f.N))) < 1e-15


def test_single_mode_at_m16():
    x = grid_points(16)
    f = to_spectral(GridField(np.exp(3j * x)))
    assert abs(f.coeff(3) - 1) < 1e-14
    assert np.max(np.abs(np.delete(f.coeffs, f.N + 3))) < 1e-14


@pytest.mark.parametrize("M", [8, 16, 32, 64])
def test_forward_transform_matches_direct_dft(M):
    rng = np.random.default_rng(M)
    s = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    N = M // 4
    assert np.max(np.abs(to_spectral(GridField(s), N).coeffs - direct_dft(s, N))) < 1e-13


@pytest.mark.parametrize("N,M", [(4, 16), (8, 32), (16, 64), (2, 8)])
def test_band_limited_round_trip(N, M):
    f = random_field(N, seed=N + M)
    g = from_spectral(f, M)
    # oracle: direct synthesis sum_n f_n exp(i n x_j)
    x = grid_points(M)
    direct = np.exp(1j * np.outer(x, f.modes)) @ f.coeffs
    assert np.max(np.abs(g.samples - direct)) < 1e-12
    back = to_spectral(g, N)
    assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12


def test_full_grid_round_trip_with_nyquist_split():
    rng = np.random.default_rng(1)
    s = rng.standard_normal(64)
    f = to_spectral(GridField(s))
    assert f.N == 32 and f.is_real()
    assert np.max(np.abs(from_spectral(f, 64).samples - s)) < 1e-13


def test_non_power_of_two_rejected():
    with pytest.raises(ValueError):
        GridField(np.ones(12))
    with pytest.raises(ValueError):
        from_spectral(SpectralField.zeros(4), 24)
    with pytest.raises(ValueError):
        SpectralField(np.zeros(7))  # N = 3


def test_coefficients_beyond_cutoff_are_zero():
    f = random_field(8, seed=3)
    assert f.coeff(9) == 0 and f.coeff(-100) == 0


def test_parseval():
    f = random_field(16, seed=5)
    g = from_spectral(f, 64)
    assert abs(f.l2() - g.l2() / np.sqrt(2 * np.pi)) < 1e-10


def test_convolution_theorem():
    a, b = random_field(8, seed=6), random_field(8, seed=7)
    M = 64
    prod = to_spectral(GridField(from_spectral(a, M).samples * from_spectral(b, M).samples), 16)
    assert np.max(np.abs(prod.coeffs - np.convolve(a.coeffs, b.coeffs))) < 1e-12


def test_real_flag_uses_conjugate_symmetry():
    x = grid_points(32)
    assert to_spectral(GridField(np.cos(x) + 0.3 * np.sin(5 * x))).is_real()
    assert not to_spectral(GridField(np.exp(1j * x))).is_real()


def test_json_and_csv_round_trip():
    f = random_field(4, seed=8)
    assert np.array_equal(SpectralField.from_json(f.to_json()).coeffs, f.coeffs)
    g = from_spectral(f, 16)
    assert np.array_equal(GridField.from_csv(g.to_csv()).samples, g.samples)


def test_frac_phase_is_exact_for_large_multipliers():
    tau = 0.1
    m = np.array([10**15 + 7], dtype=np.int64)
    exact = (Fraction(tau) * int(m[0])) % 1
    assert abs(frac_phase(tau, m)[0] - float(exact)) < 1e-15


# -- step functions ---------------------------------------------------------


def test_chi_half_coefficients():
    f = step_fourier(StepFunction.indicator(0, 1), 64)
    assert abs(f.coeff(0) - 0.5) < 1e-15
    for n in range(1, 65):
        expect = -1j / (np.pi * n) if n % 2 else 0
        assert abs(f.coeff(n) - expect) < 1e-15
        assert abs(f.coeff(-n) - (-1j / (np.pi * -n) if n % 2 else 0)) < 1e-15


def test_constant_step_function():
    c = 2 - 1j
    f = step_fourier(StepFunction.indicator(0, 2, c), 32)
    assert abs(f.coeff(0) - c) < 1e-15
    assert np.max(np.abs(np.delete(f.coeffs, f.N))) < 1e-15


def test_empty_pieces_rejected():
    with pytest.raises(ValueError):
        StepFunction.from_pieces([])


def test_float_breakpoints_rejected():
    with pytest.raises(TypeError):
        StepFunction.indicator(0.0, 0.5)


def _trapezoid_coeffs(g: StepFunction, M: int, N: int) -> np.ndarray:
    # samples at jumps take the midpoint value (trapezoid rule on each piece)
    s = g(grid_points(M))
    for y, d in g.jumps():
        j = y * M / 2
        assert j.denominator == 1
        s[int(j) % M] -= d / 2
    return to_spectral(GridField(s), N).coeffs


@settings(max_examples=25, deadline=None)
@given(step_functions(dens=(1, 2, 4, 8, 16)))
def test_step_fourier_matches_quadrature_oracle(g):
    # trapezoid error is O(M^-2) for grid-aligned jumps; one Richardson step removes it
    N = 256
    oracle = (4 * _trapezoid_coeffs(g, 2**16, N) - _trapezoid_coeffs(g, 2**15, N)) / 3
    assert np.linalg.norm(step_fourier(g, N).coeffs - oracle) < 1e-6


@settings(max_examples=50, deadline=None)
@given(step_functions())
def test_bv_decay(g):
    f = step_fourier(g, 512)
    n = f.modes
    assert np.max(np.abs(n * f.coeffs)) <= g.total_variation() / np.pi + 1e-12


@settings(max_examples=30, deadline=None)
@given(step_functions(), st.integers(0, 95).map(lambda j: Fraction(j, 48)))
def test_shift_matches_spectral_translation(g, s):
    N = 64
    lhs = step_fourier(g.shift(s), N).coeffs
    rhs = step_fourier(g, N).coeffs * np.exp(-1j * np.arange(-N, N + 1) * float(s) * np.pi)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_step_function_json_round_trip():
    g = StepFunction.from_pieces([(0, "1/3", 1 + 2j), ("1/2", "7/4", -0.5)])
    assert StepFunction.from_json(g.to_json()) == g


def test_canonical_form_merges_equal_levels():
    g = StepFunction.from_pieces([(0, "1/2", 1), ("1/2", 1, 1)])
    assert g == StepFunction.indicator(0, 1)


# -- norms -------------------------------------------------------------------


def test_sobolev_single_mode():
    f = SpectralField.from_modes(4, {2: 1})
    # <k> = 1 + |k|
    assert sobolev_norm(f, 1) == pytest.approx(3.0)
    assert sobolev_norm(f, 1, homogeneous=True) == pytest.approx(2.0)


def test_sobolev_zero_field():
    for s in (-1, 0, 0.5, 3):
        assert sobolev_norm(SpectralField.zeros(8), s) == 0


def test_sobolev_s0_is_l2():
    f = random_field(16, seed=9)
    assert sobolev_norm(f, 0) == pytest.approx(f.l2(), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(-2, 2), st.floats(0, 2))
def test_sobolev_monotone_in_s(seed, s, ds):
    f = random_field(8, seed)
    assert sobolev_norm(f, s + ds) >= sobolev_norm(f, s) * (1 - 1e-12)


def test_mean_zero_examples():
    const = step_fourier(StepFunction.indicator(0, 2, 3.0), 8)
    assert not np.any(mean_zero(const).coeffs)
    f = mean_zero(random_field(8, seed=10))
    assert np.array_equal(mean_zero(f).coeffs, f.coeffs)
    chi = step_fourier(StepFunction.indicator(0, 1), 16)
    mz = mean_zero(chi)
    assert mz.coeff(0) == 0
    assert np.array_equal(np.delete(mz.coeffs, 16), np.delete(chi.coeffs, 16))
