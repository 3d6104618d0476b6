from fractions import Fraction
from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dispquant.linear import (
    HIGHER_ORDER_SIGN,
    SCHRODINGER_SIGN,
    DispersionLaw,
    RationalTime,
    density_bracket,
    density_fourier_asymptotic,
    density_spectrum,
    evolve_linear,
    evolve_via_kernel,
    kernel_H,
    kernel_H_by_parts,
    kernel_H_points,
    set_S_density,
    talbot_rational,
    talbot_weights,
    weyl_sum_sup,
)
from dispquant.spectral import SpectralField, StepFunction, from_spectral, grid_points, step_fourier

CHI = StepFunction.indicator(0, 1)
GOLDEN = (np.sqrt(5) - 1) / 2


def random_field(N: int, seed: int) -> SpectralField:
    rng = np.random.default_rng(seed)
    return SpectralField(rng.standard_normal(2 * N + 1) + 1j * rng.standard_normal(2 * N + 1))


# -- evolve_linear ------------------------------------------------------------


def test_sign_constants():
    assert SCHRODINGER_SIGN == -1 and HIGHER_ORDER_SIGN == +1
    with pytest.raises(ValueError):
        DispersionLaw(1)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_zero_time_is_identity(k):
    f = random_field(16, 1)
    assert np.array_equal(evolve_linear(f, k, 0.0).coeffs, f.coeffs)


@pytest.mark.parametrize("k", [2, 3, 5])
def test_full_period_is_identity(k):
    f = random_field(64, 2)
    assert np.max(np.abs(evolve_linear(f, k, RationalTime(1, 1)).coeffs - f.coeffs)) < 1e-15
    assert np.max(np.abs(evolve_linear(f, k, 2 * np.pi).coeffs - f.coeffs)) < 1e-12


def test_half_period_is_translation_by_pi():
    f = random_field(32, 3)
    n = f.modes
    # brute force: coefficient of g(x - pi) is (-1)^n g_n
    expect = f.coeffs * (-1.0) ** n
    assert np.max(np.abs(evolve_linear(f, 2, np.pi).coeffs - expect)) < 1e-12


@pytest.mark.parametrize("k,sign", [(2, -1), (3, 1), (4, 1)])
def test_phase_sign_per_order(k, sign):
    t = 0.37
    for n in (1, 2, 5):
        f = SpectralField.from_modes(8, {n: 1.0})
        got = evolve_linear(f, k, t).coeff(n)
        assert abs(got - np.exp(sign * 1j * t * n**k)) < 1e-13


def _rt(fr: Fraction) -> RationalTime:
    return RationalTime(fr.numerator, fr.denominator)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.fractions(-20, 20, max_denominator=64), st.fractions(-20, 20, max_denominator=64), st.integers(0, 2**31))
def test_unitary_and_exact_semigroup(k, a, b, seed):
    f = random_field(32, seed)
    once = evolve_linear(f, k, _rt(a + b))
    twice = evolve_linear(evolve_linear(f, k, _rt(a)), k, _rt(b))
    assert abs(evolve_linear(f, k, _rt(a)).l2() - f.l2()) < 1e-12 * f.l2()
    assert np.max(np.abs(once.coeffs - twice.coeffs)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.integers(0, 2**31))
def test_float_time_semigroup(t1, t2, seed):
    # float times carry the rounding of t1 + t2, amplified by n^2
    f = random_field(32, seed)
    a = evolve_linear(evolve_linear(f, 2, t1), 2, t2)
    b = evolve_linear(f, 2, t1 + t2)
    assert abs(evolve_linear(f, 2, t1).l2() - f.l2()) < 1e-12 * f.l2()
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-10


# -- Talbot -------------------------------------------------------------------


def test_talbot_identity_time():
    dec, out = talbot_rational(CHI, RationalTime(0, 1))
    assert np.allclose(dec.weights, [1.0])
    assert out == CHI


def test_talbot_half_period_shift():
    dec, out = talbot_rational(CHI, RationalTime(1, 2))
    assert np.allclose(dec.weights, [0, 1], atol=1e-15)
    assert out == CHI.shift(1)


def test_talbot_quarter_period_weights():
    dec, out = talbot_rational(CHI, RationalTime(1, 4))
    assert np.allclose(dec.weights, [(1 - 1j) / 2, 0, (1 + 1j) / 2, 0], atol=1e-15)
    x = grid_points(64) + 1e-3
    expect = (1 - 1j) / 2 * CHI(x) + (1 + 1j) / 2 * CHI(x - np.pi)
    assert np.max(np.abs(out(x) - expect)) < 1e-14


def test_unreduced_time_rejected():
    with pytest.raises(ValueError):
        RationalTime(2, 4)


@pytest.mark.parametrize("q", [1, 2, 3, 4, 5, 8, 12, 17, 32, 64])
def test_weights_unitary(q):
    for a in range(q):
        if gcd(a, q) == 1:
            assert abs(np.sum(np.abs(talbot_weights(RationalTime(a, q))) ** 2) - 1) < 1e-12


def test_weights_match_brute_force_gauss_sum():
    for a, q in [(1, 3), (2, 7), (5, 12), (7, 16)]:
        m = np.arange(q)
        brute = [np.sum(np.exp(-2j * np.pi * a * m**2 / q + 2j * np.pi * m * r / q)) / q for r in range(q)]
        assert np.max(np.abs(talbot_weights(RationalTime(a, q)) - brute)) < 1e-12


@pytest.mark.parametrize("a,q", [(1, 3), (2, 5), (3, 8), (5, 11)])
def test_talbot_matches_spectral_evolution(a, q):
    N = 2**11
    _, step = talbot_rational(CHI, RationalTime(a, q))
    diff = step_fourier(step, N).coeffs - evolve_linear(step_fourier(CHI, N), 2, RationalTime(a, q)).coeffs
    assert np.linalg.norm(diff) < 1e-10


def test_talbot_piece_count_bound():
    g = StepFunction.from_pieces([(0, "1/2", 1), ("1/2", "3/2", -1j)])
    for q in (3, 5, 7):
        _, step = talbot_rational(g, RationalTime(1, q))
        assert len(step.levels) <= q * len(g.levels)


# -- kernel --------------------------------------------------------------------


def test_kernel_at_zero_time_is_sawtooth_partial_sum():
    N, M = 64, 512
    x = grid_points(M)
    n = np.arange(1, N + 1)
    direct = 2j * np.sin(np.outer(x, n)) @ (1.0 / n)
    assert np.max(np.abs(kernel_H(0.0, N, M).samples - direct)) < 1e-12
    # converges to i (pi - x) on (0, 2 pi) away from the jump
    far = (x > 1) & (x < 2 * np.pi - 1)
    big = kernel_H(0.0, 2**14, M).samples
    assert np.max(np.abs(big[far] - 1j * (np.pi - x[far]))) < 1e-3


def test_kernel_odd_symmetry_at_origin():
    assert abs(kernel_H_points(0.0, 4, [0.0])[0]) == 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * np.pi), st.integers(1, 300), st.floats(0, 2 * np.pi))
def test_kernel_summation_by_parts(t, N, x):
    assert abs(kernel_H_points(t, N, [x])[0] - kernel_H_by_parts(t, N, [x])[0]) < 1e-10


def test_kernel_grid_matches_pointwise():
    t, N, M = np.sqrt(3), 100, 256
    assert np.max(np.abs(kernel_H(t, N, M).samples - kernel_H_points(t, N, grid_points(M)))) < 1e-11


def test_kernel_evolution_matches_spectral():
    N = 2**12
    M = 4 * N
    ke = evolve_via_kernel(CHI, np.sqrt(2), N, M)
    ref = from_spectral(evolve_linear(step_fourier(CHI, N), 2, np.sqrt(2)), M).samples
    assert np.sqrt(np.mean(np.abs(ke.grid.samples - ref) ** 2)) < 1e-3


def test_kernel_evolution_full_period_recovers_data():
    N = 2**12
    M = 4 * N
    ke = evolve_via_kernel(CHI, 2 * np.pi, N, M)
    g = CHI(grid_points(M))
    g[0], g[M // 2] = 0.5, 0.5  # partial sums converge to the midpoint at jumps
    assert np.sqrt(np.mean(np.abs(ke.grid.samples - g) ** 2)) < ke.l2_tail_bound


def test_kernel_evolution_is_linear_in_jumps():
    N, M, t = 256, 1024, 1.1
    g = StepFunction.indicator("1/4", "5/4", 2.0)
    ke = evolve_via_kernel(g, t, N, M).grid.samples
    x = grid_points(M)
    H = lambda y: kernel_H_points(t, N, x - y)
    expect = g.mean() + (2 * H(np.pi / 4) - 2 * H(5 * np.pi / 4)) / (2j * np.pi)
    assert np.max(np.abs(ke - expect)) < 1e-10


def test_kernel_evolution_off_grid_jump():
    N, M, t = 128, 512, 0.7
    g = StepFunction.indicator("1/3", 1)
    ke = evolve_via_kernel(g, t, N, M).grid.samples
    ref = from_spectral(evolve_linear(step_fourier(g, N), 2, t), M).samples
    assert np.max(np.abs(ke - ref)) < 1e-10


# -- Weyl sums -----------------------------------------------------------------


def test_weyl_sum_aligned_phases():
    assert weyl_sum_sup(0.0, 100) == pytest.approx(100)
    assert weyl_sum_sup(np.pi, 100) == pytest.approx(100)


def test_weyl_sum_golden_time_square_root_size():
    N = 2**10
    assert weyl_sum_sup(2 * np.pi * GOLDEN, N) <= 10 * N**0.6


def test_weyl_sum_against_direct_evaluation():
    t, N = 1.234, 50
    x = np.linspace(0, 2 * np.pi, 4001)
    n = np.arange(1, N + 1)
    vals = np.abs(np.exp(1j * np.outer(x, n)) @ np.exp(-1j * t * n**2))
    assert weyl_sum_sup(t, N) <= vals.max() + 1e-9
    assert weyl_sum_sup(t, N) >= 0.9 * vals.max()


# -- density -------------------------------------------------------------------


def test_density_spectrum_is_exact_convolution():
    f = random_field(8, 11)
    h = density_spectrum(f)
    expect = np.convolve(f.coeffs, np.conj(f.coeffs[::-1]))
    assert np.max(np.abs(h.coeffs - expect)) < 1e-12


def test_density_bracket_hand_value():
    g = StepFunction.from_pieces([(0, 1, 1.0), (1, 2, -1.0)])
    assert density_bracket(g) == pytest.approx(4.0)


def test_density_divisibility_gate():
    g = StepFunction.indicator(0, 1).add_constant(-0.5)
    t = 2 * np.pi * (np.sqrt(2) - 1)
    assert g.denominator() == 2
    for k in (1, 3, 5, 7):
        assert density_fourier_asymptotic(g, t, k)[1] is False


def test_density_residual_bounded_at_valid_k():
    g = StepFunction.indicator(0, 1).add_constant(-0.5)
    t = 2 * np.pi * (np.sqrt(2) - 1)
    h = density_spectrum(evolve_linear(step_fourier(g, 2**13), 2, t))
    K = g.denominator()
    scaled = []
    for j in range(1, 101):
        k = 2 * K * j
        pred, valid = density_fourier_asymptotic(g, t, k)
        if valid:
            scaled.append(abs(h.coeff(k) - pred) * k**2)
    assert len(scaled) > 20
    assert max(scaled) < 1.0


def test_density_irrational_jump_rejected():
    with pytest.raises(TypeError):
        StepFunction.indicator(0, np.sqrt(2) / 2)


def test_set_s_density_equidistribution():
    t = 2 * np.pi * (np.sqrt(2) - 1)
    limit = 0.3 / (2 * np.pi) / 4
    d = set_S_density(CHI, t, 10**5, eps=0.3)
    assert abs(d - limit) < 0.25 * limit


def test_set_s_density_empty_range():
    g = StepFunction.indicator(0, "1/4")
    assert g.denominator() == 8
    assert set_S_density(g, 1.0, 7) == 0.0


def test_set_s_density_stabilizes():
    t = 2 * np.pi * (np.sqrt(2) - 1)
    a = set_S_density(CHI, t, 10**5, eps=0.3)
    b = set_S_density(CHI, t, 2 * 10**5, eps=0.3)
    assert abs(a - b) < 0.1 * a


def test_rational_time_parse():
    rt = RationalTime.parse("3/8")
    assert rt.turns == Fraction(3, 8) and rt.t == pytest.approx(2 * np.pi * 3 / 8)
