import numpy as np
import pytest

from dispquant._validation import BlowUpError, InvariantViolation
from dispquant.linear import evolve_linear
from dispquant.nonlinear import (
    NLSStepper,
    NlsParams,
    conservation_report,
    fejer_mollify,
    kdv_evolve,
    nls_evolve,
    nls_hamiltonian,
    nls_mass,
    smoothing_probe,
    tail_exponent,
)
from dispquant.spectral import SpectralField, StepFunction, step_fourier

CHI = StepFunction.indicator(0, 1)
SMOOTH = {0: 0.5, 1: 0.3, -2: 0.2j, 3: 0.1}


def smooth_data(N: int) -> SpectralField:
    return SpectralField.from_modes(N, SMOOTH)


def shift_modes(f: SpectralField, v: int) -> SpectralField:
    """Multiply by exp(i v x)."""
    return SpectralField(np.roll(f.coeffs, v))


def translate(f: SpectralField, a: float) -> SpectralField:
    """f(x - a)."""
    return SpectralField(f.coeffs * np.exp(-1j * f.modes * a))


# -- NLS ---------------------------------------------------------------------


@pytest.mark.parametrize("lam", [1.0, 0.5])
def test_plane_wave_is_exact(lam):
    a, k, t = 0.7, 3, 0.37
    q0 = SpectralField.from_modes(16, {k: a})
    q = nls_evolve(q0, NlsParams(lam, 16, 1e-2), t)
    exact = a * np.exp(1j * (-(k**2) + lam * a**2) * t)
    assert abs(q.coeff(k) - exact) < 1e-12
    assert np.sum(np.abs(q.coeffs) ** 2) == pytest.approx(a**2, rel=1e-13)


def test_zero_coupling_is_linear_flow():
    q0 = step_fourier(CHI, 64)
    q = nls_evolve(q0, NlsParams(0.0, 64, 1e-3), 0.3)
    assert np.max(np.abs((q - evolve_linear(q0, 2, 0.3)).coeffs)) < 1e-14


def test_strang_second_order():
    # step data at small N: the solution is smooth in time, the splitting error is O(dt^2)
    q0, t = step_fourier(CHI, 32), 0.1
    sols = [nls_evolve(q0, NlsParams(1.0, 32, dt), t) for dt in (5e-4, 2.5e-4, 1.25e-4)]
    e1 = np.linalg.norm((sols[0] - sols[1]).coeffs)
    e2 = np.linalg.norm((sols[1] - sols[2]).coeffs)
    assert np.log2(e1 / e2) == pytest.approx(2.0, abs=0.1)


def test_mass_and_hamiltonian_conserved():
    N, t = 4096, 0.1
    q0 = smooth_data(N)
    q = nls_evolve(q0, NlsParams(1.0, N, 1e-4), t)
    rep = conservation_report(q0, q, 1.0, t)
    assert rep.mass_drift * t < 1e-10 * nls_mass(q0)
    assert rep.hamiltonian_drift * t < 1e-6 * abs(nls_hamiltonian(q0, 1.0))
    assert set(rep.as_dict()) == {"mass", "hamiltonian", "mass_drift_per_time", "hamiltonian_drift_per_time"}


def test_undealiased_step_is_unitary():
    q0 = step_fourier(CHI, 64)
    q = nls_evolve(q0, NlsParams(1.0, 64, 1e-3, dealias=False), 0.05)
    st = NLSStepper(q0, NlsParams(1.0, 64, 1e-3, dealias=False))
    m0 = np.sum(np.abs(st._hat) ** 2)
    st.advance(0.05)
    assert np.sum(np.abs(st._hat) ** 2) == pytest.approx(m0, rel=1e-12)
    assert q.N == 64


def test_mass_formula():
    assert nls_mass(SpectralField.from_modes(4, {1: 1})) == pytest.approx(2 * np.pi)


def test_hamiltonian_plane_wave():
    # |q_x|^2 = k^2 a^2, |q|^4 = a^4, each integrated over 2 pi
    a, k, lam = 0.5, 2, 1.0
    h = nls_hamiltonian(SpectralField.from_modes(8, {k: a}), lam)
    assert h == pytest.approx(2 * np.pi * (k**2 * a**2 - 0.5 * lam * a**4))


def test_phase_invariance():
    N, t = 64, 0.1
    q0 = smooth_data(N)
    p = NlsParams(1.0, N, 1e-3)
    rot = np.exp(0.7j)
    assert np.max(np.abs((nls_evolve(q0 * rot, p, t) - nls_evolve(q0, p, t) * rot).coeffs)) < 1e-12


def test_translation_covariance():
    N, t, a = 64, 0.1, 0.9
    q0 = smooth_data(N)
    p = NlsParams(1.0, N, 1e-3)
    lhs = nls_evolve(translate(q0, a), p, t)
    rhs = translate(nls_evolve(q0, p, t), a)
    assert np.max(np.abs((lhs - rhs).coeffs)) < 1e-12


def test_galilean_covariance():
    # q0 e^{ivx} evolves to e^{i(vx - v^2 t)} q(x - 2 v t, t)
    N, t, v = 64, 0.1, 2
    q0 = smooth_data(N)
    p = NlsParams(1.0, N, 1e-4)
    lhs = nls_evolve(shift_modes(q0, v), p, t)
    rhs = shift_modes(translate(nls_evolve(q0, p, t), 2 * v * t), v) * np.exp(-1j * v**2 * t)
    assert np.max(np.abs((lhs - rhs).coeffs)) < 1e-9


def test_time_reversal():
    N, t = 64, 0.1
    q0 = smooth_data(N)
    p = NlsParams(1.0, N, 1e-4)
    back = nls_evolve(nls_evolve(q0, p, t), p, -t)
    assert np.max(np.abs((back - q0).coeffs)) < 1e-10


def test_stepper_refuses_to_go_backwards():
    st = NLSStepper(smooth_data(16), NlsParams(1.0, 16, 1e-2))
    st.advance(0.1)
    with pytest.raises(ValueError):
        st.advance(0.05)


def test_nls_blowup_guard():
    q0 = SpectralField.from_modes(16, {0: 1e7})
    with pytest.raises(BlowUpError):
        nls_evolve(q0, NlsParams(1.0, 16, 1e-3), 0.01)
    assert issubclass(BlowUpError, InvariantViolation)


def test_params_validation():
    with pytest.raises(ValueError):
        NlsParams(1.0, 48, 1e-3)
    with pytest.raises(ValueError):
        NlsParams(1.0, 64, 0.0)


# -- KdV ---------------------------------------------------------------------


def test_kdv_zero_stays_zero():
    u = kdv_evolve(SpectralField.zeros(32), 32, 1e-3, 0.1)
    assert not np.any(u.coeffs)


def test_kdv_small_data_follows_airy_flow():
    eps, t = 1e-5, 0.2
    u0 = SpectralField.from_modes(32, {1: eps, -1: eps, 3: 0.5j * eps, -3: -0.5j * eps})
    u = kdv_evolve(u0, 32, 1e-3, t)
    # linear part u_t + u_xxx = 0 is the k = 3 dispersion with phase exp(+i n^3 t)
    assert np.max(np.abs((u - evolve_linear(u0, 3, t)).coeffs)) < 1e-9


def test_kdv_rk4_fourth_order():
    u0 = SpectralField.from_modes(32, {1: 0.5, -1: 0.5, 2: 0.2j, -2: -0.2j})
    t = 0.2
    sols = [kdv_evolve(u0, 32, dt, t) for dt in (4e-3, 2e-3, 1e-3)]
    e1 = np.linalg.norm((sols[0] - sols[1]).coeffs)
    e2 = np.linalg.norm((sols[1] - sols[2]).coeffs)
    assert np.log2(e1 / e2) == pytest.approx(4.0, abs=0.2)


def test_kdv_conservation():
    u0 = SpectralField.from_modes(64, {1: 0.5, -1: 0.5, 2: 0.2j, -2: -0.2j})
    u = kdv_evolve(u0, 64, 1e-3, 0.5)
    assert u.is_real(1e-14)
    assert abs(u.coeff(0) - u0.coeff(0)) < 1e-14
    assert abs(u.l2() ** 2 - u0.l2() ** 2) < 1e-10


def test_kdv_rejects_complex_data():
    with pytest.raises(ValueError):
        kdv_evolve(SpectralField.from_modes(8, {1: 1}), 8, 1e-3, 0.1)


def test_kdv_blowup_guard():
    u0 = SpectralField.from_modes(8, {1: 1e7, -1: 1e7})
    with pytest.raises(BlowUpError):
        kdv_evolve(u0, 8, 1e-3, 0.01)


# -- mollification and smoothing ----------------------------------------------


def test_fejer_weights():
    f = SpectralField(np.ones(9, dtype=complex))
    w = fejer_mollify(f, 3).coeffs
    assert np.allclose(w, [0, 0.25, 0.5, 0.75, 1, 0.75, 0.5, 0.25, 0])
    with pytest.raises(ValueError):
        fejer_mollify(f, -1)


def test_tail_exponent_power_law():
    n = np.arange(-(2**14), 2**14 + 1)
    c = np.zeros(n.size)
    c[n != 0] = np.abs(n[n != 0]) ** -1.5
    f = SpectralField(c)
    # block l2 norm ~ (2^j)^(1/2 - 3/2)
    assert tail_exponent(f) == pytest.approx(1.0, abs=0.05)


def test_smoothing_probe_trivial_cases():
    r0 = smoothing_probe(CHI, 1.0, 0.0, N=64)
    assert all(d == 0 for d in r0.duhamel_norms)
    r1 = smoothing_probe(CHI, 0.0, 0.3, N=64)
    assert all(d == 0 for d in r1.duhamel_norms)
    assert r1.gain == np.inf
