import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from qpauli.system import build_system, random_system
from qpauli.unitary import (
    Propagation,
    _spectrum,
    d_kernel,
    exact_propagator,
    perturbative_propagator,
    propagator,
    q1_kernel,
    q2_kernel,
    unitarity_defect,
)


def test_exact_propagator_is_unitary():
    sys = random_system(3, "cpt", 0.05, shell_count=2, seed=1)
    assert unitarity_defect(exact_propagator(sys, 0.3)) <= 1e-12


def test_exact_two_state_closed_form(two_state):
    dt = 0.5
    x = two_state.lam * dt
    U = exact_propagator(two_state, dt)
    expected = np.array([[np.cos(x), -1j * np.sin(x)], [-1j * np.sin(x), np.cos(x)]])
    assert np.allclose(U.U, expected, atol=1e-14)
    assert np.allclose(U @ U.dagger, np.eye(2), atol=1e-14)


def test_spectrum_is_cached(two_state):
    before = _spectrum.cache_info().hits
    exact_propagator(two_state, 0.1)
    exact_propagator(two_state, 0.2)
    assert _spectrum.cache_info().hits >= before + 1


def test_q1_known_value():
    assert q1_kernel(1.0, 0.0, np.pi) == pytest.approx(2.0, abs=1e-15)


def test_kernels_at_zero_gap():
    assert q1_kernel(3.0, 3.0, 0.7) == pytest.approx(0.7)
    assert q2_kernel(3.0, 3.0, 0.7) == pytest.approx(0.245)
    assert d_kernel(0.0, 0.7) == pytest.approx(0.7)


@pytest.mark.parametrize("d", [1e-9, 1e-7, 2e-6, 0.3])
def test_kernels_continuous_across_series_cutoff(d):
    dt = 0.5
    assert d_kernel(d, dt) == pytest.approx(abs(q1_kernel(d, 0.0, dt)) ** 2 / dt, rel=1e-12)


def test_q1_matches_quadrature():
    # Q1 = exp(i d dt/2) * integral_0^dt exp(-i d t) dt
    d, dt = 1.7, 0.9
    re, _ = quad(lambda t: np.cos(d * (t - dt / 2)), 0.0, dt)
    assert q1_kernel(d, 0.0, dt) == pytest.approx(re, abs=1e-12)


def test_kernel_identity_on_random_points(rng):
    d = rng.uniform(-10.0, 10.0, 10_000)
    d[:100] = rng.uniform(-1e-7, 1e-7, 100)
    dt = rng.uniform(0.0, 5.0, 10_000)
    q1 = q1_kernel(d, 0.0, dt)
    q2 = q2_kernel(d, 0.0, dt)
    np.testing.assert_allclose(2.0 * q2.real, np.abs(q1) ** 2, rtol=1e-12, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(d=st.floats(-50, 50), dt=st.floats(1e-3, 10))
def test_d_kernel_is_even_and_nonnegative(d, dt):
    assert d_kernel(d, dt) >= 0.0
    assert d_kernel(d, dt) == d_kernel(-d, dt)


def test_d_kernel_integrates_to_two_pi():
    from scipy.integrate import trapezoid

    dt = 1.0
    d = np.linspace(-200.0, 200.0, 400_001)
    total = trapezoid(d_kernel(d, dt), d)
    assert total == pytest.approx(2.0 * np.pi, rel=0.01)


def test_d_kernel_needs_positive_dt():
    with pytest.raises(ValueError):
        d_kernel(1.0, 0.0)


def test_perturbative_close_to_exact(two_state):
    dt = 0.5
    x = two_state.lam * dt
    diff = np.abs(perturbative_propagator(two_state, dt).U - exact_propagator(two_state, dt).U).max()
    assert diff <= x ** 3


def test_perturbative_orders(two_state):
    dt = 0.5
    U0 = perturbative_propagator(two_state, dt, order=0)
    assert np.allclose(U0.U, np.eye(2))
    U1 = perturbative_propagator(two_state, dt, order=1)
    assert U1.U[0, 1] == pytest.approx(-1j * two_state.lam * dt)
    with pytest.raises(ValueError):
        perturbative_propagator(two_state, dt, order=3)


def test_two_state_order2_defect_scales_as_lambda4():
    V = [[0.0, 1.0], [1.0, 0.0]]
    defects = [
        unitarity_defect(perturbative_propagator(build_system([0.0, 0.0], V, lam), 0.5))
        for lam in (0.02, 0.01)
    ]
    assert defects[0] / defects[1] == pytest.approx(16.0, rel=0.01)


def test_order2_column_norms_general_system():
    sys = random_system(3, "none", 0.01, shell_count=2, seed=4)
    U = perturbative_propagator(sys, 0.5).U
    norms = np.sum(np.abs(U) ** 2, axis=0)
    assert np.abs(norms - 1.0).max() <= 1e-6


def test_propagator_dispatch(two_state):
    assert propagator(two_state, 0.1, "exact").mode is Propagation.EXACT
    assert propagator(two_state, 0.1, "perturbative").mode is Propagation.PERTURBATIVE
    with pytest.raises(ValueError):
        Propagation.parse("magnus")


def test_exact_propagator_group_laws():
    sys = random_system(2, "none", 0.05, shell_count=2, seed=2)
    fwd, back = exact_propagator(sys, 0.7), exact_propagator(sys, -0.7)
    assert np.allclose(fwd.U @ back.U, np.eye(4), atol=1e-12)
    assert np.allclose(exact_propagator(sys, 0.0).U, np.eye(4), atol=1e-14)


def test_exact_propagator_without_coupling_is_diagonal():
    eps = np.array([3.0, 1.0, 2.0, 5.0])
    sys = build_system(eps, np.zeros((4, 4)), 0.01)
    assert np.allclose(exact_propagator(sys, 0.4).U, np.diag(np.exp(-0.4j * eps)), atol=1e-13)


def _slope(lams, values):
    return np.polyfit(np.log(lams), np.log(values), 1)[0]


def test_order2_error_scales_as_lambda2():
    base = random_system(2, "none", 0.01, shell_count=2, seed=4)
    lams = (0.001, 0.003, 0.01)
    errors = []
    for lam in lams:
        sys = base.with_lambda(lam)
        errors.append(np.abs(perturbative_propagator(sys, 0.5).U - exact_propagator(sys, 0.5).U).max())
    assert _slope(lams, errors) == pytest.approx(2.0, abs=0.1)


def test_order1_unitarity_defect_scales_as_lambda2():
    base = random_system(2, "none", 0.01, shell_count=2, seed=4)
    lams = (0.001, 0.003, 0.01)
    defects = [unitarity_defect(perturbative_propagator(base.with_lambda(lam), 0.5, order=1)) for lam in lams]
    assert _slope(lams, defects) == pytest.approx(2.0, abs=0.1)
