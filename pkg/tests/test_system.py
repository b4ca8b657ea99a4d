import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpauli.system import (
    Symmetry,
    SystemValidationError,
    build_system,
    check_invariance,
    cp_transform,
    index_of,
    indicator,
    label_of,
    labels,
    negate,
    random_system,
    symmetrize_cpt,
)


def test_index_order():
    assert [index_of(j, 3) for j in (-3, -2, -1, 1, 2, 3)] == [0, 1, 2, 3, 4, 5]
    assert labels(2) == [-2, -1, 1, 2]
    for i in range(6):
        assert index_of(label_of(i, 3), 3) == i


@pytest.mark.parametrize("j", [0, 4, -4])
def test_index_rejects_bad_labels(j):
    with pytest.raises(ValueError):
        index_of(j, 3)


def test_negation_is_reversal():
    x = np.arange(6.0)
    assert np.array_equal(negate(x), x[::-1])
    # label j -> -j
    n = 3
    for j in labels(n):
        assert negate(x)[index_of(j, n)] == x[index_of(-j, n)]
    assert np.array_equal(indicator(2), [-1.0, -1.0, 1.0, 1.0])


def test_build_system_accepts_two_state(two_state):
    assert two_state.n == 1
    assert two_state.dim == 2
    assert two_state.symmetry is Symmetry.BOTH
    assert np.array_equal(two_state.C, [-1.0, 1.0])
    assert not two_state.V.flags.writeable


def test_non_hermitian_rejected_with_entry():
    V = np.array([[0, 1], [2, 0]], dtype=complex)
    with pytest.raises(SystemValidationError) as err:
        build_system([0.0, 0.0], V, 0.01)
    assert err.value.entry in {(-1, 1), (1, -1)}
    assert err.value.magnitude == pytest.approx(1.0)


def test_nonzero_diagonal_rejected():
    with pytest.raises(SystemValidationError, match="diagonal"):
        build_system([0.0, 0.0], [[0.5, 1.0], [1.0, 0.0]], 0.01)


def test_phase_modulus_rejected():
    with pytest.raises(SystemValidationError, match="unit-modulus"):
        build_system([0.0, 0.0], [[0, 1], [1, 0]], 0.01, phases=[1.0, 1.1])


@pytest.mark.parametrize("lam", [0.0, -0.01, float("nan")])
def test_lambda_must_be_positive(lam):
    with pytest.raises(SystemValidationError):
        build_system([0.0, 0.0], [[0, 1], [1, 0]], lam)


def test_shape_checks():
    with pytest.raises(SystemValidationError):
        build_system([0.0, 1.0, 2.0], np.zeros((3, 3)), 0.01)
    with pytest.raises(SystemValidationError):
        build_system([0.0, 0.0], np.zeros((3, 3)), 0.01)


def test_large_lambda_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="qpauli.system"):
        build_system([0.0, 0.0], [[0, 1], [1, 0]], 0.5)
    assert "unreliable" in caplog.text


def test_claimed_symmetry_is_verified():
    # eps_j != eps_-j
    with pytest.raises(SystemValidationError, match="CP"):
        build_system([0.0, 1.0], [[0, 1], [1, 0]], 0.01, symmetry="cp")


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), sym=st.sampled_from(["cp", "cpt", "both"]))
def test_random_systems_satisfy_their_symmetry(seed, n, sym):
    sys = random_system(n, sym, 0.01, shell_count=2, seed=seed)
    for cls in Symmetry.parse(sym).classes():
        assert check_invariance(sys, cls).passed


def test_random_system_is_deterministic():
    a = random_system(3, "cpt", seed=5)
    b = random_system(3, "cpt", seed=5)
    assert np.array_equal(a.V, b.V)
    assert np.array_equal(a.energies, b.energies)


def test_perturbed_entry_fails_with_its_magnitude():
    sys = random_system(2, Symmetry.CP, 0.01, seed=3)
    V = np.array(sys.V)
    V[0, 1] += 1e-6
    V[1, 0] += 1e-6
    bent = build_system(sys.energies, V, sys.lam)
    report = check_invariance(bent, Symmetry.CP)
    assert not report.passed
    assert report.max_violation == pytest.approx(1e-6, abs=1e-9)
    assert report.worst_entry in {(-2, -1), (-1, -2), (2, 1), (1, 2)}


def test_cpt_system_need_not_be_cp(cpt_system):
    assert check_invariance(cpt_system, Symmetry.CPT).passed
    assert check_invariance(cpt_system, "cp").details["energy_violation"] == 0.0


def test_cp_transform_fixes_cp_system(cp_system):
    image = cp_transform(cp_system)
    assert np.allclose(image.V, cp_system.V, atol=1e-14)
    assert np.array_equal(image.energies, cp_system.energies)


def test_with_lambda(two_state):
    other = two_state.with_lambda(0.02)
    assert other.lam == 0.02
    assert np.array_equal(other.V, two_state.V)
    assert np.allclose(other.hamiltonian(), [[0, 0.02], [0.02, 0]])


def test_cp_transform_of_complex_phase_cpt_system():
    alpha = np.array([1.0, 1j, 1j, 1.0])
    rng = np.random.default_rng(5)
    V = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    V = 0.5 * (V + V.conj().T)
    np.fill_diagonal(V, 0.0)
    sys = build_system([2.0, 1.0, 1.0, 2.0], symmetrize_cpt(V, alpha), 0.01, alpha, Symmetry.CPT)

    image = cp_transform(sys)
    assert np.array_equal(image.phases, sys.phases)
    assert image.symmetry.includes(Symmetry.CPT) == check_invariance(image, Symmetry.CPT).passed


def test_cp_transform_is_an_involution():
    sys = random_system(2, Symmetry.NONE, 0.01, shell_count=2, seed=6)
    image = cp_transform(sys)
    assert not np.allclose(image.V, sys.V)
    assert np.allclose(image.V, image.V.conj().T, atol=1e-15)
    assert np.all(np.diag(image.V) == 0.0)
    assert image.symmetry is Symmetry.NONE

    back = cp_transform(image)
    assert np.allclose(back.V, sys.V, atol=1e-15)
    assert np.array_equal(back.energies, sys.energies)
