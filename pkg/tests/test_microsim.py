import numpy as np
import pytest

from qpauli.microsim import (
    BoundarySolveError,
    CycleConfig,
    EndOfTimeSignal,
    GridMismatchError,
    antisymmetric_cycle,
    branch_boundary_solve,
    compare_to_master,
    decohere,
    lambda_sweep,
    master_trajectory,
    run_cycles,
    scaling_slope,
    symmetric_cycle,
)
from qpauli.kinetics import Variant
from qpauli.solver import BoundaryKind, Trajectory
from qpauli.system import build_system, random_system
from qpauli.unitary import EvolutionOperator, Propagation, exact_propagator


def test_decohere_reads_all_state_kinds():
    p = np.array([0.25, 0.75])
    m = decohere(p)
    assert np.allclose(m.branches, np.diag(np.sqrt(p)))
    psi = np.array([0.5, 0.5j * np.sqrt(3)])
    assert np.allclose(decohere(psi).probabilities(), [0.25, 0.75])
    rho = np.array([[0.25, 0.1], [0.1, 0.75]])
    assert np.allclose(decohere(rho).density_diagonal(), [0.25, 0.75])
    with pytest.raises(ValueError):
        decohere(np.array([0.5, 0.6]))


def test_boundary_solve_two_state_increment(two_state):
    tau = 0.5
    theta = two_state.lam * tau
    U = exact_propagator(two_state, tau)
    p = np.array([0.5, 0.5])
    mix = branch_boundary_solve(U, p)
    assert mix.total_probability() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(mix.probabilities(), p, atol=1e-14)
    assert mix.boundary_residual(U) <= 1e-14
    end = np.sum(np.abs(mix.evolve(U)) ** 2, axis=1)
    assert end[0] == pytest.approx(0.5 - np.sin(theta) ** 2, abs=1e-14)
    assert end[1] == pytest.approx(0.5 + np.sin(theta) ** 2, abs=1e-14)


def test_boundary_solve_signals_negative_weight(two_state):
    U = exact_propagator(two_state.with_lambda(0.5), 1.0)
    with pytest.raises(EndOfTimeSignal) as err:
        branch_boundary_solve(U, np.array([0.01, 0.99]))
    assert err.value.state == -1
    assert err.value.weight < 0.0


def test_boundary_solve_rejects_singular_block():
    U = EvolutionOperator(np.array([[0.0, -1j], [-1j, 0.0]]), 1.0, Propagation.EXACT)
    with pytest.raises(BoundarySolveError):
        branch_boundary_solve(U, np.array([0.5, 0.5]))


def test_symmetric_cycle_contracts_by_cos_two_theta(two_state):
    cfg = CycleConfig(0.5, 3)
    result = symmetric_cycle(two_state, [0.2, 0.8], cfg)
    theta = two_state.lam * 0.5
    delta = result.trajectory.p[:, 1] - result.trajectory.p[:, 0]
    assert np.allclose(delta, 0.6 * np.cos(2 * theta) ** np.arange(4), atol=1e-14)
    assert [d["interval"] for d in result.diagnostics] == [0, 1, 2]
    assert max(d["bc_residual"] for d in result.diagnostics) <= 1e-15


def test_antisymmetric_cycles_end_in_end_of_time():
    sys = build_system([0.0, 0.0], [[0.0, 1.0], [1.0, 0.0]], 0.1)
    cfg = CycleConfig(1.0, 50)
    result = antisymmetric_cycle(sys, [0.05, 0.95], cfg)
    traj = result.trajectory
    s2 = np.sin(0.1) ** 2
    assert traj.events and traj.events[0].kind is BoundaryKind.END_OF_TIME
    assert traj.events[0].t_event == pytest.approx(5.0)
    assert np.allclose(np.diff(traj.p[:, 0]), -s2, atol=1e-14)
    assert 0.0 <= traj.final.p[0] < s2


def test_antisymmetric_boundary_conditions_general_system():
    sys = random_system(3, "cpt", 0.01, seed=3)
    cfg = CycleConfig(0.2, 20)
    result = antisymmetric_cycle(sys, np.full(6, 1 / 6), cfg)
    assert not result.trajectory.events
    assert max(d["bc_residual"] for d in result.diagnostics) <= 1e-10
    assert min(d["weight_min"] for d in result.diagnostics) >= 0.0
    assert result.trajectory.max_drift() <= 1e-12


def test_perturbative_cycles_track_exact(two_state):
    exact = symmetric_cycle(two_state, [0.0, 1.0], CycleConfig(0.5, 100))
    pert = symmetric_cycle(two_state, [0.0, 1.0], CycleConfig(0.5, 100, Propagation.PERTURBATIVE))
    assert np.abs(exact.trajectory.p - pert.trajectory.p).max() <= 1e-6


def test_time_dependent_coupling_is_frozen_per_interval():
    systems = {}

    def sys_at(t):
        lam = 0.01 if t < 1.0 else 0.02
        return systems.setdefault(lam, build_system([0.0, 0.0], [[0, 1], [1, 0]], lam))

    result = symmetric_cycle(sys_at, [0.0, 1.0], CycleConfig(0.5, 4))
    delta = result.trajectory.p[:, 1] - result.trajectory.p[:, 0]
    c1, c2 = np.cos(2 * 0.005), np.cos(2 * 0.01)
    assert np.allclose(delta, [1.0, c1, c1 ** 2, c1 ** 2 * c2, c1 ** 2 * c2 ** 2], atol=1e-14)


def test_cycle_config_validation(two_state, caplog):
    with pytest.raises(ValueError):
        CycleConfig(0.0, 10)
    notes = CycleConfig(0.5, 1).validate(two_state)
    assert any("Zeno" in n for n in notes)


@pytest.mark.parametrize("variant", list(Variant))
def test_two_state_micro_agrees_with_master(two_state, variant):
    cfg = CycleConfig(0.5, 2000)
    p0 = [1.0, 0.0]
    micro = run_cycles(two_state, p0, cfg, variant).trajectory
    ode = master_trajectory(two_state, p0, cfg, variant, substeps=10)
    report = compare_to_master(micro, ode)
    assert report.within(two_state.lam)
    assert report.max_abs_err <= 1e-5


def test_zero_coupling_gives_zero_error():
    sys = build_system([1.0, 1.0], np.zeros((2, 2)), 0.01)
    cfg = CycleConfig(0.5, 20)
    micro = symmetric_cycle(sys, [0.3, 0.7], cfg).trajectory
    ode = master_trajectory(sys, [0.3, 0.7], cfg, "spme", substeps=5)
    assert compare_to_master(micro, ode).max_abs_err <= 1e-15


def test_compare_needs_shared_grid(two_state):
    micro = symmetric_cycle(two_state, [0.5, 0.5], CycleConfig(0.5, 4)).trajectory
    other = Trajectory(Variant.SPME)
    other.append(0.25, np.array([0.5, 0.5]), np.zeros(2))
    other.append(0.75, np.array([0.5, 0.5]), np.zeros(2))
    with pytest.raises(GridMismatchError):
        compare_to_master(micro, other)


def test_scaling_slope():
    lams = np.array([0.02, 0.01, 0.005])
    assert scaling_slope(lams, 3.0 * lams ** 4) == pytest.approx(4.0)


def test_lambda_sweep_two_state(two_state):
    reports, slope = lambda_sweep(two_state, [1.0, 0.0], CycleConfig(0.5, 500), "spme", [0.02, 0.01, 0.005], 10)
    assert len(reports) == 3
    assert slope >= 1.0


@pytest.mark.parametrize("variant", list(Variant))
def test_energy_drift_shrinks_with_lambda(variant):
    rng = np.random.default_rng(8)
    V = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    V = 0.5 * (V + V.conj().T)
    np.fill_diagonal(V, 0.0)
    base = build_system([20.0, 10.0, 10.0, 20.0], V, 0.01)
    p0 = [0.1, 0.2, 0.3, 0.4]
    cfg = CycleConfig(0.5, 20)
    drifts = []
    for lam in (0.02, 0.01, 0.005):
        traj = run_cycles(base.with_lambda(lam), p0, cfg, variant).trajectory
        assert not traj.events
        drifts.append(float(np.abs(traj.E - traj.E[0]).max()))
    assert drifts[0] <= 1e-2 * 15.0
    assert drifts[1] < 0.5 * drifts[0]
    assert drifts[2] < 0.5 * drifts[1]
