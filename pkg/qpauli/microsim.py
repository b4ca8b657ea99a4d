# qpauli/microsim.py

"""
Microscopic decoherence-cycle simulation, used as an independent oracle for
the master equations.

Mixtures are kept as separate branches (one column per source state k),
never summed coherently. Symmetric cycles decohere every state at the start
of each interval. Antisymmetric cycles decohere matter at the start and
recohere antimatter at the end; the two-point boundary conditions are solved
exactly by linear algebra on the antimatter block of U.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from qpauli.kinetics import FiniteWindow, Variant, generator, kinetic_coefficients
from qpauli.solver import (
    BoundaryKind,
    TimeBoundaryEvent,
    Trajectory,
    check_simplex,
    integrate,
)
from qpauli.system import SystemSpec, label_of
from qpauli.unitary import EvolutionOperator, Propagation, propagator

logger = logging.getLogger("qpauli.microsim")

NORM_TOL = 1e-10
WEIGHT_TOL = 1e-14
COND_LIMIT = 1e8


class BoundarySolveError(RuntimeError):
    """The antimatter block of U is singular or ill-conditioned."""


class EndOfTimeSignal(Exception):
    """Antimatter branch weights came out negative: the cycle cannot continue."""

    def __init__(self, message: str, state: int, weight: float):
        super().__init__(message)
        self.state = state
        self.weight = weight


class GridMismatchError(ValueError):
    """Micro and master trajectories do not share sample times."""


@dataclass(frozen=True)
class CycleConfig:
    tau_d: float
    n_cycles: int
    propagator_mode: Propagation = Propagation.EXACT

    def __post_init__(self):
        if not self.tau_d > 0.0:
            raise ValueError(f"tau_d must be positive, got {self.tau_d}")
        if self.n_cycles < 0:
            raise ValueError("n_cycles must be >= 0")
        object.__setattr__(self, "propagator_mode", Propagation.parse(self.propagator_mode))

    def validate(self, sys: SystemSpec) -> list[str]:
        """Regime warnings for tau_0 << tau_d << tau_1; returned and logged."""
        notes = []
        eps_scale = float(np.abs(sys.energies).max())
        if self.tau_d * eps_scale < 10.0:
            notes.append(f"tau_d*max|eps| = {self.tau_d * eps_scale:.3g} < 10 (Zeno regime)")
        v_scale = float(np.abs(sys.V).max())
        if self.tau_d * sys.lam * v_scale > 0.1:
            notes.append(f"tau_d*lambda*max|V| = {self.tau_d * sys.lam * v_scale:.3g} > 0.1 (tau_1 regime)")
        for note in notes:
            logger.warning(note)
        return notes


@dataclass(eq=False)
class BranchMixture:
    """
    branches[:, k] is psi^(k) at t_beta + 0. weights[k] is |psi_0^(k)|^2: the
    decohered probability for symmetric and matter branches, the recohered
    end-of-interval probability x_k for antimatter branches.
    """

    branches: np.ndarray
    interval: tuple[float, float]
    weights: np.ndarray
    antisymmetric: bool = False
    cond_uaa: float = 1.0

    def probabilities(self) -> np.ndarray:
        return np.sum(np.abs(self.branches) ** 2, axis=1)

    def total_probability(self) -> float:
        return float(np.sum(np.abs(self.branches) ** 2))

    def evolve(self, U: EvolutionOperator) -> np.ndarray:
        return U.U @ self.branches

    def density_diagonal(self) -> np.ndarray:
        return self.probabilities()

    def boundary_residual(self, U: EvolutionOperator) -> float:
        """Largest violation of the boundary conditions of this mixture."""
        dim = self.branches.shape[0]
        n = dim // 2
        root = np.sqrt(np.clip(self.weights, 0.0, None))
        if not self.antisymmetric:
            return float(np.abs(self.branches - np.diag(root)).max())
        start, end = self.branches, self.evolve(U)
        res = [
            # matter branches: decohered matter components at t_beta
            np.abs(start[n:, n:] - np.diag(root[n:])).max(),
            # matter branches: no antimatter at t_beta+1
            np.abs(end[:n, n:]).max(),
            # antimatter branches: recohered antimatter components at t_beta+1
            np.abs(end[:n, :n] - np.diag(root[:n])).max(),
            # antimatter branches: no matter at t_beta
            np.abs(start[n:, :n]).max(),
        ]
        return float(max(res))


def _incoming_probabilities(state, tol: float) -> np.ndarray:
    if isinstance(state, BranchMixture):
        p = state.probabilities()
    else:
        arr = np.asarray(state)
        if arr.ndim == 1:
            p = np.abs(arr) ** 2 if np.iscomplexobj(arr) else arr.astype(float)
        elif arr.ndim == 2:
            p = np.real(np.diag(arr))
        else:
            raise ValueError("expected a state vector, density matrix or mixture")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"incoming probabilities sum to {p.sum():.15g}, not 1")
    return p


def decohere(
    state, interval: tuple[float, float] = (0.0, 0.0), tol: float = NORM_TOL
) -> BranchMixture:
    """
    Drop all coherences in the energy basis: branch k becomes sqrt(p_k) e_k.

    A real 1-D input is read as probabilities, a complex 1-D input as a wave
    function, a 2-D input as a density matrix.
    """
    p = _incoming_probabilities(state, tol)
    p = np.clip(p, 0.0, None)
    return BranchMixture(np.diag(np.sqrt(p)).astype(complex), interval, p)


def branch_boundary_solve(
    U: EvolutionOperator,
    p,
    interval: tuple[float, float] = (0.0, 0.0),
) -> BranchMixture:
    """
    Matter branch k~: sqrt(p_k) e_k + a with a = -Uaa^-1 Uam sqrt(p_k) e_k, so
    its antimatter part vanishes at t_beta+1. Antimatter branch k-: sqrt(x_k)
    Uaa^-1 e_k, so it is the pure eigenstate at t_beta+1. The weights x solve
    sum_k |(Uaa^-1)_jk|^2 x_k = p_j - sum_k~ |a^(k~)_j|^2 (continuity of
    antimatter probabilities at t_beta, matter branches included).
    """
    p = np.asarray(p, dtype=float)
    dim = p.size
    n = dim // 2
    M = U.U
    Uaa, Uam = M[:n, :n], M[:n, n:]
    cond = float(np.linalg.cond(Uaa))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise BoundarySolveError(f"antimatter block of U is ill-conditioned (cond = {cond:.3e})")
    Uaa_inv = scipy.linalg.inv(Uaa)

    root_m = np.sqrt(np.clip(p[n:], 0.0, None))
    admix = -Uaa_inv @ Uam * root_m[None, :]          # columns a^(k~)
    rhs = p[:n] - np.sum(np.abs(admix) ** 2, axis=1)
    G = np.abs(Uaa_inv) ** 2
    x = scipy.linalg.solve(G, rhs)
    x = np.where(np.abs(x) <= WEIGHT_TOL, 0.0, x)
    if x.min() < 0.0:
        i = int(x.argmin())
        state = label_of(i, n)
        raise EndOfTimeSignal(
            f"negative recoherence weight {x[i]:.3e} for state {state:+d}", state, float(x[i])
        )

    branches = np.zeros((dim, dim), dtype=complex)
    branches[n:, n:] = np.diag(root_m)
    branches[:n, n:] = admix
    branches[:n, :n] = Uaa_inv * np.sqrt(x)[None, :]
    weights = np.concatenate([x, p[n:]])
    return BranchMixture(branches, interval, weights, antisymmetric=True, cond_uaa=cond)


# -----------------------------------------------------------------------------
# Cycles
# -----------------------------------------------------------------------------

SystemLike = SystemSpec | Callable[[float], SystemSpec]


@dataclass(eq=False)
class CycleResult:
    trajectory: Trajectory
    diagnostics: list[dict] = field(default_factory=list)


class _Propagators:
    """One U per distinct system; V is frozen at V(t_beta) for each interval."""

    def __init__(self, sys: SystemLike, cfg: CycleConfig):
        self.sys = sys
        self.cfg = cfg
        self._cache: dict[int, tuple[SystemSpec, EvolutionOperator]] = {}

    def at(self, t: float) -> tuple[SystemSpec, EvolutionOperator]:
        spec = self.sys(t) if callable(self.sys) else self.sys
        key = id(spec)
        if key not in self._cache:
            self._cache[key] = (spec, propagator(spec, self.cfg.tau_d, self.cfg.propagator_mode))
        return self._cache[key]


def _first_system(sys: SystemLike, t0: float) -> SystemSpec:
    return sys(t0) if callable(sys) else sys


def symmetric_cycle(sys: SystemLike, p0, cfg: CycleConfig, t0: float = 0.0) -> CycleResult:
    """Decohere, evolve every branch over tau_d, read off p, repeat."""
    first = _first_system(sys, t0)
    cfg.validate(first)
    props = _Propagators(sys, cfg)
    p = check_simplex(p0).copy()
    traj = Trajectory(Variant.SPME)
    traj.append(t0, p, first.energies)
    diagnostics = []
    for beta in range(cfg.n_cycles):
        t = t0 + beta * cfg.tau_d
        spec, U = props.at(t)
        mixture = decohere(p, (t, t + cfg.tau_d), tol=np.inf)
        end = mixture.evolve(U)
        p = np.sum(np.abs(end) ** 2, axis=1)
        traj.append(t0 + (beta + 1) * cfg.tau_d, p, spec.energies)
        diagnostics.append({
            "interval": beta,
            "bc_residual": mixture.boundary_residual(U),
            "weight_min": float(mixture.weights.min()),
            "cond_Uaa": 1.0,
        })
    return CycleResult(traj, diagnostics)


def antisymmetric_cycle(sys: SystemLike, p0, cfg: CycleConfig, t0: float = 0.0) -> CycleResult:
    """
    Solve the two-point boundary conditions, evolve the branches over tau_d,
    read off p at t_beta+1, repeat. Stops with an EndOfTime event when the
    antimatter weights cannot stay nonnegative.
    """
    first = _first_system(sys, t0)
    cfg.validate(first)
    props = _Propagators(sys, cfg)
    p = check_simplex(p0).copy()
    traj = Trajectory(Variant.APME)
    traj.append(t0, p, first.energies)
    diagnostics = []
    for beta in range(cfg.n_cycles):
        t = t0 + beta * cfg.tau_d
        spec, U = props.at(t)
        try:
            mixture = branch_boundary_solve(U, p, (t, t + cfg.tau_d))
        except EndOfTimeSignal as signal:
            traj.events.append(TimeBoundaryEvent(BoundaryKind.END_OF_TIME, t, signal.state))
            logger.info("EndOfTime at t=%.12g: %s", t, signal)
            break
        end = mixture.evolve(U)
        p = np.sum(np.abs(end) ** 2, axis=1)
        traj.append(t0 + (beta + 1) * cfg.tau_d, p, spec.energies)
        diagnostics.append({
            "interval": beta,
            "bc_residual": mixture.boundary_residual(U),
            "weight_min": float(mixture.weights.min()),
            "cond_Uaa": mixture.cond_uaa,
        })
    return CycleResult(traj, diagnostics)


def run_cycles(sys: SystemLike, p0, cfg: CycleConfig, variant, t0: float = 0.0) -> CycleResult:
    if Variant.parse(variant) is Variant.SPME:
        return symmetric_cycle(sys, p0, cfg, t0)
    return antisymmetric_cycle(sys, p0, cfg, t0)


# -----------------------------------------------------------------------------
# Comparison with the master equations
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    max_abs_err: float
    err_at_end: float
    variation: float
    lambda_scaling_slope: float | None = None

    def within(self, lam: float, factor: float = 3.0) -> bool:
        return self.max_abs_err <= factor * lam * self.variation


def master_trajectory(
    sys: SystemSpec, p0, cfg: CycleConfig, variant, substeps: int = 50, t0: float = 0.0
) -> Trajectory:
    """Master-equation run with FiniteWindow(tau_d) rates, sampled at cycle boundaries."""
    gen = generator(kinetic_coefficients(sys, FiniteWindow(cfg.tau_d)), variant)
    return integrate(
        gen, p0, t0, t0 + cfg.n_cycles * cfg.tau_d, cfg.tau_d / substeps, sample_every=substeps
    )


def compare_to_master(micro: Trajectory, ode: Trajectory, rtol: float = 1e-9) -> ComparisonReport:
    """Entrywise max |p_micro - p_ode| over the common sample times."""
    t_micro, t_ode = micro.t, ode.t
    if t_micro.size == 0 or t_ode.size == 0:
        raise GridMismatchError("empty trajectory")
    t_end = min(t_micro[-1], t_ode[-1])
    scale = rtol * max(1.0, float(np.abs(t_micro).max()))
    lo, hi = sorted((t_micro[0], t_end))
    rows = []
    for i, t in enumerate(t_micro):
        if not lo - scale <= t <= hi + scale:
            continue
        j = int(np.abs(t_ode - t).argmin())
        if abs(t_ode[j] - t) > scale:
            raise GridMismatchError(f"no master sample at t={t:.12g}")
        rows.append((i, j))
    if not rows:
        raise GridMismatchError("trajectories share no sample times")
    pm, po = micro.p, ode.p
    diffs = np.array([np.abs(pm[i] - po[j]).max() for i, j in rows])
    used = po[[j for _, j in rows]]
    variation = float((used.max(axis=0) - used.min(axis=0)).max())
    return ComparisonReport(float(diffs.max()), float(diffs[-1]), variation)


def scaling_slope(lams, errors) -> float:
    """Least-squares slope of log(error) against log(lambda)."""
    lams = np.asarray(lams, dtype=float)
    errors = np.asarray(errors, dtype=float)
    slope, _ = np.polyfit(np.log(lams), np.log(errors), 1)
    return float(slope)


def lambda_sweep(
    sys: SystemSpec, p0, cfg: CycleConfig, variant, lams, substeps: int = 50
) -> tuple[list[ComparisonReport], float]:
    """Micro-vs-master discrepancy for each lambda and its fitted scaling exponent."""
    reports = []
    for lam in lams:
        spec = sys.with_lambda(lam)
        micro = run_cycles(spec, p0, cfg, variant).trajectory
        ode = master_trajectory(spec, p0, cfg, variant, substeps)
        reports.append(compare_to_master(micro, ode))
    slope = scaling_slope(lams, [r.max_abs_err for r in reports])
    return reports, slope
