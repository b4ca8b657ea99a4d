# qpauli/checks.py

"""
Property battery over seeded random systems: conservation, H-theorem,
detailed balance, CP/CPT invariance, SPME equilibrium and APME termination.
Each system is an independent job; results are sorted by seed before they
are aggregated, so the summary does not depend on thread scheduling.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from qpauli.kinetics import (
    KineticMatrix,
    OnShell,
    Variant,
    cross_coupling,
    detailed_balance_check,
    fill_diagonal,
    generator,
    kinetic_coefficients,
    pme_invariance_check,
)
from qpauli.solver import class_uniform, entropy_production_terms, equilibrium, integrate
from qpauli.system import Symmetry, check_invariance, random_system

logger = logging.getLogger("qpauli.checks")

PROPERTIES = (
    "conservation",
    "h-theorem",
    "detailed-balance",
    "invariance",
    "spme-equilibrium",
    "apme-termination",
)
SYMMETRY_CYCLE = (Symmetry.NONE, Symmetry.CP, Symmetry.CPT, Symmetry.BOTH)

DRIFT_TOL = 1e-12
ENERGY_TOL = 1e-10
MONOTONE_TOL = 1e-10
SUMMAND_TOL = 1e-14
FIXED_POINT_TOL = 1e-12
ANTIMATTER_TOL = 1e-6


@dataclass(frozen=True)
class Outcome:
    """One property on one system; violation is >= 0, 0 meaning clean."""
    applicable: bool
    passed: bool = True
    violation: float = 0.0


@dataclass
class SystemResult:
    seed: int
    outcomes: dict[str, Outcome] = field(default_factory=dict)


@dataclass(frozen=True)
class PropertySummary:
    name: str
    passed: int
    total: int
    worst: float

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def line(self) -> str:
        return f"{self.name},{self.passed}/{self.total},{self.worst:.3e}"


@dataclass(frozen=True)
class BatteryReport:
    summaries: tuple[PropertySummary, ...]
    results: tuple[SystemResult, ...]

    @property
    def passed(self) -> bool:
        return all(s.ok for s in self.summaries)

    def summary(self, name: str) -> PropertySummary:
        return next(s for s in self.summaries if s.name == name)

    def lines(self) -> list[str]:
        return ["property,pass,worst_margin"] + [s.line() for s in self.summaries]


def _violation(values: np.ndarray) -> float:
    return float(max(0.0, np.max(values))) if np.size(values) else 0.0


def check_system(
    seed: int,
    max_n: int = 4,
    lam: float = 0.01,
    points: int = 10,
    inject_asymmetry: float | None = None,
) -> SystemResult:
    """Run every property on the random system built from `seed`."""
    n = 1 + seed % max_n
    sym = SYMMETRY_CYCLE[seed % len(SYMMETRY_CYCLE)]
    sys = random_system(n, sym, lam, shell_count=1 + seed % 2, seed=seed)
    rates = kinetic_coefficients(sys, OnShell())
    if inject_asymmetry is not None:
        w = rates.w.copy()
        w[0, 1] += inject_asymmetry
        rates = KineticMatrix(fill_diagonal(w), rates.mode, rates.lam, rates.energies)

    rng = np.random.default_rng(seed)
    p0 = rng.dirichlet(np.ones(sys.dim))
    result = SystemResult(seed)
    out = result.outcomes

    db = detailed_balance_check(rates)
    out["detailed-balance"] = Outcome(True, db.passed, db.max_violation)

    if sym is Symmetry.NONE:
        out["invariance"] = Outcome(False)
    else:
        reports = [check_invariance(sys, cls) for cls in sym.classes()] + [pme_invariance_check(sys, rates)]
        out["invariance"] = Outcome(
            True, all(r.passed for r in reports), max(r.max_violation for r in reports)
        )

    scale = float(np.abs(rates.w).max())
    if scale == 0.0:
        # no transitions at all: every trajectory is constant
        for name in ("conservation", "h-theorem", "spme-equilibrium"):
            out[name] = Outcome(True)
        out["apme-termination"] = Outcome(False)
        return result
    step, horizon = 1e-2 / scale, 10.0 / scale

    drift = energy = monotone = 0.0
    trajectories = {}
    for variant in Variant:
        gen = generator(rates, variant)
        traj = integrate(gen, p0, 0.0, horizon, step)
        trajectories[variant] = (gen, traj)
        drift = max(drift, traj.max_drift())
        E = traj.E
        energy = max(energy, float(np.abs(E - E[0]).max()) / max(1.0, abs(E[0])))
        monotone = max(monotone, _violation(-np.diff(traj.H)))
        if variant is Variant.SPME:
            monotone = max(monotone, _violation(-np.diff(traj.S)))
    out["conservation"] = Outcome(True, drift <= DRIFT_TOL and energy <= ENERGY_TOL, max(drift, energy))

    summand = 0.0
    for q in rng.dirichlet(np.ones(sys.dim), size=points):
        for variant in Variant:
            summand = max(summand, _violation(-entropy_production_terms(q, rates, variant)))
    out["h-theorem"] = Outcome(
        True, monotone <= MONOTONE_TOL and summand <= SUMMAND_TOL, max(monotone, summand)
    )

    gen, traj = trajectories[Variant.SPME]
    target = class_uniform(rates, p0)
    fixed = float(np.abs(gen.A @ target).max())
    distance = np.linalg.norm(traj.p - target[None, :], axis=1)
    approach = _violation(np.diff(distance))
    out["spme-equilibrium"] = Outcome(
        True, fixed <= FIXED_POINT_TOL and approach <= MONOTONE_TOL, max(fixed, approach)
    )

    if not np.any(cross_coupling(rates) > 0.0):
        out["apme-termination"] = Outcome(False)
    else:
        report = equilibrium(trajectories[Variant.APME][0], p0, step_h=step)
        terminal = report.state.p
        ended = report.trajectory is not None and bool(report.trajectory.events)
        remaining = float(terminal[:n].sum())
        out["apme-termination"] = Outcome(True, ended or remaining < ANTIMATTER_TOL, 0.0 if ended else remaining)
    return result


def run_battery(
    n_systems: int = 100,
    seed: int = 0,
    workers: int = 4,
    max_n: int = 4,
    inject_asymmetry: float | None = None,
) -> BatteryReport:
    """Fan the seeds out over worker threads and fold the outcomes per property."""
    seeds = [seed + i for i in range(n_systems)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        tasks = [
            executor.submit(check_system, s, max_n, inject_asymmetry=inject_asymmetry) for s in seeds
        ]
        results = sorted((f.result() for f in as_completed(tasks)), key=lambda r: r.seed)

    summaries = []
    for name in PROPERTIES:
        applicable = [r.outcomes[name] for r in results if r.outcomes[name].applicable]
        summaries.append(PropertySummary(
            name,
            sum(o.passed for o in applicable),
            len(applicable),
            max((o.violation for o in applicable), default=0.0),
        ))
        if summaries[-1].total and not summaries[-1].ok:
            logger.warning("%s failed on %d of %d systems", name, summaries[-1].total - summaries[-1].passed, summaries[-1].total)
    return BatteryReport(tuple(summaries), tuple(results))
