# qpauli/solver.py

"""
Fixed-step RK4 integration of dp/dt = A p for both master-equation variants,
with entropy/energy bookkeeping, boundary-of-time events and the two-state
closed-form solutions.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate
from scipy.special import xlogy

from qpauli.kinetics import (
    GeneratorMatrix,
    KineticMatrix,
    Variant,
    c_prime,
    connected_classes,
    cross_coupling,
    generator,
)
from qpauli.system import SystemSpec, indicator, label_of

logger = logging.getLogger("qpauli.solver")

SIMPLEX_TOL = 1e-9
EVENT_TOL = 1e-9
DRIFT_WARN = 1e-12
MAX_BISECTIONS = 200
TINY = 1e-300


class SimplexError(ValueError):
    """A probability vector is negative or does not sum to one."""


class EventLocationError(RuntimeError):
    """Bisection did not pin down a zero crossing."""


class DomainError(ValueError):
    """A closed-form solution was evaluated past a boundary of time."""

    def __init__(self, message: str, kind: "BoundaryKind"):
        super().__init__(message)
        self.kind = kind


class BoundaryKind(enum.Enum):
    BEGINNING_OF_TIME = "BeginningOfTime"
    END_OF_TIME = "EndOfTime"


@dataclass(frozen=True)
class TimeBoundaryEvent:
    kind: BoundaryKind
    t_event: float
    state: int


@dataclass(frozen=True, eq=False)
class ProbabilityState:
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        check_simplex(self.p)


@dataclass(frozen=True, eq=False)
class Sample:
    t: float
    p: np.ndarray
    S: float
    E: float
    H: float


@dataclass(eq=False)
class Trajectory:
    variant: Variant
    samples: list[Sample] = field(default_factory=list)
    events: list[TimeBoundaryEvent] = field(default_factory=list)

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def p(self) -> np.ndarray:
        return np.array([s.p for s in self.samples])

    @property
    def S(self) -> np.ndarray:
        return np.array([s.S for s in self.samples])

    @property
    def E(self) -> np.ndarray:
        return np.array([s.E for s in self.samples])

    @property
    def H(self) -> np.ndarray:
        return np.array([s.H for s in self.samples])

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def append(self, t: float, p: np.ndarray, energies: np.ndarray):
        self.samples.append(
            Sample(float(t), p.copy(), entropy(p, self.variant), energy(p, energies), h_function(p, self.variant))
        )

    def max_drift(self) -> float:
        return float(np.abs(self.p.sum(axis=1) - 1.0).max())


def check_simplex(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise SimplexError("probability vector must be one-dimensional")
    if p.min() < -tol:
        i = int(p.argmin())
        raise SimplexError(f"p[{i}] = {p[i]:.3e} is negative")
    if abs(p.sum() - 1.0) > tol:
        raise SimplexError(f"probabilities sum to {p.sum():.15g}, not 1")
    return p


# -----------------------------------------------------------------------------
# Observables
# -----------------------------------------------------------------------------

def _plogp(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.where(p > TINY, xlogy(np.clip(p, TINY, None), np.clip(p, TINY, None)), 0.0)


def entropy(p, variant) -> float:
    """S = -sum_k C'_k p_k ln p_k with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    return float(-np.sum(c_prime(p.size // 2, variant) * _plogp(p)))


def entropy_split(p) -> tuple[float, float]:
    """(S_m, S_a) = (-sum_matter p ln p, -sum_antimatter p ln p)."""
    p = np.asarray(p, dtype=float)
    n = p.size // 2
    plogp = _plogp(p)
    return float(-plogp[n:].sum()), float(-plogp[:n].sum())


def h_function(p, variant) -> float:
    """
    -sum_k C'_k p_k (ln p_k - 1) = S + sum_k C'_k p_k.

    Its time derivative is exactly entropy_production(); it equals S + 1 for
    SPME, and differs from S by the matter-antimatter balance for APME.
    """
    p = np.asarray(p, dtype=float)
    cp = c_prime(p.size // 2, variant)
    return entropy(p, variant) + float(np.sum(cp * p))


def energy(p, sys_or_energies) -> float:
    eps = sys_or_energies.energies if isinstance(sys_or_energies, SystemSpec) else sys_or_energies
    return float(np.dot(np.asarray(eps, dtype=float), np.asarray(p, dtype=float)))


def entropy_production_terms(p, w, variant) -> np.ndarray:
    """Summands w_jk (C'_j ln p_k - C'_k ln p_j)(C'_k p_k - C'_j p_j), j != k."""
    p = np.asarray(p, dtype=float)
    m = w.w if isinstance(w, KineticMatrix) else np.asarray(w, dtype=float)
    cp = c_prime(p.size // 2, variant)
    lnp = np.log(p)
    terms = m * (cp[:, None] * lnp[None, :] - cp[None, :] * lnp[:, None]) * (
        cp[None, :] * p[None, :] - cp[:, None] * p[:, None]
    )
    np.fill_diagonal(terms, 0.0)
    return terms


def entropy_production(p, w, variant) -> float:
    """dH/dt = 1/2 sum_jk of entropy_production_terms."""
    return 0.5 * float(entropy_production_terms(p, w, variant).sum())


# -----------------------------------------------------------------------------
# Integration
# -----------------------------------------------------------------------------

GeneratorLike = GeneratorMatrix | Callable[[float], GeneratorMatrix | np.ndarray]


def _matrix_at(gen: GeneratorLike, t: float) -> np.ndarray:
    g = gen(t) if not isinstance(gen, GeneratorMatrix) else gen
    return g.A if isinstance(g, GeneratorMatrix) else np.asarray(g, dtype=float)


def _rk4(gen: GeneratorLike, t: float, p: np.ndarray, h: float) -> np.ndarray:
    k1 = _matrix_at(gen, t) @ p
    k2 = _matrix_at(gen, t + 0.5 * h) @ (p + 0.5 * h * k1)
    k3 = _matrix_at(gen, t + 0.5 * h) @ (p + 0.5 * h * k2)
    k4 = _matrix_at(gen, t + h) @ (p + h * k3)
    return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def default_step(gen: GeneratorLike, t0: float = 0.0) -> float:
    scale = float(np.abs(_matrix_at(gen, t0)).max())
    return 1e-3 / scale if scale > 0.0 else 1.0


def integrate(
    gen: GeneratorLike,
    p0,
    t0: float,
    t1: float,
    step_h: float | None = None,
    *,
    variant=None,
    energies=None,
    sample_every: int = 1,
) -> Trajectory:
    """
    Classical RK4 from t0 to t1 (t1 < t0 runs backward). The run stops at the
    first zero crossing of any p_j, located by bisection and recorded as
    EndOfTime (forward) or BeginningOfTime (backward).
    """
    if step_h is None:
        step_h = default_step(gen, t0)
    if not step_h > 0.0:
        raise ValueError(f"step_h must be positive, got {step_h}")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    p = check_simplex(p0).copy()

    if isinstance(gen, GeneratorMatrix):
        variant = gen.variant if variant is None else Variant.parse(variant)
        eps = gen.energies if energies is None else np.asarray(energies, dtype=float)
    else:
        variant = Variant.parse(variant or Variant.SPME)
        eps = np.zeros(p.size) if energies is None else np.asarray(energies, dtype=float)

    span = float(t1) - float(t0)
    steps = max(1, math.ceil(abs(span) / step_h - 1e-9)) if span != 0.0 else 0
    h = span / steps if steps else 0.0
    kind = BoundaryKind.END_OF_TIME if span >= 0.0 else BoundaryKind.BEGINNING_OF_TIME

    traj = Trajectory(variant)
    traj.append(t0, p, eps)
    for i in range(steps):
        t = t0 + i * h
        p_next = _rk4(gen, t, p, h)
        if p_next.min() < 0.0:
            tau, p_event = _locate_crossing(gen, t, p, h)
            state = label_of(int(p_event.argmin()), p.size // 2)
            traj.append(t + tau, p_event, eps)
            traj.events.append(TimeBoundaryEvent(kind, t + tau, state))
            logger.info("%s at t=%.12g (state %+d)", kind.value, t + tau, state)
            break
        p = p_next
        if (i + 1) % sample_every == 0 or i + 1 == steps:
            traj.append(t0 + (i + 1) * h, p, eps)

    drift = traj.max_drift()
    if drift > DRIFT_WARN:
        logger.warning("probability drift %.3e exceeds %.0e", drift, DRIFT_WARN)
    return traj


def _locate_crossing(gen, t, p, h) -> tuple[float, np.ndarray]:
    lo, hi = 0.0, h
    p_lo = p
    if p_lo.min() <= EVENT_TOL:
        return 0.0, p_lo.copy()
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        p_mid = _rk4(gen, t, p, mid)
        if p_mid.min() < 0.0:
            hi = mid
        else:
            lo, p_lo = mid, p_mid
            if p_lo.min() <= EVENT_TOL:
                return lo, p_lo
    raise EventLocationError(f"zero crossing in step at t={t:.12g} not located to {EVENT_TOL}")


# -----------------------------------------------------------------------------
# Two-state closed forms
# -----------------------------------------------------------------------------

def two_state_generator(w: float, variant, energies=(0.0, 0.0)) -> GeneratorMatrix:
    """Generator of the two-state system [p_-1, p_+1] with a single rate w."""
    return generator(KineticMatrix.from_rates([[0.0, w], [w, 0.0]], energies), variant)


def omega_integral(w_fn: Callable[[float], float], t0: float, t: float) -> float:
    """Omega(t, t0) = integral of w from t0 to t."""
    value, _ = scipy.integrate.quad(w_fn, t0, t, limit=200)
    return float(value)


def two_state_solution(p0, omega, variant, t: float, t0: float = 0.0) -> np.ndarray:
    """
    p = [p_-1, p_+1] at time t.

    omega is a constant rate w (Omega = w (t - t0)) or a callable Omega(t, t0).
      SPME: p_+-1 = (1 +- (p+_0 - p-_0) exp(-2 Omega)) / 2
      APME: p_+1 = p+_0 + Omega, p_-1 = p-_0 - Omega
    """
    p_minus, p_plus = check_simplex(p0)
    variant = Variant.parse(variant)
    Om = omega(t, t0) if callable(omega) else float(omega) * (t - t0)
    if variant is Variant.SPME:
        delta = (p_plus - p_minus) * math.exp(-2.0 * Om)
        out = np.array([0.5 * (1.0 - delta), 0.5 * (1.0 + delta)])
    else:
        out = np.array([p_minus - Om, p_plus + Om])
    if out.min() < -EVENT_TOL:
        kind = BoundaryKind.END_OF_TIME if Om > 0.0 else BoundaryKind.BEGINNING_OF_TIME
        raise DomainError(
            f"{variant.name} two-state solution at Omega={Om:.6g} lies past the {kind.value}",
            kind,
        )
    return out


def two_state_boundary_time(p0, w: float, variant, backward: bool = False) -> float | None:
    """
    Time offset |t - t0| at which a probability of the constant-rate two-state
    solution reaches zero, or None when that direction never reaches one.
    """
    p_minus, p_plus = check_simplex(p0)
    variant = Variant.parse(variant)
    if w <= 0.0:
        return None
    if variant is Variant.APME:
        return (p_plus if backward else p_minus) / w
    delta = abs(p_plus - p_minus)
    if not backward or delta == 0.0:
        return None
    return math.log(1.0 / delta) / (2.0 * w)


# -----------------------------------------------------------------------------
# Equilibrium
# -----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    variant: Variant
    interior: bool
    message: str
    state: ProbabilityState | None = None
    stable: bool = True
    trajectory: Trajectory | None = None


def class_uniform(w, p0) -> np.ndarray:
    """Uniform distribution over each connected class, carrying the class's initial mass."""
    p0 = np.asarray(p0, dtype=float)
    count, ids = connected_classes(w)
    out = np.empty_like(p0)
    for c in range(count):
        members = ids == c
        out[members] = p0[members].sum() / members.sum()
    return out


def equilibrium(
    gen: GeneratorMatrix, p0, max_chunks: int = 200, step_h: float | None = None
) -> EquilibriumReport:
    """
    SPME: the class-uniform kernel vector. APME with matter-antimatter coupling:
    no interior fixed point; the run is followed until the antimatter is gone
    or a boundary event fires, and the terminal state is reported.
    """
    p0 = check_simplex(p0)
    rates = gen.rates
    if gen.variant is Variant.SPME:
        return EquilibriumReport(
            gen.variant, True, "microcanonical: uniform over each connected class",
            ProbabilityState(class_uniform(rates, p0)),
        )

    cross = cross_coupling(rates)
    n = rates.n
    if not np.any(cross > 0.0):
        count, ids = connected_classes(rates)
        anti = indicator(n) < 0
        stable = all((ids[anti] == c).sum() <= 1 for c in range(count))
        return EquilibriumReport(
            gen.variant, True,
            "no matter-antimatter coupling: class-uniform fixed point"
            + ("" if stable else ", unstable in the antimatter sector"),
            ProbabilityState(class_uniform(rates, p0)),
            stable,
        )

    chunk = 1.0 / float(cross[cross > 0.0].min())
    step = default_step(gen) if step_h is None else step_h
    t, p = 0.0, p0
    whole = Trajectory(gen.variant)
    for _ in range(max_chunks):
        part = integrate(gen, p, t, t + chunk, step, sample_every=max(1, int(chunk / step) // 100))
        whole.samples.extend(part.samples if not whole.samples else part.samples[1:])
        whole.events.extend(part.events)
        t, p = part.final.t, part.final.p
        if part.events:
            ev = part.events[0]
            return EquilibriumReport(
                gen.variant, False,
                f"no interior fixed point: {ev.kind.value} at t={ev.t_event:.6g} (state {ev.state:+d})",
                ProbabilityState(p / p.sum(), t), trajectory=whole,
            )
        if p[:n].sum() < 1e-6:
            return EquilibriumReport(
                gen.variant, False,
                f"no interior fixed point: antimatter exhausted by t={t:.6g}",
                ProbabilityState(p / p.sum(), t), trajectory=whole,
            )
    return EquilibriumReport(
        gen.variant, False,
        f"no interior fixed point; no termination within t={t:.6g}",
        ProbabilityState(p / p.sum(), t), trajectory=whole,
    )
