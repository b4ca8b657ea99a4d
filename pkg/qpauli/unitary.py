# qpauli/unitary.py

"""
Propagators over one interval dt: the exact exponential of H = H0 + lambda*V
and its Dyson expansion truncated as in the rate derivation (first-order
off-diagonals, second-order diagonal).
"""

import enum
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from qpauli.system import SystemSpec

logger = logging.getLogger("qpauli.unitary")

# |d_eps * dt| below which the kernels switch to their Taylor series
SERIES_CUTOFF = 1e-6


class PropagatorError(RuntimeError):
    """The Hamiltonian could not be diagonalized."""


class Propagation(enum.Enum):
    EXACT = "exact"
    PERTURBATIVE = "perturbative"

    @classmethod
    def parse(cls, value) -> "Propagation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown propagator mode '{value}'") from None


@dataclass(frozen=True, eq=False)
class EvolutionOperator:
    U: np.ndarray
    dt: float
    mode: Propagation
    order: int | None = None

    def __matmul__(self, other):
        return self.U @ other

    @property
    def dagger(self) -> np.ndarray:
        return self.U.conj().T


# -----------------------------------------------------------------------------
# Kernels
# -----------------------------------------------------------------------------

def q1_kernel(eps_j, eps_k, dt):
    """Q1_jk(dt) = sin(d dt / 2) / (d / 2), d = eps_j - eps_k; limit dt at d = 0."""
    d = np.asarray(eps_j, dtype=float) - np.asarray(eps_k, dtype=float)
    dt = np.asarray(dt, dtype=float)
    x = d * dt
    small = np.abs(x) < SERIES_CUTOFF
    safe_d = np.where(small, 1.0, d)
    out = np.where(small, dt * (1.0 - x * x / 24.0), np.sin(0.5 * x) / (0.5 * safe_d))
    return _scalar(out.astype(complex))


def q2_kernel(eps_j, eps_k, dt):
    """Q2_jk(dt) = (1 + i d dt - exp(i d dt)) / d^2; limit dt^2 / 2 at d = 0."""
    d = np.asarray(eps_j, dtype=float) - np.asarray(eps_k, dtype=float)
    dt = np.asarray(dt, dtype=float)
    x = d * dt
    small = np.abs(x) < SERIES_CUTOFF
    d2 = np.where(small, 1.0, d * d)
    # 1 - cos x and x - sin x written without cancellation
    re = np.where(small, dt * dt * (0.5 - x * x / 24.0), 2.0 * np.sin(0.5 * x) ** 2 / d2)
    im = np.where(small, dt * dt * (x / 6.0 - x ** 3 / 120.0), (x - np.sin(x)) / d2)
    return _scalar(re + 1j * im)


def d_kernel(d_eps, dt):
    """D(d, dt) = 2 sin^2(d dt / 2) / (d^2 dt / 2) = |Q1|^2 / dt; limit dt at d = 0."""
    dt_arr = np.asarray(dt, dtype=float)
    if np.any(dt_arr <= 0.0):
        raise ValueError("d_kernel needs dt > 0")
    d = np.abs(np.asarray(d_eps, dtype=float))
    x = d * dt_arr
    small = x < SERIES_CUTOFF
    d2 = np.where(small, 1.0, d * d)
    out = np.where(small, dt_arr * (1.0 - x * x / 12.0), 2.0 * np.sin(0.5 * x) ** 2 / (0.5 * d2 * dt_arr))
    return _scalar(out)


def _scalar(a: np.ndarray):
    return a.item() if a.ndim == 0 else a


# -----------------------------------------------------------------------------
# Propagators
# -----------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _spectrum(sys: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    H = sys.hamiltonian()
    try:
        w, Q = scipy.linalg.eigh(H)
    except (np.linalg.LinAlgError, ValueError) as e:
        cond = np.linalg.cond(H)
        raise PropagatorError(f"eigendecomposition of H failed (cond(H) = {cond:.3e}): {e}") from e
    return w, Q


def exact_propagator(sys: SystemSpec, dt: float) -> EvolutionOperator:
    """U = exp(-i H dt) through the Hermitian eigendecomposition of H."""
    dt = float(dt)
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    w, Q = _spectrum(sys)
    U = (Q * np.exp(-1j * w * dt)[None, :]) @ Q.conj().T
    return EvolutionOperator(U, dt, Propagation.EXACT)


def perturbative_propagator(sys: SystemSpec, dt: float, order: int = 2) -> EvolutionOperator:
    """
    order 0: U0 = diag(exp(-i eps_j dt))
    order 1: + off-diagonal -i lambda V_jk Q1_jk exp(-i (eps_j + eps_k) dt / 2)
    order 2: diagonal scaled by (1 - lambda^2 sum_{k != j} V_jk V_kj Q2_jk)
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    dt = float(dt)
    eps = sys.energies
    ej, ek = eps[:, None], eps[None, :]
    U = np.diag(np.exp(-1j * eps * dt))
    if order >= 1:
        off = -1j * sys.lam * sys.V * q1_kernel(ej, ek, dt) * np.exp(-0.5j * (ej + ek) * dt)
        np.fill_diagonal(off, 0.0)
        U = U + off
    if order == 2:
        VV = sys.V * sys.V.T
        np.fill_diagonal(VV, 0.0)
        correction = 1.0 - sys.lam ** 2 * np.sum(VV * q2_kernel(ej, ek, dt), axis=1)
        U[np.diag_indices_from(U)] = np.exp(-1j * eps * dt) * correction
    return EvolutionOperator(U, dt, Propagation.PERTURBATIVE, order)


def propagator(sys: SystemSpec, dt: float, mode=Propagation.EXACT, order: int = 2) -> EvolutionOperator:
    if Propagation.parse(mode) is Propagation.EXACT:
        return exact_propagator(sys, dt)
    return perturbative_propagator(sys, dt, order)


def unitarity_defect(U) -> float:
    """max |U^dagger U - I|."""
    M = U.U if isinstance(U, EvolutionOperator) else np.asarray(U)
    return float(np.abs(M.conj().T @ M - np.eye(M.shape[0])).max())
