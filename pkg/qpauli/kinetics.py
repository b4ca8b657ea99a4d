# qpauli/kinetics.py

"""
Kinetic coefficients w_jk = lambda^2 |V_jk|^2 D_jk and the generators of the
symmetric and antisymmetric Pauli master equations, written in the common form

    dp_j/dt = sum_k C'_j w_jk p_k - sum_k C'_k w_kj p_j

with C' = +1 everywhere (SPME) or C' = C (APME).
"""

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from qpauli.reports import CheckReport, combine
from qpauli.system import SystemSpec, indicator, label_of, negate
from qpauli.unitary import d_kernel

logger = logging.getLogger("qpauli.kinetics")

TOL = 1e-12
ZENO_FACTOR = 10.0


class Variant(enum.Enum):
    SPME = "spme"
    APME = "apme"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown master-equation variant '{value}'") from None


def c_prime(n: int, variant) -> np.ndarray:
    if Variant.parse(variant) is Variant.SPME:
        return np.ones(2 * n)
    return indicator(n)


@dataclass(frozen=True)
class FiniteWindow:
    """sinc^2 kernel at a physical decoherence interval dt."""
    dt: float


@dataclass(frozen=True)
class OnShell:
    """
    Delta-limit surrogate: 2*pi*[|d_eps| <= eta] / eta_norm. eta_norm stands in
    for the level density that turns 2*pi*delta into a rate.
    """
    eta: float = 1e-9
    eta_norm: float = 1.0


@dataclass(frozen=True, eq=False)
class KineticMatrix:
    w: np.ndarray
    mode: FiniteWindow | OnShell | None
    lam: float | None
    energies: np.ndarray

    @property
    def n(self) -> int:
        return self.w.shape[0] // 2

    @classmethod
    def from_rates(cls, w, energies=None, lam=None) -> "KineticMatrix":
        """Wrap explicit off-diagonal rates; the diagonal is refilled from column sums."""
        w = np.array(w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2:
            raise ValueError(f"rates must be a 2n x 2n matrix, got {w.shape}")
        report = detailed_balance_check(w)
        if not report.passed:
            raise ValueError(f"rates are not symmetric and nonnegative: {report.line()}")
        eps = np.zeros(w.shape[0]) if energies is None else np.array(energies, dtype=float)
        return cls(fill_diagonal(w), None, lam, eps)


def fill_diagonal(w: np.ndarray) -> np.ndarray:
    w = w.copy()
    np.fill_diagonal(w, 0.0)
    np.fill_diagonal(w, -w.sum(axis=0))
    return w


def shell_classes(energies: np.ndarray, eta: float) -> np.ndarray:
    """Shell id per state: transitive closure of |eps_j - eps_k| <= eta."""
    close = np.abs(energies[:, None] - energies[None, :]) <= eta
    _, ids = connected_components(csr_matrix(close), directed=False)
    return ids


def kinetic_coefficients(sys: SystemSpec, mode) -> KineticMatrix:
    """Symmetric rates w_jk >= 0 with columns summing to zero."""
    eps = sys.energies
    strength = sys.lam ** 2 * np.abs(sys.V) ** 2
    if isinstance(mode, FiniteWindow):
        if not mode.dt > 0.0:
            raise ValueError("FiniteWindow needs dt > 0")
        _zeno_guard(eps, mode.dt)
        w = strength * d_kernel(eps[:, None] - eps[None, :], mode.dt)
    elif isinstance(mode, OnShell):
        if mode.eta < 0.0 or not mode.eta_norm > 0.0:
            raise ValueError("OnShell needs eta >= 0 and eta_norm > 0")
        ids = shell_classes(eps, mode.eta)
        w = 2.0 * np.pi * strength * (ids[:, None] == ids[None, :]) / mode.eta_norm
    else:
        raise TypeError(f"unknown rate mode {mode!r}")
    # mirror the upper triangle so w_jk == w_kj bit for bit
    upper = np.triu(w, 1)
    w = upper + upper.T
    return KineticMatrix(fill_diagonal(w), mode, sys.lam, sys.energies.copy())


def _zeno_guard(eps: np.ndarray, dt: float):
    scale = float(np.abs(eps).max())
    if scale == 0.0 or dt * scale < ZENO_FACTOR:
        logger.warning(
            "dt=%g is within %g/max|eps| of the unperturbed time scale: "
            "Zeno and anti-Zeno effects invalidate the rates", dt, ZENO_FACTOR,
        )


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    A: np.ndarray
    variant: Variant
    c_prime: np.ndarray
    rates: KineticMatrix

    @property
    def energies(self) -> np.ndarray:
        return self.rates.energies

    def __call__(self, p: np.ndarray) -> np.ndarray:
        return self.A @ p


def generator(w: KineticMatrix, variant) -> GeneratorMatrix:
    """A_jk = C'_j w_jk (j != k), A_kk = -sum_{j != k} C'_j w_jk."""
    variant = Variant.parse(variant)
    cp = c_prime(w.n, variant)
    off = w.w.copy()
    np.fill_diagonal(off, 0.0)
    A = cp[:, None] * off
    np.fill_diagonal(A, -A.sum(axis=0))
    return GeneratorMatrix(A, variant, cp, w)


def connected_classes(w) -> tuple[int, np.ndarray]:
    """Components of the graph with an edge wherever w_jk > 0."""
    m = w.w if isinstance(w, KineticMatrix) else np.asarray(w)
    edges = m > 0.0
    np.fill_diagonal(edges, False)
    return connected_components(csr_matrix(edges), directed=False)


def cross_coupling(w) -> np.ndarray:
    """Rates between matter and antimatter states only."""
    m = w.w if isinstance(w, KineticMatrix) else np.asarray(w)
    C = indicator(m.shape[0] // 2)
    return np.where(C[:, None] != C[None, :], m, 0.0)


# -----------------------------------------------------------------------------
# Checks
# -----------------------------------------------------------------------------

def detailed_balance_check(w, tol: float = TOL) -> CheckReport:
    """w_jk == w_kj and w_jk >= 0 off the diagonal."""
    m = w.w if isinstance(w, KineticMatrix) else np.asarray(w, dtype=float)
    n = m.shape[0] // 2
    asym = np.abs(m - m.T)
    off = m.copy()
    np.fill_diagonal(off, 0.0)
    negative = np.maximum(-off, 0.0)
    worst_asym, worst_neg = float(asym.max()), float(negative.max())
    src = asym if worst_asym >= worst_neg else negative
    i, k = np.unravel_index(int(src.argmax()), src.shape)
    return CheckReport(
        "detailed-balance",
        worst_asym <= tol and worst_neg <= tol,
        max(worst_asym, worst_neg),
        (label_of(int(i), n), label_of(int(k), n)),
        {"max_asymmetry": worst_asym, "max_negative": worst_neg},
    )


def pme_invariance_check(sys: SystemSpec, w: KineticMatrix, tol: float = TOL) -> CheckReport:
    """eps_j = eps_{-j} and w_jk = w_kj = w_{-k,-j} = w_{-j,-k}."""
    n = sys.n
    m = w.w

    def entrywise(name, residual):
        residual = np.abs(residual)
        idx = np.unravel_index(int(residual.argmax()), residual.shape)
        entry = tuple(label_of(int(i), n) for i in idx)
        worst = float(residual.max())
        return CheckReport(name, worst <= tol, worst, entry)

    reports = [
        entrywise("energy-mirror", sys.energies - negate(sys.energies)),
        entrywise("rate-symmetry", m - m.T),
        entrywise("rate-mirror", m - negate(m)),
        entrywise("rate-mirror-transposed", m - negate(m).T),
    ]
    report = combine("pme-invariance", reports)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        logger.info("invariance chain broken on %s", ", ".join(failed))
    return report
