# qpauli/system.py

"""
Finite quantum system H = H0 + lambda*V with matter (j > 0) and
antimatter (j < 0) energy eigenstates.

Public functions speak in signed labels j = -n..-1, +1..+n. Arrays are
stored in the order -n, ..., -1, +1, ..., +n, so that

    index(j) = j + n      for j < 0
    index(j) = j + n - 1  for j > 0

and negating the label j -> -j is the index reversal i -> 2n - 1 - i.
"""

import enum
import logging
import dataclasses
from dataclasses import dataclass

import numpy as np

from qpauli.reports import CheckReport

logger = logging.getLogger("qpauli.system")

TOL = 1e-12
LAMBDA_WARN = 0.1


class SystemValidationError(ValueError):
    """A system violates Hermiticity, the zero diagonal, unit phases or its claimed symmetry."""

    def __init__(self, message: str, entry: tuple | None = None, magnitude: float = 0.0):
        super().__init__(message)
        self.entry = entry
        self.magnitude = magnitude


class Symmetry(enum.Enum):
    NONE = "none"
    CP = "cp"
    CPT = "cpt"
    BOTH = "both"

    @classmethod
    def parse(cls, value) -> "Symmetry":
        if isinstance(value, cls):
            return value
        if value is None:
            return cls.NONE
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown symmetry class '{value}'") from None

    def includes(self, other: "Symmetry") -> bool:
        return self is other or (self is Symmetry.BOTH and other is not Symmetry.NONE)

    def classes(self) -> list["Symmetry"]:
        if self is Symmetry.BOTH:
            return [Symmetry.CP, Symmetry.CPT]
        if self is Symmetry.NONE:
            return []
        return [self]


# -----------------------------------------------------------------------------
# Signed labels
# -----------------------------------------------------------------------------

def index_of(j: int, n: int) -> int:
    """Storage index of the signed label j."""
    if j == 0 or abs(j) > n:
        raise ValueError(f"state label {j} outside -{n}..-1, +1..+{n}")
    return j + n if j < 0 else j + n - 1


def label_of(i: int, n: int) -> int:
    """Signed label of storage index i."""
    if not 0 <= i < 2 * n:
        raise ValueError(f"storage index {i} outside 0..{2 * n - 1}")
    return i - n if i < n else i - n + 1


def labels(n: int) -> list[int]:
    return [label_of(i, n) for i in range(2 * n)]


def format_label(j: int) -> str:
    return f"{j:+d}"


def indicator(n: int) -> np.ndarray:
    """C_j: -1 on antimatter, +1 on matter, in storage order."""
    return np.concatenate([-np.ones(n), np.ones(n)])


def negate(x: np.ndarray) -> np.ndarray:
    """Apply j -> -j to a state vector (axis 0) or to both axes of a matrix."""
    x = np.asarray(x)
    if x.ndim == 1:
        return x[::-1].copy()
    return x[::-1, ::-1].copy()


# -----------------------------------------------------------------------------
# SystemSpec
# -----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Validated, immutable system; build with build_system()."""

    n: int
    energies: np.ndarray
    V: np.ndarray
    lam: float
    phases: np.ndarray
    symmetry: Symmetry = Symmetry.NONE

    def __post_init__(self):
        for arr in (self.energies, self.V, self.phases):
            arr.flags.writeable = False

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def labels(self) -> list[int]:
        return labels(self.n)

    @property
    def C(self) -> np.ndarray:
        return indicator(self.n)

    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex) + self.lam * self.V

    def with_lambda(self, lam: float) -> "SystemSpec":
        return build_system(self.energies, self.V, lam, self.phases, self.symmetry)


def build_system(
    energies,
    V,
    lam: float,
    phases=None,
    symmetry=Symmetry.NONE,
    tol: float = TOL,
) -> SystemSpec:
    """Validate raw spectrum, interaction matrix, coupling and phases."""
    eps = np.array(energies, dtype=float).ravel()
    dim = eps.size
    if dim < 2 or dim % 2:
        raise SystemValidationError(f"need 2n energies with n >= 1, got {dim}")
    n = dim // 2
    V = np.array(V, dtype=complex)
    if V.shape != (dim, dim):
        raise SystemValidationError(f"V must be {dim}x{dim}, got {V.shape}")
    if not (np.all(np.isfinite(eps)) and np.all(np.isfinite(V))):
        raise SystemValidationError("energies and V must be finite")
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0.0:
        raise SystemValidationError(f"lambda must be positive, got {lam}")
    if lam > LAMBDA_WARN:
        logger.warning("lambda=%g exceeds %g; perturbative rates are unreliable", lam, LAMBDA_WARN)

    if phases is None:
        alpha = np.ones(dim, dtype=complex)
    else:
        alpha = np.array(phases, dtype=complex).ravel()
        if alpha.size != dim:
            raise SystemValidationError(f"need {dim} phases, got {alpha.size}")
    sym = Symmetry.parse(symmetry)

    _require("V is not Hermitian", V - V.conj().T, n, tol)
    _require("V has a nonzero diagonal", np.diag(np.diag(V)), n, tol)
    bad = np.abs(np.abs(alpha) - 1.0)
    if bad.max() > tol:
        i = int(bad.argmax())
        raise SystemValidationError(
            f"phase of state {format_label(label_of(i, n))} is not unit-modulus "
            f"(| |alpha| - 1 | = {bad[i]:.3e})",
            (label_of(i, n),), float(bad[i]),
        )

    spec = SystemSpec(n, eps, V, lam, alpha, sym)
    for cls in sym.classes():
        report = check_invariance(spec, cls, tol)
        if not report.passed:
            raise SystemValidationError(
                f"claimed {cls.name} symmetry violated: max violation "
                f"{report.max_violation:.3e} at {report.worst_entry}",
                report.worst_entry, report.max_violation,
            )
    return spec


def _require(message: str, residual: np.ndarray, n: int, tol: float):
    mag = np.abs(residual)
    if mag.max() > tol:
        i, k = np.unravel_index(int(mag.argmax()), mag.shape)
        entry = (label_of(int(i), n), label_of(int(k), n))
        raise SystemValidationError(
            f"{message}: |residual| = {mag[i, k]:.3e} at {entry}", entry, float(mag[i, k])
        )


# -----------------------------------------------------------------------------
# CP / CPT
# -----------------------------------------------------------------------------

def cp_image(V: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """(alpha_j^* alpha_k V_{-j,-k})_jk, the right-hand side of the CP constraint."""
    return np.conj(alpha)[:, None] * alpha[None, :] * negate(V)


def cpt_image(V: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """(alpha_k^* alpha_j V_{-k,-j})_jk, the right-hand side of the CPT constraint."""
    return alpha[:, None] * np.conj(alpha)[None, :] * negate(V).T


def check_invariance(sys: SystemSpec, cls: Symmetry, tol: float = TOL) -> CheckReport:
    """Entrywise CP or CPT constraint on V plus eps_j = eps_{-j}."""
    cls = Symmetry.parse(cls)
    if cls not in (Symmetry.CP, Symmetry.CPT):
        raise ValueError("check_invariance takes CP or CPT")
    image = cp_image(sys.V, sys.phases) if cls is Symmetry.CP else cpt_image(sys.V, sys.phases)
    v_res = np.abs(sys.V - image)
    e_res = np.abs(sys.energies - negate(sys.energies))

    worst_v = float(v_res.max())
    worst_e = float(e_res.max())
    if worst_e >= worst_v:
        i = int(e_res.argmax())
        entry = (label_of(i, sys.n),)
        worst = worst_e
    else:
        i, k = np.unravel_index(int(v_res.argmax()), v_res.shape)
        entry = (label_of(int(i), sys.n), label_of(int(k), sys.n))
        worst = worst_v
    return CheckReport(
        f"{cls.name}-invariance",
        worst <= tol,
        worst,
        entry,
        {"energy_violation": worst_e, "coupling_violation": worst_v},
    )


def cp_transform(sys: SystemSpec) -> SystemSpec:
    """
    eps'_j = eps_{-j}, V'_jk = alpha_j^* alpha_k V_{-j,-k}; phases kept. The
    image keeps only those symmetry claims it still satisfies.
    """
    image = build_system(negate(sys.energies), cp_image(sys.V, sys.phases), sys.lam, sys.phases)
    kept = [cls for cls in sys.symmetry.classes() if check_invariance(image, cls).passed]
    if len(kept) == 2:
        symmetry = Symmetry.BOTH
    else:
        symmetry = kept[0] if kept else Symmetry.NONE
    if symmetry is not sys.symmetry:
        logger.info("CP image drops the %s claim", sys.symmetry.name)
    return dataclasses.replace(image, symmetry=symmetry)


def symmetrize_cp(V: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    return 0.5 * (V + cp_image(V, alpha))


def symmetrize_cpt(V: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    return 0.5 * (V + cpt_image(V, alpha))


# -----------------------------------------------------------------------------
# Random systems
# -----------------------------------------------------------------------------

def random_system(
    n: int,
    symmetry=Symmetry.NONE,
    lam: float = 0.01,
    shell_count: int = 1,
    seed: int = 0,
) -> SystemSpec:
    """
    Seeded random system. Energies come from shell_count distinct values so
    that on-shell pairs exist; V is a Hermitized complex Gaussian matrix with
    zero diagonal, projected onto the requested symmetry class.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if shell_count < 1:
        raise ValueError("shell_count must be >= 1")
    sym = Symmetry.parse(symmetry)
    rng = np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)
    dim = 2 * n

    shells = 10.0 * (1.0 + np.arange(shell_count)) + rng.uniform(-1.0, 1.0, shell_count)
    if sym is Symmetry.NONE:
        eps = shells[rng.integers(shell_count, size=dim)]
    else:
        matter = shells[rng.integers(shell_count, size=n)]
        eps = np.concatenate([matter[::-1], matter])

    V = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    V = 0.5 * (V + V.conj().T)
    np.fill_diagonal(V, 0.0)

    alpha = np.ones(dim, dtype=complex)
    if sym.includes(Symmetry.CP):
        V = symmetrize_cp(V, alpha)
    if sym.includes(Symmetry.CPT):
        V = symmetrize_cpt(V, alpha)
    return build_system(eps, V, lam, alpha, sym)
