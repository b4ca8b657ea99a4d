# qpauli/io.py

import csv
import logging
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
import yaml

from qpauli.kinetics import Variant
from qpauli.solver import BoundaryKind, Sample, TimeBoundaryEvent, Trajectory, h_function
from qpauli.system import Symmetry, SystemSpec, build_system, format_label, labels

logger = logging.getLogger("qpauli.io")

SYSTEM_KEYS = ("n", "energies", "V_real", "V_imag", "lambda", "phases_re", "phases_im", "symmetry")
REQUIRED_KEYS = ("n", "energies", "V_real", "V_imag", "lambda")
DIAGNOSTIC_FIELDS = ("interval", "bc_residual", "weight_min", "cond_Uaa")


class SystemFileError(ValueError):
    """A system file is malformed; `key` names the offending entry."""

    def __init__(self, message: str, key: str | None = None, source: str | None = None):
        where = f"{source}: " if source else ""
        super().__init__(f"{where}{message}")
        self.key = key
        self.source = source


def fmt(x: float) -> str:
    """Fixed 17-significant-digit decimal, reproducible across runs."""
    return f"{float(x):.17g}"


# -----------------------------------------------------------------------------
# System files
# -----------------------------------------------------------------------------

def _array(data: dict, key: str, shape: tuple, source: str | None) -> np.ndarray:
    try:
        arr = np.array(data[key], dtype=float)
    except (TypeError, ValueError) as e:
        raise SystemFileError(f"'{key}' is not numeric: {e}", key, source) from None
    if arr.shape != shape:
        raise SystemFileError(f"'{key}' must have shape {shape}, got {arr.shape}", key, source)
    return arr


def system_from_mapping(data, source: str | None = None) -> SystemSpec:
    if not isinstance(data, dict):
        raise SystemFileError("system file must be a mapping", None, source)
    unknown = sorted(set(data) - set(SYSTEM_KEYS))
    if unknown:
        raise SystemFileError(f"unknown key '{unknown[0]}'", unknown[0], source)
    for key in REQUIRED_KEYS:
        if key not in data:
            raise SystemFileError(f"missing key '{key}'", key, source)

    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SystemFileError(f"'n' must be a positive integer, got {n!r}", "n", source)
    dim = 2 * n
    eps = _array(data, "energies", (dim,), source)
    V = _array(data, "V_real", (dim, dim), source) + 1j * _array(data, "V_imag", (dim, dim), source)
    try:
        lam = float(data["lambda"])
    except (TypeError, ValueError):
        raise SystemFileError(f"'lambda' is not a number: {data['lambda']!r}", "lambda", source) from None

    phases = None
    if "phases_re" in data or "phases_im" in data:
        re = _array(data, "phases_re", (dim,), source) if "phases_re" in data else np.ones(dim)
        im = _array(data, "phases_im", (dim,), source) if "phases_im" in data else np.zeros(dim)
        phases = re + 1j * im
    try:
        sym = Symmetry.parse(data.get("symmetry", "none"))
    except ValueError as e:
        raise SystemFileError(str(e), "symmetry", source) from None
    return build_system(eps, V, lam, phases, sym)


def system_to_mapping(sys: SystemSpec) -> dict:
    return {
        "n": sys.n,
        "energies": [float(x) for x in sys.energies],
        "V_real": np.real(sys.V).tolist(),
        "V_imag": np.imag(sys.V).tolist(),
        "lambda": float(sys.lam),
        "phases_re": [float(x) for x in np.real(sys.phases)],
        "phases_im": [float(x) for x in np.imag(sys.phases)],
        "symmetry": sys.symmetry.value,
    }


def load_system(path) -> SystemSpec:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise SystemFileError(f"not valid YAML: {e}", None, str(path)) from None
    return system_from_mapping(data, str(path))


def dump_system(sys: SystemSpec, fh: TextIO):
    yaml.safe_dump(system_to_mapping(sys), fh, sort_keys=False, default_flow_style=None)


def _load_bundled_systems() -> dict[str, Path]:
    """Map bundled system name -> YAML file under resources/systems."""
    yaml_dir = Path(__file__).parent / "resources" / "systems"
    if not yaml_dir.is_dir():
        return {}
    return {yf.stem: yf for yf in sorted(yaml_dir.glob("*.yaml"))}


BUNDLED_SYSTEMS = _load_bundled_systems()


def resolve_system(ref) -> SystemSpec:
    """Load a system from a path, or by bundled name when no such file exists."""
    path = Path(ref)
    if path.is_file():
        return load_system(path)
    if str(ref) in BUNDLED_SYSTEMS:
        logger.debug("using bundled system '%s'", ref)
        return load_system(BUNDLED_SYSTEMS[str(ref)])
    known = ", ".join(sorted(BUNDLED_SYSTEMS)) or "none"
    raise SystemFileError(f"no such file and no bundled system named '{ref}' (bundled: {known})", None, str(ref))


# -----------------------------------------------------------------------------
# CSV
# -----------------------------------------------------------------------------

def trajectory_header(n: int) -> list[str]:
    return ["t"] + [f"p_{format_label(j)}" for j in labels(n)] + ["S", "E"]


def write_trajectory_csv(traj: Trajectory, fh: TextIO, n: int | None = None):
    """One row per sample; boundary events follow as '# event,kind,t,state' lines."""
    if n is None:
        n = traj.samples[0].p.size // 2
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(trajectory_header(n))
    for s in traj.samples:
        writer.writerow([fmt(s.t)] + [fmt(x) for x in s.p] + [fmt(s.S), fmt(s.E)])
    for ev in traj.events:
        fh.write(f"# event,{ev.kind.value},{fmt(ev.t_event)},{format_label(ev.state)}\n")


def read_trajectory_csv(fh: TextIO, variant=Variant.SPME) -> Trajectory:
    variant = Variant.parse(variant)
    traj = Trajectory(variant)
    header = None
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = [f.strip() for f in line.lstrip("#").split(",")]
            if fields[0] == "event":
                traj.events.append(TimeBoundaryEvent(BoundaryKind(fields[1]), float(fields[2]), int(fields[3])))
            continue
        row = next(csv.reader([line]))
        if header is None:
            header = row
            if header[0] != "t" or header[-2:] != ["S", "E"]:
                raise ValueError(f"not a trajectory CSV header: {line}")
            continue
        values = [float(x) for x in row]
        p = np.array(values[1:-2])
        traj.samples.append(Sample(values[0], p, values[-2], values[-1], h_function(p, variant)))
    if header is None:
        raise ValueError("empty trajectory CSV")
    return traj


def write_matrix_csv(M: np.ndarray, fh: TextIO):
    """Row-major matrix with a header row of signed state labels."""
    n = M.shape[0] // 2
    names = [format_label(j) for j in labels(n)]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["row"] + names)
    for name, row in zip(names, M):
        writer.writerow([name] + [fmt(x) for x in row])


def write_diagnostics_csv(rows: Iterable[dict], fh: TextIO):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(DIAGNOSTIC_FIELDS)
    for r in rows:
        writer.writerow([r["interval"]] + [fmt(r[k]) for k in DIAGNOSTIC_FIELDS[1:]])
