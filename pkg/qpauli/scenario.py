# qpauli/scenario.py

"""
Scenario files: one YAML document describing a deterministic run.

    system: two_state                  # path or bundled name, or instead:
    random: {n: 3, symmetry: cpt, lambda: 0.01, shells: 1, seed: 7}
    rates: {mode: finite, dt: 0.5}     # or {mode: onshell, eta: 1e-9, eta_norm: 1.0}
    variant: both                      # spme | apme | both
    p0: antimatter                     # list, or uniform | matter | antimatter
    time: {t0: 0.0, t1: 5.0, step: 0.001, sample_every: 1, backward: false}
    microsim: {tau_d: 0.5, n_cycles: 2000, propagator: exact, substeps: 50}
    output_dir: out

Unknown keys at any level are errors.
"""

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from qpauli.io import resolve_system
from qpauli.kinetics import FiniteWindow, OnShell, Variant
from qpauli.microsim import CycleConfig
from qpauli.system import Symmetry, SystemSpec, random_system
from qpauli.unitary import Propagation

P0_NAMED = ("uniform", "matter", "antimatter")


class ScenarioError(ValueError):
    """Invalid scenario; `key` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class RandomSystem:
    n: int
    symmetry: Symmetry = Symmetry.NONE
    lam: float = 0.01
    shells: int = 1
    seed: int = 0

    def build(self) -> SystemSpec:
        return random_system(self.n, self.symmetry, self.lam, self.shells, self.seed)


@dataclass(frozen=True)
class MicroConfig:
    tau_d: float
    n_cycles: int
    propagator: Propagation = Propagation.EXACT
    substeps: int = 50

    def cycle_config(self) -> CycleConfig:
        return CycleConfig(self.tau_d, self.n_cycles, self.propagator)


@dataclass(frozen=True)
class ScenarioConfig:
    system: str | None = None
    random: RandomSystem | None = None
    rate_mode: str = "finite"
    dt: float | None = None
    eta: float = 1e-9
    eta_norm: float = 1.0
    variants: tuple[Variant, ...] = (Variant.SPME,)
    p0: tuple[float, ...] | str = "antimatter"
    t0: float = 0.0
    t1: float = 1.0
    step: float | None = None
    sample_every: int = 1
    backward: bool = False
    microsim: MicroConfig | None = None
    output_dir: str | None = None

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            data = yaml.safe_load(Path(path).read_text())
        except OSError as e:
            raise ScenarioError(f"cannot read scenario: {e}") from None
        except yaml.YAMLError as e:
            raise ScenarioError(f"not valid YAML: {e}") from None
        return cls.from_mapping(data or {})

    @classmethod
    def from_mapping(cls, data: dict) -> "ScenarioConfig":
        _keys("", data, {"system", "random", "rates", "variant", "p0", "time", "microsim", "output_dir"})
        kw: dict = {}
        if "system" in data:
            kw["system"] = str(data["system"])
        if "random" in data:
            r = data["random"]
            _keys("random", r, {"n", "symmetry", "lambda", "shells", "seed"})
            if "n" not in r:
                raise ScenarioError("missing key", "random.n")
            kw["random"] = RandomSystem(
                _int(r, "n", "random.n"),
                _parse(Symmetry, r.get("symmetry", "none"), "random.symmetry"),
                _float(r, "lambda", "random.lambda", 0.01),
                _int(r, "shells", "random.shells", 1),
                _int(r, "seed", "random.seed", 0),
            )
        if "rates" in data:
            r = data["rates"]
            _keys("rates", r, {"mode", "dt", "eta", "eta_norm"})
            kw["rate_mode"] = str(r.get("mode", "finite")).lower()
            if "dt" in r:
                kw["dt"] = _float(r, "dt", "rates.dt")
            kw["eta"] = _float(r, "eta", "rates.eta", 1e-9)
            kw["eta_norm"] = _float(r, "eta_norm", "rates.eta_norm", 1.0)
        if "variant" in data:
            kw["variants"] = parse_variants(data["variant"])
        if "p0" in data:
            p0 = data["p0"]
            if isinstance(p0, str):
                kw["p0"] = p0.lower()
            else:
                try:
                    kw["p0"] = tuple(float(x) for x in p0)
                except (TypeError, ValueError):
                    raise ScenarioError(f"expected a list of numbers or one of {P0_NAMED}", "p0") from None
        if "time" in data:
            t = data["time"]
            _keys("time", t, {"t0", "t1", "step", "sample_every", "backward"})
            kw["t0"] = _float(t, "t0", "time.t0", 0.0)
            kw["t1"] = _float(t, "t1", "time.t1", 1.0)
            if "step" in t:
                kw["step"] = _float(t, "step", "time.step")
            kw["sample_every"] = _int(t, "sample_every", "time.sample_every", 1)
            kw["backward"] = bool(t.get("backward", False))
        if "microsim" in data:
            m = data["microsim"]
            _keys("microsim", m, {"tau_d", "n_cycles", "propagator", "substeps"})
            for key in ("tau_d", "n_cycles"):
                if key not in m:
                    raise ScenarioError("missing key", f"microsim.{key}")
            kw["microsim"] = MicroConfig(
                _float(m, "tau_d", "microsim.tau_d"),
                _int(m, "n_cycles", "microsim.n_cycles"),
                _parse(Propagation, m.get("propagator", "exact"), "microsim.propagator"),
                _int(m, "substeps", "microsim.substeps", 50),
            )
        if "output_dir" in data:
            kw["output_dir"] = str(data["output_dir"])
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def with_overrides(self, **flags) -> "ScenarioConfig":
        """Flags win over scenario values; None means 'not given'."""
        given = {k: v for k, v in flags.items() if v is not None}
        if "system" in given:
            given["random"] = None
        cfg = dataclasses.replace(self, **given)
        cfg.validate()
        return cfg

    def validate(self):
        if self.system is not None and self.random is not None:
            raise ScenarioError("give either 'system' or 'random', not both", "system")
        if self.rate_mode not in ("finite", "onshell"):
            raise ScenarioError(f"unknown rate mode '{self.rate_mode}'", "rates.mode")
        if self.dt is not None and not self.dt > 0.0:
            raise ScenarioError("must be positive", "rates.dt")
        if self.eta < 0.0 or not self.eta_norm > 0.0:
            raise ScenarioError("need eta >= 0 and eta_norm > 0", "rates.eta")
        if isinstance(self.p0, str) and self.p0 not in P0_NAMED:
            raise ScenarioError(f"expected a list or one of {P0_NAMED}", "p0")
        if self.step is not None and not self.step > 0.0:
            raise ScenarioError("must be positive", "time.step")
        if self.sample_every < 1:
            raise ScenarioError("must be >= 1", "time.sample_every")
        if self.t1 < self.t0:
            raise ScenarioError("t1 must not precede t0", "time.t1")
        if self.random is not None and self.random.n < 1:
            raise ScenarioError("must be >= 1", "random.n")
        if self.microsim is not None:
            if not self.microsim.tau_d > 0.0:
                raise ScenarioError("must be positive", "microsim.tau_d")
            if self.microsim.n_cycles < 0:
                raise ScenarioError("must be >= 0", "microsim.n_cycles")
            if self.microsim.substeps < 1:
                raise ScenarioError("must be >= 1", "microsim.substeps")

    def build_system(self) -> SystemSpec:
        if self.random is not None:
            return self.random.build()
        if self.system is None:
            raise ScenarioError("no system given (use 'system' or 'random')", "system")
        return resolve_system(self.system)

    def rate_mode_for(self, fallback_dt: float | None = None):
        if self.rate_mode == "onshell":
            return OnShell(self.eta, self.eta_norm)
        dt = self.dt if self.dt is not None else fallback_dt
        if dt is None and self.microsim is not None:
            dt = self.microsim.tau_d
        if dt is None:
            raise ScenarioError("finite-window rates need a dt (rates.dt or microsim.tau_d)", "rates.dt")
        return FiniteWindow(dt)

    def time_span(self) -> tuple[float, float]:
        """(start, end); a backward run covers the same length toward earlier times."""
        if self.backward:
            return self.t0, self.t0 - (self.t1 - self.t0)
        return self.t0, self.t1

    def initial_state(self, n: int) -> np.ndarray:
        dim = 2 * n
        if isinstance(self.p0, str):
            if self.p0 == "uniform":
                return np.full(dim, 1.0 / dim)
            p = np.zeros(dim)
            if self.p0 == "antimatter":
                p[:n] = 1.0 / n
            else:
                p[n:] = 1.0 / n
            return p
        p = np.array(self.p0, dtype=float)
        if p.size != dim:
            raise ScenarioError(f"need {dim} entries, got {p.size}", "p0")
        if p.min() < 0.0 or abs(p.sum() - 1.0) > 1e-9:
            raise ScenarioError("must be nonnegative and sum to 1", "p0")
        return p


def parse_variants(value) -> tuple[Variant, ...]:
    if str(value).strip().lower() == "both":
        return (Variant.SPME, Variant.APME)
    return (_parse(Variant, value, "variant"),)


def _keys(where: str, data, allowed: set):
    if not isinstance(data, dict):
        raise ScenarioError("expected a mapping", where or None)
    for key in sorted(data):
        if key not in allowed:
            raise ScenarioError("unknown key", f"{where}.{key}" if where else str(key))


def _parse(enum_cls, value, key: str):
    try:
        return enum_cls.parse(value)
    except ValueError as e:
        raise ScenarioError(str(e), key) from None


def _float(data: dict, key: str, where: str, default=None) -> float:
    if key not in data:
        return default
    try:
        return float(data[key])
    except (TypeError, ValueError):
        raise ScenarioError(f"not a number: {data[key]!r}", where) from None


def _int(data: dict, key: str, where: str, default=None) -> int:
    if key not in data:
        return default
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"not an integer: {value!r}", where)
    return value
