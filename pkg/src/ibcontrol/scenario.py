"""Problem instances for internal boundary control.

A :class:`Scenario` bundles the highway geometry, the total (both-direction)
triangular fundamental diagram, demand trajectories, the initial state and the
control configuration.  Internal units are hours, km, veh/h and veh/km; the
config file gives the model and control steps in seconds.

Config files are YAML with the sections ``fd``, ``highway``, ``control``,
``demands`` and ``initial``; see ``docs/scenario_format.md`` for the schema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "FdParams",
    "Highway",
    "DemandSet",
    "ControlConfig",
    "Scenario",
    "load_scenario",
    "dump_scenario",
    "builtin_scenarios",
    "builtin_scenario",
    "BUILTIN_NAMES",
    "with_capacity_drop",
]

BUILTIN_NAMES = ("uncongested", "congested")


class ScenarioError(ValueError):
    """Base class for scenario loading problems."""


class ScenarioParseError(ScenarioError):
    """The config text is not a well-formed scenario document."""


class ScenarioValidationError(ScenarioError):
    """A scenario field violates an invariant.

    ``field`` holds the dotted config path of the offending entry.
    """

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        super().__init__(f"{field_path}: {message}")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


def _values_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        a, b = np.asarray(a), np.asarray(b)
        return a.shape == b.shape and a.dtype == b.dtype and bool(np.array_equal(a, b))
    return a == b


class _ArrayFieldsEq:
    """Field-by-field equality that understands numpy arrays."""

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return all(
            _values_equal(getattr(self, f.name), getattr(other, f.name))
            for f in fields(self)  # type: ignore[arg-type]
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class FdParams(_ArrayFieldsEq):
    """Total triangular fundamental diagram (whole carriageway, one direction).

    Critical and jam densities follow from ``q_cap = v_f*rho_cr = w_s*(rho_max - rho_cr)``.
    """

    v_f: float
    w_s: float
    q_cap: float
    rho_cr: float = field(init=False)
    rho_max: float = field(init=False)

    def __post_init__(self):
        for name in ("v_f", "w_s", "q_cap"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ScenarioValidationError(f"fd.{name}", f"must be a positive number, got {value!r}")
            object.__setattr__(self, name, float(value))
        rho_cr = self.q_cap / self.v_f
        object.__setattr__(self, "rho_cr", rho_cr)
        object.__setattr__(self, "rho_max", rho_cr + self.q_cap / self.w_s)

    def scaled(self, eps: float) -> tuple[float, float, float]:
        """Return ``(rho_cr, q_cap, rho_max)`` of a direction holding share ``eps``."""
        return eps * self.rho_cr, eps * self.q_cap, eps * self.rho_max


@dataclass(frozen=True, eq=False)
class Highway(_ArrayFieldsEq):
    """Section geometry, off-ramp exit rates and on-ramp presence per direction.

    Sections are numbered 1..n in direction a; direction b travels n -> 1.
    Off- and on-ramps sit at the upstream boundary of their section.
    """

    lengths: np.ndarray
    exit_rate_a: np.ndarray
    exit_rate_b: np.ndarray
    has_onramp_a: np.ndarray
    has_onramp_b: np.ndarray
    width_m: float | None = None

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=float)
        if lengths.ndim != 1 or lengths.size < 1:
            raise ScenarioValidationError("highway.lengths", "need at least one section")
        if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
            raise ScenarioValidationError("highway.lengths", "every section length must be > 0")
        n = lengths.size
        object.__setattr__(self, "lengths", _frozen(lengths))
        for name in ("exit_rate_a", "exit_rate_b"):
            beta = np.asarray(getattr(self, name), dtype=float)
            key = "highway.exit_rates_" + name[-1]
            if beta.shape != (n,):
                raise ScenarioValidationError(key, f"expected {n} values, got shape {beta.shape}")
            if np.any(~np.isfinite(beta)) or np.any(beta < 0) or np.any(beta >= 1):
                raise ScenarioValidationError(key, "exit rates must lie in [0, 1)")
            object.__setattr__(self, name, _frozen(beta))
        for name in ("has_onramp_a", "has_onramp_b"):
            flags = np.asarray(getattr(self, name), dtype=bool)
            if flags.shape != (n,):
                raise ScenarioValidationError("highway.onramps_" + name[-1], f"expected {n} flags")
            object.__setattr__(self, name, _frozen(flags, bool))
        if self.width_m is not None:
            if not self.width_m > 0:
                raise ScenarioValidationError("highway.width_m", "must be > 0")
            object.__setattr__(self, "width_m", float(self.width_m))

    @property
    def n(self) -> int:
        return int(self.lengths.size)


@dataclass(frozen=True, eq=False)
class DemandSet(_ArrayFieldsEq):
    """Per-model-step external flows (veh/h).

    ``ramp_a``/``ramp_b`` have shape ``(n, K)`` and are zero where a section has no
    on-ramp in that direction.
    """

    entry_a: np.ndarray
    entry_b: np.ndarray
    ramp_a: np.ndarray
    ramp_b: np.ndarray

    def __post_init__(self):
        for name in ("entry_a", "entry_b", "ramp_a", "ramp_b"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ScenarioValidationError(f"demands.{name}", "flows must be finite and >= 0")
            object.__setattr__(self, name, _frozen(arr))
        K = self.entry_a.size
        if self.entry_a.ndim != 1 or self.entry_b.shape != (K,):
            raise ScenarioValidationError("demands.entry_b", "entry trajectories must have equal length")
        if self.ramp_a.ndim != 2 or self.ramp_a.shape[1] != K or self.ramp_b.shape != self.ramp_a.shape:
            raise ScenarioValidationError("demands.ramps_a", "ramp trajectories must have shape (n, K)")

    @property
    def K(self) -> int:
        return int(self.entry_a.size)


@dataclass(frozen=True, eq=False)
class ControlConfig(_ArrayFieldsEq):
    """Time discretisation, sharing-factor bounds, capacity-drop knobs and weights.

    Steps are held in seconds (``T_s``, ``T_c_s``) so that configs round-trip
    exactly; ``T`` and ``T_c`` give them in hours.
    """

    T_s: float
    T_c_s: float
    K: int
    eps_min: np.ndarray
    eps_max: np.ndarray
    eps_init: np.ndarray
    lambda_d: float = 0.0
    lambda_r: float = 1.0
    w1: float = 0.1
    w2: float = 1e-4
    w3: float = 1e-5
    w4: float = 1e-3
    d_floor: float = 10.0

    def __post_init__(self):
        if not self.T_s > 0:
            raise ScenarioValidationError("control.T", "model step must be > 0")
        if not self.T_c_s > 0:
            raise ScenarioValidationError("control.T_c", "control step must be > 0")
        ratio = self.T_c_s / self.T_s
        if ratio < 1 - 1e-12 or abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ScenarioValidationError(
                "control.T_c", f"control step {self.T_c_s} s is not an integer multiple of T={self.T_s} s"
            )
        if int(self.K) != self.K or self.K < 1:
            raise ScenarioValidationError("control.K", "horizon must be a positive integer")
        object.__setattr__(self, "K", int(self.K))
        if self.K % int(round(ratio)):
            raise ScenarioValidationError(
                "control.K", f"K*T must be a multiple of T_c ({self.K} steps vs {int(round(ratio))} per control step)"
            )
        for name in ("T_s", "T_c_s", "lambda_d", "lambda_r", "w1", "w2", "w3", "w4", "d_floor"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("lambda_d", "lambda_r"):
            if not 0 <= getattr(self, name) <= 1:
                raise ScenarioValidationError(f"control.{name}", "must lie in [0, 1]")
        for name in ("w1", "w2", "w3", "w4"):
            if not getattr(self, name) >= 0:
                raise ScenarioValidationError(f"control.{name}", "weights must be >= 0")
        if not self.d_floor > 0:
            raise ScenarioValidationError("control.d_floor", "must be > 0")
        lo = np.atleast_1d(np.asarray(self.eps_min, dtype=float))
        hi = np.atleast_1d(np.asarray(self.eps_max, dtype=float))
        init = np.atleast_1d(np.asarray(self.eps_init, dtype=float))
        if np.any(lo <= 0) or np.any(lo >= 1):
            raise ScenarioValidationError("control.eps_min", "must lie in (0, 1)")
        if np.any(hi <= 0) or np.any(hi >= 1):
            raise ScenarioValidationError("control.eps_max", "must lie in (0, 1)")
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ScenarioValidationError("control.eps_max", "bounds ordering violated: need eps_min <= eps_max")
        if np.any(init <= 0) or np.any(init >= 1):
            raise ScenarioValidationError("control.eps_init", "must lie in (0, 1)")
        object.__setattr__(self, "eps_min", _frozen(lo))
        object.__setattr__(self, "eps_max", _frozen(hi))
        object.__setattr__(self, "eps_init", _frozen(init))

    @property
    def T(self) -> float:
        return self.T_s / 3600.0

    @property
    def T_c(self) -> float:
        return self.T_c_s / 3600.0

    @property
    def steps_per_control(self) -> int:
        return int(round(self.T_c_s / self.T_s))

    @property
    def K_c(self) -> int:
        return self.K // self.steps_per_control

    def control_index(self, k):
        """Control step in force at model step ``k`` (floor of k*T/T_c)."""
        return np.asarray(k) // self.steps_per_control

    @property
    def capacity_drop(self) -> bool:
        return not (self.lambda_d == 0.0 and self.lambda_r == 1.0)


@dataclass(frozen=True, eq=False)
class Scenario(_ArrayFieldsEq):
    highway: Highway
    fd: FdParams
    demands: DemandSet
    control: ControlConfig
    rho0_a: np.ndarray
    rho0_b: np.ndarray
    label: str = ""
    notes: str = ""

    def __post_init__(self):
        n, K = self.highway.n, self.control.K
        if self.demands.K != K:
            raise ScenarioValidationError("demands", f"trajectory length {self.demands.K} != K={K}")
        if self.demands.ramp_a.shape[0] != n:
            raise ScenarioValidationError("demands.ramps_a", f"expected {n} sections")
        for d in "ab":
            ramp = getattr(self.demands, "ramp_" + d)
            flags = getattr(self.highway, "has_onramp_" + d)
            bad = np.flatnonzero(~flags & np.any(ramp != 0, axis=1))
            if bad.size:
                raise ScenarioValidationError(
                    f"demands.ramps_{d}.{bad[0] + 1}", "ramp flow given at a section without an on-ramp"
                )
        ctrl = self.control
        for name in ("eps_min", "eps_max", "eps_init"):
            arr = getattr(ctrl, name)
            if arr.size == 1 and n > 1:
                arr = _frozen(np.full(n, arr[0]))
            elif arr.shape != (n,):
                raise ScenarioValidationError(f"control.{name}", f"expected scalar or {n} values")
            object.__setattr__(ctrl, name, arr)
        for d, share in (("a", ctrl.eps_init), ("b", 1.0 - ctrl.eps_init)):
            rho0 = np.asarray(getattr(self, "rho0_" + d), dtype=float)
            key = "initial.rho_" + d
            if rho0.shape != (n,):
                raise ScenarioValidationError(key, f"expected {n} values")
            if not np.all(np.isfinite(rho0)) or np.any(rho0 < 0):
                raise ScenarioValidationError(key, "densities must be >= 0")
            if np.any(rho0 > share * self.fd.rho_max * (1 + 1e-12)):
                raise ScenarioValidationError(key, "initial density exceeds the direction's jam density")
            object.__setattr__(self, "rho0_" + d, _frozen(rho0))

    @property
    def n(self) -> int:
        return self.highway.n

    @property
    def K(self) -> int:
        return self.control.K

    @property
    def K_c(self) -> int:
        return self.control.K_c


def with_capacity_drop(scenario: Scenario, on: bool, lambda_d: float = 0.4, lambda_r: float = 0.7) -> Scenario:
    """Return ``scenario`` with the capacity-drop option switched on or off.

    Off means ``lambda_d = 0`` and ``lambda_r = 1`` (plain CTM).  When ``on`` and the
    scenario already has drop parameters, they are kept.
    """
    ctrl = scenario.control
    if on:
        if ctrl.capacity_drop:
            return scenario
        new = replace(ctrl, lambda_d=lambda_d, lambda_r=lambda_r)
    else:
        new = replace(ctrl, lambda_d=0.0, lambda_r=1.0)
    suffix = "cd-on" if on else "cd-off"
    return replace(scenario, control=new, label=f"{scenario.label.split('[')[0]}[{suffix}]")


# --- config parsing -------------------------------------------------------


def _require(mapping: Mapping, key: str, path: str):
    if not isinstance(mapping, Mapping):
        raise ScenarioParseError(f"{path}: expected a mapping")
    if key not in mapping:
        raise ScenarioParseError(f"{path}.{key}: missing required entry" if path else f"{key}: missing required section")
    return mapping[key]


def _per_section(value, n: int, path: str, default: float = 0.0) -> np.ndarray:
    """Accept a scalar, a length-n list, or a {section: value} mapping (1-based)."""
    if value is None:
        return np.full(n, default)
    if isinstance(value, Mapping):
        out = np.full(n, default)
        for sec, v in value.items():
            i = _section_index(sec, n, path)
            out[i] = float(v)
        return out
    if isinstance(value, (int, float)):
        return np.full(n, float(value))
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioParseError(f"{path}: not numeric ({exc})") from None
    if arr.shape != (n,):
        raise ScenarioValidationError(path, f"expected {n} values, got {arr.size}")
    return arr


def _section_index(sec, n: int, path: str) -> int:
    try:
        i = int(sec)
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{path}: section key {sec!r} is not an integer") from None
    if not 1 <= i <= n:
        raise ScenarioValidationError(f"{path}.{sec}", f"section must be in 1..{n}")
    return i - 1


def _expand_profile(points, K: int, T_s: float, path: str) -> np.ndarray:
    """Linear interpolation of ``[{t_s, q}, ...]`` breakpoints at t = k*T (held flat outside)."""
    if isinstance(points, (int, float)):
        return np.full(K, float(points))
    if not isinstance(points, Sequence) or isinstance(points, str) or not points:
        raise ScenarioParseError(f"{path}: expected a non-empty list of {{t_s, q}} breakpoints")
    try:
        t = np.array([float(p["t_s"]) for p in points])
        q = np.array([float(p["q"]) for p in points])
    except (KeyError, TypeError, ValueError):
        raise ScenarioParseError(f"{path}: every breakpoint needs numeric 't_s' and 'q'") from None
    if np.any(np.diff(t) <= 0):
        raise ScenarioValidationError(path, "breakpoint times must be strictly increasing")
    if np.any(q < 0):
        raise ScenarioValidationError(path, "demand values must be >= 0")
    return np.interp(np.arange(K) * T_s, t, q)


def _compress_profile(values: np.ndarray, T_s: float) -> list[dict]:
    """Breakpoints that re-expand to exactly ``values`` (collinear interior points dropped)."""
    K = values.size
    times = np.arange(K) * T_s
    if np.all(values == values[0]):
        return [{"t_s": 0.0, "q": float(values[0])}]
    keep = [0]
    for k in range(1, K - 1):
        a = keep[-1]
        mid = np.interp(times[k], [times[a], times[k + 1]], [values[a], values[k + 1]])
        if mid != values[k]:
            keep.append(k)
    keep.append(K - 1)
    pts = [{"t_s": float(times[k]), "q": float(values[k])} for k in keep]
    if not np.array_equal(_expand_profile(pts, K, T_s, ""), values):
        pts = [{"t_s": float(t), "q": float(v)} for t, v in zip(times, values)]
    return pts


def _scenario_from_dict(doc: Mapping[str, Any]) -> Scenario:
    if not isinstance(doc, Mapping):
        raise ScenarioParseError("top level: expected a mapping")
    fd_doc = _require(doc, "fd", "")
    hw_doc = _require(doc, "highway", "")
    ctrl_doc = _require(doc, "control", "")
    dem_doc = _require(doc, "demands", "")
    init_doc = _require(doc, "initial", "")

    try:
        fd = FdParams(
            v_f=_require(fd_doc, "v_f", "fd"),
            w_s=_require(fd_doc, "w_s", "fd"),
            q_cap=_require(fd_doc, "q_cap", "fd"),
        )
    except TypeError as exc:
        raise ScenarioParseError(f"fd: {exc}") from None

    lengths = _require(hw_doc, "lengths", "highway")
    if isinstance(lengths, Sequence) and not isinstance(lengths, str):
        n = len(lengths)
    else:
        n = int(_require(hw_doc, "n", "highway"))
    lengths = _per_section(lengths, n, "highway.lengths")
    flags = {}
    for d in "ab":
        flags[d] = np.zeros(n, dtype=bool)
        for sec in hw_doc.get(f"onramps_{d}", []) or []:
            flags[d][_section_index(sec, n, f"highway.onramps_{d}")] = True
    highway = Highway(
        lengths=lengths,
        exit_rate_a=_per_section(hw_doc.get("exit_rates_a"), n, "highway.exit_rates_a"),
        exit_rate_b=_per_section(hw_doc.get("exit_rates_b"), n, "highway.exit_rates_b"),
        has_onramp_a=flags["a"],
        has_onramp_b=flags["b"],
        width_m=hw_doc.get("width_m"),
    )

    T_s = _require(ctrl_doc, "T", "control")
    T_c_s = _require(ctrl_doc, "T_c", "control")
    K = _require(ctrl_doc, "K", "control")
    for key, val in (("T", T_s), ("T_c", T_c_s), ("K", K)):
        if not isinstance(val, (int, float)):
            raise ScenarioParseError(f"control.{key}: expected a number")
    control = ControlConfig(
        T_s=T_s,
        T_c_s=T_c_s,
        K=K,
        eps_min=_per_section(_require(ctrl_doc, "eps_min", "control"), n, "control.eps_min"),
        eps_max=_per_section(_require(ctrl_doc, "eps_max", "control"), n, "control.eps_max"),
        eps_init=_per_section(ctrl_doc.get("eps_init", 0.5), n, "control.eps_init"),
        lambda_d=ctrl_doc.get("lambda_d", 0.0),
        lambda_r=ctrl_doc.get("lambda_r", 1.0),
        w1=ctrl_doc.get("w1", 0.1),
        w2=ctrl_doc.get("w2", 1e-4),
        w3=ctrl_doc.get("w3", 1e-5),
        w4=ctrl_doc.get("w4", 1e-3),
        d_floor=ctrl_doc.get("d_floor", 10.0),
    )

    K = control.K
    entry_a = _expand_profile(_require(dem_doc, "entry_a", "demands"), K, control.T_s, "demands.entry_a")
    entry_b = _expand_profile(_require(dem_doc, "entry_b", "demands"), K, control.T_s, "demands.entry_b")
    ramps = {}
    for d in "ab":
        ramps[d] = np.zeros((n, K))
        spec = dem_doc.get(f"ramps_{d}") or {}
        if not isinstance(spec, Mapping):
            raise ScenarioParseError(f"demands.ramps_{d}: expected a {{section: breakpoints}} mapping")
        for sec, pts in spec.items():
            i = _section_index(sec, n, f"demands.ramps_{d}")
            ramps[d][i] = _expand_profile(pts, K, control.T_s, f"demands.ramps_{d}.{sec}")
    demands = DemandSet(entry_a=entry_a, entry_b=entry_b, ramp_a=ramps["a"], ramp_b=ramps["b"])

    return Scenario(
        highway=highway,
        fd=fd,
        demands=demands,
        control=control,
        rho0_a=_per_section(_require(init_doc, "rho_a", "initial"), n, "initial.rho_a"),
        rho0_b=_per_section(_require(init_doc, "rho_b", "initial"), n, "initial.rho_b"),
        label=str(doc.get("label", "")),
        notes=str(doc.get("notes", "")),
    )


def load_scenario(source: str | Path) -> Scenario:
    """Parse a scenario from YAML text or a path to a YAML file.

    Raises :class:`ScenarioParseError` for malformed documents and
    :class:`ScenarioValidationError` (naming the offending field) for invariant
    violations.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith((".yaml", ".yml"))):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ScenarioParseError(f"cannot read {source}: {exc}") from None
    else:
        text = source
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"malformed YAML: {exc}") from None
    return _scenario_from_dict(doc)


def _scalar_or_list(arr: np.ndarray):
    if np.all(arr == arr[0]):
        return float(arr[0])
    return [float(v) for v in arr]


def dump_scenario(scenario: Scenario) -> str:
    """Serialise ``scenario`` to YAML; ``load_scenario`` reproduces it exactly."""
    hw, ctrl, dem = scenario.highway, scenario.control, scenario.demands
    highway: dict[str, Any] = {
        "lengths": [float(v) for v in hw.lengths],
        "exit_rates_a": [float(v) for v in hw.exit_rate_a],
        "exit_rates_b": [float(v) for v in hw.exit_rate_b],
        "onramps_a": [int(i) + 1 for i in np.flatnonzero(hw.has_onramp_a)],
        "onramps_b": [int(i) + 1 for i in np.flatnonzero(hw.has_onramp_b)],
    }
    if hw.width_m is not None:
        highway["width_m"] = hw.width_m
    doc = {
        "label": scenario.label,
        "notes": scenario.notes,
        "fd": {"v_f": scenario.fd.v_f, "w_s": scenario.fd.w_s, "q_cap": scenario.fd.q_cap},
        "highway": highway,
        "control": {
            "T": ctrl.T_s,
            "T_c": ctrl.T_c_s,
            "K": ctrl.K,
            "eps_min": _scalar_or_list(ctrl.eps_min),
            "eps_max": _scalar_or_list(ctrl.eps_max),
            "eps_init": _scalar_or_list(ctrl.eps_init),
            "lambda_d": ctrl.lambda_d,
            "lambda_r": ctrl.lambda_r,
            "w1": ctrl.w1,
            "w2": ctrl.w2,
            "w3": ctrl.w3,
            "w4": ctrl.w4,
            "d_floor": ctrl.d_floor,
        },
        "demands": {
            "entry_a": _compress_profile(dem.entry_a, ctrl.T_s),
            "entry_b": _compress_profile(dem.entry_b, ctrl.T_s),
            "ramps_a": {
                int(i) + 1: _compress_profile(dem.ramp_a[i], ctrl.T_s) for i in np.flatnonzero(hw.has_onramp_a)
            },
            "ramps_b": {
                int(i) + 1: _compress_profile(dem.ramp_b[i], ctrl.T_s) for i in np.flatnonzero(hw.has_onramp_b)
            },
        },
        "initial": {
            "rho_a": [float(v) for v in scenario.rho0_a],
            "rho_b": [float(v) for v in scenario.rho0_b],
        },
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100)


def builtin_scenario(name: str) -> Scenario:
    """Load one of the bundled scenarios (``uncongested`` or ``congested``)."""
    if name not in BUILTIN_NAMES:
        raise KeyError(f"unknown builtin scenario {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    text = resources.files("ibcontrol").joinpath(f"data/{name}.yaml").read_text()
    return load_scenario(text)


def builtin_scenarios() -> list[Scenario]:
    """Both bundled scenarios, capacity drop enabled (lambda_d=0.4, lambda_r=0.7)."""
    return [builtin_scenario(name) for name in BUILTIN_NAMES]
