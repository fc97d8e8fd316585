"""Experimental sequences as declarative scenarios, presets and sweeps.

Scenario documents use ordinary frequencies (Hz) and seconds; everything is
converted to angular units on load. Layout::

    name: sr_decay
    params: {kappa: 418e3, gamma_perp: 2e5, g_coll: 4.6e6, W: 9.2e6, ...}
    grid: {span: 23e6}                  # optional, default 2.5 W
    initial: {p0: 0.3, seed_coherence: 1e-6, hole: {center, width, depth}}
    segments:
      - {kind: hold, t_start, t_end, detuning_offset, ramp}
      - {kind: drive, t_start, t_end, amplitude, frequency_offset}
    t_end: 10e-6
    record: {output_rate: 50e6, snapshot_stride: 0}
    solver: {rtol: 1e-8, atol: 1e-10, method: RK45}
    noise: {amplitude, correlation_time, seed}   # optional stochastic trigger
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np
import yaml
from scipy import stats

from . import analysis
from .dynamics import (
    DriveSegment,
    HoldSegment,
    IntegrationError,
    NoiseSpec,
    SolverOptions,
    integrate,
)
from .ensemble import TWO_PI, to_hz, EnsembleGrid, ParameterError, PhysicalParams, discretize, paper_params
from .series import TimeSeries

log = logging.getLogger(__name__)

HOLD_DETUNING = TWO_PI * 50e6
SECOND_HOLD_START = 6e-6
SECOND_HOLD_TIMES = (1e-6, 2e-6, 4e-6, 6e-6, 8e-6, 10e-6, 15e-6, 20e-6, 25e-6, 30e-6, 40e-6, 50e-6, 60e-6)


class ConfigError(ValueError):
    """Malformed or unknown keys in a scenario / sweep document."""


@dataclass(frozen=True)
class HoleSpec:
    center: float  # rad/s
    width: float  # rad/s, HWHM
    depth: float


@dataclass(frozen=True)
class Preparation:
    p0: float = 0.3
    seed_coherence: float = 1e-6
    hole: HoleSpec | None = None

    def __post_init__(self):
        if abs(self.p0) > 1:
            raise ParameterError(f"|p0| must not exceed 1, got {self.p0!r}")


@dataclass(frozen=True)
class Record:
    output_rate: float = 50e6
    snapshot_stride: int = 0


@dataclass(frozen=True)
class Scenario:
    name: str
    initial: Preparation = Preparation()
    segments: tuple = ()
    t_end: float = 10e-6
    record: Record = Record()
    params: PhysicalParams | None = None
    span: float | None = None
    solver: SolverOptions = SolverOptions()
    noise: NoiseSpec | None = None

    def __post_init__(self):
        segs = tuple(sorted(self.segments, key=lambda s: (s.t_start, s.kind)))
        object.__setattr__(self, "segments", segs)
        for kind in ("hold", "drive"):
            same = [s for s in segs if s.kind == kind]
            for s1, s2 in zip(same, same[1:]):
                if s2.t_start < s1.t_end:
                    raise ParameterError(f"{kind} segments overlap at t={s2.t_start:.6g}s")
        if segs and self.t_end < max(s.t_end for s in segs):
            raise ParameterError("t_end precedes the end of the last segment")
        if self.t_end < 0:
            raise ParameterError("t_end must be non-negative")

    @property
    def holds(self) -> list[HoldSegment]:
        return [s for s in self.segments if isinstance(s, HoldSegment)]

    @property
    def release_time(self) -> float:
        """End of the last hold (0 when there is none)."""
        holds = self.holds
        return max(h.t_end for h in holds) if holds else 0.0

    def resolved_params(self) -> PhysicalParams:
        return self.params if self.params is not None else paper_params()

    def grid(self, params: PhysicalParams | None = None) -> EnsembleGrid:
        return discretize(params or self.resolved_params(), self.span)

    def to_dict(self) -> dict:
        return scenario_to_dict(self)

    def with_value(self, path: str, value) -> "Scenario":
        doc = self.to_dict()
        set_path(doc, path, value)
        return scenario_from_dict(doc)


@dataclass(frozen=True)
class SweepSpec:
    """One scenario evaluated over a list of values of one or more parameter paths.

    ``values`` holds scalars for a single axis or tuples for several axes.
    ``fit`` is ``"linear"`` (metric vs x), ``"rise"`` (saturating exponential)
    or ``None``. ``fit_x`` chooses x: ``"axis"`` (first axis value minus
    ``x_shift``) or ``"product"`` (product of the axis values).
    """

    base: Scenario
    axis: tuple[str, ...]
    values: tuple
    derived_metric: str
    fit: str | None = None
    fit_x: str = "axis"
    x_shift: float = 0.0

    def __post_init__(self):
        axis = (self.axis,) if isinstance(self.axis, str) else tuple(self.axis)
        object.__setattr__(self, "axis", axis)
        vals = tuple(tuple(v) if isinstance(v, (list, tuple)) else (v,) for v in self.values)
        if not vals:
            raise ConfigError("sweep needs at least one value")
        if any(len(v) != len(axis) for v in vals):
            raise ConfigError(f"each sweep value needs {len(axis)} entries for axes {axis}")
        object.__setattr__(self, "values", vals)
        if self.derived_metric not in METRICS:
            raise ConfigError(f"unknown metric {self.derived_metric!r}; choose from {sorted(METRICS)}")
        if self.fit not in (None, "linear", "rise"):
            raise ConfigError(f"unknown fit {self.fit!r}")
        if self.fit_x not in ("axis", "product"):
            raise ConfigError(f"unknown fit_x {self.fit_x!r}")
        for path in axis:
            self.base.with_value(path, vals[0][axis.index(path)])

    def point(self, i: int) -> Scenario:
        s = self.base
        for path, v in zip(self.axis, self.values[i]):
            s = s.with_value(path, v)
        return replace(s, name=f"{self.base.name}[{i}]")

    def x_value(self, i: int) -> float:
        v = self.values[i]
        if self.fit_x == "product":
            return float(np.prod(v))
        return float(v[0]) - self.x_shift


# ---------------------------------------------------------------- documents

_PARAM_KEYS = {"omega_c", "kappa", "gamma_perp", "g_coll", "g0", "W", "q", "omega0", "J_fill", "eta", "N_rho"}
_TOP_KEYS = {"name", "params", "grid", "initial", "segments", "t_end", "record", "solver", "noise"}
_HOLD_KEYS = {"kind", "t_start", "t_end", "detuning_offset", "ramp"}
_DRIVE_KEYS = {"kind", "t_start", "t_end", "amplitude", "frequency_offset"}


def _check_keys(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}; allowed {sorted(allowed)}")


def scenario_to_dict(s: Scenario) -> dict:
    doc: dict[str, Any] = {"name": s.name}
    if s.params is not None:
        doc["params"] = s.params.to_hz()
    if s.span is not None:
        doc["grid"] = {"span": to_hz(s.span)}
    init = {"p0": s.initial.p0, "seed_coherence": s.initial.seed_coherence}
    if s.initial.hole is not None:
        h = s.initial.hole
        init["hole"] = {"center": to_hz(h.center), "width": to_hz(h.width), "depth": h.depth}
    doc["initial"] = init
    segs = []
    for seg in s.segments:
        if isinstance(seg, HoldSegment):
            segs.append({"kind": "hold", "t_start": seg.t_start, "t_end": seg.t_end,
                         "detuning_offset": to_hz(seg.detuning_offset), "ramp": seg.ramp})
        else:
            segs.append({"kind": "drive", "t_start": seg.t_start, "t_end": seg.t_end,
                         "amplitude": seg.amplitude, "frequency_offset": to_hz(seg.frequency_offset)})
    doc["segments"] = segs
    doc["t_end"] = s.t_end
    doc["record"] = {"output_rate": s.record.output_rate, "snapshot_stride": s.record.snapshot_stride}
    doc["solver"] = {"rtol": s.solver.rtol, "atol": s.solver.atol, "method": s.solver.method}
    if s.noise is not None:
        doc["noise"] = {"amplitude": s.noise.amplitude, "correlation_time": s.noise.correlation_time,
                        "seed": s.noise.seed}
    return doc


def _num(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float, str)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    try:
        return float(x)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {x!r}") from None


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a :class:`Scenario` from a Hz-based document; unknown keys are rejected."""
    _check_keys(doc, _TOP_KEYS, "scenario")
    try:
        params = None
        if doc.get("params") is not None:
            p = doc["params"]
            _check_keys(p, _PARAM_KEYS, "params")
            vals = {k: (None if v is None else _num(v, f"params.{k}")) for k, v in p.items()}
            if "N_rho" in vals:
                vals["N_rho"] = int(vals["N_rho"])
            params = PhysicalParams.from_hz(**{**paper_params().to_hz(), **vals})
        span = None
        if doc.get("grid") is not None:
            _check_keys(doc["grid"], {"span"}, "grid")
            if doc["grid"].get("span") is not None:
                span = TWO_PI * _num(doc["grid"]["span"], "grid.span")
        init = doc.get("initial", {}) or {}
        _check_keys(init, {"p0", "seed_coherence", "hole"}, "initial")
        hole = None
        if init.get("hole") is not None:
            h = init["hole"]
            _check_keys(h, {"center", "width", "depth"}, "initial.hole")
            hole = HoleSpec(TWO_PI * _num(h.get("center", 0.0), "initial.hole.center"),
                            TWO_PI * _num(h["width"], "initial.hole.width"),
                            _num(h["depth"], "initial.hole.depth"))
        prep = Preparation(_num(init.get("p0", 0.3), "initial.p0"),
                           _num(init.get("seed_coherence", 1e-6), "initial.seed_coherence"), hole)
        segs = []
        for i, sd in enumerate(doc.get("segments", []) or []):
            where = f"segments[{i}]"
            kind = sd.get("kind") if isinstance(sd, dict) else None
            if kind == "hold":
                _check_keys(sd, _HOLD_KEYS, where)
                segs.append(HoldSegment(_num(sd["t_start"], where + ".t_start"), _num(sd["t_end"], where + ".t_end"),
                                        TWO_PI * _num(sd.get("detuning_offset", 50e6), where + ".detuning_offset"),
                                        _num(sd.get("ramp", 0.0), where + ".ramp")))
            elif kind == "drive":
                _check_keys(sd, _DRIVE_KEYS, where)
                segs.append(DriveSegment(_num(sd["t_start"], where + ".t_start"), _num(sd["t_end"], where + ".t_end"),
                                         _num(sd["amplitude"], where + ".amplitude"),
                                         TWO_PI * _num(sd.get("frequency_offset", 0.0), where + ".frequency_offset")))
            else:
                raise ConfigError(f"{where}.kind must be 'hold' or 'drive', got {kind!r}")
        rec = doc.get("record", {}) or {}
        _check_keys(rec, {"output_rate", "snapshot_stride"}, "record")
        record = Record(_num(rec.get("output_rate", 50e6), "record.output_rate"),
                        int(_num(rec.get("snapshot_stride", 0), "record.snapshot_stride")))
        sol = doc.get("solver", {}) or {}
        _check_keys(sol, {"rtol", "atol", "method", "max_step"}, "solver")
        solver = SolverOptions(_num(sol.get("rtol", 1e-8), "solver.rtol"), _num(sol.get("atol", 1e-10), "solver.atol"),
                               str(sol.get("method", "RK45")), _num(sol.get("max_step", math.inf), "solver.max_step"))
        noise = None
        if doc.get("noise") is not None:
            nd = doc["noise"]
            _check_keys(nd, {"amplitude", "correlation_time", "seed"}, "noise")
            noise = NoiseSpec(_num(nd["amplitude"], "noise.amplitude"),
                              _num(nd.get("correlation_time", 10e-9), "noise.correlation_time"),
                              int(_num(nd.get("seed", 0), "noise.seed")))
        return Scenario(str(doc.get("name", "scenario")), prep, tuple(segs), _num(doc.get("t_end", 10e-6), "t_end"),
                        record, params, span, solver, noise)
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc}") from None
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def _parse_path(path: str) -> list:
    out = []
    for part in path.replace("[", ".").replace("]", "").split("."):
        if part == "":
            continue
        out.append(int(part) if part.isdigit() else part)
    return out


def set_path(doc: dict, path: str, value) -> None:
    """Assign ``value`` at a dotted path such as ``params.kappa`` or ``segments.0.t_end``.

    ``segments.<i>.duration`` resizes segment i and shifts every later segment
    boundary (and ``t_end``) by the change.
    """
    keys = _parse_path(path)
    if not keys:
        raise ConfigError("empty parameter path")
    if keys[0] == "segments" and len(keys) == 3 and keys[2] == "duration":
        _set_duration(doc, keys[1], value)
        return
    node = doc
    for k in keys[:-1]:
        try:
            if isinstance(k, str) and k not in node:
                if k in ("params", "grid", "record", "solver", "initial"):
                    node[k] = {}
                else:
                    raise KeyError(k)
            node = node[k]
        except (KeyError, IndexError, TypeError):
            raise ConfigError(f"cannot resolve path {path!r}") from None
    last = keys[-1]
    if isinstance(node, list):
        if not isinstance(last, int) or last >= len(node):
            raise ConfigError(f"cannot resolve path {path!r}")
    elif not isinstance(node, dict):
        raise ConfigError(f"cannot resolve path {path!r}")
    node[last] = value


def _set_duration(doc, i, value):
    segs = doc.get("segments") or []
    if not isinstance(i, int) or i >= len(segs):
        raise ConfigError(f"no segment {i}")
    seg = segs[i]
    old_end = seg["t_end"]
    new_end = seg["t_start"] + float(value)
    shift = new_end - old_end
    seg["t_end"] = new_end
    for j, other in enumerate(segs):
        if j != i and other["t_start"] >= old_end - 1e-15:
            other["t_start"] += shift
            other["t_end"] += shift
    doc["t_end"] = doc.get("t_end", old_end) + shift


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``key=value`` and parse the value as YAML (numbers, lists, null)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {key}: cannot parse {raw!r}: {exc}") from None
    return key.strip(), coerce_numbers(value)


def coerce_numbers(value):
    """Turn numeric strings into floats, recursively.

    YAML 1.1 reads ``3e5`` (no decimal point) as a string.
    """
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [coerce_numbers(v) for v in value]
    if isinstance(value, tuple):
        return tuple(coerce_numbers(v) for v in value)
    return value


# ---------------------------------------------------------------- metrics

def _post_release(series: TimeSeries, scenario: Scenario) -> TimeSeries:
    return series.between(scenario.release_time, series.t[-1])


def metric_peak_amplitude(series, scenario):
    return float(series.abs_a.max())


def metric_first_revival_delay(series, scenario):
    return analysis.first_revival_delay(_post_release(series, scenario))


def metric_revival_amplitude(series, scenario):
    """Peak of the first pulse after the last hold ends."""
    pulses = analysis.detect_pulses(_post_release(series, scenario))
    if not pulses:
        raise analysis.NotFoundError("no pulse after release")
    return pulses[0].peak_amplitude


def metric_release_peak(series, scenario):
    return float(_post_release(series, scenario).abs_a.max())


def metric_min_threshold(series, scenario):
    return float(series.pbarC.min())


METRICS: dict[str, Callable[[TimeSeries, Scenario], float]] = {
    "peak_amplitude": metric_peak_amplitude,
    "first_revival_delay": metric_first_revival_delay,
    "revival_amplitude": metric_revival_amplitude,
    "release_peak_amplitude": metric_release_peak,
    "min_pbarC": metric_min_threshold,
}


# ---------------------------------------------------------------- presets

def _paper_record(t_end, stride_time=None, rate=50e6):
    stride = int(round(stride_time * rate)) if stride_time else 0
    return Record(output_rate=rate, snapshot_stride=stride)


def _sr_decay():
    return Scenario("sr_decay", Preparation(0.3, 1e-6), (), 10e-6, _paper_record(10e-6, 0.1e-6), paper_params())


def _revivals_long():
    return Scenario("revivals_long", Preparation(0.3, 1e-6), (), 500e-6, _paper_record(500e-6, 5e-6), paper_params())


def _linewidth_run():
    # half the sample rate of revivals_long, as for the spectral measurement
    return Scenario("linewidth_run", Preparation(0.3, 1e-6), (), 500e-6, Record(25e6, 0), paper_params())


def _second_hold_sweep():
    tau = SECOND_HOLD_TIMES[0]
    base = Scenario(
        "second_hold_sweep",
        Preparation(0.3, 1e-6),
        (HoldSegment(SECOND_HOLD_START, SECOND_HOLD_START + tau, HOLD_DETUNING),),
        SECOND_HOLD_START + tau + 40e-6,
        Record(50e6, 0),
        paper_params(),
    )
    return SweepSpec(base, ("segments.0.duration",), SECOND_HOLD_TIMES, "revival_amplitude", fit="rise")


HOLE_BURN_AMPLITUDE = 5e8
HOLE_BURN_START = 1e-6
HOLE_BURN_DURATION = 0.5e-6
HOLE_BURN_RELEASE = 3e-6


def hole_burn_frequencies(W_hz: float = 9.2e6, n: int = 21) -> np.ndarray:
    """Burn detunings (Hz) relative to the distribution center, spanning +-1.5 W."""
    return np.linspace(-1.5 * W_hz, 1.5 * W_hz, n)


def _hole_burn_scan():
    hold_hz = to_hz(HOLD_DETUNING)
    base = Scenario(
        "hole_burn_scan",
        Preparation(0.3, 1e-6),
        (
            HoldSegment(0.0, HOLE_BURN_RELEASE, HOLD_DETUNING),
            DriveSegment(HOLE_BURN_START, HOLE_BURN_START + HOLE_BURN_DURATION, HOLE_BURN_AMPLITUDE, HOLD_DETUNING),
        ),
        HOLE_BURN_RELEASE + 12e-6,
        Record(50e6, 0),
        paper_params(),
    )
    values = tuple(float(hold_hz + f) for f in hole_burn_frequencies())
    return SweepSpec(base, ("segments.1.frequency_offset",), values, "release_peak_amplitude", x_shift=hold_hz)


def _dt_vs_p0kappa():
    base = Scenario("dt_vs_p0kappa", Preparation(0.3, 1e-6), (), 60e-6, Record(50e6, 0), paper_params())
    values = tuple(itertools.product((0.15, 0.25, 0.35), (300e3, 418e3, 600e3)))
    return SweepSpec(base, ("initial.p0", "params.kappa"), values, "first_revival_delay",
                     fit="linear", fit_x="product")


PRESETS: dict[str, Callable[[], Scenario | SweepSpec]] = {
    "sr_decay": _sr_decay,
    "revivals_long": _revivals_long,
    "second_hold_sweep": _second_hold_sweep,
    "hole_burn_scan": _hole_burn_scan,
    "linewidth_run": _linewidth_run,
    "dt_vs_p0kappa": _dt_vs_p0kappa,
}


def preset(name: str) -> Scenario | SweepSpec:
    """Scenario or sweep reproducing one of the measurement sequences."""
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESETS))}") from None


# ---------------------------------------------------------------- execution

@dataclass
class SweepRow:
    index: int
    values: tuple
    x: float
    metric: float
    ok: bool = True
    error: str = ""
    provenance: dict = field(default_factory=dict)
    series: TimeSeries | None = field(default=None, repr=False)


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow]
    fit: dict | None = None

    @property
    def failed(self) -> list[SweepRow]:
        return [r for r in self.rows if not r.ok]

    def table(self) -> list[dict]:
        out = []
        for r in self.rows:
            row = {"index": r.index}
            row.update({a: v for a, v in zip(self.spec.axis, r.values)})
            row.update(x=r.x, metric=r.metric, ok=r.ok, error=r.error)
            out.append(row)
        return out


def _run_point(spec: SweepSpec, i: int, keep_series: bool) -> SweepRow:
    scenario = spec.point(i)
    started = time.perf_counter()
    prov = {"rtol": scenario.solver.rtol, "atol": scenario.solver.atol, "method": scenario.solver.method,
            "seed": scenario.noise.seed if scenario.noise else None}
    try:
        series = run(scenario)
        value = METRICS[spec.derived_metric](series, scenario)
        ok, err = True, ""
    except (IntegrationError, analysis.AnalysisError, ParameterError) as exc:
        series, value, ok, err = None, math.nan, False, f"{type(exc).__name__}: {exc}"
    prov["wall_time_s"] = time.perf_counter() - started
    return SweepRow(i, spec.values[i], spec.x_value(i), float(value), ok, err, prov,
                    series if keep_series else None)


def _fit_rows(spec: SweepSpec, rows: list[SweepRow]) -> dict | None:
    good = [r for r in rows if r.ok and np.isfinite(r.metric)]
    if spec.fit is None or len(good) < 2:
        return None
    x = np.array([r.x for r in good])
    y = np.array([r.metric for r in good])
    if spec.fit == "linear":
        return analysis.linear_trend(x, y)
    try:
        return analysis.fit_rise(x, y).to_dict()
    except (RuntimeError, ValueError) as exc:
        return {"error": str(exc)}


def run_sweep(spec: SweepSpec, jobs: int = 1, keep_series: bool = False, order: Sequence[int] | None = None) -> SweepResult:
    """Evaluate every sweep point; failures are recorded per row, not raised."""
    idx = list(range(len(spec.values))) if order is None else list(order)
    if jobs > 1 and len(idx) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_point, itertools.repeat(spec), idx, itertools.repeat(keep_series)))
    else:
        rows = [_run_point(spec, i, keep_series) for i in idx]
    rows.sort(key=lambda r: r.index)
    return SweepResult(spec, rows, _fit_rows(spec, rows))


def run(scenario_or_sweep: Scenario | SweepSpec, grid: EnsembleGrid | None = None,
        params: PhysicalParams | None = None, jobs: int = 1, **kw) -> TimeSeries | SweepResult:
    """Integrate a scenario, or every point of a sweep."""
    if isinstance(scenario_or_sweep, SweepSpec):
        return run_sweep(scenario_or_sweep, jobs=jobs, **kw)
    scenario = scenario_or_sweep
    params = params or scenario.resolved_params()
    grid = grid or scenario.grid(params)
    series = integrate(scenario, grid, params)
    series.metadata["params_hz"] = params.to_hz()
    series.metadata["W"] = params.W
    return series


def spearman(x, y) -> float:
    return float(stats.spearmanr(x, y).statistic)


def sweep_from_dict(doc: dict) -> SweepSpec:
    """Sweep document: ``{preset: <name>}`` and/or ``{base: <scenario>, sweep: {...}}``.

    The ``sweep`` section takes ``axis``, ``values``, ``metric``, ``fit``,
    ``fit_x`` and ``x_shift``; keys left out fall back to the named preset.
    """
    _check_keys(doc, {"base", "preset", "sweep"}, "sweep document")
    template = None
    base = None
    if "preset" in doc:
        p = preset(doc["preset"])
        template = p if isinstance(p, SweepSpec) else None
        base = p.base if template else p
    if "base" in doc:
        base = scenario_from_dict(doc["base"])
    if base is None:
        raise ConfigError("sweep document needs 'base' or 'preset'")
    sw = doc.get("sweep") or {}
    _check_keys(sw, {"axis", "values", "metric", "fit", "fit_x", "x_shift"}, "sweep")
    if template is None and not {"axis", "values", "metric"} <= set(sw):
        raise ConfigError("sweep section needs axis, values and metric")
    t = template
    axis = sw.get("axis", t.axis if t else None)
    try:
        return SweepSpec(
            base,
            (axis,) if isinstance(axis, str) else tuple(axis),
            tuple(coerce_numbers(list(sw.get("values", t.values if t else ())))),
            sw.get("metric", t.derived_metric if t else None),
            sw.get("fit", t.fit if t else None),
            sw.get("fit_x", t.fit_x if t else "axis"),
            float(sw.get("x_shift", t.x_shift if t else 0.0)),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def sweep_to_dict(spec: SweepSpec) -> dict:
    return {
        "base": spec.base.to_dict(),
        "sweep": {
            "axis": list(spec.axis),
            "values": [list(v) if len(v) > 1 else v[0] for v in spec.values],
            "metric": spec.derived_metric,
            "fit": spec.fit,
            "fit_x": spec.fit_x,
            "x_shift": spec.x_shift,
        },
    }
