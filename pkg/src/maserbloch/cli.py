"""Command-line front end.

    maserbloch presets
    maserbloch simulate (--preset NAME | --config FILE) [--set key=value ...] --out DIR
    maserbloch sweep    (--preset NAME | --config FILE) [--set key=value ...] --out DIR [--jobs N]
    maserbloch analyze  TIMESERIES.csv [--config SPEC] [--sigma-z FILE] [--out FILE]

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 analysis failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, analysis, io, protocol
from .dynamics import IntegrationError
from .ensemble import ParameterError, ensemble_cooperativity, to_hz
from .protocol import ConfigError, Scenario, SweepSpec
from .report import SpecError, analyze_series, validate_spec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ANALYSIS = 4

log = logging.getLogger("maserbloch")


# ---------------------------------------------------------------- config resolution

def _merge(base: dict, top: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in top.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _load(path) -> dict:
    try:
        return io.load_document(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def resolve_scenario(preset: str | None, config: str | None, overrides: list[str]) -> Scenario:
    """Preset, then file values, then ``--set`` overrides (highest precedence)."""
    doc: dict = {}
    if preset:
        p = protocol.preset(preset)
        if isinstance(p, SweepSpec):
            raise ConfigError(f"preset {preset!r} is a sweep; use the 'sweep' command")
        doc = p.to_dict()
    if config:
        doc = _merge(doc, _load(config))
    if not doc:
        raise ConfigError("give --preset or --config")
    for text in overrides:
        key, value = protocol.parse_override(text)
        protocol.set_path(doc, key, value)
    return protocol.scenario_from_dict(doc)


def resolve_sweep(preset: str | None, config: str | None, overrides: list[str]) -> SweepSpec:
    """As :func:`resolve_scenario`; ``--set`` keys starting with ``sweep.`` edit the sweep section."""
    doc: dict = {}
    if preset:
        p = protocol.preset(preset)
        if not isinstance(p, SweepSpec):
            raise ConfigError(f"preset {preset!r} is a single scenario; use the 'simulate' command")
        doc = protocol.sweep_to_dict(p)
    if config:
        doc = _merge(doc, _load(config))
    if not doc:
        raise ConfigError("give --preset or --config")
    if "preset" in doc and "base" not in doc:
        doc = _merge(protocol.sweep_to_dict(protocol.sweep_from_dict({"preset": doc.pop("preset")})), doc)
    doc.pop("preset", None)
    for text in overrides:
        key, value = protocol.parse_override(text)
        if key.startswith("sweep."):
            doc.setdefault("sweep", {})[key[len("sweep."):]] = value
        else:
            protocol.set_path(doc.setdefault("base", {}), key.removeprefix("base."), value)
    return protocol.sweep_from_dict(doc)


def default_jobs() -> int:
    raw = os.environ.get("MASER_BLOCH_JOBS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"MASER_BLOCH_JOBS must be an integer, got {raw!r}") from None
    return max(n, 1)


# ---------------------------------------------------------------- simulate

def write_run(scenario: Scenario, out_dir, provenance: dict) -> dict:
    """Integrate ``scenario`` and write its CSV files and manifest into ``out_dir``.

    Returns the manifest. Integration errors propagate after a diagnostic
    ``error.json`` has been written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = scenario.resolved_params()
    grid = scenario.grid(params)
    started = time.perf_counter()
    try:
        series = protocol.run(scenario, grid, params)
    except IntegrationError as exc:
        io.write_json({**exc.diagnostic(), "scenario": scenario.to_dict()}, out_dir / "error.json")
        raise
    wall = time.perf_counter() - started

    files = [io.write_timeseries_csv(series, out_dir / "timeseries.csv")]
    if series.sigma_z is not None:
        files.append(io.write_sigma_z_csv(series, out_dir / "sigma_z.csv"))
    coop = ensemble_cooperativity(grid, params)
    manifest = {
        "tool": "maserbloch",
        "version": __version__,
        **provenance,
        "scenario": scenario.to_dict(),
        "params_hz": params.to_hz(),
        "params_rad_s": params.to_rad(),
        "grid": {"n_packets": grid.n_packets, "span_hz": to_hz(grid.span), "spacing_hz": to_hz(grid.spacing)},
        "cooperativity": {"C": coop.C, "Gamma_hz": to_hz(coop.Gamma)},
        "tolerances": {"rtol": scenario.solver.rtol, "atol": scenario.solver.atol,
                       "method": scenario.solver.method},
        "rng_seed": scenario.noise.seed if scenario.noise is not None else None,
        "integrator_steps": series.metadata.get("steps"),
        "wall_clock_s": wall,
        "outputs": [io.file_entry(f, out_dir) for f in files],
    }
    io.write_json(manifest, out_dir / "manifest.json")
    return manifest


def cmd_simulate(args) -> int:
    scenario = resolve_scenario(args.preset, args.config, args.set)
    prov = {"command": "simulate", "config_paths": [args.config] if args.config else [],
            "preset": args.preset, "overrides": list(args.set)}
    manifest = write_run(scenario, args.out, prov)
    print(f"wrote {len(manifest['outputs'])} file(s) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep

def _sweep_point(spec: SweepSpec, i: int, out_dir: str, prov: dict) -> protocol.SweepRow:
    point_dir = Path(out_dir) / f"point_{i:03d}"
    scenario = spec.point(i)
    started = time.perf_counter()
    try:
        manifest = write_run(scenario, point_dir, {**prov, "sweep_index": i,
                                                   "sweep_values": dict(zip(spec.axis, spec.values[i]))})
        series = io.read_timeseries_csv(point_dir / "timeseries.csv")
        value = protocol.METRICS[spec.derived_metric](series, scenario)
        ok, err = True, ""
    except (IntegrationError, analysis.AnalysisError, ParameterError) as exc:
        manifest, value, ok, err = None, float("nan"), False, f"{type(exc).__name__}: {exc}"
    row_prov = {"wall_time_s": time.perf_counter() - started, "dir": point_dir.name}
    if manifest:
        row_prov["outputs"] = manifest["outputs"]
    return protocol.SweepRow(i, spec.values[i], spec.x_value(i), float(value), ok, err, row_prov)


def run_sweep_to_dir(spec: SweepSpec, out_dir, jobs: int = 1, prov: dict | None = None) -> protocol.SweepResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prov = prov or {}
    n = len(spec.values)
    args = (
        [spec] * n,
        range(n),
        [str(out_dir)] * n,
        [prov] * n,
    )
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, n)) as pool:
            rows = list(pool.map(_sweep_point, *args))
    else:
        rows = list(map(_sweep_point, *args))
    result = protocol.SweepResult(spec, rows, protocol._fit_rows(spec, rows))

    table = result.table()
    columns = list(table[0])
    with (out_dir / "summary.csv").open("w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in table:
            fh.write(",".join(_cell(row[c]) for c in columns) + "\n")
    io.write_json({"tool": "maserbloch", "version": __version__, **prov,
                   "sweep": protocol.sweep_to_dict(spec), "rows": table, "fit": result.fit,
                   "n_failed": len(result.failed)}, out_dir / "summary.json")
    return result


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    text = str(v)
    return '"' + text.replace('"', '""') + '"' if ("," in text or '"' in text) else text


def cmd_sweep(args) -> int:
    spec = resolve_sweep(args.preset, args.config, args.set)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    prov = {"command": "sweep", "config_paths": [args.config] if args.config else [],
            "preset": args.preset, "overrides": list(args.set)}
    result = run_sweep_to_dir(spec, args.out, jobs, prov)
    print(f"{len(result.rows)} point(s), {len(result.failed)} failed; summary in {Path(args.out) / 'summary.csv'}")
    if result.fit:
        print("fit: " + json.dumps(io._jsonable(result.fit)))
    return EXIT_NUMERICAL if result.failed else EXIT_OK


# ---------------------------------------------------------------- analyze

def load_run(timeseries_path, sigma_z_path=None):
    """Time series from CSV plus, when available, the sibling inversion snapshots and W (Hz)."""
    path = Path(timeseries_path)
    series = io.read_timeseries_csv(path)
    sz = Path(sigma_z_path) if sigma_z_path else path.with_name("sigma_z.csv")
    if sz.exists():
        t, det, matrix = io.read_sigma_z_csv(sz)
        series = series.copy(sigma_z=matrix, snapshot_t=t, detunings=det)
    elif sigma_z_path:
        raise FileNotFoundError(f"{sz} does not exist")
    W = None
    manifest = path.with_name("manifest.json")
    if manifest.exists():
        try:
            W = json.loads(manifest.read_text())["params_hz"]["W"]
        except (ValueError, KeyError, TypeError):
            W = None
    return series, W


def cmd_analyze(args) -> int:
    spec = validate_spec(_load(args.config) if args.config else {})
    try:
        series, W = load_run(args.timeseries, args.sigma_z)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from None
    try:
        result = analyze_series(series, spec, W)
    except (ValueError, RuntimeError) as exc:
        if isinstance(exc, analysis.AnalysisError):
            raise
        raise analysis.AnalysisError(str(exc)) from exc
    text = json.dumps(io._jsonable(result), indent=2) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- presets

def cmd_presets(args) -> int:
    for name in sorted(protocol.PRESETS):
        p = protocol.preset(name)
        if isinstance(p, SweepSpec):
            desc = f"sweep  {len(p.values):3d} points over {', '.join(p.axis)} -> {p.derived_metric}"
        else:
            desc = f"run    t_end = {p.t_end * 1e6:g} us"
        print(f"{name:20s} {desc}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maserbloch", description="Maxwell-Bloch maser simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("--preset", help="named preset (see 'maserbloch presets')")
        p.add_argument("--config", help="YAML/JSON document; values override the preset")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a value by dotted path, e.g. params.kappa=3e5 (repeatable)")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="integrate one scenario")
    add_run_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    add_run_args(p)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: $MASER_BLOCH_JOBS or 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="analyze a timeseries.csv")
    p.add_argument("timeseries")
    p.add_argument("--config", "--spec", dest="config", help="analysis spec (YAML/JSON)")
    p.add_argument("--sigma-z", dest="sigma_z", help="inversion snapshots (default: sibling sigma_z.csv)")
    p.add_argument("--out", help="output JSON file (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("presets", help="list presets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except io.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (ConfigError, SpecError, ParameterError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(json.dumps(io._jsonable(exc.diagnostic())), file=sys.stderr)
        return EXIT_NUMERICAL
    except analysis.AnalysisError as exc:
        print(f"analysis error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
