"""Command-line driver: ``spheremass {flow,asphericity,extend,battery,rotsym,check}``.

Every command reads a JSON scenario config (``--config``) and writes CSV/JSON
files into ``--out`` (or the config's ``output_dir``).  Data files are
deterministic.  Exit codes:

    0  success
    1  configuration error
    2  numerical failure of the flow or the lapse solver
    3  inadmissible scenario (mean curvature below threshold, or blow-up)
    4  mass inequality violated
"""

from __future__ import annotations

import argparse
import csv
import functools
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from .asphericity import CannotExtrapolateError, asphericity_limit
from .extension_builder import (
    BlowUpError,
    InadmissibleError,
    NoLimitError,
    PrescribedScalar,
    check_admissibility,
    solve_lapse,
)
from .mass_reports import hawking_mass_initial, verify_mass_bound
from .modified_ricci_flow import FlowDivergenceError, StepSizeError, run_flow
from .rotsym import MassProfile, c0_rotsym, check_profile_decay, prescribed_scalar_for, scalar_from_profile
from .sphere_geometry import AxisymMetric, InvalidMetricError, normalize_area

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FLOW = 2
EXIT_INADMISSIBLE = 3
EXIT_INEQUALITY = 4


class ConfigError(ValueError):
    pass


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


# --- configuration ---------------------------------------------------------


def _require(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def _number(d, key, default, where, lo=-math.inf, hi=math.inf, lo_open=False):
    value = d.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    value = float(value)
    if not math.isfinite(value) or value < lo or value > hi or (lo_open and value == lo):
        raise ConfigError(f"{where}.{key}={value} outside its allowed range")
    return value


@dataclass(frozen=True)
class MetricSpec:
    family: str = "round"
    axes: tuple = (1.0, 1.0, 0.8)
    coefficients: tuple = (1.0,)

    @classmethod
    def from_dict(cls, d):
        _require(d, {"family", "axes", "coefficients"}, "metric")
        family = d.get("family", "round")
        if family not in ("round", "ellipsoid", "warped"):
            raise ConfigError(f"unknown metric family {family!r}")
        axes = tuple(float(x) for x in d.get("axes", (1.0, 1.0, 0.8)))
        if len(axes) != 3 or min(axes) <= 0:
            raise ConfigError("metric.axes needs three positive numbers")
        coefficients = tuple(float(x) for x in d.get("coefficients", (1.0,)))
        if not coefficients:
            raise ConfigError("metric.coefficients must not be empty")
        return cls(family, axes, coefficients)

    def to_dict(self):
        out = {"family": self.family}
        if self.family == "ellipsoid":
            out["axes"] = list(self.axes)
        if self.family == "warped":
            out["coefficients"] = list(self.coefficients)
        return out

    def build(self, n: int) -> AxisymMetric:
        if self.family == "round":
            m = AxisymMetric.round(n)
        elif self.family == "ellipsoid":
            m = AxisymMetric.ellipsoid(n, self.axes)
        else:
            m = AxisymMetric.warped(n, self.coefficients)
        return normalize_area(m)


@dataclass(frozen=True)
class FlowSpec:
    t_end: float = 20.0
    sample_dt: float = 0.002
    truncation_threshold: float = 1e-14

    @classmethod
    def from_dict(cls, d):
        _require(d, {"t_end", "sample_dt", "truncation_threshold"}, "flow")
        return cls(
            _number(d, "t_end", 20.0, "flow", 1.0, 1e4, lo_open=True),
            _number(d, "sample_dt", 0.002, "flow", 0.0, 1.0, lo_open=True),
            _number(d, "truncation_threshold", 1e-14, "flow", 0.0, 1.0),
        )

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RbarSpec:
    family: str = "zero"
    c: float = 0.0
    p: float = 4.0
    angular: tuple = (1.0,)

    @classmethod
    def from_dict(cls, d):
        _require(d, {"family", "c", "p", "angular"}, "extension.rbar")
        family = d.get("family", "zero")
        if family not in ("zero", "rotsym_power", "separable"):
            raise ConfigError(f"unknown rbar family {family!r}")
        if family == "zero":
            return cls()
        c = _number(d, "c", 0.0, "extension.rbar")
        p = _number(d, "p", 4.0, "extension.rbar", 0.0, 100.0, lo_open=True)
        angular = tuple(float(x) for x in d.get("angular", (1.0,))) if family == "separable" else (1.0,)
        return cls(family, c, p, angular)

    def to_dict(self):
        if self.family == "zero":
            return {"family": "zero"}
        out = {"family": self.family, "c": self.c, "p": self.p}
        if self.family == "separable":
            out["angular"] = list(self.angular)
        return out

    def build(self) -> PrescribedScalar:
        try:
            return PrescribedScalar(self.family, self.c, self.p, self.angular)
        except ValueError as err:
            raise ConfigError(str(err)) from err


@dataclass(frozen=True)
class ExtensionSpec:
    rbar: RbarSpec = field(default_factory=RbarSpec)
    H: float = 2.0
    T: float = 200.0
    alpha: float = 0.5
    ds: float = 1e-3

    @classmethod
    def from_dict(cls, d):
        _require(d, {"rbar", "H", "T", "alpha", "ds"}, "extension")
        return cls(
            RbarSpec.from_dict(d.get("rbar", {})),
            _number(d, "H", 2.0, "extension", 0.0, 1e3, lo_open=True),
            _number(d, "T", 200.0, "extension", 10.0, 1e6),
            _number(d, "alpha", 0.5, "extension", 0.0, 1.0, lo_open=True),
            _number(d, "ds", 1e-3, "extension", 0.0, 0.1, lo_open=True),
        )

    def to_dict(self):
        return {"rbar": self.rbar.to_dict(), "H": self.H, "T": self.T, "alpha": self.alpha, "ds": self.ds}


@dataclass(frozen=True)
class ScenarioConfig:
    metric: MetricSpec = field(default_factory=MetricSpec)
    n: int = 256
    flow: FlowSpec = field(default_factory=FlowSpec)
    extension: ExtensionSpec = field(default_factory=ExtensionSpec)
    output_dir: str = "out"
    id: str = "scenario"

    @classmethod
    def from_dict(cls, d, top_level: bool = True):
        allowed = {"metric", "n", "flow", "extension", "output_dir", "id"}
        if top_level:
            allowed.add("schema_version")
            _check_schema(d)
        _require(d, allowed, "config")
        n = d.get("n", 256)
        if isinstance(n, bool) or not isinstance(n, int) or n < 16 or n % 2 or n > 8192:
            raise ConfigError("n must be an even integer in [16, 8192]")
        ident = d.get("id", "scenario")
        if not isinstance(ident, str) or not ident or any(ch in ident for ch in "/\\"):
            raise ConfigError("id must be a non-empty string without path separators")
        out = d.get("output_dir", "out")
        if not isinstance(out, str):
            raise ConfigError("output_dir must be a string")
        return cls(
            MetricSpec.from_dict(d.get("metric", {})),
            n,
            FlowSpec.from_dict(d.get("flow", {})),
            ExtensionSpec.from_dict(d.get("extension", {})),
            out,
            ident,
        )

    def to_dict(self, top_level: bool = True):
        out = {
            "id": self.id,
            "metric": self.metric.to_dict(),
            "n": self.n,
            "flow": self.flow.to_dict(),
            "extension": self.extension.to_dict(),
            "output_dir": self.output_dir,
        }
        if top_level:
            out = {"schema_version": SCHEMA_VERSION, **out}
        return out


def _check_schema(d):
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")


@dataclass(frozen=True)
class BatteryConfig:
    scenarios: tuple
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, d):
        _check_schema(d)
        _require(d, {"schema_version", "scenarios", "output_dir"}, "battery")
        raw = d.get("scenarios")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("battery needs a non-empty scenarios list")
        scenarios = tuple(ScenarioConfig.from_dict(s, top_level=False) for s in raw)
        ids = [s.id for s in scenarios]
        if len(set(ids)) != len(ids):
            raise ConfigError("scenario ids must be unique")
        out = d.get("output_dir", "out")
        if not isinstance(out, str):
            raise ConfigError("output_dir must be a string")
        return cls(scenarios, out)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "scenarios": [s.to_dict(top_level=False) for s in self.scenarios],
            "output_dir": self.output_dir,
        }


@dataclass(frozen=True)
class ProfileConfig:
    kind: str
    params: tuple
    alpha: float = 0.5
    t_max: float = 100.0
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, d, base: Path | None = None):
        _check_schema(d)
        _require(d, {"schema_version", "profile", "alpha", "t_max", "output_dir"}, "rotsym")
        prof = d.get("profile")
        if not isinstance(prof, dict):
            raise ConfigError("rotsym config needs a profile object")
        kind = prof.get("kind")
        if kind == "constant":
            _require(prof, {"kind", "m"}, "profile")
            params = (_number(prof, "m", None, "profile", 0.0),)
        elif kind == "powerlaw_approach":
            _require(prof, {"kind", "m_inf", "p"}, "profile")
            params = (
                _number(prof, "m_inf", None, "profile", 0.0),
                _number(prof, "p", None, "profile", 0.0, lo_open=True),
            )
        elif kind == "table":
            _require(prof, {"kind", "csv"}, "profile")
            path = Path(prof.get("csv", ""))
            if base is not None and not path.is_absolute():
                path = base / path
            try:
                data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            except (OSError, ValueError) as err:
                raise ConfigError(f"cannot read profile table: {err}") from err
            params = (str(prof["csv"]), tuple(data[:, 0]), tuple(data[:, 1]))
        else:
            raise ConfigError(f"unknown profile kind {kind!r}")
        return cls(
            kind,
            params,
            _number(d, "alpha", 0.5, "rotsym", 0.0, 1.0, lo_open=True),
            _number(d, "t_max", 100.0, "rotsym", 1.0, 1e6, lo_open=True),
            d.get("output_dir", "out"),
        )

    def build(self) -> MassProfile:
        try:
            if self.kind == "table":
                return MassProfile.table(self.params[1], self.params[2])
            return MassProfile(self.kind, self.params)
        except ValueError as err:
            raise ConfigError(str(err)) from err


def config_hash(d: dict) -> str:
    return hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# --- output helpers -----------------------------------------------------------


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


class Manifest:
    def __init__(self, command: str, cfg_dict: dict, out: Path):
        self.out = out
        self.data = {
            "command": command,
            "config_hash": config_hash(cfg_dict),
            "tool_version": tool_version(),
            "files": {},
            "wall_clock_seconds": {},
        }

    def stage(self, name):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                manifest.data["wall_clock_seconds"][name] = time.perf_counter() - self.t0
                return False

        return _Timer()

    def add(self, stage: str, path: Path):
        self.data["files"].setdefault(stage, []).append(str(path.relative_to(self.out)))

    def write(self):
        write_json(self.out / "manifest.json", self.data)


# --- pipeline stages ---------------------------------------------------------------


@functools.lru_cache(maxsize=8)
def _cached_flow(metric: MetricSpec, n: int, flow: FlowSpec):
    return run_flow(metric.build(n), flow.t_end, flow.sample_dt, flow.truncation_threshold)


def _flow_outputs(trace, out: Path, manifest: Manifest):
    path = out / "trace.csv"
    write_csv(path, ["t", "K_star", "M_sup_sq", "area_error"], trace.to_rows())
    manifest.add("flow", path)
    fit = trace.decay_fit
    info = {
        "truncation_time": trace.truncation_time,
        "end_time": trace.end_time,
        "decay_fit": None if fit is None else asdict(fit),
        "curvature_fit": None if trace.curvature_fit is None else asdict(trace.curvature_fit),
        "final_K_star": float(trace.K_star_series[-1]),
        "final_M_sup_sq": float(trace.M_sup_sq_series[-1]),
    }
    path = out / "decay_fit.json"
    write_json(path, info)
    manifest.add("flow", path)


def _asphericity_outputs(asph, out: Path, manifest: Manifest):
    path = out / "asphericity.csv"
    write_csv(path, ["t", "m_aS"], zip(asph.partial_times, asph.partial_values))
    manifest.add("asphericity", path)
    path = out / "asphericity.json"
    write_json(
        path,
        {
            "limit": asph.limit,
            "tail_bound": asph.tail_bound,
            "truncation_time": asph.truncation_time,
            "partial_series_csv_path": "asphericity.csv",
        },
    )
    manifest.add("asphericity", path)


class PipelineFailure(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code = code
        self.kind = kind


def run_scenario(cfg: ScenarioConfig, out: Path, manifest: Manifest, stages=("flow", "asphericity", "extend")):
    """Run the requested stages of one scenario and return a summary dict."""
    summary = {"id": cfg.id}
    try:
        with manifest.stage("flow"):
            trace = _cached_flow(cfg.metric, cfg.n, cfg.flow)
    except (FlowDivergenceError, StepSizeError) as err:
        raise PipelineFailure(EXIT_FLOW, type(err).__name__, str(err)) from err
    except (InvalidMetricError, ValueError) as err:
        raise PipelineFailure(EXIT_CONFIG, type(err).__name__, str(err)) from err
    _flow_outputs(trace, out, manifest)
    summary["truncation_time"] = trace.truncation_time
    if "asphericity" not in stages and "extend" not in stages:
        return summary
    try:
        with manifest.stage("asphericity"):
            asph = asphericity_limit(trace)
    except CannotExtrapolateError as err:
        if getattr(err, "partial", None) is not None:
            _asphericity_outputs(err.partial, out, manifest)
        raise PipelineFailure(EXIT_FLOW, "CannotExtrapolateError", str(err)) from err
    _asphericity_outputs(asph, out, manifest)
    summary["m_aS"] = asph.limit
    summary["m_aS_tail"] = asph.tail_bound
    if "extend" not in stages:
        return summary

    ext = cfg.extension
    Rbar = ext.rbar.build()
    try:
        with manifest.stage("extend"):
            sol = solve_lapse(trace, Rbar, ext.H, ext.T, ds=ext.ds, alpha=ext.alpha)
    except InadmissibleError as err:
        path = out / "admissibility.json"
        write_json(path, {**err.report.as_dict(), "failure": str(err)})
        manifest.add("extend", path)
        raise PipelineFailure(EXIT_INADMISSIBLE, "InadmissibleError", str(err)) from err
    except BlowUpError as err:
        raise PipelineFailure(EXIT_INADMISSIBLE, "BlowUpError", str(err)) from err
    except NoLimitError as err:
        raise PipelineFailure(EXIT_FLOW, "NoLimitError", str(err)) from err
    u = sol.u
    rows = zip(sol.times, sol.leaf_hawking, u.min(axis=1), u.max(axis=1), 2.0 / (sol.times * u.max(axis=1)))
    path = out / "leaf_masses.csv"
    write_csv(path, ["t", "m_H", "min_u", "max_u", "min_leaf_H"], rows)
    manifest.add("extend", path)
    path = out / "admissibility.json"
    write_json(path, sol.admissibility.as_dict())
    manifest.add("extend", path)
    with manifest.stage("report"):
        m_H_sigma = hawking_mass_initial(trace.metric_at(1.0), ext.H)
        report = verify_mass_bound(sol, asph, trace, Rbar, m_H_sigma)
    path = out / "mass_report.json"
    write_json(path, {**report.as_dict(), "adm_tail_bound": sol.adm_tail_bound})
    manifest.add("extend", path)
    summary.update(
        m_H_sigma=report.m_H_sigma,
        e_term=report.e_term,
        adm_estimate=report.adm_estimate,
        slack=report.inequality_slack,
        tolerance=report.tolerance,
        violated=report.violated or not report.per_time_ok,
        rigidity_triggered=report.rigidity.triggered,
        R_is_zero=Rbar.is_zero,
        metric_is_round=report.rigidity.metric_is_round,
        u_is_rotsym=report.rigidity.u_is_rotsym,
    )
    if summary["violated"]:
        raise PipelineFailure(EXIT_INEQUALITY, "InequalityViolation", f"slack {report.inequality_slack:.3e}")
    return summary


def _battery_worker(cfg_dict: dict, out: str):
    cfg = ScenarioConfig.from_dict(cfg_dict, top_level=False)
    sub = Path(out) / cfg.id
    manifest = Manifest("battery-scenario", cfg_dict, sub)
    try:
        summary = run_scenario(cfg, sub, manifest)
        summary["exit_code"] = EXIT_OK
    except PipelineFailure as err:
        summary = {"id": cfg.id, "exit_code": err.code, "error": err.kind, "message": str(err)}
    manifest.write()
    return summary


SUMMARY_COLUMNS = [
    "id",
    "m_H_sigma",
    "m_aS",
    "e_term",
    "adm_estimate",
    "slack",
    "tolerance",
    "violated",
    "rigidity_triggered",
    "R_is_zero",
    "metric_is_round",
    "u_is_rotsym",
    "exit_code",
]


# --- commands ------------------------------------------------------------------


def _load_json(path: str) -> tuple[dict, Path]:
    try:
        with open(path) as fh:
            return json.load(fh), Path(path).resolve().parent
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err


def _scenario_from_args(args) -> tuple[ScenarioConfig, Path]:
    raw, _ = _load_json(args.config)
    cfg = ScenarioConfig.from_dict(raw)
    if args.n is not None:
        cfg = ScenarioConfig.from_dict({**cfg.to_dict(), "n": args.n})
    out = Path(args.out if args.out else cfg.output_dir)
    return cfg, out


def _single(stage_set, command, summary_line):
    def run(args):
        cfg, out = _scenario_from_args(args)
        manifest = Manifest(command, cfg.to_dict(), out)
        try:
            summary = run_scenario(cfg, out, manifest, stage_set)
        finally:
            manifest.write()
        return summary

    run.__doc__ = summary_line
    return run


cmd_flow = _single(("flow",), "flow", "Run the normalised flow and write its trace and decay fit.")
cmd_asphericity = _single(
    ("flow", "asphericity"), "asphericity", "Run the flow and report the asphericity mass with its tail bound."
)
cmd_extend = _single(
    ("flow", "asphericity", "extend"), "extend", "Build the extension, then check the mass bound and rigidity."
)


def cmd_check(args):
    """Validate a scenario and report admissibility without solving for the lapse."""
    cfg, out = _scenario_from_args(args)
    manifest = Manifest("check", cfg.to_dict(), out)
    try:
        with manifest.stage("flow"):
            trace = _cached_flow(cfg.metric, cfg.n, cfg.flow)
    except (FlowDivergenceError, StepSizeError) as err:
        raise PipelineFailure(EXIT_FLOW, type(err).__name__, str(err)) from err
    report = check_admissibility(trace, cfg.extension.rbar.build(), cfg.extension.H, cfg.extension.alpha)
    path = out / "admissibility.json"
    write_json(path, report.as_dict())
    manifest.add("check", path)
    manifest.write()
    if not report.admissible:
        raise PipelineFailure(
            EXIT_INADMISSIBLE, "Inadmissible", f"H={report.H_min:g} <= 2 sqrt(C0)={report.H_threshold:g}"
        )
    return {"id": cfg.id, "C0": report.C0, "H_threshold": report.H_threshold, "admissible": True}


def cmd_battery(args):
    """Run a list of scenarios in parallel and write one summary row per scenario."""
    raw, _ = _load_json(args.config)
    battery = BatteryConfig.from_dict(raw)
    scenarios = battery.scenarios
    if args.n is not None:
        scenarios = tuple(replace(s, n=args.n) for s in scenarios)
        for s in scenarios:
            ScenarioConfig.from_dict(s.to_dict(top_level=False), top_level=False)
    out = Path(args.out if args.out else battery.output_dir)
    manifest = Manifest("battery", battery.to_dict(), out)
    dicts = [s.to_dict(top_level=False) for s in scenarios]
    jobs = args.jobs or min(len(dicts), os.cpu_count() or 1)
    with manifest.stage("scenarios"):
        if jobs <= 1:
            results = [_battery_worker(d, str(out)) for d in dicts]
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_battery_worker, dicts, [str(out)] * len(dicts)))
    path = out / "summary.csv"
    write_csv(path, SUMMARY_COLUMNS, ([r.get(c, "") for c in SUMMARY_COLUMNS] for r in results))
    manifest.add("battery", path)
    for r in results:
        manifest.add("battery", out / r["id"] / "manifest.json")
    manifest.write()
    failed = [r for r in results if r["exit_code"] != EXIT_OK]
    if failed:
        code = max(r["exit_code"] for r in failed)
        ids = ", ".join(r["id"] for r in failed)
        raise PipelineFailure(code, "BatteryFailure", f"failing scenarios: {ids}")
    return {"scenarios": len(results), "all_passed": True}


def cmd_rotsym(args):
    """Tabulate a mass profile and report its curvature, C0 and decay check."""
    raw, base = _load_json(args.config)
    cfg = ProfileConfig.from_dict(raw, base)
    profile = cfg.build()
    out = Path(args.out if args.out else cfg.output_dir)
    manifest = Manifest("rotsym", raw, out)
    lo = max(profile.r_min, 1.0)
    t = np.geomspace(lo, cfg.t_max, 401)
    rows = zip(t, profile.value(t), profile.lapse(t), scalar_from_profile(profile, t))
    path = out / "profile.csv"
    write_csv(path, ["t", "m_H", "u", "Rbar"], rows)
    manifest.add("rotsym", path)
    decay = check_profile_decay(profile, cfg.alpha)
    info = {
        "C0": c0_rotsym(profile, cfg.t_max) if lo <= 1.0 else None,
        "decay": asdict(decay),
        "limit": profile.limit,
    }
    try:
        info["rbar"] = asdict(prescribed_scalar_for(profile))
    except ValueError:
        info["rbar"] = None
    path = out / "rotsym.json"
    write_json(path, info)
    manifest.add("rotsym", path)
    manifest.write()
    return {"C0": info["C0"], "decay_passes": decay.passes, "verifiable": decay.verifiable}


COMMANDS = {
    "flow": cmd_flow,
    "asphericity": cmd_asphericity,
    "extend": cmd_extend,
    "battery": cmd_battery,
    "rotsym": cmd_rotsym,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spheremass", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).splitlines()[0])
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--n", type=int, help="grid size override")
        p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
        if name == "battery":
            p.add_argument("--jobs", type=int, default=0, help="worker processes (default: one per scenario)")
    return parser


def _diagnostic(code, kind, message):
    json.dump({"exit_code": code, "error": kind, "message": message}, sys.stderr)
    sys.stderr.write("\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        summary = COMMANDS[args.command](args)
    except ConfigError as err:
        return _diagnostic(EXIT_CONFIG, "ConfigError", str(err))
    except PipelineFailure as err:
        return _diagnostic(err.code, err.kind, str(err))
    if not args.quiet:
        json.dump(_jsonable(summary), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
