"""Batch experiment runner: YAML spec in, CSV and JSON rows out.

Usage::

    python -m aoisched run experiment.yaml [--seed N] [--out results.csv]
        [--methods convex,ibl] [--audit] [--timing]

Spec schema (every key optional)::

    scenario: custom        # single_device_surface | mu_sweep | packet_sweep |
                            # device_count_sweep | added_device_sweep | custom
    seed: 0
    params:                 # SystemParams fields; numbers in the field's unit,
      mu: 0.5               # or strings with a unit such as "20 dBm", "1 W",
      p_c: 20 dBm           # "-104 dB", "10 MHz"; p_c, h_i, sigma2 are aliases
    devices:
      count: 30             # random distances, uniform in distance_range
      distance_range: [0.8, 1.6]
      distance: 1.6         # homogeneous distance instead of a range
      distances: [1.0, 1.2] # explicit list, overrides count/range
      added_distance: 1.2   # one extra device appended to the list
      fading: none          # none | rayleigh
    sweep:
      variable: mu          # SystemParams field or count | distance | added_distance
      values: [0.1, 0.5, 0.9]
    methods: [convex, ibl]  # convex | algorithm1 | exhaustive | ibl | simulate
    exhaustive:
      cells: 8              # grid of +-cells steps around the convex optimum
      step: 0.01            # step as a fraction of the round length
    simulate:
      rounds: 100000
    surface:                # single_device_surface only
      m_c: [0.1, 4.0, 25]   # lo, hi, count as multiples of the optimum
      m_r: [0.5, 2.0, 25]
    output:
      path: results.csv
      format: both          # csv | json | both

Exit status: 0 when every row succeeded, 2 when some rows carry a failure
status, 1 for an invalid spec.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import fblmath
from .cluster import algorithm1, reconstruct_schedule
from .errors import AoiSchedError, ConfigError
from .linkmodel import SystemParams, make_devices, rayleigh_fading, watt_to_dbm
from .optimizer import solve_minmax, solve_single
from .simkernel import GridSpec, SimConfig, exhaustive_search, ibl_baseline, simulate

log = logging.getLogger("aoisched.expcli")

SCENARIOS = ("single_device_surface", "mu_sweep", "packet_sweep", "device_count_sweep", "added_device_sweep",
             "custom")
METHODS = ("convex", "algorithm1", "exhaustive", "ibl", "simulate")
SCENARIO_VARS = ("count", "distance", "added_distance")
PARAM_ALIASES = {"p_c": "p_c_dbm", "h_i": "h_i_db", "sigma2": "sigma2_dbm"}
COLUMNS = ("point", "sweep_variable", "sweep_value", "method", "status", "delta_max", "M", "m_c", "n_devices",
           "capacity", "saturated", "eps_min", "eps_max", "gamma_min", "gamma_max", "sim_se", "m_r", "eps",
           "gamma", "message")

PRESETS = {
    "single_device_surface": {
        "devices": {"distances": [1.0]},
        "methods": ["convex"],
    },
    "mu_sweep": {
        "sweep": {"variable": "mu", "values": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]},
        "methods": ["convex", "ibl"],
    },
    "packet_sweep": {
        "sweep": {"variable": "d_bits", "values": [64, 96, 128, 160, 192, 224, 256]},
        "methods": ["convex", "ibl"],
    },
    "device_count_sweep": {
        "devices": {"distance": 1.6},
        "sweep": {"variable": "count", "values": list(range(1, 11))},
        "methods": ["convex", "algorithm1"],
    },
    "added_device_sweep": {
        "devices": {"count": 16, "distance": 1.6},
        "sweep": {"variable": "added_distance", "values": [1.0, 1.2, 1.4, 1.5, 1.6, 1.7, 1.8, 2.0]},
        "methods": ["convex", "algorithm1"],
    },
    "custom": {},
}

_TOP_KEYS = {"scenario", "seed", "params", "devices", "sweep", "methods", "exhaustive", "simulate", "surface",
             "output"}
_SECTION_KEYS = {
    "devices": {"count", "distance_range", "distance", "distances", "added_distance", "fading"},
    "sweep": {"variable", "values"},
    "exhaustive": {"cells", "step"},
    "simulate": {"rounds"},
    "surface": {"m_c", "m_r"},
    "output": {"path", "format"},
}


@dataclass
class DeviceSpec:
    count: int = 30
    distance_range: tuple = (0.8, 1.6)
    distance: Optional[float] = None
    distances: Optional[tuple] = None
    added_distance: Optional[float] = None
    fading: str = "none"


@dataclass
class ExperimentSpec:
    scenario: str = "custom"
    seed: int = 0
    params: dict = field(default_factory=dict)
    devices: DeviceSpec = field(default_factory=DeviceSpec)
    sweep_variable: Optional[str] = None
    sweep_values: tuple = ()
    methods: tuple = ("convex",)
    exhaustive_cells: int = 8
    exhaustive_step: float = 0.01
    sim_rounds: int = 100_000
    surface_m_c: tuple = (0.1, 4.0, 25)
    surface_m_r: tuple = (0.5, 2.0, 25)
    output_path: str = "results.csv"
    output_format: str = "both"

    def system_params(self, **extra) -> SystemParams:
        kw = dict(self.params)
        kw.update(extra)
        return SystemParams(**kw)


# --------------------------------------------------------------------------
# parsing

_UNIT_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")
_HZ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def _quantity(name: str, value, where: str):
    """Convert ``value`` (number or 'number unit') into the unit of field ``name``."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    m = _UNIT_RE.match(value)
    if not m:
        raise ConfigError(f"{where}: cannot parse quantity {value!r}")
    x, unit = float(m.group(1)), m.group(2).lower()
    if name in ("p_c_dbm", "sigma2_dbm"):
        if unit == "dbm" or unit == "":
            return x
        if unit in ("w", "mw"):
            w = x if unit == "w" else 1e-3 * x
            if w <= 0:
                raise ConfigError(f"{where}: power must be > 0")
            return watt_to_dbm(w)
    elif name == "h_i_db":
        if unit in ("db", ""):
            return x
    elif name in ("bandwidth", "carrier_freq"):
        if unit in _HZ or unit == "":
            return x * _HZ.get(unit, 1.0)
    elif name == "eta" or name == "mu" or name == "eps_max" or name == "gamma_th" or name == "d_bits":
        if unit == "":
            return x
        if name == "d_bits" and unit in ("bit", "bits"):
            return x
    raise ConfigError(f"{where}: unit {m.group(2)!r} not valid for {name}")


def _param_overrides(raw, lines) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"params{lines('params')}: expected a mapping")
    fields_ = set(SystemParams.field_names())
    out = {}
    for key, val in raw.items():
        name = PARAM_ALIASES.get(key, key)
        if name not in fields_:
            raise ConfigError(f"params.{key}{lines('params', key)}: unknown parameter")
        if name == "noise_mode":
            out[name] = val
            continue
        v = _quantity(name, val, f"params.{key}{lines('params', key)}")
        if name == "d_bits":
            if int(v) != v:
                raise ConfigError(f"params.{key}{lines('params', key)}: packet size must be an integer")
            v = int(v)
        out[name] = v
    return out


def _key_lines(text: str):
    """Map key paths to 1-based line numbers for diagnostics."""
    table = {}
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return lambda *path: ""

    def walk(n, prefix):
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                path = prefix + (str(k.value),)
                table[path] = k.start_mark.line + 1
                walk(v, path)

    if node is not None:
        walk(node, ())

    def lines(*path):
        ln = table.get(tuple(path))
        return f" (line {ln})" if ln else ""

    return lines


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _num_list(val, where, n=None):
    if not isinstance(val, (list, tuple)) or (n is not None and len(val) != n):
        raise ConfigError(f"{where}: expected a list" + (f" of {n} numbers" if n else ""))
    for v in val:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}: {v!r} is not a number")
    return tuple(val)


def spec_from_dict(raw: dict, text: str = "") -> ExperimentSpec:
    lines = _key_lines(text)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("spec must be a mapping at top level")
    for k in raw:
        if k not in _TOP_KEYS:
            raise ConfigError(f"{k}{lines(k)}: unknown key")
    for sect, allowed in _SECTION_KEYS.items():
        val = raw.get(sect)
        if val is None:
            continue
        if not isinstance(val, dict):
            raise ConfigError(f"{sect}{lines(sect)}: expected a mapping")
        for k in val:
            if k not in allowed:
                raise ConfigError(f"{sect}.{k}{lines(sect, k)}: unknown key")
    scenario = raw.get("scenario", "custom")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario{lines('scenario')}: unknown scenario {scenario!r}")
    merged = _merge(PRESETS[scenario], raw)
    spec = ExperimentSpec(scenario=scenario)

    seed = merged.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed{lines('seed')}: expected an integer in [0, 2**64)")
    spec.seed = seed
    spec.params = _param_overrides(merged.get("params"), lines)
    try:
        spec.system_params()
    except AoiSchedError as exc:
        raise ConfigError(f"params{lines('params')}: {exc}") from exc

    dv = merged.get("devices") or {}
    ds = DeviceSpec()
    if "count" in dv:
        c = dv["count"]
        if isinstance(c, bool) or not isinstance(c, int) or c < 1:
            raise ConfigError(f"devices.count{lines('devices', 'count')}: expected a positive integer")
        ds.count = c
    if "distance_range" in dv:
        lo, hi = _num_list(dv["distance_range"], f"devices.distance_range{lines('devices', 'distance_range')}", 2)
        if not 0 < lo <= hi:
            raise ConfigError(f"devices.distance_range{lines('devices', 'distance_range')}: need 0 < lo <= hi")
        ds.distance_range = (float(lo), float(hi))
    for key in ("distance", "added_distance"):
        if dv.get(key) is not None:
            v = dv[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"devices.{key}{lines('devices', key)}: distance must be a positive number")
            setattr(ds, key, float(v))
    if dv.get("distances") is not None:
        vals = _num_list(dv["distances"], f"devices.distances{lines('devices', 'distances')}")
        if not vals or min(vals) <= 0:
            raise ConfigError(f"devices.distances{lines('devices', 'distances')}: distances must be positive")
        ds.distances = tuple(float(v) for v in vals)
    fad = dv.get("fading", "none")
    if fad not in ("none", "rayleigh"):
        raise ConfigError(f"devices.fading{lines('devices', 'fading')}: expected 'none' or 'rayleigh'")
    ds.fading = fad
    spec.devices = ds

    sw = merged.get("sweep") or {}
    if sw:
        var = sw.get("variable")
        params_ok = set(SystemParams.field_names()) | set(PARAM_ALIASES)
        if var not in params_ok and var not in SCENARIO_VARS:
            raise ConfigError(f"sweep.variable{lines('sweep', 'variable')}: {var!r} is not a parameter or "
                              f"scenario field")
        values = sw.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.values{lines('sweep', 'values')}: expected a nonempty list")
        var = PARAM_ALIASES.get(var, var)
        checked = []
        for v in values:
            if var in params_ok:
                v = _quantity(var, v, f"sweep.values{lines('sweep', 'values')}")
                if var == "d_bits":
                    v = int(v)
                try:
                    spec.system_params(**{var: v})
                except AoiSchedError as exc:
                    raise ConfigError(f"sweep.values{lines('sweep', 'values')}: {exc}") from exc
            elif var == "count":
                if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                    raise ConfigError(f"sweep.values{lines('sweep', 'values')}: counts must be positive integers")
            elif isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"sweep.values{lines('sweep', 'values')}: distances must be positive")
            checked.append(v)
        spec.sweep_variable = var
        spec.sweep_values = tuple(checked)

    methods = merged.get("methods", ["convex"])
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    if not isinstance(methods, list) or not methods:
        raise ConfigError(f"methods{lines('methods')}: select at least one method")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"methods{lines('methods')}: unknown method {m!r}")
    spec.methods = tuple(dict.fromkeys(methods))

    ex = merged.get("exhaustive") or {}
    if "cells" in ex:
        if isinstance(ex["cells"], bool) or not isinstance(ex["cells"], int) or ex["cells"] < 1:
            raise ConfigError(f"exhaustive.cells{lines('exhaustive', 'cells')}: expected a positive integer")
        spec.exhaustive_cells = ex["cells"]
    if "step" in ex:
        st = ex["step"]
        if isinstance(st, bool) or not isinstance(st, (int, float)) or not 0 < st < 1:
            raise ConfigError(f"exhaustive.step{lines('exhaustive', 'step')}: expected a fraction in (0, 1)")
        spec.exhaustive_step = float(st)
    sim = merged.get("simulate") or {}
    if "rounds" in sim:
        r = sim["rounds"]
        if isinstance(r, bool) or not isinstance(r, int) or r < 100:
            raise ConfigError(f"simulate.rounds{lines('simulate', 'rounds')}: expected an integer >= 100")
        spec.sim_rounds = r
    sf = merged.get("surface") or {}
    for key in ("m_c", "m_r"):
        if key in sf:
            lo, hi, n = _num_list(sf[key], f"surface.{key}{lines('surface', key)}", 3)
            if not (0 < lo < hi and int(n) == n and n >= 2):
                raise ConfigError(f"surface.{key}{lines('surface', key)}: need 0 < lo < hi and count >= 2")
            setattr(spec, f"surface_{key}", (float(lo), float(hi), int(n)))
    out = merged.get("output") or {}
    if "path" in out:
        if not isinstance(out["path"], str) or not out["path"]:
            raise ConfigError(f"output.path{lines('output', 'path')}: expected a file name")
        spec.output_path = out["path"]
    if "format" in out:
        if out["format"] not in ("csv", "json", "both"):
            raise ConfigError(f"output.format{lines('output', 'format')}: expected csv, json or both")
        spec.output_format = out["format"]
    return spec


def parse_spec(path) -> ExperimentSpec:
    """Read and validate a YAML experiment spec; an empty file gives the defaults."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigError(f"{p}{where}: invalid YAML") from exc
    return spec_from_dict(raw, text)


# --------------------------------------------------------------------------
# running


def build_devices(spec: ExperimentSpec, params: SystemParams, override: Optional[dict] = None):
    ds = copy.copy(spec.devices)
    for k, v in (override or {}).items():
        setattr(ds, k, v)
    if ds.distances is not None and not (override and ("count" in override or "distance" in override)):
        dist = list(ds.distances)
    elif ds.distance is not None:
        dist = [ds.distance] * ds.count
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([spec.seed, 1])))
        dist = rng.uniform(ds.distance_range[0], ds.distance_range[1], ds.count).tolist()
    if ds.added_distance is not None:
        dist.append(ds.added_distance)
    fading = None
    if ds.fading == "rayleigh":
        fading = rayleigh_fading(np.random.Generator(np.random.Philox(np.random.SeedSequence([spec.seed, 2]))),
                                 len(dist)).tolist()
    return make_devices(params, dist, fading)


def _join(values) -> str:
    return ";".join(repr(float(v)) for v in values)


def _report_row(rep) -> dict:
    pol = rep.policy
    return {
        "status": "ok" if rep.status in ("optimal", "baseline") else rep.status,
        "delta_max": float(rep.delta_max),
        "M": float(pol.M),
        "m_c": float(pol.m_c),
        "capacity": rep.capacity if rep.capacity is not None else "",
        "saturated": bool(rep.saturated),
        "eps_min": float(np.min(rep.eps)),
        "eps_max": float(np.max(rep.eps)),
        "gamma_min": float(np.min(rep.gamma)),
        "gamma_max": float(np.max(rep.gamma)),
        "m_r": _join(pol.m_r),
        "eps": _join(rep.eps),
        "gamma": _join(rep.gamma),
    }


def _run_method(method, spec, params, devices, cache):
    if method in ("convex", "simulate", "exhaustive"):
        if "convex" not in cache:
            cache["convex"] = solve_minmax(params, devices)
    if method == "convex":
        return _report_row(cache["convex"])
    if method == "algorithm1":
        return _report_row(algorithm1(params, devices))
    if method == "ibl":
        return _report_row(ibl_baseline(params, devices))
    if method == "exhaustive":
        pol = cache["convex"].policy
        step = spec.exhaustive_step * pol.M
        rep = exhaustive_search(params, devices, GridSpec.around(pol, spec.exhaustive_cells, step, step))
        return _report_row(rep)
    if method == "simulate":
        rep = cache["convex"]
        sched = reconstruct_schedule(rep.policy, params, devices)
        res = simulate(sched, devices, params, SimConfig(rounds=spec.sim_rounds, seed=spec.seed))
        row = _report_row(rep)
        row.update(delta_max=float(res.per_device_time_avg_aoi.max()), M=float(sched.M),
                   m_c=float(sched.M - sum(sched.m_r_int)), m_r=_join(sched.m_r_int),
                   sim_se=float(res.confidence.max()))
        mc = sched.M - np.asarray(sched.m_r_int, dtype=float)
        gamma = np.array([dv.z for dv in devices]) * mc / np.asarray(sched.m_r_int, dtype=float)
        eps = fblmath.error_probability(gamma, np.asarray(sched.m_r_int, dtype=float), params.d_bits)
        row.update(eps=_join(np.atleast_1d(eps)), gamma=_join(np.atleast_1d(gamma)),
                   eps_min=float(np.min(eps)), eps_max=float(np.max(eps)),
                   gamma_min=float(np.min(gamma)), gamma_max=float(np.max(gamma)))
        return row
    raise ConfigError(f"unknown method {method!r}")


def audit_row(row: dict, params: SystemParams, devices, rtol: float = 1e-9) -> bool:
    """Recompute eps and SNR from the emitted policy columns and compare."""
    if row.get("status") != "ok" or not row.get("m_r"):
        return True
    m_r = np.array([float(v) for v in row["m_r"].split(";")])
    M = float(row["M"])
    z = np.array([dv.z for dv in devices])
    gamma = z * (M - m_r) / m_r
    eps = fblmath.error_probability(gamma, m_r, params.d_bits)
    g_rep = np.array([float(v) for v in row["gamma"].split(";")])
    e_rep = np.array([float(v) for v in row["eps"].split(";")])
    return bool(np.allclose(gamma, g_rep, rtol=rtol, atol=0) and np.allclose(eps, e_rep, rtol=rtol, atol=1e-15))


def _surface_rows(spec: ExperimentSpec, params: SystemParams, devices):
    dev = devices[0]
    opt = solve_single(params, dev)
    lo, hi, n = spec.surface_m_c
    mcs = opt.m_c * np.linspace(lo, hi, n)
    lo, hi, n = spec.surface_m_r
    mrs = opt.m_r * np.linspace(lo, hi, n)
    rows = []
    k = 0
    for mc in mcs:
        for mr in mrs:
            gamma = dev.z * mc / mr
            eps = fblmath.error_probability(gamma, mr, params.d_bits)
            aoi = (mc + mr) * (0.5 + 1.0 / (1.0 - eps)) if eps < 1.0 - fblmath.EPS_FLOOR else math.inf
            rows.append({
                "point": k, "sweep_variable": "surface", "sweep_value": "", "method": "surface", "status": "ok",
                "delta_max": float(aoi), "M": float(mc + mr), "m_c": float(mc), "n_devices": 1,
                "eps_min": float(eps), "eps_max": float(eps), "gamma_min": float(gamma), "gamma_max": float(gamma),
                "m_r": _join([mr]), "eps": _join([eps]), "gamma": _join([gamma]),
            })
            k += 1
    return rows


def _run_point(job):
    spec, k, value, audit, timing = job
    var = spec.sweep_variable
    extra, override = {}, {}
    if var is not None:
        if var in SCENARIO_VARS:
            override[var] = value
        else:
            extra[var] = value
    params = spec.system_params(**extra)
    devices = build_devices(spec, params, override)
    if spec.scenario == "single_device_surface":
        return _surface_rows(spec, params, devices)
    rows = []
    cache = {}
    for method in spec.methods:
        row = {"point": k, "sweep_variable": var or "", "sweep_value": value if var else "", "method": method,
               "n_devices": len(devices)}
        t0 = time.perf_counter()
        try:
            row.update(_run_method(method, spec, params, devices, cache))
            if audit and not audit_row(row, params, devices):
                row["status"] = "audit_failed"
        except (AoiSchedError, ValueError, ArithmeticError) as exc:
            row.update(status=type(exc).__name__, message=str(exc))
        if timing:
            row["wall_time"] = time.perf_counter() - t0
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def write_outputs(rows, spec: ExperimentSpec, columns) -> list:
    path = Path(spec.output_path)
    written = []
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if spec.output_format in ("csv", "both"):
        csv_path = path if path.suffix.lower() != ".json" else path.with_suffix(".csv")
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(r.get(c, "")) for c in columns])
        written.append(csv_path)
    if spec.output_format in ("json", "both"):
        json_path = path.with_suffix(".json")
        doc = {"scenario": spec.scenario, "seed": spec.seed, "columns": list(columns),
               "rows": [{c: _jsonable(r.get(c, "")) for c in columns} for r in rows]}
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=False)
            fh.write("\n")
        written.append(json_path)
    return written


def _workers(n_jobs: int) -> int:
    env = os.environ.get("AOI_SCHED_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"AOI_SCHED_THREADS={env!r} is not an integer") from None
        if cap < 1:
            raise ConfigError("AOI_SCHED_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def run(spec: ExperimentSpec, audit: bool = False, timing: bool = False) -> int:
    """Run every sweep point and write the outputs; returns the exit status."""
    values = spec.sweep_values if spec.sweep_variable else (None,)
    jobs = [(spec, k, v, audit, timing) for k, v in enumerate(values)]
    nw = _workers(len(jobs))
    log.info("scenario %s: %d point(s), methods %s, %d worker(s)", spec.scenario, len(jobs),
             ",".join(spec.methods), nw)
    if nw == 1:
        results = [_run_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(_run_point, jobs))
    rows = [r for chunk in results for r in chunk]
    columns = COLUMNS + (("wall_time",) if timing else ())
    for p in write_outputs(rows, spec, columns):
        log.info("wrote %s", p)
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        log.warning("%d of %d row(s) failed", failed, len(rows))
        return 2
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="aoisched", description="Run age-of-information scheduling experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    rp = sub.add_parser("run", help="run an experiment spec")
    rp.add_argument("spec", help="YAML experiment spec")
    rp.add_argument("--seed", type=int, help="override the spec seed")
    rp.add_argument("--out", help="output CSV path (JSON goes next to it)")
    rp.add_argument("--methods", help="comma-separated methods, overriding the spec")
    rp.add_argument("--audit", action="store_true", help="recompute eps/SNR from each row's policy and check")
    rp.add_argument("--timing", action="store_true", help="add a wall_time column (breaks byte-identical reruns)")
    rp.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        spec = parse_spec(args.spec)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be in [0, 2**64)")
            spec.seed = args.seed
        if args.out:
            spec.output_path = args.out
        if args.methods:
            ms = [m.strip() for m in args.methods.split(",") if m.strip()]
            bad = [m for m in ms if m not in METHODS]
            if bad or not ms:
                raise ConfigError(f"--methods: unknown method(s) {bad}" if bad else "--methods: none given")
            spec.methods = tuple(dict.fromkeys(ms))
        return run(spec, audit=args.audit, timing=args.timing)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
