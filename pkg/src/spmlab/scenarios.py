"""Declarative scenario definitions binding grid, nonlinearity, modes,
initial condition, solver settings and diagnostic suites into reproducible
experiment units.

Scenario files are strict JSON with an explicit schema version: unknown keys
are rejected with their path, defaults are filled in, and the fingerprint is
the hash of the canonicalized content, so formatting and key order never
change identity.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .grid import Grid, GridField, make_grid
from .noise import ModeSet, NoiseRealization, mode_field, sample_noise
from .nonlinearity import NonlinearitySpec, catalog_nonlinearity
from .reference import InitialCondition

SCHEMA_VERSION = 1

#: pre-registered thresholds; scenario files may override any of them
TOLERANCE_DEFAULTS = {
    "heat_variance_rel": 0.01,
    "heat_particle_l1": 0.05,
    "barenblatt_grid_l1": 0.005,
    "barenblatt_particle_l1": 0.08,
    "factorization_grid_l1": 0.02,
    "factorization_particle_l1": 0.08,
    "mass_sigma": 3.0,
    "moment_sigma": 4.0,
    "multiplier_fields": 100.0,
    "weak_residual_max": 1e-3,
    "crossval_h1": 0.05,
    "crossval_margin_rel": 0.25,
    "fp_order_min": 1.0,
    "kappa_slope_low": 0.6,
    "kappa_slope_high": 1.2,
    "ks_final": 0.02,
}


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


def _expect(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ScenarioError(f"{path}: {message}")


def _require_keys(data: dict, allowed: set[str], path: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ScenarioError(f"{path}.{sorted(unknown)[0]}: unknown field")


def _validate_mode(entry, path: str) -> dict:
    _expect(isinstance(entry, dict), path, "mode entry must be an object")
    _require_keys(entry, {"name", "amplitude", "params"}, path)
    name = entry.get("name")
    _expect(isinstance(name, str), f"{path}.name", "mode name must be a string")
    amplitude = entry.get("amplitude", 1.0)
    _expect(isinstance(amplitude, (int, float)), f"{path}.amplitude", "must be a number")
    params = entry.get("params", {})
    _expect(isinstance(params, dict), f"{path}.params", "must be an object")
    try:
        mode_field(make_grid(1.0, 8), name, amplitude=float(amplitude), **params)
    except Exception as exc:
        raise ScenarioError(f"{path}.name: {exc}") from None
    return {"name": name, "amplitude": float(amplitude), "params": dict(params)}


def _validate_coefficient(entry, path: str) -> dict:
    _expect(isinstance(entry, dict), path, "coefficient must be an object")
    _require_keys(entry, {"offset", "shape", "amplitude", "params"}, path)
    offset = entry.get("offset", 0.0)
    shape = entry.get("shape", "constant")
    amplitude = entry.get("amplitude", 0.0)
    params = entry.get("params", {})
    _expect(isinstance(offset, (int, float)), f"{path}.offset", "must be a number")
    _expect(isinstance(amplitude, (int, float)), f"{path}.amplitude", "must be a number")
    _expect(isinstance(shape, str), f"{path}.shape", "must be a string")
    _expect(isinstance(params, dict), f"{path}.params", "must be an object")
    return {
        "offset": float(offset),
        "shape": shape,
        "amplitude": float(amplitude),
        "params": dict(params),
    }


def validate_scenario(data: dict, origin: str = "scenario") -> dict:
    """Validate a raw scenario mapping, fill defaults and canonicalize."""
    _expect(isinstance(data, dict), origin, "scenario must be a JSON object")
    allowed = {
        "schema_version", "name", "description", "exercises", "grid", "nonlinearity",
        "modes", "drift_mode", "x0", "time", "particles", "noise_seed", "realizations",
        "solver", "diagnostics", "tolerances", "kappa", "fp", "mollified",
    }
    _require_keys(data, allowed, origin)

    version = data.get("schema_version")
    _expect(version == SCHEMA_VERSION, f"{origin}.schema_version",
            f"unsupported schema version {version!r} (supported: {SCHEMA_VERSION})")
    name = data.get("name")
    _expect(isinstance(name, str) and name, f"{origin}.name", "name must be a nonempty string")

    grid = data.get("grid", {})
    _require_keys(grid, {"half_width", "points", "boundary"}, f"{origin}.grid")
    half_width = grid.get("half_width", 10.0)
    points = grid.get("points", 512)
    boundary = grid.get("boundary", "periodic")
    _expect(isinstance(half_width, (int, float)) and half_width > 0,
            f"{origin}.grid.half_width", "must be a positive number")
    _expect(isinstance(points, int) and points >= 8, f"{origin}.grid.points",
            "must be an integer >= 8")
    _expect(boundary in ("periodic", "neumann"), f"{origin}.grid.boundary",
            f"unknown boundary {boundary!r}")

    nonlin = data.get("nonlinearity", {"name": "linear", "params": {}})
    _require_keys(nonlin, {"name", "params"}, f"{origin}.nonlinearity")
    nl_name = nonlin.get("name")
    nl_params = nonlin.get("params", {})
    _expect(isinstance(nl_params, dict), f"{origin}.nonlinearity.params", "must be an object")
    try:
        catalog_nonlinearity(nl_name, **nl_params)
    except Exception as exc:
        raise ScenarioError(f"{origin}.nonlinearity.name: {exc}") from None

    modes = [
        _validate_mode(entry, f"{origin}.modes[{i}]")
        for i, entry in enumerate(data.get("modes", []))
    ]
    drift = data.get("drift_mode")
    if drift is not None:
        drift = _validate_mode(drift, f"{origin}.drift_mode")

    x0 = data.get("x0", {"kind": "gaussian", "params": {"variance": 0.25}})
    _require_keys(x0, {"kind", "params"}, f"{origin}.x0")
    kind = x0.get("kind")
    _expect(kind in ("gaussian", "uniform", "point", "barenblatt"), f"{origin}.x0.kind",
            f"unsupported initial condition {kind!r}")
    x0_params = x0.get("params", {})
    _expect(isinstance(x0_params, dict), f"{origin}.x0.params", "must be an object")

    tcfg = data.get("time", {})
    _require_keys(tcfg, {"dt", "horizon", "record_stride"}, f"{origin}.time")
    dt = tcfg.get("dt", 1e-3)
    horizon = tcfg.get("horizon", 0.5)
    stride = tcfg.get("record_stride", 1)
    _expect(isinstance(dt, (int, float)) and dt > 0, f"{origin}.time.dt",
            "must be a positive number")
    _expect(isinstance(horizon, (int, float)) and horizon > 0, f"{origin}.time.horizon",
            "must be a positive number")
    _expect(isinstance(stride, int) and stride >= 1, f"{origin}.time.record_stride",
            "must be an integer >= 1")
    steps = round(horizon / dt)
    _expect(abs(steps * dt - horizon) < 1e-9 * horizon, f"{origin}.time.horizon",
            f"horizon {horizon} is not an integer multiple of dt {dt}")

    pcfg = data.get("particles", {})
    _require_keys(pcfg, {"count", "seed", "bandwidth", "bandwidth_factor", "picard"},
                  f"{origin}.particles")
    count = pcfg.get("count", 10000)
    pseed = pcfg.get("seed", 1009)
    bandwidth = pcfg.get("bandwidth")
    factor = pcfg.get("bandwidth_factor", 1.06)
    picard = pcfg.get("picard", False)
    _expect(isinstance(count, int) and count >= 100, f"{origin}.particles.count",
            "must be an integer >= 100")
    _expect(isinstance(pseed, int), f"{origin}.particles.seed", "must be an integer")
    _expect(bandwidth is None or (isinstance(bandwidth, (int, float)) and bandwidth > 0),
            f"{origin}.particles.bandwidth", "must be null or a positive number")
    _expect(isinstance(factor, (int, float)) and factor > 0,
            f"{origin}.particles.bandwidth_factor", "must be a positive number")
    _expect(isinstance(picard, bool), f"{origin}.particles.picard", "must be a boolean")

    noise_seed = data.get("noise_seed", 1)
    _expect(isinstance(noise_seed, int), f"{origin}.noise_seed", "must be an integer")
    realizations = data.get("realizations", 1)
    _expect(isinstance(realizations, int) and realizations >= 1, f"{origin}.realizations",
            "must be an integer >= 1")

    solver = data.get("solver", {})
    _require_keys(solver, {"picard_iterations"}, f"{origin}.solver")
    picard_iters = solver.get("picard_iterations", 0)
    _expect(isinstance(picard_iters, int) and 0 <= picard_iters <= 3,
            f"{origin}.solver.picard_iterations", "must be an integer in [0, 3]")

    from .routines import DIAGNOSTIC_ROUTINES  # deferred to avoid a cycle

    diagnostics = data.get("diagnostics", [])
    _expect(isinstance(diagnostics, list), f"{origin}.diagnostics", "must be a list")
    for i, diag in enumerate(diagnostics):
        _expect(diag in DIAGNOSTIC_ROUTINES, f"{origin}.diagnostics[{i}]",
                f"unknown diagnostic {diag!r}")

    tolerances = data.get("tolerances", {})
    _expect(isinstance(tolerances, dict), f"{origin}.tolerances", "must be an object")
    for key, value in tolerances.items():
        _expect(key in TOLERANCE_DEFAULTS, f"{origin}.tolerances.{key}", "unknown tolerance")
        _expect(isinstance(value, (int, float)), f"{origin}.tolerances.{key}", "must be a number")

    kappa = data.get("kappa")
    if kappa is not None:
        _require_keys(kappa, {"values", "reference"}, f"{origin}.kappa")
        values = kappa.get("values", [])
        _expect(isinstance(values, list) and len(values) >= 4, f"{origin}.kappa.values",
                "must list at least 4 values")
        _expect(all(isinstance(v, (int, float)) and v > 0 for v in values),
                f"{origin}.kappa.values", "values must be positive numbers")
        _expect(all(b < a for a, b in zip(values, values[1:])), f"{origin}.kappa.values",
                "values must be strictly decreasing")
        reference = kappa.get("reference")
        _expect(reference is None or (isinstance(reference, (int, float)) and reference >= 0),
                f"{origin}.kappa.reference", "must be null or a nonnegative number")
        kappa = {"values": [float(v) for v in values],
                 "reference": None if reference is None else float(reference)}

    fp = data.get("fp")
    if fp is not None:
        _require_keys(fp, {"coefficient", "resolutions"}, f"{origin}.fp")
        coefficient = _validate_coefficient(fp.get("coefficient", {}), f"{origin}.fp.coefficient")
        resolutions = fp.get("resolutions", [128, 256, 512])
        _expect(isinstance(resolutions, list) and len(resolutions) >= 2
                and all(isinstance(n, int) and n >= 8 for n in resolutions),
                f"{origin}.fp.resolutions", "must list at least two integers >= 8")
        _expect(all(b > a for a, b in zip(resolutions, resolutions[1:])),
                f"{origin}.fp.resolutions", "must be strictly increasing")
        fp = {"coefficient": coefficient, "resolutions": list(resolutions)}

    mollified = data.get("mollified")
    if mollified is not None:
        _require_keys(mollified, {"coefficient", "scales", "samples", "horizon", "dt",
                                  "fine_points", "half_width"}, f"{origin}.mollified")
        coefficient = _validate_coefficient(mollified.get("coefficient", {}),
                                            f"{origin}.mollified.coefficient")
        scales = mollified.get("scales", [4, 8, 16, 32])
        samples = mollified.get("samples", 100000)
        m_horizon = mollified.get("horizon", 0.5)
        m_dt = mollified.get("dt", 0.002)
        fine_points = mollified.get("fine_points", 4096)
        m_half = mollified.get("half_width", 8.0)
        _expect(isinstance(scales, list) and len(scales) >= 2
                and all(isinstance(s, int) and s >= 1 for s in scales),
                f"{origin}.mollified.scales", "must list at least two positive integers")
        _expect(isinstance(samples, int) and samples >= 1000, f"{origin}.mollified.samples",
                "must be an integer >= 1000")
        mollified = {
            "coefficient": coefficient,
            "scales": list(scales),
            "samples": samples,
            "horizon": float(m_horizon),
            "dt": float(m_dt),
            "fine_points": int(fine_points),
            "half_width": float(m_half),
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "description": data.get("description", ""),
        "exercises": data.get("exercises", ""),
        "grid": {"half_width": float(half_width), "points": int(points), "boundary": boundary},
        "nonlinearity": {"name": nl_name, "params": dict(nl_params)},
        "modes": modes,
        "drift_mode": drift,
        "x0": {"kind": kind, "params": dict(x0_params)},
        "time": {"dt": float(dt), "horizon": float(horizon), "record_stride": int(stride)},
        "particles": {
            "count": int(count),
            "seed": int(pseed),
            "bandwidth": None if bandwidth is None else float(bandwidth),
            "bandwidth_factor": float(factor),
            "picard": bool(picard),
        },
        "noise_seed": int(noise_seed),
        "realizations": int(realizations),
        "solver": {"picard_iterations": int(picard_iters)},
        "diagnostics": list(diagnostics),
        "tolerances": {k: float(v) for k, v in tolerances.items()},
        "kappa": kappa,
        "fp": fp,
        "mollified": mollified,
    }


@dataclass(frozen=True)
class Scenario:
    """A validated scenario with stable content fingerprint."""

    data: dict

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def description(self) -> str:
        return self.data["description"]

    @property
    def exercises(self) -> str:
        return self.data["exercises"]

    @property
    def fingerprint(self) -> str:
        canonical = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    @property
    def dt(self) -> float:
        return self.data["time"]["dt"]

    @property
    def horizon(self) -> float:
        return self.data["time"]["horizon"]

    @property
    def steps(self) -> int:
        return round(self.horizon / self.dt)

    @property
    def record_stride(self) -> int:
        return self.data["time"]["record_stride"]

    @property
    def noise_seed(self) -> int:
        return self.data["noise_seed"]

    @property
    def realizations(self) -> int:
        return self.data["realizations"]

    @property
    def diagnostics(self) -> list[str]:
        return list(self.data["diagnostics"])

    @property
    def particle_count(self) -> int:
        return self.data["particles"]["count"]

    @property
    def particle_seed(self) -> int:
        return self.data["particles"]["seed"]

    def tolerance(self, key: str) -> float:
        if key not in TOLERANCE_DEFAULTS:
            raise ScenarioError(f"unknown tolerance {key!r}")
        return self.data["tolerances"].get(key, TOLERANCE_DEFAULTS[key])

    def with_overrides(self, noise_seed: int | None = None) -> "Scenario":
        if noise_seed is None:
            return self
        data = json.loads(json.dumps(self.data))
        data["noise_seed"] = int(noise_seed)
        data["particles"]["seed"] = int(noise_seed) + 1_000_003
        return Scenario(validate_scenario(data, self.name))

    def build_grid(self, points: int | None = None) -> Grid:
        g = self.data["grid"]
        return make_grid(g["half_width"], points or g["points"], g["boundary"])

    def build_nonlinearity(self) -> NonlinearitySpec:
        nl = self.data["nonlinearity"]
        return catalog_nonlinearity(nl["name"], **nl["params"])

    def build_modes(self, grid: Grid) -> ModeSet:
        fields = tuple(
            mode_field(grid, m["name"], amplitude=m["amplitude"], **m["params"])
            for m in self.data["modes"]
        )
        drift = self.data["drift_mode"]
        drift_field = None
        if drift is not None:
            drift_field = mode_field(grid, drift["name"], amplitude=drift["amplitude"],
                                     **drift["params"])
        return ModeSet(grid, fields, drift_field)

    def initial_condition(self) -> InitialCondition:
        x0 = self.data["x0"]
        return InitialCondition(x0["kind"], dict(x0["params"]))

    def noise(self, realization: int = 0, dt: float | None = None,
              steps: int | None = None) -> NoiseRealization:
        return sample_noise(
            self.noise_seed + realization,
            len(self.data["modes"]),
            dt if dt is not None else self.dt,
            steps if steps is not None else self.steps,
        )


def coefficient_field(grid: Grid, cfg: dict) -> GridField:
    """offset + amplitude * shape; shapes reuse the mode catalog plus 'sign'."""
    if cfg["shape"] == "sign":
        base = np.sign(grid.nodes)
        if cfg["params"]:
            raise ScenarioError(f"sign coefficient takes no parameters, got {cfg['params']}")
        values = cfg["offset"] + cfg["amplitude"] * base
    else:
        shaped = mode_field(grid, cfg["shape"], amplitude=cfg["amplitude"], **cfg["params"])
        values = cfg["offset"] + shaped.values
    return GridField(grid, values)


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file (strict JSON, schema-versioned)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return Scenario(validate_scenario(raw, str(path)))


def _builtin_dir():
    return resources.files("spmlab") / "scenario_files"


def builtin_names() -> list[str]:
    return sorted(p.name[: -len(".json")] for p in _builtin_dir().iterdir()
                  if p.name.endswith(".json"))


def load_builtin(name: str) -> Scenario:
    candidate = _builtin_dir() / f"{name}.json"
    try:
        raw = json.loads(candidate.read_text())
    except FileNotFoundError:
        raise ScenarioError(
            f"unknown scenario {name!r}; shipped: {', '.join(builtin_names())}"
        ) from None
    return Scenario(validate_scenario(raw, name))


def resolve_scenario(ref: str) -> Scenario:
    """Accept either a shipped scenario name or a path to a scenario file."""
    if ref.endswith(".json") or "/" in ref:
        return load_scenario(ref)
    return load_builtin(ref)


def list_suite() -> list[dict]:
    """Shipped scenarios with descriptions, exercised results and fingerprints."""
    entries = []
    for name in builtin_names():
        s = load_builtin(name)
        entries.append(
            {
                "name": s.name,
                "description": s.description,
                "exercises": s.exercises,
                "fingerprint": s.fingerprint,
                "diagnostics": s.diagnostics,
            }
        )
    return entries


def run_many(fn, items, threads: int = 1) -> list:
    """Map fn over items, optionally on a thread pool, with results returned
    in submission order so reductions are deterministic."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_scenario(scenario: Scenario, out_dir=None, threads: int = 1, strict: bool = False,
                 noise_seed: int | None = None):
    """Execute the scenario's configured diagnostics and write its outputs.

    Returns the DiagnosticsReport; when out_dir is given, report.jsonl,
    summary.txt, CSV dumps and figures land under
    out_dir/<name>-<fingerprint>/.  Runs are idempotent for fixed seeds.
    """
    import warnings as _warnings

    from .diagnostics import DiagnosticsReport
    from .report import OutputSink
    from .routines import DIAGNOSTIC_ROUTINES

    scenario = scenario.with_overrides(noise_seed=noise_seed)
    report = DiagnosticsReport(
        scenario=scenario.name,
        fingerprint=scenario.fingerprint,
        seeds={"noise_seed": scenario.noise_seed, "particle_seed": scenario.particle_seed},
    )
    sink = OutputSink(Path(out_dir) / f"{scenario.name}-{scenario.fingerprint}") if out_dir else None
    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        for diag in scenario.diagnostics:
            DIAGNOSTIC_ROUTINES[diag](scenario, report, sink, threads)
    report.warnings = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    if strict:
        report.check(
            "strict_no_warnings",
            float(len(report.warnings)),
            0.0,
            detail="; ".join(report.warnings) if report.warnings else "no warnings",
        )
    if sink is not None:
        sink.finalize(report)
    return report
