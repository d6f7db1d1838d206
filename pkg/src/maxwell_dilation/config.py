"""
YAML run configuration.

A commented example::

    grid: {cells: 16, spacing: 1.0}
    units: normalized            # or "si" (vacuum constants from scipy)
    media:                       # regions must tile [0, cells); omit for vacuum
      - cells: [0, 16]
        electric: [{big_omega: 1.0, resonance: 1.0, damping: 0.5}]
        magnetic: []
    initial:
      E: {gaussian: {center: 8, width: 2.0, amplitude: 1.0}}
      H: zeros                   # or an inline list of length cells
    plan:
      dt: 0.01                   # or "auto"
      dt_fraction: 0.1           # used by "auto" when all rates are equal
      steps: 100
      method: kraus              # kraus | lcu | exact | lossless-exact
      gate_level: false
      measurement: postselect    # or "sample" (then seed is required)
      seed: null
    outputs:                     # relative paths resolve against this file
      report: out/report.json
      table: out/steps.csv
      circuit: out/circuit.txt
    sweep: {workers: 1}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .evolution import METHODS, EvolutionPlan, NonPositiveRate, optimal_dt
from .medium import InvalidMedium, LorentzPole, MediumSpec, validate_medium
from .operators import GridSpec


class ConfigError(Exception):
    """Base of configuration failures; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


class SchemaError(ConfigError):
    """All structural problems found in one pass."""

    def __init__(self, errors: list):
        self.errors = list(errors)
        path, message = self.errors[0]
        super().__init__(path, message)
        self.args = ("; ".join(f"{p}: {m}" for p, m in self.errors),)


@dataclass(frozen=True)
class Region:
    start: int
    stop: int
    medium: MediumSpec


@dataclass(frozen=True)
class Outputs:
    report: Optional[Path] = None
    table: Optional[Path] = None
    circuit: Optional[Path] = None


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    units: str
    regions: tuple
    e_field: np.ndarray = field(compare=False)
    h_field: np.ndarray = field(compare=False)
    plan: EvolutionPlan = None
    dt_auto: bool = False
    dt_fraction: float = 0.1
    outputs: Outputs = Outputs()
    workers: int = 1

    def media(self) -> list:
        """Per-cell medium list."""
        out = [None] * self.grid.cells
        for reg in self.regions:
            out[reg.start : reg.stop] = [reg.medium] * (reg.stop - reg.start)
        return out


_TOP = {"grid", "units", "media", "initial", "plan", "outputs", "sweep"}
_PLAN = {"dt", "dt_fraction", "steps", "method", "gate_level", "measurement", "seed"}
_POLE = {"big_omega", "resonance", "damping"}


class _Checker:
    def __init__(self):
        self.errors: list = []

    def fail(self, path, msg):
        self.errors.append((path, msg))

    def mapping(self, value, path, allowed=None, required=()):
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {type(value).__name__}")
            return {}
        for key in required:
            if key not in value:
                self.fail(f"{path}.{key}" if path else key, "required field missing")
        if allowed is not None:
            for key in value:
                if key not in allowed:
                    self.fail(f"{path}.{key}" if path else str(key), "unknown field")
        return value

    def number(self, value, path, integer=False):
        ok = isinstance(value, int) if integer else isinstance(value, (int, float))
        if isinstance(value, bool) or not ok:
            self.fail(path, f"expected {'an integer' if integer else 'a number'}, got {value!r}")
            return None
        return value

    def choice(self, value, path, options):
        if value not in options:
            self.fail(path, f"must be one of {list(options)}, got {value!r}")
            return None
        return value


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError("", f"cannot read {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError("", f"invalid YAML in {path}: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw, base_dir=None) -> RunConfig:
    """Validate an already-loaded mapping."""
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    chk = _Checker()
    raw = chk.mapping(raw, "", _TOP, required=("grid", "initial", "plan"))
    if chk.errors and not raw:
        raise SchemaError(chk.errors)

    grid_raw = chk.mapping(raw.get("grid", {}), "grid", {"cells", "spacing"}, ("cells",))
    cells = chk.number(grid_raw.get("cells"), "grid.cells", integer=True) if "cells" in grid_raw else None
    spacing = chk.number(grid_raw.get("spacing", 1.0), "grid.spacing")
    units = chk.choice(raw.get("units", "normalized"), "units", ("normalized", "si"))

    region_raw = raw.get("media", [])
    if not isinstance(region_raw, list):
        chk.fail("media", "expected a list of regions")
        region_raw = []
    parsed_regions = []
    for i, reg in enumerate(region_raw):
        rpath = f"media[{i}]"
        reg = chk.mapping(reg, rpath, {"cells", "electric", "magnetic"}, ("cells",))
        span = reg.get("cells")
        if span is not None and not (
            isinstance(span, list) and len(span) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in span)
        ):
            chk.fail(f"{rpath}.cells", "expected [start, stop) as two integers")
            span = None
        poles = {}
        for branch in ("electric", "magnetic"):
            plist = reg.get(branch, [])
            if not isinstance(plist, list):
                chk.fail(f"{rpath}.{branch}", "expected a list of poles")
                plist = []
            out = []
            for j, p in enumerate(plist):
                ppath = f"{rpath}.{branch}[{j}]"
                p = chk.mapping(p, ppath, _POLE, ("big_omega", "resonance"))
                vals = [chk.number(p.get(k, 0.0), f"{ppath}.{k}") for k in ("big_omega", "resonance", "damping")]
                if all(v is not None for v in vals):
                    out.append((ppath, vals))
            poles[branch] = out
        parsed_regions.append((rpath, span, poles))

    init_raw = chk.mapping(raw.get("initial", {}), "initial", {"E", "H"})
    plan_raw = chk.mapping(raw.get("plan", {}), "plan", _PLAN, ("dt", "steps"))
    out_raw = chk.mapping(raw.get("outputs", {}) or {}, "outputs", {"report", "table", "circuit"})
    sweep_raw = chk.mapping(raw.get("sweep", {}) or {}, "sweep", {"workers"})
    workers = chk.number(sweep_raw.get("workers", 1), "sweep.workers", integer=True)

    dt_val = plan_raw.get("dt")
    if dt_val != "auto" and "dt" in plan_raw:
        chk.number(dt_val, "plan.dt")
    steps = chk.number(plan_raw.get("steps"), "plan.steps", integer=True) if "steps" in plan_raw else None
    fraction = chk.number(plan_raw.get("dt_fraction", 0.1), "plan.dt_fraction")
    method = chk.choice(plan_raw.get("method", "kraus"), "plan.method", METHODS)
    gate_level = plan_raw.get("gate_level", False)
    if not isinstance(gate_level, bool):
        chk.fail("plan.gate_level", "expected true or false")
    measurement = chk.choice(plan_raw.get("measurement", "postselect"), "plan.measurement",
                             ("postselect", "sample"))
    seed = plan_raw.get("seed")
    if seed is not None:
        chk.number(seed, "plan.seed", integer=True)
    for key in ("report", "table", "circuit"):
        if key in out_raw and not isinstance(out_raw[key], str):
            chk.fail(f"outputs.{key}", "expected a path string")

    if chk.errors:
        raise SchemaError(chk.errors)

    # semantic validation
    try:
        grid = GridSpec(cells, float(spacing))
    except ValueError as exc:
        raise ValidationError("grid", str(exc)) from exc
    regions = _build_regions(parsed_regions, grid.cells, units)
    if workers < 1:
        raise ValidationError("sweep.workers", "must be >= 1")
    e = _field(init_raw.get("E", "zeros"), "initial.E", grid.cells)
    h = _field(init_raw.get("H", "zeros"), "initial.H", grid.cells)
    if not (np.any(e) or np.any(h)):
        raise ValidationError("initial", "E and H are both identically zero")

    dt_auto = dt_val == "auto"
    if dt_auto:
        if not 0 < fraction < 1:
            raise ValidationError("plan.dt_fraction", "must lie in (0, 1)")
        rates = [2.0 * p.damping for r in regions for br in ("electric", "magnetic") for p in r.medium.poles(br)]
        if not rates:
            raise ValidationError("plan.dt", "auto needs at least one damped pole")
        try:
            dt = optimal_dt(min(rates), max(rates), fraction)
        except NonPositiveRate as exc:
            raise ValidationError("plan.dt", f"auto needs positive damping on every pole ({exc})") from exc
    else:
        dt = float(dt_val)
    try:
        plan = EvolutionPlan(dt=dt, steps=steps, method=method, gate_level=gate_level,
                             measurement=measurement, seed=seed)
    except ValueError as exc:
        raise ValidationError("plan", str(exc)) from exc

    outputs = Outputs(**{k: base_dir / v for k, v in out_raw.items()})
    return RunConfig(grid=grid, units=units, regions=tuple(regions), e_field=e, h_field=h,
                     plan=plan, dt_auto=dt_auto, dt_fraction=float(fraction),
                     outputs=outputs, workers=workers)


def _build_regions(parsed, cells: int, units: str) -> list:
    make = MediumSpec.normalized if units == "normalized" else MediumSpec
    if not parsed:
        return [Region(0, cells, make())]
    regions = []
    for rpath, (start, stop), poles in parsed:
        if not 0 <= start < stop <= cells:
            raise ValidationError(f"{rpath}.cells", f"[{start}, {stop}) is not inside [0, {cells})")
        built = {}
        for branch, plist in poles.items():
            built[branch] = []
            for ppath, (big, res, damp) in plist:
                built[branch].append(LorentzPole(float(big), float(res), float(damp)))
        spec = make(built["electric"], built["magnetic"])
        try:
            validate_medium(spec)
        except InvalidMedium as exc:
            raise ValidationError(rpath, str(exc)) from exc
        regions.append((rpath, Region(start, stop, spec)))
    regions.sort(key=lambda x: x[1].start)
    covered = 0
    for (path_a, a), (path_b, b) in zip(regions, regions[1:]):
        if b.start < a.stop:
            raise ValidationError(f"{path_b}.cells", f"overlaps {path_a} on [{b.start}, {min(a.stop, b.stop)})")
    for rpath, reg in regions:
        if reg.start != covered:
            raise ValidationError("media", f"cells [{covered}, {reg.start}) are not covered by any region")
        covered = reg.stop
    if covered != cells:
        raise ValidationError("media", f"cells [{covered}, {cells}) are not covered by any region")
    return [r for _, r in regions]


def _field(spec, path: str, cells: int) -> np.ndarray:
    if spec == "zeros":
        return np.zeros(cells)
    if isinstance(spec, list):
        try:
            arr = np.asarray(spec, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError(path, "inline field must be a list of numbers") from exc
        if arr.shape != (cells,):
            raise ValidationError(path, f"inline field has length {arr.size}, grid has {cells} cells")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(path, "inline field has non-finite entries")
        return arr
    if isinstance(spec, dict) and set(spec) == {"gaussian"} and isinstance(spec["gaussian"], dict):
        g = spec["gaussian"]
        extra = set(g) - {"center", "width", "amplitude"}
        if extra or not {"center", "width"} <= set(g):
            raise ValidationError(f"{path}.gaussian", "needs center, width and optional amplitude")
        center, width = float(g["center"]), float(g["width"])
        amp = float(g.get("amplitude", 1.0))
        if not width > 0:
            raise ValidationError(f"{path}.gaussian.width", "must be positive")
        x = np.arange(cells, dtype=float)
        return amp * np.exp(-(((x - center) / width) ** 2))
    raise ValidationError(path, "expected 'zeros', an inline list or {gaussian: {...}}")
