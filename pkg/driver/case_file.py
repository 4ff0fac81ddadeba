"""
Case files
Line-oriented `section.key = value` text with `#` comments; the grammar is
documented in docs/case_format.md
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from richards.constitutive import DEFAULT_STORATIVITY, Gardner, SoilModel, VanGenuchten
from richards.errors import CaseParseError, InvalidInputError, InvalidSpecError
from richards.grid import AXIS_NAMES, DEFAULT_PATCH, FACE_NAMES, GridSpec, PatchSpec, build_grid

SOIL_MODELS = ("van_genuchten", "gardner")
PATCH_TYPES = ("dirichlet", "flux", "free_drainage", "flux_series")
INITIAL_TYPES = ("uniform", "hydrostatic", "file")

SECTION_KEYS = {
    "grid": {"cells", "spacing", "origin", "vertical", "slope"},
    "soil": {"model", "Ks", "alpha", "n", "theta_s", "theta_r", "S", "region"},
    "initial": {"type", "head", "water_table", "file"},
    "patch": {"face", "region", "type", "head", "flux", "series", "seed"},
    "numerics": {"tol_picard", "pcg_tol", "pcg_max_iter", "max_picard_iters", "dt_init", "dt_max",
                 "dt_min", "grow_factor", "quick_iters", "streak"},
    "run": {"t_end", "parts", "cuts"},
    "output": {"snapshot_interval", "probe_interval", "directory"},
    "probe": {"cell"},
    "random_field": {"geo_mean", "sigma_log10", "clamp", "seed", "zone"},
}
NAMED_SECTIONS = {"soil", "patch", "probe"}


@dataclass(frozen=True)
class ZoneRegion:
    """`all`, `box i0 i1 j0 j1 k0 k1` or `layer a b` (vertical cell-index interval), half-open"""
    kind: str = "all"
    bounds: Tuple[int, ...] = ()

    def render(self) -> str:
        return " ".join([self.kind] + [str(b) for b in self.bounds])


@dataclass(frozen=True)
class SoilZone:
    name: str
    soil: SoilModel
    region: ZoneRegion = ZoneRegion()


@dataclass(frozen=True)
class InitialCondition:
    kind: str
    head: Optional[float] = None
    water_table: Optional[float] = None
    file: Optional[str] = None


@dataclass(frozen=True)
class PatchCondition:
    kind: str
    head: Optional[float] = None
    flux: Optional[float] = None
    series: Optional[str] = None
    seed: Optional[int] = None


@dataclass(frozen=True)
class Numerics:
    tol_picard: float = 1e-3
    pcg_tol: float = 1e-4
    pcg_max_iter: int = 5000
    max_picard_iters: int = 8
    dt_init: float = 300.0
    dt_max: float = 3600.0
    dt_min: float = 1e-3
    grow_factor: float = 1.3
    quick_iters: int = 3
    streak: int = 10


@dataclass(frozen=True)
class OutputSpec:
    snapshot_interval: Optional[float] = None
    probe_interval: Optional[float] = None
    directory: Optional[str] = None


@dataclass(frozen=True)
class Probe:
    name: str
    cell: Tuple[int, int, int]


@dataclass(frozen=True)
class RandomFieldSpec:
    geo_mean: float = 1e-6
    sigma_log10: float = 1.17
    clamp: Tuple[float, float] = (1e-10, 1e-3)
    seed: int = 0
    zone: Optional[str] = None


@dataclass(frozen=True)
class CaseSpec:
    grid: GridSpec
    zones: Tuple[SoilZone, ...]
    initial: InitialCondition
    conditions: Dict[str, PatchCondition]
    numerics: Numerics
    t_end: float
    parts: Optional[int] = None    # None: RICHARDS_PARTS, else 1
    cuts: Optional[Tuple[int, int, int]] = None
    output: OutputSpec = OutputSpec()
    probes: Tuple[Probe, ...] = ()
    random_field: Optional[RandomFieldSpec] = None
    name: str = field(default="case", compare=False)
    base_dir: Optional[Path] = field(default=None, compare=False)

    def resolve(self, path: str) -> Path:
        """Paths in a case are relative to the case file's directory"""
        p = Path(path)
        if p.is_absolute() or self.base_dir is None:
            return p
        return self.base_dir / p


# --- zones -----------------------------------------------------------------

def zone_map(shape: Tuple[int, int, int], vertical: str, zones) -> Tuple[np.ndarray, List[str]]:
    """
    Zone index per cell (lexicographic) and the coverage problems found

    Returns -1 for uncovered cells.
    """
    nx, ny, nz = shape
    counts = np.zeros((nz, ny, nx), dtype=np.int32)
    index = np.full((nz, ny, nx), -1, dtype=np.int64)
    problems = []
    axis = AXIS_NAMES.index(vertical)
    for zid, zone in enumerate(zones):
        region = zone.region
        sl = [slice(None)] * 3       # x, y, z order
        if region.kind == "box":
            i0, i1, j0, j1, k0, k1 = region.bounds
            sl = [slice(i0, i1), slice(j0, j1), slice(k0, k1)]
            if i1 > nx or j1 > ny or k1 > nz:
                problems.append(f"soil zone '{zone.name}': box {region.bounds} exceeds the grid {shape}")
        elif region.kind == "layer":
            a, b = region.bounds
            sl[axis] = slice(a, b)
            if b > shape[axis]:
                problems.append(f"soil zone '{zone.name}': layer {region.bounds} exceeds "
                                f"{shape[axis]} cells along {vertical}")
        view = (sl[2], sl[1], sl[0])
        counts[view] += 1
        index[view] = zid
    if np.any(counts == 0):
        problems.append(f"soil zones leave {int(np.sum(counts == 0))} cell(s) uncovered")
    if np.any(counts > 1):
        problems.append(f"soil zones overlap on {int(np.sum(counts > 1))} cell(s)")
    return index.ravel(), problems


# --- parsing ----------------------------------------------------------------

class _Entries:
    """Key/value pairs of one section instance with their line numbers"""

    def __init__(self, label: str):
        self.label = label
        self.values: Dict[str, Tuple[str, int]] = {}

    @property
    def first_line(self) -> int:
        return min((line for _, line in self.values.values()), default=0)

    def has(self, key: str) -> bool:
        return key in self.values


class _CaseReader:
    def __init__(self, text: str):
        self.problems: List[str] = []
        self.sections: Dict[str, _Entries] = {}
        self.named: Dict[str, Dict[str, _Entries]] = {s: {} for s in NAMED_SECTIONS}
        self._scan(text)

    def problem(self, line: int, message: str):
        self.problems.append(f"line {line}: {message}" if line else message)

    def _scan(self, text: str):
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                self.problem(lineno, f"expected 'section.key = value', got {raw.strip()!r}")
                continue
            lhs, value = (s.strip() for s in line.split("=", 1))
            parts = lhs.split(".")
            section = parts[0]
            if section not in SECTION_KEYS:
                self.problem(lineno, f"unknown section '{section}'")
                continue
            if section in NAMED_SECTIONS:
                if len(parts) != 3 or not parts[1]:
                    self.problem(lineno, f"expected '{section}.<name>.<key>', got '{lhs}'")
                    continue
                entries = self.named[section].setdefault(parts[1], _Entries(f"{section}.{parts[1]}"))
            else:
                if len(parts) != 2:
                    self.problem(lineno, f"expected '{section}.<key>', got '{lhs}'")
                    continue
                entries = self.sections.setdefault(section, _Entries(section))
            key = parts[-1]
            if key not in SECTION_KEYS[section]:
                self.problem(lineno, f"unknown key '{lhs}'")
                continue
            if key in entries.values:
                self.problem(lineno, f"duplicate key '{lhs}' (first set on line {entries.values[key][1]})")
                continue
            if value == "":
                self.problem(lineno, f"empty value for '{lhs}'")
                continue
            entries.values[key] = (value, lineno)

    def section(self, name: str) -> _Entries:
        return self.sections.get(name, _Entries(name))

    # typed getters: record a problem and return None on failure

    def get(self, entries: _Entries, key: str, kind=float, count: Optional[int] = None,
            required: bool = False, default=None):
        if key not in entries.values:
            if required:
                self.problem(entries.first_line, f"missing mandatory key '{entries.label}.{key}'")
            return default
        raw, line = entries.values[key]
        tokens = raw.split()
        try:
            if kind is str:
                return raw
            values = tuple(kind(t) for t in tokens)
        except ValueError:
            self.problem(line, f"'{entries.label}.{key}': cannot read {raw!r} as {kind.__name__}")
            return default
        if count is None:
            if len(values) != 1:
                self.problem(line, f"'{entries.label}.{key}': expected one value, got {len(values)}")
                return default
            return values[0]
        if len(values) != count:
            self.problem(line, f"'{entries.label}.{key}': expected {count} values, got {len(values)}")
            return default
        return values

    def line(self, entries: _Entries, key: str) -> int:
        return entries.values.get(key, ("", entries.first_line))[1]

    def positive(self, entries: _Entries, key: str, value, strict: bool = True):
        if value is None:
            return
        vals = value if isinstance(value, tuple) else (value,)
        if any((v <= 0) if strict else (v < 0) for v in vals):
            bound = "> 0" if strict else ">= 0"
            self.problem(self.line(entries, key), f"'{entries.label}.{key}' must be {bound}, got {value}")


def _read_grid(r: _CaseReader) -> Tuple[Optional[GridSpec], List[PatchSpec]]:
    g = r.section("grid")
    if not r.sections.get("grid"):
        r.problem(0, "missing mandatory section 'grid'")
    cells = r.get(g, "cells", int, 3, required=True)
    spacing = r.get(g, "spacing", float, 3, required=True)
    origin = r.get(g, "origin", float, 3)
    vertical = r.get(g, "vertical", str, default="z")
    slope = r.get(g, "slope", float, 2, default=(0.0, 0.0))
    r.positive(g, "cells", cells)
    r.positive(g, "spacing", spacing)
    if vertical not in AXIS_NAMES:
        r.problem(r.line(g, "vertical"), f"'grid.vertical' must be one of {', '.join(AXIS_NAMES)}")

    patches = []
    for name, p in r.named["patch"].items():
        if name == DEFAULT_PATCH:
            r.problem(p.first_line, f"patch name '{DEFAULT_PATCH}' is reserved for unclaimed faces")
            continue
        face = r.get(p, "face", str)
        if face is None:
            r.problem(p.first_line, f"unknown patch '{name}': no 'patch.{name}.face' given")
            continue
        if face not in FACE_NAMES:
            r.problem(r.line(p, "face"), f"'patch.{name}.face' must be one of {', '.join(FACE_NAMES)}")
            continue
        region = r.get(p, "region", int, 4)
        patches.append(PatchSpec(name, face, region))

    if cells is None or spacing is None or vertical not in AXIS_NAMES:
        return None, patches
    if any(c < 1 for c in cells) or any(s <= 0 for s in spacing):
        return None, patches
    return GridSpec(cells, spacing, origin, vertical, slope, tuple(patches)), patches


def _read_soil(r: _CaseReader, name: str, s: _Entries) -> Optional[SoilZone]:
    model = r.get(s, "model", str, default="van_genuchten")
    if model not in SOIL_MODELS:
        r.problem(r.line(s, "model"), f"'soil.{name}.model' must be one of {', '.join(SOIL_MODELS)}")
        return None
    ks = r.get(s, "Ks", required=True)
    alpha = r.get(s, "alpha", required=True)
    storativity = r.get(s, "S", default=DEFAULT_STORATIVITY)
    try:
        if model == "van_genuchten":
            n = r.get(s, "n", required=True)
            ts = r.get(s, "theta_s", required=True)
            tr = r.get(s, "theta_r", required=True)
            if None in (ks, alpha, n, ts, tr):
                return None
            soil = VanGenuchten(ks, alpha, n, ts, tr, storativity)
        else:
            if s.has("n"):
                r.problem(r.line(s, "n"), f"'soil.{name}.n' does not apply to the gardner model")
            ts = r.get(s, "theta_s", default=0.40)
            tr = r.get(s, "theta_r", default=0.05)
            if None in (ks, alpha):
                return None
            soil = Gardner(ks, alpha, ts, tr, storativity)
    except InvalidInputError as err:
        r.problem(s.first_line, f"soil.{name}: {err}")
        return None

    region = ZoneRegion()
    raw = r.get(s, "region", str)
    if raw is not None:
        tokens = raw.split()
        kind, rest = tokens[0], tokens[1:]
        expected = {"all": 0, "box": 6, "layer": 2}.get(kind)
        line = r.line(s, "region")
        if expected is None:
            r.problem(line, f"'soil.{name}.region' must start with all, box or layer")
            return None
        try:
            bounds = tuple(int(t) for t in rest)
        except ValueError:
            r.problem(line, f"'soil.{name}.region': bounds must be integers")
            return None
        if len(bounds) != expected:
            r.problem(line, f"'soil.{name}.region': '{kind}' takes {expected} bounds, got {len(bounds)}")
            return None
        if any(b0 >= b1 or b0 < 0 for b0, b1 in zip(bounds[::2], bounds[1::2])):
            r.problem(line, f"'soil.{name}.region': each range needs 0 <= start < end")
            return None
        region = ZoneRegion(kind, bounds)
    return SoilZone(name, soil, region)


def _read_initial(r: _CaseReader) -> Optional[InitialCondition]:
    ini = r.section("initial")
    kind = r.get(ini, "type", str, required=True)
    if kind is None:
        if not r.sections.get("initial"):
            r.problem(0, "missing mandatory key 'initial.type'")
        return None
    if kind not in INITIAL_TYPES:
        r.problem(r.line(ini, "type"), f"'initial.type' must be one of {', '.join(INITIAL_TYPES)}")
        return None
    if kind == "uniform":
        head = r.get(ini, "head", required=True)
        return None if head is None else InitialCondition(kind, head=head)
    if kind == "hydrostatic":
        table = r.get(ini, "water_table", required=True)
        return None if table is None else InitialCondition(kind, water_table=table)
    path = r.get(ini, "file", str, required=True)
    return None if path is None else InitialCondition(kind, file=path)


def _read_condition(r: _CaseReader, name: str, p: _Entries) -> Optional[PatchCondition]:
    kind = r.get(p, "type", str, required=True)
    if kind is None:
        return None
    if kind not in PATCH_TYPES:
        r.problem(r.line(p, "type"), f"'patch.{name}.type' must be one of {', '.join(PATCH_TYPES)}")
        return None
    if kind == "dirichlet":
        head = r.get(p, "head", required=True)
        return None if head is None else PatchCondition(kind, head=head)
    if kind == "flux":
        flux = r.get(p, "flux", required=True)
        return None if flux is None else PatchCondition(kind, flux=flux)
    if kind == "flux_series":
        series = r.get(p, "series", str, required=True)
        seed = r.get(p, "seed", int)
        return None if series is None else PatchCondition(kind, series=series, seed=seed)
    return PatchCondition(kind)


def _read_numerics(r: _CaseReader) -> Numerics:
    num = r.section("numerics")
    defaults = Numerics()
    values = {}
    for key, default in vars(defaults).items():
        kind = int if isinstance(default, int) else float
        value = r.get(num, key, kind, default=default, required=key in ("dt_init", "dt_max"))
        values[key] = default if value is None else value
        r.positive(num, key, values[key])
    spec = Numerics(**values)
    if not spec.dt_min <= spec.dt_init <= spec.dt_max:
        r.problem(r.line(num, "dt_init"), f"need dt_min <= dt_init <= dt_max, got "
                                          f"{spec.dt_min}, {spec.dt_init}, {spec.dt_max}")
    if not spec.tol_picard > spec.pcg_tol:
        r.problem(r.line(num, "tol_picard"), f"'numerics.tol_picard' ({spec.tol_picard}) must exceed "
                                             f"'numerics.pcg_tol' ({spec.pcg_tol})")
    if not spec.grow_factor > 1:
        r.problem(r.line(num, "grow_factor"), "'numerics.grow_factor' must be > 1")
    return spec


def parse_case(text: str, source: Optional[str] = None, base_dir: Optional[Path] = None,
               name: str = "case") -> CaseSpec:
    """
    Parse and validate case-file text

    Raises:
        CaseParseError: listing every violated constraint with its line number
    """
    r = _CaseReader(text)
    grid_spec, patches = _read_grid(r)

    zones = []
    if not r.named["soil"]:
        r.problem(0, "missing mandatory section 'soil.<zone>'")
    for zone_name, entries in r.named["soil"].items():
        zone = _read_soil(r, zone_name, entries)
        if zone is not None:
            zones.append(zone)

    initial = _read_initial(r)

    conditions = {}
    for patch in patches:
        cond = _read_condition(r, patch.name, r.named["patch"][patch.name])
        if cond is not None:
            conditions[patch.name] = cond

    numerics = _read_numerics(r)
    run = r.section("run")
    t_end = r.get(run, "t_end", required=True)
    r.positive(run, "t_end", t_end)
    parts = r.get(run, "parts", int)
    r.positive(run, "parts", parts)
    cuts = r.get(run, "cuts", int, 3)
    r.positive(run, "cuts", cuts)
    if cuts is not None and parts is not None and int(np.prod(cuts)) != parts:
        r.problem(r.line(run, "cuts"), f"'run.cuts' {cuts} do not multiply to run.parts={parts}")
    elif cuts is not None and parts is None:
        parts = int(np.prod(cuts))

    out = r.section("output")
    output = OutputSpec(r.get(out, "snapshot_interval"), r.get(out, "probe_interval"),
                        r.get(out, "directory", str))
    r.positive(out, "snapshot_interval", output.snapshot_interval)
    r.positive(out, "probe_interval", output.probe_interval)

    probes = []
    for probe_name, entries in r.named["probe"].items():
        cell = r.get(entries, "cell", int, 3, required=True)
        if cell is None:
            continue
        if grid_spec is not None and not all(0 <= c < n for c, n in zip(cell, grid_spec.cells)):
            r.problem(r.line(entries, "cell"), f"probe '{probe_name}' cell {cell} outside the grid "
                                               f"{tuple(grid_spec.cells)}")
            continue
        probes.append(Probe(probe_name, cell))

    random_field = None
    if "random_field" in r.sections:
        rf = r.section("random_field")
        defaults = RandomFieldSpec()
        random_field = RandomFieldSpec(
            geo_mean=r.get(rf, "geo_mean", default=defaults.geo_mean),
            sigma_log10=r.get(rf, "sigma_log10", default=defaults.sigma_log10),
            clamp=r.get(rf, "clamp", float, 2, default=defaults.clamp),
            seed=r.get(rf, "seed", int, default=defaults.seed),
            zone=r.get(rf, "zone", str),
        )
        r.positive(rf, "geo_mean", random_field.geo_mean)
        r.positive(rf, "sigma_log10", random_field.sigma_log10, strict=False)
        r.positive(rf, "clamp", random_field.clamp)
        if random_field.zone is not None and random_field.zone not in r.named["soil"]:
            r.problem(r.line(rf, "zone"), f"'random_field.zone' names unknown soil zone '{random_field.zone}'")

    if grid_spec is not None:
        try:
            build_grid(grid_spec)
        except InvalidSpecError as err:
            r.problem(0, str(err))
        if zones and len(zones) == len(r.named["soil"]):
            _, coverage = zone_map(tuple(grid_spec.cells), grid_spec.vertical, zones)
            for message in coverage:
                r.problem(0, message)

    if r.problems:
        raise CaseParseError(r.problems, source=source)
    return CaseSpec(grid=grid_spec, zones=tuple(zones), initial=initial, conditions=conditions,
                    numerics=numerics, t_end=t_end, parts=parts, cuts=cuts, output=output,
                    probes=tuple(probes), random_field=random_field, name=name, base_dir=base_dir)


def load_case(path: Union[str, Path]) -> CaseSpec:
    path = Path(path)
    return parse_case(path.read_text(encoding="utf-8"), source=str(path), base_dir=path.parent,
                      name=path.stem)


# --- rendering ---------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (tuple, list)):
        return " ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_case(spec: CaseSpec) -> str:
    """Case-file text that parses back to an equal CaseSpec"""
    lines = ["# rendered case", ""]
    g = spec.grid
    lines.append(f"grid.cells = {_fmt(tuple(g.cells))}")
    lines.append(f"grid.spacing = {_fmt(tuple(float(s) for s in g.spacing))}")
    if g.origin is not None:
        lines.append(f"grid.origin = {_fmt(tuple(float(o) for o in g.origin))}")
    lines.append(f"grid.vertical = {g.vertical}")
    lines.append(f"grid.slope = {_fmt(tuple(float(a) for a in g.slope))}")
    lines.append("")

    for zone in spec.zones:
        soil = zone.soil
        prefix = f"soil.{zone.name}"
        model = "gardner" if isinstance(soil, Gardner) else "van_genuchten"
        lines.append(f"{prefix}.model = {model}")
        lines.append(f"{prefix}.Ks = {_fmt(float(soil.Ks))}")
        lines.append(f"{prefix}.alpha = {_fmt(float(soil.alpha))}")
        if model == "van_genuchten":
            lines.append(f"{prefix}.n = {_fmt(float(soil.n))}")
        lines.append(f"{prefix}.theta_s = {_fmt(float(soil.theta_s))}")
        lines.append(f"{prefix}.theta_r = {_fmt(float(soil.theta_r))}")
        lines.append(f"{prefix}.S = {_fmt(float(soil.S))}")
        lines.append(f"{prefix}.region = {zone.region.render()}")
        lines.append("")

    ini = spec.initial
    lines.append(f"initial.type = {ini.kind}")
    for key in ("head", "water_table", "file"):
        value = getattr(ini, key)
        if value is not None:
            lines.append(f"initial.{key} = {_fmt(value)}")
    lines.append("")

    for patch in g.patches:
        prefix = f"patch.{patch.name}"
        lines.append(f"{prefix}.face = {patch.face}")
        if patch.region is not None:
            lines.append(f"{prefix}.region = {_fmt(tuple(patch.region))}")
        cond = spec.conditions[patch.name]
        lines.append(f"{prefix}.type = {cond.kind}")
        for key in ("head", "flux", "series", "seed"):
            value = getattr(cond, key)
            if value is not None:
                lines.append(f"{prefix}.{key} = {_fmt(value)}")
        lines.append("")

    for key, value in vars(spec.numerics).items():
        lines.append(f"numerics.{key} = {_fmt(value)}")
    lines.append("")
    lines.append(f"run.t_end = {_fmt(float(spec.t_end))}")
    if spec.parts is not None:
        lines.append(f"run.parts = {spec.parts}")
    if spec.cuts is not None:
        lines.append(f"run.cuts = {_fmt(tuple(spec.cuts))}")
    for key, value in vars(spec.output).items():
        if value is not None:
            lines.append(f"output.{key} = {_fmt(value)}")
    for probe in spec.probes:
        lines.append(f"probe.{probe.name}.cell = {_fmt(tuple(probe.cell))}")
    if spec.random_field is not None:
        rf = spec.random_field
        for key, value in vars(rf).items():
            if value is not None:
                lines.append(f"random_field.{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"
