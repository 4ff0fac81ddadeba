"""
Scaling study
Strong mode keeps the case fixed; weak mode grows the grid with the part
count so every worker keeps the same number of cells
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from driver.case_file import CaseSpec, Probe, SoilZone, ZoneRegion
from driver.config import Settings
from driver.pipeline import SimulationPipeline
from richards.errors import ConfigurationError, RichardsError
from richards.grid import FACE_NAMES, PatchSpec, auto_cuts

SCALING_COLUMNS = ["parts", "cells", "wall_s", "speedup", "efficiency"]


def weak_scaled_case(spec: CaseSpec, parts: int) -> CaseSpec:
    """
    Replicate the base grid along the cut axes: parts times as many cells

    Cell spacings stay the same, so the domain grows; patch regions, soil
    boxes and layers are stretched by the same per-axis factors.
    """
    if spec.initial.kind == "file":
        raise ConfigurationError("weak scaling cannot stretch a per-cell initial file")
    base = tuple(spec.grid.cells)
    cuts = auto_cuts(base, parts)
    cells = tuple(n * c for n, c in zip(base, cuts))

    patches = []
    for patch in spec.grid.patches:
        region = patch.region
        if region is not None:
            axis = FACE_NAMES.index(patch.face) // 2
            t1, t2 = (a for a in range(3) if a != axis)
            a0, a1, b0, b1 = region
            region = (a0 * cuts[t1], a1 * cuts[t1], b0 * cuts[t2], b1 * cuts[t2])
        patches.append(PatchSpec(patch.name, patch.face, region))

    vertical = "xyz".index(spec.grid.vertical)
    zones = []
    for zone in spec.zones:
        region = zone.region
        if region.kind == "box":
            b = region.bounds
            region = ZoneRegion("box", tuple(v * cuts[i // 2] for i, v in enumerate(b)))
        elif region.kind == "layer":
            region = ZoneRegion("layer", tuple(v * cuts[vertical] for v in region.bounds))
        zones.append(SoilZone(zone.name, zone.soil, region))

    probes = tuple(Probe(p.name, tuple(c * k for c, k in zip(p.cell, cuts))) for p in spec.probes)
    grid = replace(spec.grid, cells=cells, patches=tuple(patches))
    return replace(spec, grid=grid, zones=tuple(zones), probes=probes, parts=parts, cuts=cuts,
                   name=f"{spec.name}_weak{parts}")


@dataclass
class ScalingReport:
    mode: str
    rows: List[dict] = field(default_factory=list)
    failures: List[dict] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return bool(self.rows) and not self.failures

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=SCALING_COLUMNS)


class ScalingStudy:
    """Wall time of the transient solve for each part count"""

    def __init__(self, spec: CaseSpec, parts: Sequence[int], mode: str = "strong",
                 t_end: Optional[float] = None, output_dir: Optional[str] = None,
                 settings: Optional[Settings] = None, verbose: bool = True):
        if mode not in ("strong", "weak"):
            raise ConfigurationError(f"mode must be 'strong' or 'weak', got {mode!r}")
        self.spec = spec if t_end is None else replace(spec, t_end=float(t_end))
        self.parts = list(parts)
        self.mode = mode
        self.settings = settings or Settings.from_env()
        self.output_dir = Path(output_dir or Path(self.settings.output_dir) / f"{spec.name}_scaling")
        self.verbose = verbose

    def _say(self, message: str, **kwargs):
        if self.verbose:
            print(message, **kwargs)

    def case_for(self, parts: int) -> CaseSpec:
        if self.mode == "weak":
            return weak_scaled_case(self.spec, parts)
        return replace(self.spec, parts=parts, cuts=None)

    def run(self) -> ScalingReport:
        self._say("=" * 70)
        self._say(f"📈 {self.mode.upper()} SCALING: {self.spec.name}, parts {self.parts}")
        self._say("=" * 70)
        report = ScalingReport(self.mode)
        baseline = None
        for p in self.parts:
            spec = self.case_for(p)
            self._say(f"   {p:3d} part(s) ... ", end="", flush=True)
            try:
                run = SimulationPipeline(spec, parts=p, settings=self.settings, verbose=False,
                                         write_outputs=False).run()
            except RichardsError as err:
                report.failures.append({"parts": p, "error": f"{type(err).__name__}: {err}"})
                self._say(f"✗ {err}")
                continue
            wall = run.timings["solve_s"]
            if baseline is None:
                baseline = (p, wall)
            p0, w0 = baseline
            if self.mode == "strong":
                speedup = w0 / wall
                efficiency = speedup * p0 / p
            else:
                efficiency = w0 / wall
                speedup = efficiency * p / p0
            report.rows.append({"parts": p, "cells": run.grid.ncells, "wall_s": wall,
                                "speedup": speedup, "efficiency": efficiency})
            self._say(f"✓ {run.grid.ncells} cells, {wall:.2f}s, speedup {speedup:.2f}, "
                      f"efficiency {efficiency:.0%}")
        if report.rows:
            self.save(report)
        return report

    def figure(self, report: ScalingReport) -> go.Figure:
        df = report.to_frame()
        fig = make_subplots(rows=1, cols=2, subplot_titles=("Speedup", "Efficiency"))
        fig.add_trace(go.Scatter(x=df["parts"], y=df["speedup"], mode="lines+markers", name="measured"),
                      row=1, col=1)
        if report.mode == "strong":
            fig.add_trace(go.Scatter(x=df["parts"], y=df["parts"] / df["parts"].iloc[0], mode="lines",
                                     name="ideal", line=dict(dash="dash")), row=1, col=1)
        fig.add_trace(go.Scatter(x=df["parts"], y=df["efficiency"], mode="lines+markers",
                                 name="efficiency"), row=1, col=2)
        fig.update_xaxes(title_text="parts")
        fig.update_layout(title=f"{report.mode.capitalize()} scaling: {self.spec.name}")
        return fig

    def save(self, report: ScalingReport):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        csv_path = self.output_dir / "scaling.csv"
        report.to_frame().to_csv(csv_path, index=False)
        html_path = self.output_dir / "scaling.html"
        self.figure(report).write_html(str(html_path))
        self._say(f"💾 Saved: {csv_path}")
        self._say(f"💾 Saved: {html_path}")
        return csv_path, html_path
