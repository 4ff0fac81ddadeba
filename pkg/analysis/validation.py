"""
Validation studies
Gardner column against its closed form, and partition invariance of a case
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from driver.case_file import CaseSpec
from driver.config import Settings
from driver.gardner import (
    GARDNER_ALPHA,
    GARDNER_KS,
    build_gardner_case,
    gardner_admissible,
    gardner_analytic_h,
)
from driver.pipeline import SimulationPipeline
from richards.errors import RichardsError

# outward top fluxes [m/s]: two of each sign, all free of saturation
DEFAULT_FLUXES = (0.0, -5e-7, -2e-7, 2e-6, 5e-6)
HYDROSTATIC_TOLERANCE = 1e-6   # [m]


@dataclass
class ValidationReport:
    rows: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        checked = [r for r in self.rows if r["status"] != "inadmissible"]
        return bool(checked) and all(r["status"] == "passed" for r in checked)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


class GardnerValidator:
    """Steady Gardner column for a set of top fluxes, max head error per flux"""

    def __init__(self, cells: int = 100, fluxes: Optional[Sequence[float]] = None,
                 tolerance: float = 5e-3, height: float = 1.0, t_end: float = 2.0e6,
                 settings: Optional[Settings] = None, verbose: bool = True):
        self.cells = cells
        self.fluxes = list(DEFAULT_FLUXES if fluxes is None else fluxes)
        self.tolerance = tolerance
        self.height = height
        self.t_end = t_end
        self.settings = settings or Settings.from_env()
        self.verbose = verbose

    def _say(self, message: str, **kwargs):
        if self.verbose:
            print(message, **kwargs)

    def check_flux(self, q_outward: float) -> dict:
        """Run one column to steady state and compare with the closed form"""
        q_down = -q_outward
        row = {"q_outward": q_outward, "max_error": np.nan,
               "tolerance": HYDROSTATIC_TOLERANCE if q_outward == 0 else self.tolerance}
        if not gardner_admissible(GARDNER_KS, GARDNER_ALPHA, self.height, q_down):
            row.update(status="inadmissible", error="flux outside the closed form's validity range")
            return row
        spec = build_gardner_case(q_outward, cells=self.cells, height=self.height, t_end=self.t_end)
        try:
            report = SimulationPipeline(spec, parts=1, settings=self.settings, verbose=False,
                                        write_outputs=False).run()
        except RichardsError as err:
            row.update(status="failed", error=f"{type(err).__name__}: {err}")
            return row
        exact = gardner_analytic_h(GARDNER_KS, GARDNER_ALPHA, q_down, report.grid.elevation)
        error = float(np.max(np.abs(report.h - exact)))
        row.update(max_error=error, steps=report.result.accepted_steps,
                   status="passed" if error <= row["tolerance"] else "failed", error="")
        return row

    def run(self) -> ValidationReport:
        self._say("=" * 70)
        self._say(f"🔬 GARDNER VALIDATION: {self.cells} cells, {len(self.fluxes)} flux(es)")
        self._say("=" * 70)
        report = ValidationReport()
        for i, q in enumerate(self.fluxes, 1):
            self._say(f"[{i:2d}/{len(self.fluxes)}] q = {q:+.2e} m/s ... ", end="", flush=True)
            row = self.check_flux(q)
            report.rows.append(row)
            if row["status"] == "passed":
                self._say(f"✓ max error {row['max_error']:.2e} m")
            elif row["status"] == "inadmissible":
                self._say("⚠️  skipped: outside the validity range")
            else:
                detail = row.get("error") or f"max error {row['max_error']:.2e} m > {row['tolerance']:.1e} m"
                self._say(f"✗ {detail}")
        self._say(f"\n{'✅ VALIDATION PASSED' if report.passed else '❌ VALIDATION FAILED'}\n")
        return report

    def save(self, report: ValidationReport, directory: str) -> Path:
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        out = path / "gardner_validation.csv"
        report.to_frame().to_csv(out, index=False)
        self._say(f"💾 Saved: {out}")
        return out


@dataclass
class PartitionReport:
    pcg_tol: float
    rows: List[dict] = field(default_factory=list)

    @property
    def max_discrepancy(self) -> float:
        return max((r["max_discrepancy"] for r in self.rows if r["status"] == "completed"), default=np.nan)

    @property
    def steps_identical(self) -> bool:
        return all(r.get("same_steps", False) for r in self.rows)

    @property
    def passed(self) -> bool:
        completed = all(r["status"] == "completed" for r in self.rows)
        return completed and self.steps_identical and self.max_discrepancy <= 10 * self.pcg_tol


class PartitionChecker:
    """Runs one case with several part counts and compares against the first"""

    def __init__(self, spec: CaseSpec, parts: Sequence[int], t_end: Optional[float] = None,
                 settings: Optional[Settings] = None, verbose: bool = True):
        if not parts:
            raise ValueError("need at least one part count")
        self.spec = spec if t_end is None else replace(spec, t_end=float(t_end))
        self.parts = list(parts)
        self.settings = settings or Settings.from_env()
        self.verbose = verbose

    def _say(self, message: str, **kwargs):
        if self.verbose:
            print(message, **kwargs)

    def run(self) -> PartitionReport:
        self._say("=" * 70)
        self._say(f"🧩 PARTITION CHECK: {self.spec.name}, parts {self.parts}")
        self._say("=" * 70)
        report = PartitionReport(self.spec.numerics.pcg_tol)
        reference = None
        for p in self.parts:
            self._say(f"   {p:3d} part(s) ... ", end="", flush=True)
            try:
                run = SimulationPipeline(self.spec, parts=p, settings=self.settings, verbose=False,
                                         write_outputs=False).run()
            except RichardsError as err:
                report.rows.append({"parts": p, "status": "failed", "error": f"{type(err).__name__}: {err}"})
                self._say(f"✗ {err}")
                continue
            if reference is None:
                reference = run
            steps = run.result.step_sequence()
            row = {
                "parts": p,
                "status": "completed",
                "accepted_steps": len(steps),
                "max_discrepancy": float(np.max(np.abs(run.h - reference.h))),
                "same_steps": steps == reference.result.step_sequence(),
                "wall_s": run.timings["solve_s"],
            }
            report.rows.append(row)
            self._say(f"✓ {len(steps)} steps, max |dh| {row['max_discrepancy']:.2e} m, "
                      f"{'same' if row['same_steps'] else 'DIFFERENT'} step sequence")
        self._say(f"\n{'✅ PARTITION INVARIANT' if report.passed else '❌ PARTITION CHECK FAILED'}\n")
        return report
