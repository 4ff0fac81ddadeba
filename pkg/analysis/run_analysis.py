"""
Post-run queries
Loads the CSV and JSON records of one run directory and answers the usual
questions: step statistics, flux plateaus, monotonicity, probe series
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd
import plotly.graph_objects as go


class RunAnalyzer:
    """Query and plot the records written by a simulation run"""

    def __init__(self, run_dir: str, verbose: bool = True):
        self.run_dir = Path(run_dir)
        self.verbose = verbose

        self._say(f"📊 Loading run records from {self.run_dir}/ ...")
        self.log = pd.read_csv(self.run_dir / "run_log.csv")
        self.history = pd.read_csv(self.run_dir / "history.csv")
        rejected = self.run_dir / "rejected_steps.csv"
        self.rejected = pd.read_csv(rejected) if rejected.exists() else pd.DataFrame()
        probes = self.run_dir / "probes.csv"
        self.probes = pd.read_csv(probes) if probes.exists() else pd.DataFrame()
        summary = self.run_dir / "run_summary.json"
        self.summary: Dict[str, Any] = json.loads(summary.read_text(encoding="utf-8")) if summary.exists() else {}

        self._say(f"   ✅ {len(self.log)} accepted step(s)")
        self._say(f"   ✅ {len(self.rejected)} rejected step(s)")
        if not self.probes.empty:
            self._say(f"   ✅ {len(self.probes)} probe record(s)")

    def _say(self, message: str):
        if self.verbose:
            print(message)

    @property
    def patches(self):
        return [c[len("flux_"):] for c in self.history.columns if c.startswith("flux_")]

    def step_statistics(self) -> Dict[str, Any]:
        """Counts and dt range over the accepted steps"""
        if self.log.empty:
            return {"accepted_steps": 0, "rejected_steps": len(self.rejected)}
        return {
            "accepted_steps": int(len(self.log)),
            "rejected_steps": int(len(self.rejected)),
            "t_final": float(self.log["t"].iloc[-1]),
            "dt_min": float(self.log["dt"].min()),
            "dt_max": float(self.log["dt"].max()),
            "picard_total": int(self.log["picard_iters"].sum()),
            "picard_max": int(self.log["picard_iters"].max()),
            "pcg_total": int(self.log["pcg_iters_total"].sum()),
            "final_mass_error": float(self.log["mass_error"].iloc[-1]),
        }

    def patch_flux(self, patch: str, area: Optional[float] = None) -> pd.Series:
        """Outward flux of a patch over time [m3/s], or flux density [m/s] given the area"""
        column = f"flux_{patch}"
        if column not in self.history.columns:
            raise KeyError(f"no patch '{patch}' in {self.run_dir / 'history.csv'}")
        series = self.history.set_index("t")[column]
        return series / area if area else series

    def flux_plateau(self, patch: str, area: Optional[float] = None, window: int = 10) -> float:
        """Mean flux over the last window records"""
        return float(self.patch_flux(patch, area).iloc[-window:].mean())

    def column_average_pressure(self) -> pd.Series:
        return self.history.set_index("t")["mean_head"]

    def is_monotone(self, series: pd.Series, increasing: bool = True, tolerance: float = 0.0) -> bool:
        steps = np.diff(series.to_numpy())
        return bool(np.all(steps >= -tolerance) if increasing else np.all(steps <= tolerance))

    def probe_series(self, name: str, quantity: str = "theta") -> pd.Series:
        column = f"{quantity}_{name}"
        if column not in self.probes.columns:
            raise KeyError(f"no probe column '{column}'")
        return self.probes.set_index("t")[column]

    def max_relative_difference(self, other: "RunAnalyzer", times: Optional[Sequence[float]] = None,
                                scale: Optional[float] = None) -> float:
        """
        Largest relative difference of the column-average pressure between two
        runs, interpolated at common times (default: this run's record times)

        Differences are taken relative to the other run's value at each time,
        or to a fixed scale when given (needed when the series crosses zero).
        """
        mine = self.column_average_pressure()
        theirs = other.column_average_pressure()
        t = np.asarray(mine.index if times is None else times, dtype=float)
        a = np.interp(t, mine.index.to_numpy(), mine.to_numpy())
        b = np.interp(t, theirs.index.to_numpy(), theirs.to_numpy())
        reference = np.maximum(np.abs(b), 1e-12) if scale is None else abs(scale)
        return float(np.max(np.abs(a - b) / reference))

    # --- figures ------------------------------------------------------------

    def time_step_figure(self) -> go.Figure:
        fig = go.Figure()
        fig.add_trace(go.Scatter(x=self.log["t"], y=self.log["dt"], mode="lines", name="dt"))
        if not self.rejected.empty:
            fig.add_trace(go.Scatter(x=self.rejected["t_target"], y=self.rejected["dt"], mode="markers",
                                     name="rejected", marker=dict(symbol="x", color="red")))
        fig.update_layout(title="Time step", xaxis_title="t [s]", yaxis_title="dt [s]", yaxis_type="log")
        return fig

    def flux_figure(self) -> go.Figure:
        fig = go.Figure()
        for patch in self.patches:
            series = self.patch_flux(patch)
            fig.add_trace(go.Scatter(x=series.index, y=series.values, mode="lines", name=patch))
        fig.update_layout(title="Outward patch flux", xaxis_title="t [s]", yaxis_title="flux [m3/s]")
        return fig

    def probe_figure(self, quantity: str = "theta") -> go.Figure:
        fig = go.Figure()
        prefix = f"{quantity}_"
        for column in (c for c in self.probes.columns if c.startswith(prefix)):
            fig.add_trace(go.Scatter(x=self.probes["t"], y=self.probes[column], mode="lines",
                                     name=column[len(prefix):]))
        label = "water content [-]" if quantity == "theta" else "pressure head [m]"
        fig.update_layout(title=f"Probes: {label}", xaxis_title="t [s]", yaxis_title=label)
        return fig
