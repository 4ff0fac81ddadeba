"""
Simulation pipeline
Case -> mesh, partition, soils, initial and boundary conditions -> SPMD
transient run -> snapshots, probes, run records and run_summary.json
"""

import json
import math
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from richards.assembly import (
    BoundaryCondition,
    Dirichlet,
    FluxSeriesBC,
    FreeDrainage,
    NeumannFlux,
    check_conditions,
)
from richards.constitutive import SoilModel, soil_field
from richards.errors import ConfigurationError, RichardsError
from richards.exchange import Communicator, SpmdGroup, gather_field, global_reduce, halo_exchange
from richards.grid import DEFAULT_PATCH, Grid, PartitionMap, build_grid, build_subdomains, partition_simple
from richards.stepper import (
    REJECTED_COLUMNS,
    RUN_LOG_COLUMNS,
    PicardConfig,
    RunResult,
    TimeController,
    TransientProblem,
    run_transient,
)

from .case_file import CaseSpec, zone_map
from .config import Settings
from .forcing import SECONDS_PER_DAY, FluxSeries, read_flux_series, synthetic_monsoon_series
from .heterogeneity import apply_ks_field, lognormal_ks_field
from .writers import ProbeObserver, SnapshotObserver, read_snapshot, write_table


# --- setup ------------------------------------------------------------------

def build_soil(spec: CaseSpec, grid: Grid) -> SoilModel:
    """Per-cell soil parameters, including the lognormal Ks field if the case has one"""
    zone_of_cell, problems = zone_map(grid.shape, grid.spec.vertical, spec.zones)
    if problems:
        raise ConfigurationError("; ".join(problems))
    soil = soil_field([z.soil for z in spec.zones], zone_of_cell)
    rf = spec.random_field
    if rf is not None:
        ks = lognormal_ks_field(grid, rf.geo_mean, rf.sigma_log10, rf.clamp, rf.seed)
        mask = None
        if rf.zone is not None:
            names = [z.name for z in spec.zones]
            mask = zone_of_cell == names.index(rf.zone)
        soil = apply_ks_field(soil, ks, mask)
    return soil


def initial_head(spec: CaseSpec, grid: Grid) -> np.ndarray:
    ini = spec.initial
    if ini.kind == "uniform":
        return np.full(grid.ncells, float(ini.head))
    if ini.kind == "hydrostatic":
        return ini.water_table - grid.elevation
    snap = read_snapshot(spec.resolve(ini.file))
    if "h" not in snap.fields or snap.fields["h"].size != grid.ncells:
        raise ConfigurationError(f"initial file {ini.file} needs a field 'h' with {grid.ncells} values")
    return snap.fields["h"].copy()


def _flux_series(spec: CaseSpec, name: str) -> FluxSeries:
    cond = spec.conditions[name]
    if cond.series == "synthetic":
        days = max(1, math.ceil(spec.t_end / SECONDS_PER_DAY))
        series = synthetic_monsoon_series(seed=cond.seed or 0, days=days)
    else:
        series = read_flux_series(spec.resolve(cond.series))
    if series.end < spec.t_end:
        raise ConfigurationError(
            f"patch '{name}': flux series covers {series.end:.6g}s, run needs {spec.t_end:.6g}s"
        )
    return series


def boundary_conditions(spec: CaseSpec, grid: Grid) -> Dict[str, BoundaryCondition]:
    """One condition per grid patch; faces no patch claims are closed (zero flux)"""
    bcs: Dict[str, BoundaryCondition] = {}
    for name, cond in spec.conditions.items():
        if cond.kind == "dirichlet":
            bcs[name] = Dirichlet(cond.head)
        elif cond.kind == "flux":
            bcs[name] = NeumannFlux(cond.flux)
        elif cond.kind == "free_drainage":
            bcs[name] = FreeDrainage()
        elif cond.kind == "flux_series":
            bcs[name] = FluxSeriesBC(_flux_series(spec, name))
        else:
            raise ConfigurationError(f"patch '{name}': unsupported condition '{cond.kind}'")
    if DEFAULT_PATCH in grid.patches:
        bcs[DEFAULT_PATCH] = NeumannFlux(0.0)
    check_conditions(grid, bcs)
    return bcs


def picard_config(spec: CaseSpec) -> PicardConfig:
    num = spec.numerics
    return PicardConfig(tol_picard=num.tol_picard, pcg_tol=num.pcg_tol,
                        max_picard_iters=num.max_picard_iters, pcg_max_iter=num.pcg_max_iter)


def time_controller(spec: CaseSpec) -> TimeController:
    num = spec.numerics
    return TimeController(dt_init=num.dt_init, dt_max=num.dt_max, dt_min=num.dt_min,
                          grow_factor=num.grow_factor, quick_iters=num.quick_iters,
                          streak_needed=num.streak)


# --- run --------------------------------------------------------------------

@dataclass
class PartOutcome:
    part: int
    result: RunResult
    counters: Dict[str, int]
    wall_s: float


@dataclass
class SimulationReport:
    case: str
    status: str
    output_dir: Optional[Path]
    grid: Grid
    partition: PartitionMap
    h: Optional[np.ndarray]
    result: Optional[RunResult]
    parts: List[PartOutcome] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None


class SimulationPipeline:
    """Complete run of one case: setup, parallel transient solve, outputs"""

    def __init__(self, spec: CaseSpec, parts: Optional[int] = None, threads: Optional[int] = None,
                 output_dir: Optional[str] = None, settings: Optional[Settings] = None,
                 verbose: Optional[bool] = None, write_outputs: bool = True):
        self.settings = settings or Settings.from_env()
        self.spec = spec
        self.parts = parts or spec.parts or self.settings.parts
        self.threads = threads
        self.verbose = self.settings.verbose if verbose is None else verbose
        self.write_outputs = write_outputs
        root = output_dir or spec.output.directory
        if root is None:
            self.output_dir = Path(self.settings.output_dir) / spec.name
        else:
            self.output_dir = spec.resolve(root) if output_dir is None else Path(root)

        self._say("=" * 70)
        self._say(f"🚀 RICHARDS RUN: {spec.name}")
        self._say("=" * 70)

        t0 = time.perf_counter()
        self.grid = build_grid(spec.grid)
        cuts = spec.cuts if self.parts == spec.parts else None
        self.partition = partition_simple(self.grid, self.parts, cuts)
        self.subdomains = build_subdomains(self.grid, self.partition)
        self.soil = build_soil(spec, self.grid)
        self.h0 = initial_head(spec, self.grid)
        self.bcs = boundary_conditions(spec, self.grid)
        self.patch_names = sorted(self.bcs)
        self.setup_s = time.perf_counter() - t0

        sizes = self.partition.part_sizes()
        self._say(f"✓ Grid {self.grid.nx}x{self.grid.ny}x{self.grid.nz} = {self.grid.ncells} cells")
        self._say(f"✓ {self.parts} part(s), cuts {self.partition.cuts}, "
                  f"cells per part {sizes.min()}..{sizes.max()}")
        self._say(f"✓ Patches: {', '.join(f'{n} ({type(self.bcs[n]).__name__})' for n in self.patch_names)}")
        self._say("=" * 70 + "\n")

    def _say(self, message: str):
        if self.verbose:
            print(message)

    def _observers(self):
        if not self.write_outputs:
            return []
        out = self.spec.output
        snapshots = SnapshotObserver(self.grid, self.soil, self.output_dir / "snapshots", out.snapshot_interval)
        observers = [snapshots]
        if self.spec.probes:
            probes = {p.name: p.cell for p in self.spec.probes}
            observers.append(ProbeObserver(self.grid, self.soil, probes, self.output_dir / "probes.csv",
                                           out.probe_interval))
        return observers

    def _worker(self, comm: Communicator, observers, t_end: float) -> PartOutcome:
        start = time.perf_counter()
        sub = self.subdomains[comm.rank]
        soil = self.soil.take(sub.cells) if self.soil.is_field else self.soil
        problem = TransientProblem(sub, soil, self.h0[sub.cells], self.bcs, self.patch_names)

        def reduce(kind, value):
            return global_reduce(kind, value, comm)

        def halo(values):
            return halo_exchange(values, sub.topology, comm)

        def gather(h):
            return gather_field(h, sub.cells, self.grid.ncells, comm)

        result = run_transient(problem, t_end, picard_config(self.spec), time_controller(self.spec),
                               observers, reduce, halo, gather)
        return PartOutcome(comm.rank, result, dict(comm.counters), time.perf_counter() - start)

    def run(self, t_end: Optional[float] = None) -> SimulationReport:
        """
        Run the case on the SPMD group

        Returns a report with status "completed"; solver failures are written
        to the run records and re-raised.
        """
        t_end = float(t_end or self.spec.t_end)
        observers = self._observers()
        group = SpmdGroup(self.parts, timeout=self.settings.collective_timeout, threads=self.threads)
        self._say(f"⏱️  Marching to t = {t_end:g} s on {self.parts} worker(s)...")

        start = time.perf_counter()
        try:
            outcomes = group.run(lambda comm: self._worker(comm, observers, t_end))
        except RichardsError as err:
            solve_s = time.perf_counter() - start
            self._say(f"❌ Run failed: {err}")
            report = SimulationReport(self.spec.name, "failed", self.output_dir, self.grid, self.partition,
                                      None, None, timings={"setup_s": self.setup_s, "solve_s": solve_s},
                                      error=f"{type(err).__name__}: {err}")
            if self.write_outputs:
                self._write_failure(report, getattr(err, "log", []), getattr(err, "rejected", []))
            raise
        solve_s = time.perf_counter() - start

        h = np.empty(self.grid.ncells)
        for outcome in outcomes:
            h[self.subdomains[outcome.part].cells] = outcome.result.h
        result = outcomes[0].result
        report = SimulationReport(self.spec.name, "completed", self.output_dir, self.grid, self.partition,
                                  h, result, outcomes, timings={"setup_s": self.setup_s, "solve_s": solve_s})

        self._say(f"✅ {result.accepted_steps} accepted step(s), {len(result.rejected)} rejected, "
                  f"{result.pcg_iterations} PCG iterations in {solve_s:.1f}s")
        self._say(f"📊 Mass balance error: {result.ledger.cumulative_error:.3e} m3 "
                  f"({result.ledger.relative_error:.2e} of initial storage)")
        if self.write_outputs:
            t_out = time.perf_counter()
            self._write_records(result)
            for obs in observers:
                if isinstance(obs, SnapshotObserver):
                    obs.write_index()
            report.timings["output_s"] = time.perf_counter() - t_out
            self._write_summary(report)
            self._say(f"💾 Outputs in: {self.output_dir}/")
        return report

    # --- outputs ----------------------------------------------------------

    def _write_records(self, result: RunResult):
        write_table(result.log, RUN_LOG_COLUMNS, self.output_dir / "run_log.csv")
        write_table(result.rejected, REJECTED_COLUMNS, self.output_dir / "rejected_steps.csv")
        history_columns = ["t", "mean_head", "storage"] + [f"flux_{n}" for n in self.patch_names]
        write_table(result.history, history_columns, self.output_dir / "history.csv")

    def _write_failure(self, report: SimulationReport, log, rejected):
        write_table(log, RUN_LOG_COLUMNS, self.output_dir / "run_log.csv")
        write_table(rejected, REJECTED_COLUMNS, self.output_dir / "rejected_steps.csv")
        self._write_summary(report)
        self._say(f"💾 Run log up to the failure: {self.output_dir / 'run_log.csv'}")

    def summary(self, report: SimulationReport) -> dict:
        result = report.result
        summary = {
            "run_info": {
                "case": report.case,
                "status": report.status,
                "finished_at": datetime.now().isoformat(),
                "cells": self.grid.ncells,
                "shape": list(self.grid.shape),
                "parts": self.parts,
                "cuts": list(self.partition.cuts),
                "t_end": float(self.spec.t_end),
            },
            "timings": {k: round(v, 3) for k, v in report.timings.items()},
            "numerics": dict(vars(self.spec.numerics)),
            "patches": {n: type(self.bcs[n]).__name__ for n in self.patch_names},
        }
        if report.error:
            summary["error"] = report.error
        if result is not None:
            last = result.history[-1]
            summary["counts"] = {
                "accepted_steps": result.accepted_steps,
                "rejected_steps": len(result.rejected),
                "picard_iterations": int(sum(r["picard_iters"] for r in result.log)),
                "pcg_iterations": result.pcg_iterations,
            }
            summary["mass_balance"] = {
                "initial_storage_m3": result.ledger.initial_storage,
                "final_storage_m3": result.ledger.storage,
                "boundary_outflow_m3": result.ledger.cumulative_boundary,
                "cumulative_error_m3": result.ledger.cumulative_error,
                "relative_error": result.ledger.relative_error,
            }
            summary["final_patch_flux_m3_per_s"] = {n: last[f"flux_{n}"] for n in self.patch_names}
            summary["per_part"] = [
                {
                    "part": p.part,
                    "owned_cells": int(self.subdomains[p.part].n_owned),
                    "halo_cells": int(self.subdomains[p.part].topology.n_halo),
                    "wall_s": round(p.wall_s, 3),
                    "counters": p.counters,
                }
                for p in report.parts
            ]
        return summary

    def _write_summary(self, report: SimulationReport):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        with open(self.output_dir / "run_summary.json", "w", encoding="utf-8") as f:
            json.dump(self.summary(report), f, indent=2, ensure_ascii=False)
