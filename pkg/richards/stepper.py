"""
Nonlinear transient driver
Picard linearization with a global exit test, empirically based adaptive time
stepping (grow after streaks of easy steps, shrink and rerun on failure) and
the global water-mass ledger
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Optional, Protocol, Sequence

import numpy as np

from .assembly import BoundaryCondition, FieldState, FluxReport, assemble, darcy_flux
from .constitutive import SoilModel, hydraulic_conductivity, stored_water
from .errors import (
    FactorizationBreakdown,
    InvalidInputError,
    NoConvergenceError,
    NumericalBlowupError,
    StepFailure,
    UnrecoverableStepError,
)
from .exchange import ReduceKind, new_cell_field
from .grid import SubDomain
from .linsolve import DEFAULT_MAX_ITER, HaloFn, ReduceFn, no_halo, pcg_solve, serial_reduce

GatherFn = Callable[[np.ndarray], Optional[np.ndarray]]

RUN_LOG_COLUMNS = ["t", "dt", "picard_iters", "pcg_iters_total", "mass_error"]
REJECTED_COLUMNS = ["t_target", "dt", "reason", "picard_iters", "pcg_iters"]


def _identity_gather(h: np.ndarray) -> np.ndarray:
    return h


@dataclass(frozen=True)
class PicardConfig:
    tol_picard: float = 1e-3
    pcg_tol: float = 1e-4
    max_picard_iters: int = 8
    pcg_max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if not (self.tol_picard > 0 and self.pcg_tol > 0):
            raise InvalidInputError("Picard and PCG tolerances must be > 0")
        if not self.tol_picard > self.pcg_tol:
            raise InvalidInputError(
                f"tol_picard ({self.tol_picard}) must exceed pcg_tol ({self.pcg_tol})"
            )
        if self.max_picard_iters < 1 or self.pcg_max_iter < 1:
            raise InvalidInputError("iteration caps must be >= 1")


@dataclass(eq=False)
class PicardResult:
    h_new: np.ndarray
    K_ext: np.ndarray
    iterations: int
    pcg_iterations: int
    delta: float


def _global_all(flag: bool, reduce: ReduceFn) -> bool:
    """True when flag holds on every part"""
    return reduce(ReduceKind.MAX, 0.0 if flag else 1.0) == 0.0


def picard_step(sub: SubDomain, soil: SoilModel, h_old: np.ndarray,
                bcs: Mapping[str, BoundaryCondition], dt: float, t_new: float,
                cfg: PicardConfig,
                reduce: ReduceFn = serial_reduce,
                halo: HaloFn = no_halo) -> PicardResult:
    """
    Advance one step by fixed-point iteration on the head

    The exit test is the max over all cells of |h_next - h_iter|, reduced
    globally so every part takes the same decision.

    Raises:
        StepFailure: cap reached, or the linear solver failed inside an iteration
        NumericalBlowupError: a non-finite head appeared
    """
    n = sub.n_owned
    state = FieldState.start(sub, soil, h_old)
    pcg_total = 0
    delta = math.inf

    for it in range(1, cfg.max_picard_iters + 1):
        halo(state.h_iter)
        state.K_iter[:n] = hydraulic_conductivity(soil, state.h_iter[:n])
        halo(state.K_iter)
        matrix = assemble(sub, soil, state, bcs, dt, t_new)
        try:
            h_next, pcg_iters = pcg_solve(matrix, state.h_iter[:n], cfg.pcg_tol, cfg.pcg_max_iter,
                                          reduce=reduce, halo=halo)
        except (NoConvergenceError, FactorizationBreakdown) as err:
            raise StepFailure(str(err), it, pcg_total) from err
        pcg_total += pcg_iters

        local = float(np.max(np.abs(h_next - state.h_iter[:n]))) if n else 0.0
        delta = reduce(ReduceKind.MAX, local)
        if not math.isfinite(delta):
            raise NumericalBlowupError(f"non-finite head at t={t_new:.6g}s (Picard iteration {it})")

        # with old level, iterate and solution all saturated, K and the chord
        # capacity no longer depend on h: the next solve would repeat this one
        saturated = (np.all(state.h_old >= 0.0) and np.all(state.h_iter[:n] >= 0.0)
                     and np.all(h_next >= 0.0))
        linear = _global_all(bool(saturated), reduce)
        state.h_iter[:n] = h_next
        if delta <= cfg.tol_picard or linear:
            return PicardResult(h_next, state.K_iter, it, pcg_total, delta)

    raise StepFailure(f"no Picard convergence (delta {delta:.3e} m > {cfg.tol_picard:.1e} m)",
                      cfg.max_picard_iters, pcg_total)


# --- adaptive time stepping -------------------------------------------------

@dataclass
class TimeController:
    """
    Step-size state machine

    dt grows by grow_factor after streak_needed consecutive steps needing at
    most quick_iters Picard iterations; a failed step is rerun with
    dt / grow_factor.
    """
    dt_init: float
    dt_max: float
    dt_min: float = 1e-3
    grow_factor: float = 1.3
    quick_iters: int = 3
    streak_needed: int = 10
    dt: float = field(init=False)
    good_streak: int = field(default=0, init=False)

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise InvalidInputError(
                f"need 0 < dt_min <= dt_init <= dt_max, got {self.dt_min}, {self.dt_init}, {self.dt_max}"
            )
        if not self.grow_factor > 1:
            raise InvalidInputError(f"grow_factor must be > 1, got {self.grow_factor}")
        if self.quick_iters < 1 or self.streak_needed < 1:
            raise InvalidInputError("quick_iters and streak_needed must be >= 1")
        self.dt = self.dt_init


@dataclass(frozen=True)
class StepOutcome:
    converged: bool
    picard_iters: int


def advance(ctrl: TimeController, outcome: StepOutcome):
    """
    Update the controller after a step attempt

    Returns:
        (accepted, next dt)

    Raises:
        UnrecoverableStepError: the step failed with dt already at dt_min
    """
    if not outcome.converged:
        if ctrl.dt <= ctrl.dt_min:
            raise UnrecoverableStepError(
                f"step failed at dt_min={ctrl.dt_min:g}s after {outcome.picard_iters} Picard iterations"
            )
        ctrl.dt = max(ctrl.dt / ctrl.grow_factor, ctrl.dt_min)
        ctrl.good_streak = 0
        return False, ctrl.dt

    if outcome.picard_iters <= ctrl.quick_iters:
        ctrl.good_streak += 1
    else:
        ctrl.good_streak = 0
    if ctrl.good_streak >= ctrl.streak_needed:
        grown = min(ctrl.dt * ctrl.grow_factor, ctrl.dt_max)
        ctrl.good_streak = 0
        ctrl.dt = grown
    return True, ctrl.dt


# --- mass ledger ------------------------------------------------------------

@dataclass(frozen=True)
class MassLedger:
    """Water volumes [m3]; boundary volumes are outward-positive per patch"""
    initial_storage: float
    storage: float
    cumulative_boundary: Dict[str, float] = field(default_factory=dict)
    cumulative_error: float = 0.0

    @property
    def net_inflow(self) -> float:
        return -sum(self.cumulative_boundary.values())

    @property
    def relative_error(self) -> float:
        return self.cumulative_error / self.initial_storage if self.initial_storage else 0.0


def total_storage(sub: SubDomain, soil: SoilModel, h: np.ndarray, reduce: ReduceFn = serial_reduce) -> float:
    """Stored water over all parts [m3]"""
    local = float(np.sum(np.asarray(stored_water(soil, h)) * sub.volume))
    return reduce(ReduceKind.SUM, local)


def update_ledger(ledger: MassLedger, storage: float, patch_flux: Mapping[str, float], dt: float) -> MassLedger:
    """Book one accepted step: new storage and patch outflows integrated over dt"""
    boundary = dict(ledger.cumulative_boundary)
    for name, q in patch_flux.items():
        boundary[name] = boundary.get(name, 0.0) + q * dt
    error = abs(storage - ledger.initial_storage + sum(boundary.values()))
    return replace(ledger, storage=storage, cumulative_boundary=boundary, cumulative_error=error)


# --- transient run ----------------------------------------------------------

class Observer(Protocol):
    """Output hook fired at t=0, every interval and at t_end (on the writer part only)"""
    interval: Optional[float]

    def __call__(self, t: float, h: np.ndarray) -> None:
        ...


@dataclass(eq=False)
class TransientProblem:
    sub: SubDomain
    soil: SoilModel
    h_init: np.ndarray
    bcs: Mapping[str, BoundaryCondition]
    patch_names: Sequence[str]


@dataclass(eq=False)
class RunResult:
    h: np.ndarray
    t: float
    log: List[dict]
    rejected: List[dict]
    history: List[dict]
    ledger: MassLedger

    @property
    def accepted_steps(self) -> int:
        return len(self.log)

    @property
    def pcg_iterations(self) -> int:
        return int(sum(row["pcg_iters_total"] for row in self.log))

    def step_sequence(self):
        """(dt, Picard count) per accepted step"""
        return [(row["dt"], row["picard_iters"]) for row in self.log]


def _next_event(t: float, t_end: float, observers: Sequence[Observer]) -> float:
    event = t_end
    for obs in observers:
        if obs.interval:
            k = math.floor(t / obs.interval + 1e-9) + 1
            event = min(event, k * obs.interval)
    return event


def _on_interval(t: float, interval: Optional[float]) -> bool:
    if not interval:
        return False
    k = round(t / interval)
    return k > 0 and abs(t - k * interval) <= 1e-9 * max(1.0, t)


def _history_row(t: float, prob: TransientProblem, h: np.ndarray, storage: float,
                 fluxes: Dict[str, float], ncells: int, reduce: ReduceFn) -> dict:
    row = {"t": t, "mean_head": reduce(ReduceKind.SUM, float(np.sum(h))) / ncells, "storage": storage}
    row.update({f"flux_{name}": fluxes.get(name, 0.0) for name in prob.patch_names})
    return row


def _patch_fluxes(prob: TransientProblem, h_new: np.ndarray, k_ext: np.ndarray, t: float,
                  reduce: ReduceFn, halo: HaloFn) -> Dict[str, float]:
    h_ext = new_cell_field(prob.sub.topology)
    h_ext[:prob.sub.n_owned] = h_new
    halo(h_ext)
    report: FluxReport = darcy_flux(prob.sub, prob.soil, h_ext, k_ext, prob.bcs, t, list(prob.patch_names))
    values = reduce(ReduceKind.SUM, np.array([report.patches[n] for n in prob.patch_names], dtype=float))
    return dict(zip(prob.patch_names, np.atleast_1d(values).tolist()))


def run_transient(prob: TransientProblem, t_end: float, cfg: PicardConfig, ctrl: TimeController,
                  observers: Sequence[Observer] = (),
                  reduce: ReduceFn = serial_reduce,
                  halo: HaloFn = no_halo,
                  gather: GatherFn = _identity_gather) -> RunResult:
    """
    March from t=0 to t_end with Picard steps under adaptive time stepping

    The step is clipped so observer events and t_end are hit exactly. Observers
    receive the gathered global head (gather returns None on non-writer parts).

    Raises:
        UnrecoverableStepError, NumericalBlowupError: with .log holding the
            accepted steps so far
    """
    if not t_end > 0:
        raise InvalidInputError(f"t_end must be > 0, got {t_end}")
    sub, soil = prob.sub, prob.soil
    ncells = int(reduce(ReduceKind.SUM, float(sub.n_owned)))
    h = np.array(prob.h_init, dtype=float)
    t = 0.0

    storage0 = total_storage(sub, soil, h, reduce)
    ledger = MassLedger(storage0, storage0, {name: 0.0 for name in prob.patch_names})
    log: List[dict] = []
    rejected: List[dict] = []
    history = [_history_row(0.0, prob, h, storage0, {}, ncells, reduce)]

    def notify(time):
        due = [obs for obs in observers if time in (0.0, t_end) or _on_interval(time, obs.interval)]
        if not due:
            return
        h_global = gather(h)
        if h_global is not None:
            for obs in due:
                obs(time, h_global)

    notify(0.0)
    try:
        while t < t_end:
            event = _next_event(t, t_end, observers)
            dt = ctrl.dt
            if t + dt >= event - 1e-9 * max(1.0, event):
                dt = event - t
                t_new = event
            else:
                t_new = t + dt

            try:
                result = picard_step(sub, soil, h, prob.bcs, dt, t_new, cfg, reduce, halo)
            except StepFailure as failure:
                rejected.append({"t_target": t_new, "dt": dt, "reason": failure.reason,
                                 "picard_iters": failure.picard_iters, "pcg_iters": failure.pcg_iters})
                if dt < ctrl.dt:
                    # a clipped step failed: shrink below the clipped length
                    ctrl.dt = max(dt, ctrl.dt_min)
                advance(ctrl, StepOutcome(False, failure.picard_iters))
                continue

            h = result.h_new
            fluxes = _patch_fluxes(prob, h, result.K_ext, t_new, reduce, halo)
            storage = total_storage(sub, soil, h, reduce)
            ledger = update_ledger(ledger, storage, fluxes, dt)
            t = t_new
            log.append({"t": t, "dt": dt, "picard_iters": result.iterations,
                        "pcg_iters_total": result.pcg_iterations, "mass_error": ledger.cumulative_error})
            history.append(_history_row(t, prob, h, storage, fluxes, ncells, reduce))
            advance(ctrl, StepOutcome(True, result.iterations))
            if t == event:
                notify(t)
    except (UnrecoverableStepError, NumericalBlowupError) as err:
        err.log = log
        err.rejected = rejected
        raise

    return RunResult(h, t, log, rejected, history, ledger)
