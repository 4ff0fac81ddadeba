"""
Soil hydraulic closures: retention curve, capillary capacity, conductivity
van Genuchten / Mualem and Gardner models, scalar or per-cell arrays
"""

from dataclasses import dataclass, fields, replace
from typing import Sequence, Union

import numpy as np

from .errors import InvalidInputError

ArrayLike = Union[float, np.ndarray]

DEFAULT_STORATIVITY = 1e-5   # [1/m], used when a case omits S
EPS_CHORD = 1e-9             # [m], below this the chord falls back to the analytic slope


def _check(condition, message: str):
    if not np.all(condition):
        raise InvalidInputError(message)


class _SoilBase:
    """Shared helpers for soil parameter sets (fields may be floats or arrays)"""

    def take(self, idx):
        """Return the same model with every per-cell array field indexed by idx"""
        changes = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, np.ndarray):
                changes[f.name] = value[idx]
        return replace(self, **changes)

    def with_ks(self, ks: ArrayLike):
        """Replace the saturated conductivity (scalar or per-cell)"""
        return replace(self, Ks=ks)

    @property
    def is_field(self) -> bool:
        return any(isinstance(getattr(self, f.name), np.ndarray) for f in fields(self))


@dataclass(frozen=True, eq=False)
class VanGenuchten(_SoilBase):
    """van Genuchten retention with Mualem conductivity"""
    Ks: ArrayLike
    alpha: ArrayLike
    n: ArrayLike
    theta_s: ArrayLike
    theta_r: ArrayLike
    S: ArrayLike = DEFAULT_STORATIVITY

    def __post_init__(self):
        _check(np.asarray(self.Ks) > 0, f"Ks must be > 0, got {self.Ks}")
        _check(np.asarray(self.alpha) > 0, f"alpha must be > 0, got {self.alpha}")
        _check(np.asarray(self.n) > 1, f"n must be > 1, got {self.n}")
        _check(np.asarray(self.theta_r) >= 0, f"theta_r must be >= 0, got {self.theta_r}")
        _check(np.asarray(self.theta_r) < np.asarray(self.theta_s),
               f"theta_r < theta_s violated ({self.theta_r} >= {self.theta_s})")
        _check(np.asarray(self.theta_s) <= 1, f"theta_s must be <= 1, got {self.theta_s}")
        _check(np.asarray(self.S) >= 0, f"S must be >= 0, got {self.S}")

    @property
    def m(self) -> ArrayLike:
        return 1.0 - 1.0 / self.n

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return all(np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self))


@dataclass(frozen=True, eq=False)
class Gardner(_SoilBase):
    """
    Gardner exponential conductivity K = Ks exp(alpha h)

    Retention uses the matching exponential curve so transient runs can march
    to the steady state; the steady state itself only depends on Ks and alpha.
    """
    Ks: ArrayLike
    alpha: ArrayLike
    theta_s: ArrayLike = 0.40
    theta_r: ArrayLike = 0.05
    S: ArrayLike = DEFAULT_STORATIVITY

    def __post_init__(self):
        _check(np.asarray(self.Ks) > 0, f"Ks must be > 0, got {self.Ks}")
        _check(np.asarray(self.alpha) > 0, f"alpha must be > 0, got {self.alpha}")
        _check(np.asarray(self.theta_r) >= 0, f"theta_r must be >= 0, got {self.theta_r}")
        _check(np.asarray(self.theta_r) < np.asarray(self.theta_s),
               f"theta_r < theta_s violated ({self.theta_r} >= {self.theta_s})")
        _check(np.asarray(self.theta_s) <= 1, f"theta_s must be <= 1, got {self.theta_s}")
        _check(np.asarray(self.S) >= 0, f"S must be >= 0, got {self.S}")

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return all(np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self))


SoilModel = Union[VanGenuchten, Gardner]


def _as_head(h: ArrayLike) -> np.ndarray:
    arr = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("pressure head must be finite")
    return arr


def _out(arr: np.ndarray, like: ArrayLike) -> ArrayLike:
    if np.ndim(like) == 0 and np.ndim(arr) == 0:
        return float(arr)
    return arr


def effective_saturation(soil: SoilModel, h: ArrayLike) -> ArrayLike:
    """Se in [0, 1]; 1 for h >= 0"""
    head = _as_head(h)
    hn = np.minimum(head, 0.0)
    if isinstance(soil, Gardner):
        se = np.exp(soil.alpha * hn)
    else:
        se = np.exp(-soil.m * np.log1p((-soil.alpha * hn) ** soil.n))
    return _out(np.where(head >= 0.0, 1.0, se), h)


def water_content(soil: SoilModel, h: ArrayLike) -> ArrayLike:
    """
    Volumetric water content theta(h)

    Args:
        soil: soil parameter set (scalars or per-cell arrays)
        h: pressure head [m]

    Returns:
        theta in [theta_r, theta_s]
    """
    se = np.asarray(effective_saturation(soil, h))
    theta = soil.theta_r + (soil.theta_s - soil.theta_r) * se
    head = np.asarray(h, dtype=float)
    return _out(np.where(head >= 0.0, soil.theta_s, theta), h)


def capillary_capacity(soil: SoilModel, h: ArrayLike) -> ArrayLike:
    """Analytic d(theta)/dh for h < 0, specific storativity S for h >= 0 [1/m]"""
    head = _as_head(h)
    hn = np.minimum(head, 0.0)
    if isinstance(soil, Gardner):
        c = soil.alpha * (soil.theta_s - soil.theta_r) * np.exp(soil.alpha * hn)
    else:
        x = -soil.alpha * hn
        c = ((soil.theta_s - soil.theta_r) * soil.alpha * soil.n * soil.m
             * x ** (soil.n - 1.0)
             * np.exp(-(1.0 + soil.m) * np.log1p(x ** soil.n)))
    return _out(np.where(head >= 0.0, soil.S, c), h)


def hydraulic_conductivity(soil: SoilModel, h: ArrayLike) -> ArrayLike:
    """
    Hydraulic conductivity K(h) [m/s], Ks for h >= 0

    Mualem: K = Ks Se^0.5 (1 - (1 - Se^(1/m))^m)^2, evaluated through
    log1p/expm1 so very dry heads keep a positive value.
    """
    head = _as_head(h)
    hn = np.minimum(head, 0.0)
    if isinstance(soil, Gardner):
        k = soil.Ks * np.exp(soil.alpha * hn)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            x = -soil.alpha * hn
            xn = x ** soil.n
            log1p_xn = np.log1p(xn)
            se = np.exp(-soil.m * log1p_xn)
            # log(1 - Se^(1/m)) = log(x^n) - log(1 + x^n)
            log_one_minus = soil.n * np.log(x) - log1p_xn
            inner = -np.expm1(soil.m * log_one_minus)
            k = soil.Ks * np.sqrt(se) * inner * inner
    return _out(np.where(head >= 0.0, soil.Ks, k), h)


def chord_slope_capacity(soil: SoilModel, h_iter: ArrayLike, h_old: ArrayLike) -> ArrayLike:
    """
    Secant capacity (theta(h_iter) - theta(h_old)) / (h_iter - h_old) [1/m]

    - |dh| <= EPS_CHORD: analytic capacity at h_iter
    - both heads saturated: S
    - chord crossing h = 0: raw chord plus S
    """
    hi = _as_head(h_iter)
    ho = _as_head(h_old)
    dh = hi - ho
    use_chord = np.abs(dh) > EPS_CHORD
    sat_i = hi >= 0.0
    sat_o = ho >= 0.0

    theta_i = np.asarray(water_content(soil, hi))
    theta_o = np.asarray(water_content(soil, ho))
    chord = np.maximum((theta_i - theta_o) / np.where(use_chord, dh, 1.0), 0.0)

    c = np.where(use_chord, chord, np.asarray(capillary_capacity(soil, hi)))
    c = np.where(use_chord & (sat_i != sat_o), chord + soil.S, c)
    c = np.where(sat_i & sat_o, soil.S, c)
    if np.ndim(c) == 0:
        return float(c)
    return c


def stored_water(soil: SoilModel, h: ArrayLike) -> ArrayLike:
    """Water volume per unit bulk volume: theta plus elastic storage S*h above saturation"""
    head = _as_head(h)
    stored = np.asarray(water_content(soil, head)) + soil.S * np.maximum(head, 0.0)
    return _out(stored, h)


def soil_field(soils: Sequence[SoilModel], zone_of_cell: np.ndarray) -> SoilModel:
    """
    Gather zone soils into one per-cell parameter set

    Args:
        soils: one soil per zone, all of the same variant
        zone_of_cell: zone index per cell

    Returns:
        soil whose fields are arrays with one entry per cell
    """
    kinds = {type(s) for s in soils}
    if len(kinds) != 1:
        raise InvalidInputError("all soil zones must use the same closure variant")
    kind = kinds.pop()
    zone_of_cell = np.asarray(zone_of_cell, dtype=np.int64)
    values = {}
    for f in fields(kind):
        per_zone = np.array([np.asarray(getattr(s, f.name), dtype=float) for s in soils])
        values[f.name] = per_zone[zone_of_cell]
    return kind(**values)
