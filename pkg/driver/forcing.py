"""
Time-varying boundary forcing
Piecewise-constant flux tables, CSV ingest and a seeded synthetic monsoon year
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from richards.errors import CaseParseError, InvalidInputError, OutOfRangeError

SECONDS_PER_DAY = 86400.0
CSV_COLUMNS = ("t_start_seconds", "flux_m_per_s")


@dataclass(frozen=True, eq=False)
class FluxSeries:
    """
    Records (t_start, flux) valid on [t_start, next t_start); the last one
    holds until end. Flux is positive outward, so rain is negative.
    """
    starts: np.ndarray
    fluxes: np.ndarray
    end: float

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=float)
        fluxes = np.asarray(self.fluxes, dtype=float)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "fluxes", fluxes)
        if starts.ndim != 1 or starts.size == 0 or starts.shape != fluxes.shape:
            raise InvalidInputError("flux series needs matching, non-empty start and flux columns")
        if np.any(np.diff(starts) <= 0):
            raise InvalidInputError("flux series start times must be strictly increasing")
        if not self.end > starts[-1]:
            raise InvalidInputError(f"coverage end {self.end} must follow the last start {starts[-1]}")
        if not np.all(np.isfinite(fluxes)):
            raise InvalidInputError("flux series values must be finite")

    @classmethod
    def from_records(cls, records, end: Optional[float] = None) -> "FluxSeries":
        """Build from (t_start, flux) pairs; end defaults to one more record interval"""
        arr = np.asarray(records, dtype=float).reshape(-1, 2)
        if end is None:
            if arr.shape[0] < 2:
                raise InvalidInputError("a single-record series needs an explicit coverage end")
            end = arr[-1, 0] + (arr[-1, 0] - arr[-2, 0])
        return cls(arr[:, 0], arr[:, 1], float(end))

    def flux_at(self, t: float) -> float:
        if t < self.starts[0] or t > self.end:
            raise OutOfRangeError(
                f"t={t:.6g}s outside flux series coverage [{self.starts[0]:.6g}, {self.end:.6g}]s"
            )
        idx = int(np.searchsorted(self.starts, t, side="right")) - 1
        return float(self.fluxes[idx])

    def __len__(self) -> int:
        return int(self.starts.size)


def flux_at(series: FluxSeries, t: float) -> float:
    """Value of the record whose left-closed interval contains t [m/s]"""
    return series.flux_at(t)


def read_flux_series(path: Union[str, Path], end: Optional[float] = None) -> FluxSeries:
    """
    Load a flux table with the mandatory header t_start_seconds,flux_m_per_s

    Raises:
        CaseParseError: missing columns or unreadable values
    """
    path = Path(path)
    df = pd.read_csv(path, comment="#")
    missing = [c for c in CSV_COLUMNS if c not in df.columns]
    if missing:
        raise CaseParseError([f"missing column(s) {', '.join(missing)} (header must be {','.join(CSV_COLUMNS)})"],
                             source=str(path))
    values = df[list(CSV_COLUMNS)].apply(pd.to_numeric, errors="coerce")
    bad = values.index[values.isna().any(axis=1)].tolist()
    if bad:
        raise CaseParseError([f"line {i + 2}: not a number" for i in bad], source=str(path))
    try:
        return FluxSeries.from_records(values.to_numpy(), end=end)
    except InvalidInputError as err:
        raise CaseParseError([str(err)], source=str(path)) from err


def write_flux_series(series: FluxSeries, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({CSV_COLUMNS[0]: series.starts, CSV_COLUMNS[1]: series.fluxes}).to_csv(
        path, index=False, float_format="%.17g"
    )
    return path


def synthetic_monsoon_series(seed: int = 0, days: int = 365,
                             wet_season=(90, 304),
                             wet_rain_mm=12.0, dry_rain_mm=3.0,
                             wet_probability=0.6, dry_probability=0.1,
                             et_mm=(2.0, 5.0)) -> FluxSeries:
    """
    One daily record per day: evapotranspiration minus rain, outward positive

    The wet season (day-of-year interval) rains often and heavily, the rest of
    the year rarely. Rain depths are exponential draws; evapotranspiration is a
    square wave (low in the wet season, high in the dry one) with 20% noise.
    """
    rng = np.random.default_rng(seed)
    day = np.arange(days)
    doy = day % 365
    wet = (doy >= wet_season[0]) & (doy < wet_season[1])

    p_rain = np.where(wet, wet_probability, dry_probability)
    mean_rain = np.where(wet, wet_rain_mm, dry_rain_mm)
    rains = rng.random(days) < p_rain
    rain_mm = np.where(rains, rng.exponential(mean_rain), 0.0)
    et = np.where(wet, et_mm[0], et_mm[1]) * np.clip(1.0 + 0.2 * rng.standard_normal(days), 0.0, None)

    flux = (et - rain_mm) * 1e-3 / SECONDS_PER_DAY
    return FluxSeries(day * SECONDS_PER_DAY, flux, days * SECONDS_PER_DAY)
