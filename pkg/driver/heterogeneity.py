"""
Spatially uncorrelated lognormal saturated-conductivity fields
"""

from typing import Tuple, Union

import numpy as np

from richards.constitutive import SoilModel
from richards.errors import InvalidInputError
from richards.grid import Grid

DEFAULT_GEO_MEAN = 1e-6           # [m/s]
DEFAULT_SIGMA_LOG10 = 1.17
DEFAULT_CLAMP = (1e-10, 1e-3)     # [m/s]


def lognormal_ks_field(grid: Union[Grid, int],
                       geo_mean: float = DEFAULT_GEO_MEAN,
                       sigma_log10: float = DEFAULT_SIGMA_LOG10,
                       clamp: Tuple[float, float] = DEFAULT_CLAMP,
                       seed: int = 0) -> np.ndarray:
    """
    Independent per-cell draws of log10(Ks) ~ N(log10(geo_mean), sigma_log10^2)

    Args:
        grid: mesh (or a plain cell count)
        geo_mean: geometric mean of Ks [m/s]
        sigma_log10: standard deviation of log10(Ks)
        clamp: (Ks_min, Ks_max) applied after drawing [m/s]
        seed: generator seed; the same seed gives the same field

    Returns:
        Ks per cell in lexicographic order [m/s]
    """
    ncells = grid.ncells if isinstance(grid, Grid) else int(grid)
    lo, hi = clamp
    if not (geo_mean > 0 and 0 < lo <= hi):
        raise InvalidInputError(f"need geo_mean > 0 and 0 < Ks_min <= Ks_max, got {geo_mean}, {clamp}")
    if sigma_log10 < 0:
        raise InvalidInputError(f"sigma_log10 must be >= 0, got {sigma_log10}")
    if sigma_log10 == 0:
        return np.full(ncells, float(np.clip(geo_mean, lo, hi)))
    rng = np.random.default_rng(seed)
    log_ks = rng.normal(loc=np.log10(geo_mean), scale=sigma_log10, size=ncells)
    return np.clip(10.0 ** log_ks, lo, hi)


def apply_ks_field(soil: SoilModel, ks: np.ndarray, mask=None) -> SoilModel:
    """Replace Ks by the field (only where mask is True); other parameters are untouched"""
    base = np.broadcast_to(np.asarray(soil.Ks, dtype=float), ks.shape)
    new_ks = ks if mask is None else np.where(mask, ks, base)
    return soil.with_ks(np.array(new_ks, dtype=float))
