"""
Steady 1D Gardner column: closed-form head profile and validity checks

Column of height L over a water table (h = 0 at z = 0) with a flux imposed at
the top. The closed form is written for a flux q that is positive downward;
the solver's patch fluxes are positive outward, so at the top q = -q_outward.
"""

import math

import numpy as np

from richards.constitutive import Gardner
from richards.errors import ValidityError
from richards.grid import GridSpec, PatchSpec

from .case_file import CaseSpec, InitialCondition, Numerics, OutputSpec, PatchCondition, SoilZone

GARDNER_KS = 1e-6     # [m/s]
GARDNER_ALPHA = 0.06  # [1/m]


def _log_argument(ks, alpha, q, z):
    return (q + (ks - q) * np.exp(-alpha * np.asarray(z, dtype=float))) / ks


def gardner_analytic_h(ks: float, alpha: float, q: float, z):
    """
    Steady head at height z above the water table [m]

    Args:
        q: top flux density, positive downward (infiltration) [m/s]

    Raises:
        ValidityError: the logarithm's argument is not positive somewhere
    """
    arg = _log_argument(ks, alpha, q, z)
    if np.any(arg <= 0):
        raise ValidityError(f"q={q:g} m/s is outside the closed form's domain at z={np.max(z):g} m")
    h = np.log(arg) / alpha
    return float(h) if np.ndim(h) == 0 else h


def gardner_flux_bound(ks: float, alpha: float, column_height: float) -> float:
    """
    Ks e^(-aL) / (e^(-aL) - 1) for the column height L [m/s]

    Returns -inf when alpha * L underflows: every flux is then admissible.
    """
    denom = math.expm1(alpha * column_height)
    if denom == 0.0:
        return -math.inf
    return -ks / denom


def gardner_admissible(ks: float, alpha: float, column_height: float, q: float) -> bool:
    """
    Flux usable for validation: log argument positive over the whole column
    and no saturated region (q <= Ks, both positive downward)
    """
    if q == 0.0:
        return True
    if q > ks:
        return False
    if not q > gardner_flux_bound(ks, alpha, column_height):
        return False
    z = np.linspace(0.0, column_height, 201)
    return bool(np.all(_log_argument(ks, alpha, q, z) > 0))


def build_gardner_case(q_outward: float, cells: int = 100, height: float = 1.0,
                       ks: float = GARDNER_KS, alpha: float = GARDNER_ALPHA,
                       t_end: float = 2.0e6) -> CaseSpec:
    """
    Column case for one validation flux

    Bottom Dirichlet h = 0 (water table), top flux q_outward, hydrostatic
    start, tight tolerances and a run long enough to reach the steady state.
    """
    grid = GridSpec(cells=(1, 1, cells), spacing=(1.0, 1.0, height / cells), vertical="z",
                    patches=(PatchSpec("bottom", "z-"), PatchSpec("top", "z+")))
    numerics = Numerics(tol_picard=1e-8, pcg_tol=1e-10, dt_init=1.0, dt_max=3600.0)
    conditions = {"bottom": PatchCondition("dirichlet", head=0.0),
                  "top": PatchCondition("flux", flux=float(q_outward))}
    return CaseSpec(grid=grid, zones=(SoilZone("column", Gardner(ks, alpha)),),
                    initial=InitialCondition("hydrostatic", water_table=0.0),
                    conditions=conditions, numerics=numerics, t_end=t_end,
                    output=OutputSpec(), name=f"gardner_q{q_outward:+.2e}")
