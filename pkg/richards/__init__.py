"""
Parallel finite-volume solver for the 3D Richards equation
Numerical core: closures, mesh and partitioning, linear algebra, assembly,
time stepping and the in-process SPMD substrate
"""

from .assembly import (
    BoundaryCondition,
    Dirichlet,
    FieldState,
    FluxSeriesBC,
    FreeDrainage,
    NeumannFlux,
    assemble,
    check_conditions,
    darcy_flux,
    face_conductivity,
)
from .constitutive import (
    Gardner,
    SoilModel,
    VanGenuchten,
    capillary_capacity,
    chord_slope_capacity,
    hydraulic_conductivity,
    soil_field,
    stored_water,
    water_content,
)
from .errors import RichardsError
from .exchange import ReduceKind, SpmdGroup, gather_field, global_reduce, halo_exchange
from .grid import GridSpec, PatchSpec, build_grid, build_subdomains, partition_simple
from .linsolve import StencilMatrix, StencilTopology, dic_apply, dic_factor, pcg_solve
from .stepper import (
    MassLedger,
    PicardConfig,
    StepOutcome,
    TimeController,
    TransientProblem,
    advance,
    picard_step,
    run_transient,
    update_ledger,
)

__version__ = "1.0.0"
