"""
Finite-volume discretization for one Picard iteration
Backward Euler storage with the chord-slope capacity, implicit capillary
diffusion, explicit gravity, and boundary-condition contributions
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Protocol, Union

import numpy as np

from .constitutive import (
    SoilModel,
    chord_slope_capacity,
    hydraulic_conductivity,
    water_content,
)
from .errors import ConfigurationError, InvalidInputError
from .exchange import new_cell_field
from .grid import BoundaryFaces, Grid, SubDomain
from .linsolve import StencilMatrix, StencilTopology


class FluxTable(Protocol):
    def flux_at(self, t: float) -> float:
        ...


@dataclass(frozen=True)
class Dirichlet:
    """Imposed pressure head h_b [m]"""
    head: float

    def __post_init__(self):
        if not np.isfinite(self.head):
            raise InvalidInputError(f"Dirichlet head must be finite, got {self.head}")


@dataclass(frozen=True)
class NeumannFlux:
    """Imposed flux density q [m/s], positive outward"""
    q: float

    def __post_init__(self):
        if not np.isfinite(self.q):
            raise InvalidInputError(f"Neumann flux must be finite, got {self.q}")


@dataclass(frozen=True)
class FreeDrainage:
    """Unit total-head gradient: only gravity drives the outflow"""


@dataclass(frozen=True)
class FluxSeriesBC:
    """Time-varying flux density (positive outward) read from a flux table"""
    series: FluxTable


BoundaryCondition = Union[Dirichlet, NeumannFlux, FreeDrainage, FluxSeriesBC]


@dataclass(eq=False)
class FieldState:
    """
    Fields one Picard iteration reads

    h_old and theta_old cover the owned cells; h_iter and K_iter are extended
    arrays (owned values followed by halo slots).
    """
    h_old: np.ndarray
    h_iter: np.ndarray
    theta_old: np.ndarray
    K_iter: np.ndarray

    @classmethod
    def start(cls, sub: SubDomain, soil: SoilModel, h_old: np.ndarray) -> "FieldState":
        """State at the first iterate of a step: h_iter := h_old, halo slots unset"""
        n = sub.n_owned
        h_iter = new_cell_field(sub.topology)
        h_iter[:n] = h_old
        k_iter = new_cell_field(sub.topology)
        k_iter[:n] = hydraulic_conductivity(soil, h_old)
        return cls(h_old=np.asarray(h_old, dtype=float), h_iter=h_iter,
                   theta_old=np.asarray(water_content(soil, h_old), dtype=float), K_iter=k_iter)


def face_conductivity(k_p, k_n):
    """Arithmetic mean of the two cell conductivities"""
    return 0.5 * (k_p + k_n)


def _soil_at(soil: SoilModel, cells: np.ndarray) -> SoilModel:
    return soil.take(cells) if soil.is_field else soil


def check_conditions(grid: Grid, bcs: Mapping[str, BoundaryCondition]):
    """
    Validate the pairing of grid patches and boundary conditions

    Raises:
        ConfigurationError: a patch without a condition, a condition for an
            unknown patch, an unknown condition type, or free drainage on a
            face whose outward normal does not point down
    """
    missing = sorted(set(grid.patches) - set(bcs))
    if missing:
        raise ConfigurationError(f"no boundary condition for patch(es): {', '.join(missing)}")
    unknown = sorted(set(bcs) - set(grid.patches))
    if unknown:
        raise ConfigurationError(f"boundary condition for unknown patch(es): {', '.join(unknown)}")
    for name, bc in bcs.items():
        if not isinstance(bc, (Dirichlet, NeumannFlux, FreeDrainage, FluxSeriesBC)):
            raise ConfigurationError(f"patch '{name}': unsupported condition {type(bc).__name__}")
        if isinstance(bc, FreeDrainage) and np.any(grid.patches[name].dz >= 0.0):
            raise ConfigurationError(f"patch '{name}': free drainage needs a downward-facing patch")


def _stencil(sub: SubDomain) -> StencilTopology:
    if sub.stencil is None:
        sub.stencil = StencilTopology(sub.n_owned, sub.owner, sub.neighbour, sub.topology.n_halo)
    return sub.stencil


def _boundary_terms(faces: BoundaryFaces, bc: BoundaryCondition, patch_soil: SoilModel,
                    h_iter: np.ndarray, k_iter: np.ndarray, t: float):
    """
    (diag, rhs) additions for the cells of one patch; inflow is positive in rhs

    patch_soil is already restricted to faces.cells, one entry per face.
    """
    cells = faces.cells
    if isinstance(bc, Dirichlet):
        k_b = hydraulic_conductivity(patch_soil, np.full(cells.size, bc.head))
        kf = face_conductivity(k_iter[cells], k_b)
        t_b = kf * faces.area / faces.half_dist
        return t_b, t_b * bc.head + kf * faces.area * faces.dz / faces.half_dist
    if isinstance(bc, NeumannFlux):
        return 0.0, -bc.q * faces.area
    if isinstance(bc, FluxSeriesBC):
        return 0.0, -bc.series.flux_at(t) * faces.area
    if isinstance(bc, FreeDrainage):
        return 0.0, k_iter[cells] * faces.area * faces.dz / faces.half_dist
    raise ConfigurationError(f"patch '{faces.patch}': unsupported condition {type(bc).__name__}")


def assemble(sub: SubDomain, soil: SoilModel, state: FieldState,
             bcs: Mapping[str, BoundaryCondition], dt: float, t_new: float) -> StencilMatrix:
    """
    Build this part's rows of the linear system for h_new

    Args:
        sub: part-local mesh
        soil: soil parameters of the owned cells
        state: old level and current iterate (halos of h_iter and K_iter current)
        bcs: condition per patch name
        dt: step length [s]
        t_new: time level being solved for [s]

    Returns:
        StencilMatrix with one coefficient per face
    """
    if not dt > 0:
        raise InvalidInputError(f"dt must be > 0, got {dt}")
    n = sub.n_owned
    owner, nb = sub.owner, sub.neighbour
    h_iter = state.h_iter
    k_iter = state.K_iter

    capacity = np.asarray(chord_slope_capacity(soil, h_iter[:n], state.h_old))
    storage = np.maximum(capacity, soil.S) * (sub.volume / dt)
    diag = np.broadcast_to(storage, (n,)).copy()
    rhs = diag * state.h_old

    kf = face_conductivity(k_iter[owner], k_iter[nb])
    trans = kf * sub.area / sub.dist
    gravity = trans * sub.dz
    local = nb < n
    diag += np.bincount(owner, weights=trans, minlength=n)
    diag += np.bincount(nb[local], weights=trans[local], minlength=n)
    rhs += np.bincount(owner, weights=gravity, minlength=n)
    rhs -= np.bincount(nb[local], weights=gravity[local], minlength=n)

    for name, faces in sub.boundary.items():
        bc = bcs.get(name)
        if bc is None:
            raise ConfigurationError(f"no boundary condition for patch '{name}'")
        d_add, r_add = _boundary_terms(faces, bc, _soil_at(soil, faces.cells), h_iter, k_iter, t_new)
        diag += np.bincount(faces.cells, weights=np.broadcast_to(d_add, faces.cells.shape), minlength=n)
        rhs += np.bincount(faces.cells, weights=np.broadcast_to(r_add, faces.cells.shape), minlength=n)

    return StencilMatrix(_stencil(sub), diag, -trans, rhs)


@dataclass(eq=False)
class FluxReport:
    """Face fluxes from owner to neighbour and outward flux per patch [m3/s]"""
    face: np.ndarray
    patches: Dict[str, float]

    def net_outflow(self) -> float:
        return float(sum(self.patches.values()))


def darcy_flux(sub: SubDomain, soil: SoilModel, h_ext: np.ndarray, k_ext: np.ndarray,
               bcs: Mapping[str, BoundaryCondition], t: float,
               patch_names: Optional[list] = None) -> FluxReport:
    """
    Discrete Darcy fluxes for a head field

    Uses the same face expressions as assemble, so with the K of the last
    assembly and the solved head the patch totals close the mass balance.
    Patches without faces on this part report 0.
    """
    owner, nb = sub.owner, sub.neighbour
    kf = face_conductivity(k_ext[owner], k_ext[nb])
    face = -kf * sub.area * ((h_ext[nb] - h_ext[owner]) + sub.dz) / sub.dist

    names = list(patch_names) if patch_names is not None else sorted(bcs)
    patches = {name: 0.0 for name in names}
    for name, faces in sub.boundary.items():
        bc = bcs[name]
        d_add, r_add = _boundary_terms(faces, bc, _soil_at(soil, faces.cells), h_ext, k_ext, t)
        shape = faces.cells.shape
        inflow = np.broadcast_to(r_add, shape) - np.broadcast_to(d_add, shape) * h_ext[faces.cells]
        patches[name] = float(-inflow.sum())
    return FluxReport(face, patches)
