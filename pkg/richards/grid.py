"""
Uniform structured 3D grid, boundary patches and the "simple" partitioner
Cells are numbered lexicographically: index = i + nx * (j + ny * k)
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidSpecError

AXIS_NAMES = ("x", "y", "z")
FACE_NAMES = ("x-", "x+", "y-", "y+", "z-", "z+")
DEFAULT_PATCH = "walls"   # receives every exterior face no patch claims


@dataclass(frozen=True)
class PatchSpec:
    """
    A named set of exterior faces

    Args:
        name: patch identifier
        face: one of x-, x+, y-, y+, z-, z+
        region: optional (a0, a1, b0, b1) half-open cell ranges along the two
            tangential axes (in x, y, z order); None means the whole face
    """
    name: str
    face: str
    region: Optional[Tuple[int, int, int, int]] = None


@dataclass(frozen=True)
class GridSpec:
    cells: Tuple[int, int, int]
    spacing: Tuple[float, float, float]
    origin: Optional[Tuple[float, float, float]] = None
    vertical: str = "z"
    slope: Tuple[float, float] = (0.0, 0.0)
    patches: Tuple[PatchSpec, ...] = ()


@dataclass(frozen=True, eq=False)
class BoundaryFaces:
    """Exterior faces of one patch: owning cell, face area, half spacing, z_face - z_cell"""
    patch: str
    cells: np.ndarray
    area: np.ndarray
    half_dist: np.ndarray
    dz: np.ndarray

    @property
    def size(self) -> int:
        return int(self.cells.size)


def _tangential(axis: int) -> Tuple[int, int]:
    return tuple(a for a in range(3) if a != axis)


class Grid:
    """Uniform structured mesh with precomputed cell elevations and patches"""

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.nx, self.ny, self.nz = (int(c) for c in spec.cells)
        self.dx, self.dy, self.dz = (float(d) for d in spec.spacing)
        if spec.origin is None:
            self.origin = (0.5 * self.dx, 0.5 * self.dy, 0.5 * self.dz)
        else:
            self.origin = tuple(float(o) for o in spec.origin)
        self.gravity_axis = AXIS_NAMES.index(spec.vertical)
        self.slope_angles = tuple(float(a) for a in spec.slope)
        self.up = self._up_vector()
        self.elevation = self.centers() @ self.up
        self._faces = None
        self.patches: Dict[str, BoundaryFaces] = self._build_patches(spec.patches)

    # --- geometry -------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> Tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def ncells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def volume(self) -> float:
        """Cell volume, identical for every cell"""
        return self.dx * self.dy * self.dz

    @property
    def strides(self) -> Tuple[int, int, int]:
        return (1, self.nx, self.nx * self.ny)

    def face_area(self, axis: int) -> float:
        a, b = _tangential(axis)
        return self.spacing[a] * self.spacing[b]

    def cell_index(self, i, j, k):
        return np.asarray(i) + self.nx * (np.asarray(j) + self.ny * np.asarray(k))

    def ijk(self, index) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        index = np.asarray(index)
        return index % self.nx, (index // self.nx) % self.ny, index // (self.nx * self.ny)

    def centers(self) -> np.ndarray:
        """Cell-center coordinates, shape (ncells, 3)"""
        i, j, k = self.ijk(np.arange(self.ncells))
        return np.column_stack([
            self.origin[0] + i * self.dx,
            self.origin[1] + j * self.dy,
            self.origin[2] + k * self.dz,
        ])

    def _up_vector(self) -> np.ndarray:
        # the mesh stays axis-aligned; tilting rotates the elevation field instead
        h1, h2 = _tangential(self.gravity_axis)
        a1, a2 = np.radians(self.slope_angles)
        up = np.zeros(3)
        up[h1] = np.sin(a1)
        up[h2] = np.cos(a1) * np.sin(a2)
        up[self.gravity_axis] = np.cos(a1) * np.cos(a2)
        return up

    def interior_faces(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(owner, neighbour, axis) for every interior face, owner < neighbour"""
        if self._faces is None:
            all_cells = np.arange(self.ncells)
            coords = self.ijk(all_cells)
            owners, neighbours, axes = [], [], []
            for axis in range(3):
                mask = coords[axis] < self.shape[axis] - 1
                own = all_cells[mask]
                owners.append(own)
                neighbours.append(own + self.strides[axis])
                axes.append(np.full(own.size, axis, dtype=np.int8))
            self._faces = (np.concatenate(owners), np.concatenate(neighbours), np.concatenate(axes))
        return self._faces

    # --- patches --------------------------------------------------------

    def _build_patches(self, specs: Sequence[PatchSpec]) -> Dict[str, BoundaryFaces]:
        names = [p.name for p in specs]
        if len(set(names)) != len(names):
            raise InvalidSpecError(f"duplicate patch names: {names}")
        if DEFAULT_PATCH in names:
            raise InvalidSpecError(f"patch name '{DEFAULT_PATCH}' is reserved")

        collected: Dict[str, List[Tuple[np.ndarray, int, int]]] = {n: [] for n in names}
        leftovers = []
        for face_id, face in enumerate(FACE_NAMES):
            axis, side = face_id // 2, (-1 if face.endswith("-") else 1)
            t1, t2 = _tangential(axis)
            owner_map = np.full((self.shape[t1], self.shape[t2]), -1, dtype=np.int64)
            for pid, patch in enumerate(specs):
                if patch.face not in FACE_NAMES:
                    raise InvalidSpecError(f"patch '{patch.name}': unknown face '{patch.face}'")
                if patch.face != face:
                    continue
                a0, a1, b0, b1 = patch.region or (0, self.shape[t1], 0, self.shape[t2])
                if not (0 <= a0 < a1 <= self.shape[t1] and 0 <= b0 < b1 <= self.shape[t2]):
                    raise InvalidSpecError(f"patch '{patch.name}': region {patch.region} outside face {face}")
                if np.any(owner_map[a0:a1, b0:b1] >= 0):
                    raise InvalidSpecError(f"patch '{patch.name}' overlaps another patch on face {face}")
                owner_map[a0:a1, b0:b1] = pid

            ta, tb = np.meshgrid(np.arange(self.shape[t1]), np.arange(self.shape[t2]), indexing="ij")
            coords = [None, None, None]
            coords[axis] = np.zeros_like(ta) if side < 0 else np.full_like(ta, self.shape[axis] - 1)
            coords[t1], coords[t2] = ta, tb
            cells = self.cell_index(*coords)
            for pid in np.unique(owner_map):
                sel = owner_map == pid
                entry = (cells[sel].ravel(), axis, side)
                if pid < 0:
                    leftovers.append(entry)
                else:
                    collected[specs[pid].name].append(entry)

        patches = {}
        for name, entries in collected.items():
            if entries:
                patches[name] = self._faces_for(name, entries)
        if leftovers:
            patches[DEFAULT_PATCH] = self._faces_for(DEFAULT_PATCH, leftovers)
        return patches

    def _faces_for(self, name: str, entries) -> BoundaryFaces:
        cells, area, half, dz = [], [], [], []
        for face_cells, axis, side in entries:
            n = face_cells.size
            cells.append(face_cells)
            area.append(np.full(n, self.face_area(axis)))
            half.append(np.full(n, 0.5 * self.spacing[axis]))
            dz.append(np.full(n, side * 0.5 * self.spacing[axis] * self.up[axis]))
        return BoundaryFaces(name, np.concatenate(cells), np.concatenate(area),
                             np.concatenate(half), np.concatenate(dz))


def build_grid(spec: GridSpec) -> Grid:
    """
    Validate a grid specification and build the mesh

    Raises:
        InvalidSpecError: non-positive counts or spacings, bad axis or patches
    """
    if len(spec.cells) != 3 or any(int(c) < 1 for c in spec.cells):
        raise InvalidSpecError(f"cell counts must be three integers >= 1, got {spec.cells}")
    if len(spec.spacing) != 3 or any(not float(d) > 0 for d in spec.spacing):
        raise InvalidSpecError(f"spacings must be three values > 0, got {spec.spacing}")
    if spec.vertical not in AXIS_NAMES:
        raise InvalidSpecError(f"vertical axis must be one of {AXIS_NAMES}, got {spec.vertical!r}")
    if len(spec.slope) != 2:
        raise InvalidSpecError(f"slope needs two angles, got {spec.slope}")
    return Grid(spec)


# --- partitioning ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PartitionMap:
    shape: Tuple[int, int, int]
    parts: int
    cuts: Tuple[int, int, int]
    assignment: np.ndarray
    owned: Tuple[np.ndarray, ...]
    local_index: np.ndarray
    interfaces: Dict[Tuple[int, int], np.ndarray]

    def part_sizes(self) -> np.ndarray:
        return np.array([o.size for o in self.owned])


def _prime_factors(n: int) -> List[int]:
    factors, p = [], 2
    while p * p <= n:
        while n % p == 0:
            factors.append(p)
            n //= p
        p += 1
    if n > 1:
        factors.append(n)
    return sorted(factors, reverse=True)


def auto_cuts(shape: Sequence[int], parts: int) -> Tuple[int, int, int]:
    """Assign prime factors of parts to the axis with the most cells per cut"""
    cuts = [1, 1, 1]
    for f in _prime_factors(parts):
        axis = max(range(3), key=lambda a: (shape[a] / cuts[a], -a))
        cuts[axis] *= f
    return tuple(cuts)


def partition_simple(grid: Grid, parts: int, cuts: Optional[Sequence[int]] = None) -> PartitionMap:
    """
    Axis-aligned decomposition: split along x, then y within each slab, then z

    Each split is sized so the final part counts differ by at most one cell;
    exact blocks come out when the cuts divide the cell counts.
    """
    n = grid.ncells
    if parts < 1:
        raise InvalidSpecError(f"parts must be >= 1, got {parts}")
    if parts > n:
        raise InvalidSpecError(f"cannot split {n} cells into {parts} parts")
    cuts = tuple(int(c) for c in (cuts if cuts is not None else auto_cuts(grid.shape, parts)))
    if len(cuts) != 3 or any(c < 1 for c in cuts) or int(np.prod(cuts)) != parts:
        raise InvalidSpecError(f"cuts {cuts} do not multiply to {parts} parts")

    targets = np.full(parts, n // parts, dtype=np.int64)
    targets[: n % parts] += 1
    coords = grid.ijk(np.arange(n))

    groups = [(np.arange(n), 0)]
    block = parts
    for axis, count in enumerate(cuts):
        block //= count
        others = [a for a in (2, 1, 0) if a != axis]
        refined = []
        for cells, first in groups:
            keys = tuple(coords[a][cells] for a in others) + (coords[axis][cells],)
            ordered = cells[np.lexsort(keys)]
            sizes = [int(targets[first + g * block: first + (g + 1) * block].sum()) for g in range(count)]
            bounds = np.concatenate([[0], np.cumsum(sizes)])
            for g in range(count):
                refined.append((ordered[bounds[g]:bounds[g + 1]], first + g * block))
        groups = refined

    assignment = np.empty(n, dtype=np.int64)
    for cells, part in groups:
        assignment[cells] = part
    owned = tuple(np.flatnonzero(assignment == p) for p in range(parts))
    local_index = np.empty(n, dtype=np.int64)
    for cells in owned:
        local_index[cells] = np.arange(cells.size)

    owner, neighbour, _ = grid.interior_faces()
    po, pn = assignment[owner], assignment[neighbour]
    cut = po != pn
    interfaces: Dict[Tuple[int, int], np.ndarray] = {}
    for a, b, ca, cb in ((po, pn, owner, neighbour), (pn, po, neighbour, owner)):
        a, b, ca, cb = a[cut], b[cut], ca[cut], cb[cut]
        for pair in {(int(x), int(y)) for x, y in zip(a, b)} if a.size else ():
            sel = (a == pair[0]) & (b == pair[1])
            interfaces[pair] = np.column_stack([ca[sel], cb[sel]])
    return PartitionMap(grid.shape, parts, cuts, assignment, owned, local_index, interfaces)


@dataclass(frozen=True, eq=False)
class HaloLink:
    """Cells one part sends to a neighbour part and the halo slots it fills on receipt"""
    neighbor: int
    send: np.ndarray
    recv: np.ndarray


@dataclass(frozen=True, eq=False)
class HaloTopology:
    part: int
    n_owned: int
    halo_cells: np.ndarray
    links: Tuple[HaloLink, ...]

    @property
    def n_halo(self) -> int:
        return int(self.halo_cells.size)

    @property
    def n_ext(self) -> int:
        return self.n_owned + self.n_halo


def halo_topology(pmap: PartitionMap) -> List[HaloTopology]:
    """
    Per-part send/receive lists for a stencil of width one

    Halo slots are ordered by neighbour part, then by global cell index; the
    send list towards a part uses the same order so messages map one-to-one.
    """
    result = []
    for p in range(pmap.parts):
        halo_parts, links, offset = [], [], 0
        for q in range(pmap.parts):
            pair = pmap.interfaces.get((p, q))
            if pair is None:
                continue
            remote = np.unique(pair[:, 1])
            mine = np.unique(pair[:, 0])
            links.append(HaloLink(q, pmap.local_index[mine], np.arange(offset, offset + remote.size)))
            halo_parts.append(remote)
            offset += remote.size
        halo = np.concatenate(halo_parts) if halo_parts else np.empty(0, dtype=np.int64)
        result.append(HaloTopology(p, int(pmap.owned[p].size), halo, tuple(links)))
    return result


@dataclass(eq=False)
class SubDomain:
    """
    One part's view of the mesh in part-local numbering

    Owned cells are 0..n_owned-1 in lexicographic order; halo slots follow.
    Faces between two owned cells appear once (owner < neighbour); faces on the
    part boundary have the owned cell as owner and a halo slot as neighbour.
    """
    part: int
    cells: np.ndarray
    topology: HaloTopology
    owner: np.ndarray
    neighbour: np.ndarray
    area: np.ndarray
    dist: np.ndarray
    dz: np.ndarray
    elevation: np.ndarray
    boundary: Dict[str, BoundaryFaces]
    volume: float
    stencil: Optional[object] = field(default=None, repr=False)

    @property
    def n_owned(self) -> int:
        return self.topology.n_owned

    @property
    def n_ext(self) -> int:
        return self.topology.n_ext


def build_subdomain(grid: Grid, pmap: PartitionMap, topology: HaloTopology) -> SubDomain:
    p = topology.part
    cells = pmap.owned[p]
    n_owned = topology.n_owned
    halo = topology.halo_cells
    sorter = np.argsort(halo)

    def to_ext(global_cells):
        local = pmap.local_index[global_cells].copy()
        foreign = pmap.assignment[global_cells] != p
        if np.any(foreign):
            pos = np.searchsorted(halo, global_cells[foreign], sorter=sorter)
            local[foreign] = n_owned + sorter[pos]
        return local

    owner, neighbour, axis = grid.interior_faces()
    in_o = pmap.assignment[owner] == p
    in_n = pmap.assignment[neighbour] == p
    keep = in_o | in_n
    g_own = np.where(in_o, owner, neighbour)[keep]
    g_nei = np.where(in_o, neighbour, owner)[keep]
    axes = axis[keep]
    areas = np.array([grid.face_area(a) for a in range(3)])[axes]
    dists = np.array(grid.spacing)[axes]
    ext_cells = np.concatenate([cells, halo])

    boundary = {}
    for name, faces in grid.patches.items():
        mine = pmap.assignment[faces.cells] == p
        if np.any(mine):
            boundary[name] = BoundaryFaces(name, pmap.local_index[faces.cells[mine]], faces.area[mine],
                                           faces.half_dist[mine], faces.dz[mine])
    return SubDomain(
        part=p,
        cells=cells,
        topology=topology,
        owner=to_ext(g_own),
        neighbour=to_ext(g_nei),
        area=areas,
        dist=dists,
        dz=grid.elevation[g_nei] - grid.elevation[g_own],
        elevation=grid.elevation[ext_cells],
        boundary=boundary,
        volume=grid.volume,
    )


def build_subdomains(grid: Grid, pmap: PartitionMap) -> List[SubDomain]:
    return [build_subdomain(grid, pmap, topo) for topo in halo_topology(pmap)]
