"""Tests for the structured grid, patches and the partitioner."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import column_spec
from richards.errors import InvalidSpecError
from richards.grid import (
    DEFAULT_PATCH,
    GridSpec,
    PatchSpec,
    auto_cuts,
    build_grid,
    build_subdomains,
    halo_topology,
    partition_simple,
)


def box(cells=(4, 3, 5), spacing=(1.0, 2.0, 0.5), **kwargs):
    return build_grid(GridSpec(cells=cells, spacing=spacing, **kwargs))


class TestBuildGrid:

    @pytest.mark.parametrize("cells, spacing", [
        ((0, 1, 1), (1.0, 1.0, 1.0)),
        ((1, 1), (1.0, 1.0, 1.0)),
        ((1, 1, 1), (1.0, 0.0, 1.0)),
        ((1, 1, 1), (1.0, 1.0, -0.1)),
    ])
    def test_invalid_counts_and_spacings(self, cells, spacing):
        with pytest.raises(InvalidSpecError):
            build_grid(GridSpec(cells=cells, spacing=spacing))

    def test_unknown_vertical_axis(self):
        with pytest.raises(InvalidSpecError):
            build_grid(GridSpec(cells=(1, 1, 1), spacing=(1.0, 1.0, 1.0), vertical="w"))

    def test_constant_cell_volume(self):
        grid = box()
        assert grid.ncells == 60
        assert grid.volume == pytest.approx(1.0)

    def test_index_mapping_is_bijective(self):
        grid = box()
        idx = np.arange(grid.ncells)
        i, j, k = grid.ijk(idx)
        assert np.array_equal(grid.cell_index(i, j, k), idx)
        assert grid.cell_index(1, 2, 3) == 1 + 4 * (2 + 3 * 3)

    def test_default_origin_puts_bottom_face_at_zero(self):
        grid = build_grid(column_spec(cells=10, dz=0.1))
        assert_allclose(grid.elevation, 0.05 + 0.1 * np.arange(10))

    def test_slope_tilts_elevation(self):
        grid = box(cells=(10, 1, 1), spacing=(1.0, 1.0, 1.0), slope=(30.0, 0.0))
        assert_allclose(np.diff(grid.elevation), np.sin(np.radians(30.0)))
        assert np.linalg.norm(grid.up) == pytest.approx(1.0)

    def test_interior_face_count(self):
        grid = box()
        owner, neighbour, axis = grid.interior_faces()
        assert owner.size == 3 * 3 * 5 + 4 * 2 * 5 + 4 * 3 * 4
        assert np.all(owner < neighbour)


class TestPatches:

    def test_every_exterior_face_in_exactly_one_patch(self):
        grid = box(patches=(PatchSpec("top", "z+"), PatchSpec("strip", "x-", (0, 1, 0, 5))))
        total = sum(p.size for p in grid.patches.values())
        assert total == 2 * (4 * 3 + 3 * 5 + 4 * 5)
        assert set(grid.patches) == {"top", "strip", DEFAULT_PATCH}
        assert grid.patches["strip"].size == 5

    def test_overlapping_patches_rejected(self):
        with pytest.raises(InvalidSpecError, match="overlaps"):
            box(patches=(PatchSpec("a", "z+"), PatchSpec("b", "z+", (0, 1, 0, 1))))

    def test_region_outside_face_rejected(self):
        with pytest.raises(InvalidSpecError):
            box(patches=(PatchSpec("a", "z+", (0, 9, 0, 1)),))

    def test_duplicate_and_reserved_names_rejected(self):
        with pytest.raises(InvalidSpecError):
            box(patches=(PatchSpec("a", "z+"), PatchSpec("a", "z-")))
        with pytest.raises(InvalidSpecError):
            box(patches=(PatchSpec(DEFAULT_PATCH, "z+"),))

    def test_face_geometry(self):
        grid = build_grid(column_spec(cells=4, dz=0.25))
        top, bottom = grid.patches["top"], grid.patches["bottom"]
        assert top.cells.tolist() == [3] and bottom.cells.tolist() == [0]
        assert top.dz[0] == pytest.approx(0.125) and bottom.dz[0] == pytest.approx(-0.125)
        assert top.area[0] == pytest.approx(1.0)


class TestPartition:

    def test_auto_cuts(self):
        assert auto_cuts((1, 1, 100), 4) == (1, 1, 4)
        assert auto_cuts((40, 40, 80), 8) == (2, 2, 2)
        assert auto_cuts((10, 10, 10), 1) == (1, 1, 1)

    def test_every_cell_assigned_once_and_balanced(self):
        grid = box(cells=(7, 5, 3))
        pmap = partition_simple(grid, 4)
        sizes = pmap.part_sizes()
        assert sizes.sum() == grid.ncells
        assert sizes.max() - sizes.min() <= 1
        assert np.array_equal(np.sort(np.concatenate(pmap.owned)), np.arange(grid.ncells))

    def test_uneven_split(self):
        grid = box(cells=(10, 1, 1), spacing=(1.0, 1.0, 1.0))
        assert partition_simple(grid, 3, (3, 1, 1)).part_sizes().tolist() == [4, 3, 3]

    def test_exact_blocks_when_cuts_divide(self):
        grid = box(cells=(4, 4, 4), spacing=(1.0, 1.0, 1.0))
        pmap = partition_simple(grid, 8, (2, 2, 2))
        i, j, k = grid.ijk(pmap.owned[0])
        assert set(i) == {0, 1} and set(j) == {0, 1} and set(k) == {0, 1}

    def test_invalid_requests(self):
        grid = box(cells=(2, 1, 1), spacing=(1.0, 1.0, 1.0))
        with pytest.raises(InvalidSpecError):
            partition_simple(grid, 3)
        with pytest.raises(InvalidSpecError):
            partition_simple(grid, 2, (1, 1, 1))
        with pytest.raises(InvalidSpecError):
            partition_simple(grid, 0)


class TestHaloTopology:

    def test_send_and_receive_lists_match(self):
        grid = box(cells=(6, 4, 4), spacing=(1.0, 1.0, 1.0))
        topos = halo_topology(partition_simple(grid, 4))
        for topo in topos:
            for link in topo.links:
                back = next(other for other in topos[link.neighbor].links if other.neighbor == topo.part)
                assert back.send.size == link.recv.size

    def test_halo_cells_belong_to_other_parts(self):
        grid = box(cells=(6, 4, 4), spacing=(1.0, 1.0, 1.0))
        pmap = partition_simple(grid, 4)
        for topo in halo_topology(pmap):
            assert np.all(pmap.assignment[topo.halo_cells] != topo.part)

    def test_single_part_has_no_halo(self):
        grid = box()
        (topo,) = halo_topology(partition_simple(grid, 1))
        assert topo.n_halo == 0 and not topo.links

    def test_subdomains_cover_every_face(self):
        grid = box(cells=(6, 4, 4), spacing=(1.0, 1.0, 1.0))
        subs = build_subdomains(grid, partition_simple(grid, 4))
        internal = sum(int(np.sum(s.neighbour < s.n_owned)) for s in subs)
        cut = sum(int(np.sum(s.neighbour >= s.n_owned)) for s in subs)
        assert internal + cut // 2 == grid.interior_faces()[0].size
        assert cut % 2 == 0
