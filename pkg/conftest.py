"""Shared fixtures: soils, small meshes and quiet settings."""

from pathlib import Path

import numpy as np
import pytest

from driver.config import Settings
from richards.constitutive import Gardner, VanGenuchten
from richards.grid import GridSpec, PatchSpec, build_grid, build_subdomains, partition_simple

CASES = Path(__file__).parent / "cases"

COLUMN_CASE = """\
# ten-cell loam column
grid.cells = 1 1 10
grid.spacing = 1.0 1.0 0.1

soil.loam.Ks = 2.89e-6
soil.loam.alpha = 3.6
soil.loam.n = 1.56
soil.loam.theta_s = 0.43
soil.loam.theta_r = 0.078

initial.type = uniform
initial.head = -1.0

patch.top.face = z+
patch.top.type = flux
patch.top.flux = -5e-7
patch.bottom.face = z-
patch.bottom.type = free_drainage

numerics.tol_picard = 1e-6
numerics.pcg_tol = 1e-9
numerics.dt_init = 60.0
numerics.dt_max = 600.0

run.t_end = 3600.0
output.snapshot_interval = 1800.0
output.probe_interval = 600.0
probe.top.cell = 0 0 9
"""


def write_case(directory: Path, text: str = COLUMN_CASE, name: str = "column") -> Path:
    path = directory / f"{name}.case"
    path.write_text(text, encoding="utf-8")
    return path


def column_spec(cells=10, dz=0.1, patches=(("bottom", "z-"), ("top", "z+"))):
    """Vertical column with a 1 m x 1 m cross-section"""
    return GridSpec(cells=(1, 1, cells), spacing=(1.0, 1.0, dz),
                    patches=tuple(PatchSpec(name, face) for name, face in patches))


def single_part(spec):
    grid = build_grid(spec)
    sub = build_subdomains(grid, partition_simple(grid, 1))[0]
    return grid, sub


@pytest.fixture
def loam():
    return VanGenuchten(Ks=2.89e-6, alpha=3.6, n=1.56, theta_s=0.43, theta_r=0.078, S=1e-5)


@pytest.fixture
def gardner():
    return Gardner(Ks=1e-6, alpha=0.06)


@pytest.fixture
def settings(tmp_path):
    return Settings(output_dir=str(tmp_path / "runs"), parts=1, collective_timeout=60.0, verbose=False)


@pytest.fixture
def quiet_env(monkeypatch, tmp_path):
    """Environment for CLI runs: no progress output, outputs under tmp_path"""
    monkeypatch.setenv("RICHARDS_VERBOSE", "false")
    monkeypatch.setenv("RICHARDS_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("RICHARDS_COLLECTIVE_TIMEOUT", "60")
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
