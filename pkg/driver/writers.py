"""
Output writers
Legacy VTK ASCII snapshots, probe time series and the CSV run records
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from richards.constitutive import SoilModel, water_content
from richards.errors import ConfigurationError
from richards.grid import Grid

PathLike = Union[str, Path]


# --- snapshots --------------------------------------------------------------

def write_snapshot(grid: Grid, fields: Mapping[str, np.ndarray], path: PathLike,
                   title: str = "richards snapshot") -> Path:
    """
    Write cell fields as a legacy VTK ASCII STRUCTURED_POINTS file

    Fields are written in mapping order, one value per line in lexicographic
    cell order, with 17 significant digits so a re-read is exact.
    """
    path = Path(path)
    for name, values in fields.items():
        if np.shape(values) != (grid.ncells,):
            raise ConfigurationError(f"field '{name}' has shape {np.shape(values)}, grid has {grid.ncells} cells")
        if " " in name:
            raise ConfigurationError(f"field name {name!r} must not contain spaces")
    path.parent.mkdir(parents=True, exist_ok=True)
    corner = np.asarray(grid.origin) - 0.5 * np.asarray(grid.spacing)

    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"{title[:255]}\n")
        f.write("ASCII\n")
        f.write("DATASET STRUCTURED_POINTS\n")
        f.write(f"DIMENSIONS {grid.nx + 1} {grid.ny + 1} {grid.nz + 1}\n")
        f.write("ORIGIN {:.17g} {:.17g} {:.17g}\n".format(*corner))
        f.write("SPACING {:.17g} {:.17g} {:.17g}\n".format(*grid.spacing))
        f.write(f"CELL_DATA {grid.ncells}\n")
        for name, values in fields.items():
            f.write(f"SCALARS {name} double 1\n")
            f.write("LOOKUP_TABLE default\n")
            f.write("\n".join(f"{v:.17g}" for v in np.asarray(values, dtype=float)))
            f.write("\n")
    return path


@dataclass
class Snapshot:
    dimensions: tuple
    origin: tuple
    spacing: tuple
    fields: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def cells(self) -> tuple:
        return tuple(d - 1 for d in self.dimensions)


def read_snapshot(path: PathLike) -> Snapshot:
    """Parse a file written by write_snapshot"""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or not lines[0].startswith("# vtk DataFile"):
        raise ValueError(f"{path}: not a legacy VTK file")
    if lines[2].strip() != "ASCII" or lines[3].strip() != "DATASET STRUCTURED_POINTS":
        raise ValueError(f"{path}: expected an ASCII STRUCTURED_POINTS dataset")

    header = {}
    i = 4
    while i < len(lines) and not lines[i].startswith("CELL_DATA"):
        key, *values = lines[i].split()
        header[key] = values
        i += 1
    ncells = int(lines[i].split()[1])
    snap = Snapshot(tuple(int(v) for v in header["DIMENSIONS"]),
                    tuple(float(v) for v in header["ORIGIN"]),
                    tuple(float(v) for v in header["SPACING"]))
    i += 1
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        _, name, *_ = lines[i].split()
        start = i + 2   # skip LOOKUP_TABLE
        snap.fields[name] = np.array([float(v) for v in lines[start:start + ncells]])
        i = start + ncells
    return snap


class SnapshotObserver:
    """Writes head and water content at t=0, every interval and at t_end"""

    def __init__(self, grid: Grid, soil: SoilModel, directory: PathLike, interval: Optional[float] = None):
        self.grid = grid
        self.soil = soil
        self.directory = Path(directory)
        self.interval = interval
        self.written: List[dict] = []

    def __call__(self, t: float, h: np.ndarray):
        path = self.directory / f"snapshot_{len(self.written):05d}.vtk"
        write_snapshot(self.grid, {"h": h, "theta": np.asarray(water_content(self.soil, h))},
                       path, title=f"t = {t:.17g} s")
        self.written.append({"index": len(self.written), "t": t, "file": path.name})

    def write_index(self) -> Path:
        """snapshots.csv: index, simulated time, file name"""
        path = self.directory / "snapshots.csv"
        pd.DataFrame(self.written, columns=["index", "t", "file"]).to_csv(path, index=False)
        return path


# --- probes -----------------------------------------------------------------

def probe_columns(names: Sequence[str]) -> List[str]:
    return ["t"] + [f"theta_{n}" for n in names] + [f"h_{n}" for n in names]


def validate_probes(grid: Grid, probes: Mapping[str, Sequence[int]]) -> Dict[str, int]:
    """
    Map probe names to cell indices

    Raises:
        ConfigurationError: a probe lies outside the grid
    """
    cells = {}
    for name, (i, j, k) in probes.items():
        if not (0 <= i < grid.nx and 0 <= j < grid.ny and 0 <= k < grid.nz):
            raise ConfigurationError(f"probe '{name}' at {(i, j, k)} is outside the grid {grid.shape}")
        cells[name] = int(grid.cell_index(i, j, k))
    return cells


def write_probes(probes: Mapping[str, int], t: float, h: np.ndarray, soil: SoilModel, path: PathLike) -> Path:
    """Append one row: t, theta at each probe, then h at each probe"""
    path = Path(path)
    names = list(probes)
    idx = np.array([probes[n] for n in names], dtype=np.int64)
    local_soil = soil.take(idx) if soil.is_field else soil
    theta = np.atleast_1d(water_content(local_soil, h[idx]))
    row = [t] + theta.tolist() + np.asarray(h[idx], dtype=float).tolist()
    frame = pd.DataFrame([row], columns=probe_columns(names))
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, mode="a", header=not path.exists(), index=False, float_format="%.17g")
    return path


class ProbeObserver:
    def __init__(self, grid: Grid, soil: SoilModel, probes: Mapping[str, Sequence[int]],
                 path: PathLike, interval: Optional[float] = None):
        self.cells = validate_probes(grid, probes)
        self.soil = soil
        self.path = Path(path)
        self.interval = interval
        if self.path.exists():
            self.path.unlink()

    def __call__(self, t: float, h: np.ndarray):
        if self.cells:
            write_probes(self.cells, t, h, self.soil, self.path)


# --- run records --------------------------------------------------------------

def write_table(rows: Sequence[dict], columns: Sequence[str], path: PathLike) -> Path:
    """CSV with a fixed header, full precision floats"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows), columns=list(columns)).to_csv(path, index=False, float_format="%.17g")
    return path
