"""Run artifacts: legacy VTK frames and an append-only CSV time series.

Frames are written as binary big-endian structured-points files, sampling
each cell's polynomial on a uniform subgrid of (degree+1) points per axis
so the union over cells is one globally uniform grid.  The CSV writer
emits one header naming every record field and one row per frame;
formatting uses shortest round-trip floats so identical runs produce
bitwise identical files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import Basis, dof_apply, lagrange_eval
from .diagnostics import TimeSeriesRecord, interface_energy_field
from .errors import ConfigError
from .kernels import cons_to_prim_batch
from .mesh import Mesh
from .model import ModelSpec
from .state import (
    P_ALP,
    P_B,
    P_COL,
    P_PRE,
    P_PSI,
    P_RHO1,
    P_RHO2,
    P_VEL,
    Q_R1A,
    Q_R2A,
)


# --- uniform plot sampling ------------------------------------------------------


@lru_cache(maxsize=None)
def _plot_matrix(degree: int, dim: int) -> np.ndarray:
    """Tensor evaluation matrix from cell nodes to the uniform plot subgrid."""
    from .basis import build_basis

    basis = build_basis(degree)
    n_plot = degree + 1
    pts = (np.arange(n_plot) + 0.5) / n_plot
    e1 = lagrange_eval(basis.nodes, pts)
    mat = e1
    for _ in range(dim - 1):
        mat = np.kron(e1, mat)  # z slowest, x fastest, as in the dof layout
    return mat


def _tile_grid(per_cell: np.ndarray, n_plot: int, dim: int) -> np.ndarray:
    """(nz, ny, nx, n_plot^dim, m) -> one global uniform grid (..., m)."""
    nz, ny, nx = per_cell.shape[:3]
    m = per_cell.shape[-1]
    pz, py, px = (n_plot if ax < dim else 1 for ax in (2, 1, 0))
    work = per_cell.reshape(nz, ny, nx, pz, py, px, m)
    work = work.transpose(0, 3, 1, 4, 2, 5, 6)
    return work.reshape(nz * pz, ny * py, nx * px, m)


def sample_plot_grid(fields: np.ndarray, basis: Basis, dim: int) -> np.ndarray:
    """Evaluate per-cell nodal fields on the global uniform plot grid."""
    mat = _plot_matrix(basis.degree, dim)
    per_cell = np.einsum("sp,...pv->...sv", mat, fields)
    return _tile_grid(per_cell, basis.degree + 1, dim)


def plot_grid_geometry(
    mesh: Mesh, basis: Basis
) -> tuple[tuple[int, int, int], tuple[float, float, float], tuple[float, float, float]]:
    """(dims, origin, spacing) of the uniform plot grid, in x, y, z order."""
    n_plot = basis.degree + 1
    dims, origin, spacing = [], [], []
    for ax in range(3):
        if ax < mesh.dim:
            step = mesh.spacing[ax] / n_plot
            dims.append(mesh.ncells[ax] * n_plot)
            origin.append(mesh.lo[ax] + 0.5 * step)
            spacing.append(step)
        else:
            dims.append(1)
            origin.append(0.5 * (mesh.lo[ax] + mesh.hi[ax]))
            spacing.append(1.0)
    return tuple(dims), tuple(origin), tuple(spacing)


# --- frame assembly -------------------------------------------------------------


def _primitive_at(points: np.ndarray, ms: ModelSpec) -> np.ndarray:
    flat = np.ascontiguousarray(points.reshape(-1, points.shape[-1]))
    prim = np.empty_like(flat)
    ok = np.empty(flat.shape[0], dtype=np.bool_)
    with np.errstate(all="ignore"):
        cons_to_prim_batch(flat, ms.phys_params(), prim, ok)
    return prim.reshape(points.shape)


def frame_arrays(
    state: np.ndarray,
    ms: ModelSpec,
    mesh: Mesh,
    basis: Basis,
    schlieren_strength: float = 15.0,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Named scalar and vector point arrays of one output frame.

    Scalars come back as (nz, ny, nx) grids and vectors as (nz, ny, nx, 3),
    all on the uniform plot grid.
    """
    dim = mesh.dim
    cons = sample_plot_grid(state, basis, dim)
    prim = _primitive_at(cons, ms)

    rho_dofs = (state[..., Q_R1A] + state[..., Q_R2A])[..., None]
    grad_mag_sq = np.zeros(cons.shape[:-1])
    for axis in range(dim):
        deriv = dof_apply(basis.diff, rho_dofs, axis, dim) / mesh.spacing[axis]
        grad_mag_sq += sample_plot_grid(deriv, basis, dim)[..., 0] ** 2
    grad_mag = np.sqrt(grad_mag_sq)
    peak = grad_mag.max()
    schlieren = (
        np.exp(-schlieren_strength * grad_mag / peak)
        if peak > 0.0
        else np.ones_like(grad_mag)
    )

    scalars = {
        "phase1_density": prim[..., P_RHO1],
        "phase2_density": prim[..., P_RHO2],
        "pressure": prim[..., P_PRE],
        "volume_fraction": prim[..., P_ALP],
        "colour": prim[..., P_COL],
        "total_density": cons[..., Q_R1A] + cons[..., Q_R2A],
        "schlieren": schlieren,
        "interface_energy": interface_energy_field(prim, ms),
    }
    vectors = {
        "velocity": prim[..., P_VEL : P_VEL + 3],
        "interface_field": prim[..., P_B : P_B + 3],
    }
    if ms.nvar > P_PSI:
        vectors["cleaning_field"] = prim[..., P_PSI : P_PSI + 3]
    return scalars, vectors


# --- legacy VTK structured points ------------------------------------------------


def write_vtk_frame(
    path: str,
    state: np.ndarray,
    ms: ModelSpec,
    mesh: Mesh,
    basis: Basis,
    schlieren_strength: float = 15.0,
    title: str = "two-phase flow frame",
) -> None:
    """Write one binary big-endian structured-points frame."""
    scalars, vectors = frame_arrays(state, ms, mesh, basis, schlieren_strength)
    dims, origin, spacing = plot_grid_geometry(mesh, basis)
    npts = dims[0] * dims[1] * dims[2]
    with open(path, "wb") as fh:
        fh.write(b"# vtk DataFile Version 3.0\n")
        fh.write(title.encode("ascii", "replace")[:255] + b"\n")
        fh.write(b"BINARY\n")
        fh.write(b"DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {dims[0]} {dims[1]} {dims[2]}\n".encode())
        fh.write(f"ORIGIN {origin[0]!r} {origin[1]!r} {origin[2]!r}\n".encode())
        fh.write(
            f"SPACING {spacing[0]!r} {spacing[1]!r} {spacing[2]!r}\n".encode()
        )
        fh.write(f"POINT_DATA {npts}\n".encode())
        for name, grid in scalars.items():
            fh.write(f"SCALARS {name} double 1\n".encode())
            fh.write(b"LOOKUP_TABLE default\n")
            fh.write(np.ascontiguousarray(grid, dtype=">f8").tobytes())
            fh.write(b"\n")
        for name, grid in vectors.items():
            fh.write(f"VECTORS {name} double\n".encode())
            fh.write(np.ascontiguousarray(grid, dtype=">f8").tobytes())
            fh.write(b"\n")


@dataclass
class VtkImage:
    """Structured-points frame: uniform grid plus named point arrays."""

    dims: tuple[int, int, int]  # points along x, y, z
    origin: tuple[float, float, float]
    spacing: tuple[float, float, float]
    scalars: dict[str, np.ndarray]  # (nz, ny, nx)
    vectors: dict[str, np.ndarray]  # (nz, ny, nx, 3)


def read_vtk(path: str) -> VtkImage:
    """Read back a legacy binary structured-points file."""
    with open(path, "rb") as fh:
        blob = fh.read()

    pos = 0

    def next_line() -> str:
        nonlocal pos
        end = blob.index(b"\n", pos)
        line = blob[pos:end].decode("ascii")
        pos = end + 1
        return line

    def read_doubles(count: int) -> np.ndarray:
        nonlocal pos
        nbytes = 8 * count
        arr = np.frombuffer(blob, dtype=">f8", count=count, offset=pos)
        pos += nbytes
        if pos < len(blob) and blob[pos : pos + 1] == b"\n":
            pos += 1
        return arr.astype(float)

    if not next_line().startswith("# vtk DataFile"):
        raise ConfigError(f"{path}: not a VTK legacy file")
    next_line()  # title
    if next_line().strip() != "BINARY":
        raise ConfigError(f"{path}: expected BINARY data")
    if next_line().strip() != "DATASET STRUCTURED_POINTS":
        raise ConfigError(f"{path}: expected STRUCTURED_POINTS")
    dims = origin = spacing = None
    npts = None
    while npts is None:
        fields = next_line().split()
        if fields[0] == "DIMENSIONS":
            dims = tuple(int(v) for v in fields[1:4])
        elif fields[0] == "ORIGIN":
            origin = tuple(float(v) for v in fields[1:4])
        elif fields[0] == "SPACING":
            spacing = tuple(float(v) for v in fields[1:4])
        elif fields[0] == "POINT_DATA":
            npts = int(fields[1])
        else:
            raise ConfigError(f"{path}: unexpected header line {fields[0]!r}")
    if dims is None or origin is None or spacing is None:
        raise ConfigError(f"{path}: incomplete structured-points header")
    if npts != dims[0] * dims[1] * dims[2]:
        raise ConfigError(f"{path}: POINT_DATA count does not match DIMENSIONS")
    grid_shape = (dims[2], dims[1], dims[0])

    scalars: dict[str, np.ndarray] = {}
    vectors: dict[str, np.ndarray] = {}
    while pos < len(blob):
        header = next_line().split()
        if not header:
            continue
        if header[0] == "SCALARS":
            name, dtype = header[1], header[2]
            if dtype != "double":
                raise ConfigError(f"{path}: unsupported scalar type {dtype!r}")
            if not next_line().startswith("LOOKUP_TABLE"):
                raise ConfigError(f"{path}: SCALARS without LOOKUP_TABLE")
            scalars[name] = read_doubles(npts).reshape(grid_shape)
        elif header[0] == "VECTORS":
            name, dtype = header[1], header[2]
            if dtype != "double":
                raise ConfigError(f"{path}: unsupported vector type {dtype!r}")
            vectors[name] = read_doubles(3 * npts).reshape(grid_shape + (3,))
        else:
            raise ConfigError(f"{path}: unexpected array header {header[0]!r}")
    return VtkImage(
        dims=dims, origin=origin, spacing=spacing, scalars=scalars, vectors=vectors
    )


# --- CSV time series --------------------------------------------------------------


class TimeSeriesWriter:
    """Append-only CSV sink for run records with strictly increasing time."""

    def __init__(self, path: str):
        self.path = path
        self._last_t: float | None = None
        self._header_written = os.path.exists(path) and os.path.getsize(path) > 0

    def append(self, record: TimeSeriesRecord) -> None:
        if self._last_t is not None and not record.t > self._last_t:
            raise ConfigError(
                f"time series must advance: got t={record.t} after t={self._last_t}"
            )
        self._last_t = record.t
        with open(self.path, "a") as fh:
            if not self._header_written:
                fh.write(",".join(record.header()) + "\n")
                self._header_written = True
            fh.write(",".join(repr(v) for v in record.values()) + "\n")


def read_timeseries(path: str) -> dict[str, np.ndarray]:
    """Read a CSV time series back as named columns."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not header or header[0] != "t":
        raise ConfigError(f"{path}: not a run time series")
    data = np.array([[float(v) for v in row] for row in rows], dtype=float)
    data = data.reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}
