"""Structured Cartesian meshes, nodal field storage, and ghost exchange.

Fields live on a uniform box mesh as arrays of shape
``(nz, ny, nx, ndof, nvar)`` where ``ndof = (N+1)**dim`` enumerates the
tensor-product Gauss-Legendre nodes of each cell in C order (z slowest, x
fastest).  Inactive axes keep a single cell and a single node layer.

Boundary handling fills ghost layers by periodic wrap, zero-gradient copy,
or mirror reflection; reflection reverses the in-cell node ordering along
the wall normal and flips the sign of the normal components of velocity,
the interface-normal vector field, and (when present) the cleaning field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import Basis, tensor_weights
from .errors import ConfigError
from .state import P_B, P_PSI, P_VEL

BC_KINDS = ("periodic", "transmissive", "reflective")


@dataclass(frozen=True)
class Mesh:
    """Uniform Cartesian box with per-face boundary conditions.

    ``ncells`` always has three entries; axes beyond ``dim`` must have one
    cell.  ``bc[axis]`` is a (low side, high side) pair drawn from
    ``BC_KINDS``.
    """

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    ncells: tuple[int, int, int]
    dim: int
    bc: tuple[tuple[str, str], ...] = field(
        default=(("periodic", "periodic"),) * 3
    )

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"dim must be 1, 2 or 3, got {self.dim}")
        if len(self.lo) != 3 or len(self.hi) != 3 or len(self.ncells) != 3:
            raise ConfigError("lo, hi and ncells must have three entries")
        for ax in range(3):
            if self.ncells[ax] < 1:
                raise ConfigError("cell counts must be positive")
            if ax < self.dim:
                if self.hi[ax] <= self.lo[ax]:
                    raise ConfigError("active axes need hi > lo")
            elif self.ncells[ax] != 1:
                raise ConfigError("inactive axes must have a single cell")
        if len(self.bc) != 3:
            raise ConfigError("bc must list all three axes")
        for ax, (lo_kind, hi_kind) in enumerate(self.bc):
            for kind in (lo_kind, hi_kind):
                if kind not in BC_KINDS:
                    raise ConfigError(f"unknown boundary kind {kind!r}")
            if ("periodic" in (lo_kind, hi_kind)) and lo_kind != hi_kind:
                raise ConfigError(
                    f"axis {ax}: periodic boundaries must pair with periodic"
                )

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(
            (self.hi[ax] - self.lo[ax]) / self.ncells[ax]
            if ax < self.dim
            else 0.0
            for ax in range(3)
        )

    @property
    def min_spacing(self) -> float:
        return min(self.spacing[ax] for ax in range(self.dim))

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for ax in range(self.dim):
            vol *= self.spacing[ax]
        return vol

    @property
    def array_shape(self) -> tuple[int, int, int]:
        nx, ny, nz = self.ncells
        return (nz, ny, nx)

    def axis_cells(self, axis: int) -> int:
        return self.ncells[axis]


def node_coords(mesh: Mesh, basis: Basis) -> np.ndarray:
    """Physical coordinates of every cell node: (nz, ny, nx, ndof, 3).

    Inactive axes report the box midpoint.
    """
    nx, ny, nz = mesh.ncells
    n = basis.n_nodes
    axes_1d = []
    node_counts = []
    for ax in range(3):
        if ax < mesh.dim:
            cells = np.arange(mesh.ncells[ax])
            pts = mesh.lo[ax] + (cells[:, None] + basis.nodes[None, :]) * (
                mesh.spacing[ax]
            )
            axes_1d.append(pts)
            node_counts.append(n)
        else:
            mid = 0.5 * (mesh.lo[ax] + mesh.hi[ax])
            axes_1d.append(np.full((1, 1), mid))
            node_counts.append(1)
    px, py, pz = axes_1d
    mx, my, mz = node_counts
    out = np.empty((nz, ny, nx, mz, my, mx, 3))
    out[..., 0] = px[None, None, :, None, None, :]
    out[..., 1] = py[None, :, None, None, :, None]
    out[..., 2] = pz[:, None, None, :, None, None]
    return out.reshape(nz, ny, nx, mz * my * mx, 3)


def project_function(fn, mesh: Mesh, basis: Basis) -> np.ndarray:
    """Nodal interpolant of a vectorized field function.

    ``fn`` maps points of shape (..., 3) to values of shape (..., nvar).
    """
    coords = node_coords(mesh, basis)
    vals = np.asarray(fn(coords))
    return vals


def cell_averages(dofs: np.ndarray, basis: Basis, dim: int) -> np.ndarray:
    """Mean value of each cell's polynomial: (..., ndof, nvar) -> (..., nvar)."""
    w = tensor_weights(basis, dim)
    return np.einsum("d,...dv->...v", w, dofs)


def integral_norms(
    dofs: np.ndarray, mesh: Mesh, basis: Basis
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature L1, L2 and max norms per variable over the whole box."""
    w = tensor_weights(basis, mesh.dim)
    vol = mesh.cell_volume
    flat = dofs.reshape(-1, dofs.shape[-2], dofs.shape[-1])
    l1 = vol * np.einsum("d,cdv->v", w, np.abs(flat))
    l2 = np.sqrt(vol * np.einsum("d,cdv->v", w, flat * flat))
    linf = np.max(np.abs(flat), axis=(0, 1))
    return l1, l2, linf


def _dof_flip_index(n: int, dim: int, axis: int) -> np.ndarray:
    """Flattened-DOF permutation reversing node order along one direction."""
    idx = np.arange(n**dim).reshape((n,) * dim)
    pos = dim - 1 - axis
    return np.flip(idx, axis=pos).ravel()


def _normal_component_rows(nvar: int, axis: int) -> list[int]:
    rows = [P_VEL + axis, P_B + axis]
    if nvar > P_PSI:
        rows.append(P_PSI + axis)
    return rows


def with_ghosts(
    interior: np.ndarray, mesh: Mesh, ng: int, basis: Basis | None = None
) -> np.ndarray:
    """Return a ghost-padded copy of an interior field with BCs applied.

    ``interior`` has shape (nz, ny, nx, ndof, nvar) (``ndof`` may be 1 for
    cell-mean storage).  Only active axes receive ``ng`` ghost layers.
    Reflective walls need ``basis`` to determine the in-cell node layout;
    pass ``basis=None`` only for meshes without reflective boundaries or
    for single-node storage.
    """
    nz, ny, nx, ndof, nvar = interior.shape
    pads = [ng if ax < mesh.dim else 0 for ax in range(3)]
    gz, gy, gx = pads[2], pads[1], pads[0]
    out = np.empty((nz + 2 * gz, ny + 2 * gy, nx + 2 * gx, ndof, nvar))
    out[gz : gz + nz, gy : gy + ny, gx : gx + nx] = interior
    for axis in range(mesh.dim):
        _apply_axis_bc(out, mesh, axis, ng, basis)
    return out


def _apply_axis_bc(
    gh: np.ndarray, mesh: Mesh, axis: int, ng: int, basis: Basis | None
) -> None:
    """Fill both ghost bands of one axis in place.

    Earlier axes must already be filled interior-wide; filling proceeds
    x, y, z so corner ghosts inherit consistent values.
    """
    arr_ax = 2 - axis
    n_int = mesh.ncells[axis]
    nvar = gh.shape[-1]

    def band(start: int, stop: int):
        sel = [slice(None)] * gh.ndim
        sel[arr_ax] = slice(start, stop)
        return tuple(sel)

    lo_kind, hi_kind = mesh.bc[axis]
    for side, kind in ((0, lo_kind), (1, hi_kind)):
        if kind == "periodic":
            if side == 0:
                gh[band(0, ng)] = gh[band(n_int, n_int + ng)]
            else:
                gh[band(n_int + ng, n_int + 2 * ng)] = gh[band(ng, 2 * ng)]
        elif kind == "transmissive":
            if side == 0:
                edge = band(ng, ng + 1)
                for j in range(ng):
                    gh[band(j, j + 1)] = gh[edge]
            else:
                edge = band(n_int + ng - 1, n_int + ng)
                for j in range(ng):
                    gh[band(n_int + ng + j, n_int + ng + j + 1)] = gh[edge]
        else:  # reflective
            ndof = gh.shape[3]
            if ndof > 1:
                if basis is None:
                    raise ConfigError(
                        "reflective boundaries on nodal data need the basis"
                    )
                flip = _dof_flip_index(basis.n_nodes, mesh.dim, axis)
            else:
                flip = np.arange(1)
            rows = _normal_component_rows(nvar, axis)
            for j in range(ng):
                if side == 0:
                    src = band(ng + j, ng + j + 1)
                    dst = band(ng - 1 - j, ng - j)
                else:
                    src = band(n_int + ng - 1 - j, n_int + ng - j)
                    dst = band(n_int + ng + j, n_int + ng + j + 1)
                mirrored = gh[src][..., flip, :].copy()
                mirrored[..., rows] *= -1.0
                gh[dst] = mirrored
