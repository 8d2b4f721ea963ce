"""Dimension-by-dimension full-polynomial WENO reconstruction.

From cell averages (plus ghost layers) this module rebuilds a degree-M
nodal polynomial per cell by sweeping x, then y, then z.  Each 1D sweep
solves, for every stencil, a square linear system enforcing conservation
of cell averages (or, in the second stage of the primitive-variable path,
interpolation of cell-centre values), measures each candidate's
oscillation with the derivative-energy bilinear form, and blends the
candidates with rescaled inverse-oscillation weights.

Quantities from earlier sweeps (the nodal index of the previous direction)
are carried through later sweeps as independent scalar fields: nonlinear
weights and the scaling factor w0 are computed per swept quantity per
window.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NonPhysical
from .basis import (
    Basis,
    build_basis,
    shifted_average_matrix,
    shifted_midpoint_matrix,
)
from .kernels import cons_to_prim_batch
from .mesh import Mesh, with_ghosts
from .model import ModelSpec


@dataclass(frozen=True)
class WenoParams:
    """Nonlinear-weight parameters.

    ``lambda_central``/``lambda_side`` bias the blend toward centred
    stencils on smooth data; ``eps`` guards the inverse-oscillation power;
    ``r`` is its exponent; ``eps0`` floors the per-quantity scaling factor
    that protects the indicator against catastrophic precision loss for
    large-magnitude variables.
    """

    lambda_central: float = 1e5
    lambda_side: float = 1.0
    eps: float = 1e-14
    r: int = 8
    eps0: float = 1e-14

    def __post_init__(self) -> None:
        if min(self.lambda_central, self.lambda_side, self.eps, self.r, self.eps0) <= 0:
            raise ConfigError("all reconstruction weight parameters must be positive")


def stencil_extents(degree: int) -> list[tuple[int, int]]:
    """Stencil (left, right) cell extents; L + R = degree for each.

    Even degrees use one centred plus two one-sided stencils; odd degrees
    use the two near-centred plus two one-sided stencils.  Degree 1 has no
    useful stencil family and is rejected.
    """
    if degree == 0:
        return [(0, 0)]
    if degree == 1:
        raise ConfigError("degree-1 reconstruction is not supported")
    if degree % 2 == 0:
        half = degree // 2
        return [(half, half), (degree, 0), (0, degree)]
    lo, hi = degree // 2, degree - degree // 2
    return [(hi, lo), (lo, hi), (degree, 0), (0, degree)]


def _is_central(extent: tuple[int, int], degree: int) -> bool:
    left, right = extent
    return max(left, right) <= (degree + 1) // 2


@dataclass(frozen=True)
class WenoOperator:
    """Precomputed per-degree reconstruction tables.

    ``solve_avg``/``solve_center`` hold, per stencil, the inverse of the
    cell-average-conservation (resp. centre-interpolation) system mapping
    the stencil's cell data to nodal DOFs.  ``window_slices`` locate each
    stencil inside the full 2M+1 sweep window.
    """

    degree: int
    params: WenoParams
    basis: Basis
    extents: tuple[tuple[int, int], ...]
    lambdas: np.ndarray
    solve_avg: np.ndarray
    solve_center: np.ndarray

    @property
    def window(self) -> int:
        return 2 * self.degree + 1

    def window_slice(self, s: int) -> slice:
        left, right = self.extents[s]
        return slice(self.degree - left, self.degree + right + 1)


@lru_cache(maxsize=None)
def build_weno(degree: int, params: WenoParams = WenoParams()) -> WenoOperator:
    basis = build_basis(degree)
    extents = tuple(stencil_extents(degree))
    ns = len(extents)
    n = degree + 1
    solve_avg = np.empty((ns, n, n))
    solve_center = np.empty((ns, n, n))
    lambdas = np.empty(ns)
    for s, (left, right) in enumerate(extents):
        offsets = np.arange(-left, right + 1)
        a_avg = shifted_average_matrix(basis, offsets)
        a_ctr = shifted_midpoint_matrix(basis, offsets)
        solve_avg[s] = np.linalg.inv(a_avg)
        solve_center[s] = np.linalg.inv(a_ctr)
        lambdas[s] = (
            params.lambda_central if _is_central((left, right), degree)
            else params.lambda_side
        )
    return WenoOperator(
        degree=degree,
        params=params,
        basis=basis,
        extents=extents,
        lambdas=lambdas,
        solve_avg=solve_avg,
        solve_center=solve_center,
    )


def weno_1d_sweep(
    windows: np.ndarray, op: WenoOperator, mode: str = "average"
) -> np.ndarray:
    """Blend stencil reconstructions for each window of swept data.

    ``windows`` has shape (..., 2M+1, nq); the result (..., M+1, nq) holds
    nodal DOFs on the window's central cell.  ``mode`` selects the
    cell-average-conservation systems or the centre-interpolation systems.
    """
    solve = op.solve_avg if mode == "average" else op.solve_center
    p = op.params
    cands = np.stack(
        [
            np.einsum(
                "pj,...jq->...pq", solve[s], windows[..., op.window_slice(s), :]
            )
            for s in range(len(op.extents))
        ]
    )
    # per-quantity scaling factor over all stencil DOFs in this window
    w0 = p.eps0 + np.abs(cands).sum(axis=(0, -2))
    scaled = cands / w0[..., None, :]
    sigma = np.einsum("lm,s...lq,s...mq->s...q", op.basis.osc, scaled, scaled)
    raw = op.lambdas.reshape((-1,) + (1,) * (sigma.ndim - 1)) * (p.eps + sigma) ** (
        -float(p.r)
    )
    weights = raw / raw.sum(axis=0)
    return np.einsum("s...q,s...pq->...pq", weights, cands)


def _sweep_axis(data: np.ndarray, axis: int, op: WenoOperator, mode: str) -> np.ndarray:
    """One directional sweep over a ghosted block.

    ``data`` has shape (nz', ny', nx', nq); the swept axis shrinks by 2M
    and its nodal index becomes the slowest dof position of the output
    (..., M+1 * nq) quantity axis, preserving C-order (z, y, x) flattening
    when sweeping x first.
    """
    arr_ax = 2 - axis
    win = np.lib.stride_tricks.sliding_window_view(data, op.window, axis=arr_ax)
    # sliding_window_view appends the window axis last: (..., nq, W)
    win = np.moveaxis(win, -1, -2)
    rec = weno_1d_sweep(win, op, mode)  # (..., nq_lead..., M+1, nq)
    # fold the new nodal axis in front of the carried quantities
    return rec.reshape(rec.shape[:-2] + (rec.shape[-2] * rec.shape[-1],))


def weno_block(
    averages: np.ndarray, dim: int, op: WenoOperator, mode: str = "average"
) -> np.ndarray:
    """Reconstruct nodal DOFs for every interior cell of a ghosted block.

    ``averages`` has shape (nz', ny', nx', nvar) with M ghost layers on
    each active axis; the result has shape (nz, ny, nx, (M+1)**dim, nvar)
    with flattened tensor DOFs in C order (z slowest, x fastest).
    """
    nvar = averages.shape[-1]
    data = averages
    for axis in range(dim):
        data = _sweep_axis(data, axis, op, mode)
    n = op.degree + 1
    return data.reshape(data.shape[:3] + (n**dim, nvar))


def weno_reconstruct(
    interior_averages: np.ndarray, mesh: Mesh, op: WenoOperator, ring: int = 0
) -> np.ndarray:
    """Conservative WENO reconstruction of conserved cell averages.

    ``interior_averages``: (nz, ny, nx, nvar).  Ghost layers are generated
    from the mesh boundary conditions.  Returns per-cell nodal DOFs
    (nz, ny, nx, (M+1)**dim, nvar); with ``ring > 0`` the result also
    covers that many ghost cells per active axis (needed by solvers that
    build face terms against boundary ghosts).
    """
    gh = with_ghosts(
        interior_averages[..., None, :], mesh, op.degree + ring, basis=op.basis
    )[..., 0, :]
    return weno_block(gh, mesh.dim, op)


def primitive_reconstruct(
    interior_averages: np.ndarray,
    mesh: Mesh,
    op: WenoOperator,
    ms: ModelSpec,
    ring: int = 0,
) -> np.ndarray:
    """Two-stage primitive-variable reconstruction.

    Stage 1 runs the conservative reconstruction on an extended halo,
    stage 2 converts its cell-centre values to primitive variables, and
    stage 3 reruns the sweeps with centre-interpolation systems on those
    primitive point values.  Returns primitive nodal DOFs per interior
    cell (plus ``ring`` ghost cells per active axis when requested).
    Raises :class:`NonPhysical` if any needed centre state is
    inadmissible.
    """
    m = op.degree
    gh = with_ghosts(
        interior_averages[..., None, :], mesh, 2 * m + ring, basis=op.basis
    )[..., 0, :]
    cons_dofs = weno_block(gh, mesh.dim, op, mode="average")
    center_1d = op.basis.eval_at(0.5)[0]
    center_vec = center_1d
    for _ in range(mesh.dim - 1):
        center_vec = np.multiply.outer(center_vec, center_1d)
    center = np.einsum("d,...dv->...v", center_vec.ravel(), cons_dofs)
    flat = np.ascontiguousarray(center.reshape(-1, center.shape[-1]))
    prim = np.empty_like(flat)
    ok = np.empty(flat.shape[0], dtype=np.bool_)
    cons_to_prim_batch(flat, ms.phys_params(), prim, ok)
    if not ok.all():
        raise NonPhysical(
            "inadmissible cell-centre state during primitive reconstruction"
        )
    prim = prim.reshape(center.shape)
    return weno_block(prim, mesh.dim, op, mode="center")
