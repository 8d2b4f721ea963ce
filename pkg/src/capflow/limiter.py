"""A-posteriori subcell limiting for the DG scheme.

After every candidate DG step, each cell is screened against a relaxed
discrete maximum principle built from its 3**dim neighbourhood at the
previous time level, plus floating-point and admissibility checks
(finiteness of every checked value, positivity of both partial densities
and of the pressure).  Checked values are all conserved variables and the
derived pressure, evaluated at the cell's tensor nodes and at its subcell
means.

Cells that fail are recomputed from the previous time level on a
``2N + 1``-per-axis subcell grid: the previous cell polynomial (or, for a
cell already limited on the previous step, its stored subcell means) is
projected to subcell means, a robust finite-volume scheme advances those
means by the same time step, and a constrained least-squares
reconstruction lifts the result back to a cell polynomial whose total
average matches the subcell update exactly.  Untroubled cells are never
touched.

Two subcell schemes are available: a second-order MUSCL update with
minmod-limited primitive slopes (default), and a third-order update using
the two-stage primitive WENO reconstruction on the subcell means.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from math import ceil

import numpy as np

from .basis import Basis, build_basis, subcell_operators, tensor_weights
from .errors import ConfigError
from .kernels import cons_to_prim_batch
from .mesh import Mesh, with_ghosts
from .model import ModelSpec
from .solver import SchemeConfig, fv_core
from .state import P_PRE, Q_R1A, Q_R2A
from .weno import build_weno, weno_block

#: Relaxation of the discrete maximum principle: the admissible interval
#: [min - delta, max + delta] uses
#: delta = max(DMP_ABS, DMP_REL * (max - min), DMP_SCALE * min|u|).
DMP_ABS = 1e-4
DMP_REL = 1e-3
DMP_SCALE = 1e-7

SUBCELL_SCHEMES = ("muscl", "p0p2")


@lru_cache(maxsize=None)
def subcell_matrices(degree: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product projection/reconstruction between DOFs and subcells.

    ``project`` ((2N+1)**dim x (N+1)**dim) maps nodal DOFs to exact
    subcell means on the (2N+1)-per-axis subdivision; ``reconstruct`` is
    the least-squares left inverse constrained so that the reconstructed
    polynomial's cell average equals the mean of the subcell means.  Both
    follow the C-order (z slowest, x fastest) flattening of DOFs and
    subcells.
    """
    p1, _ = subcell_operators(degree)
    project = p1
    for _ in range(dim - 1):
        project = np.kron(project, p1)
    basis = build_basis(degree)
    w = tensor_weights(basis, dim)
    n = project.shape[1]
    n_sub = project.shape[0]
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = 2.0 * project.T @ project
    kkt[:n, n] = w
    kkt[n, :n] = w
    rhs = np.zeros((n + 1, n_sub))
    rhs[:n] = 2.0 * project.T
    rhs[n] = 1.0 / n_sub
    reconstruct = np.linalg.solve(kkt, rhs)[:n]
    return project, reconstruct


def project_to_subcells(dofs: np.ndarray, degree: int, dim: int) -> np.ndarray:
    """Subcell means (..., (2N+1)**dim, nvar) of nodal DOFs."""
    project, _ = subcell_matrices(degree, dim)
    return np.einsum("sp,...pv->...sv", project, dofs)


def reconstruct_from_subcells(
    means: np.ndarray, degree: int, dim: int
) -> np.ndarray:
    """Average-preserving least-squares DOFs from subcell means."""
    _, reconstruct = subcell_matrices(degree, dim)
    return np.einsum("ps,...sv->...pv", reconstruct, means)


def _prim_or_nan(states: np.ndarray, ms: ModelSpec) -> np.ndarray:
    """Primitive variables of (..., nvar) states; NaN rows if inadmissible."""
    flat = np.ascontiguousarray(states.reshape(-1, states.shape[-1]))
    prim = np.empty_like(flat)
    ok = np.empty(flat.shape[0], dtype=np.bool_)
    cons_to_prim_batch(flat, ms.phys_params(), prim, ok)
    prim[~ok] = np.nan
    return prim.reshape(states.shape)


def _checked_values(points: np.ndarray, ms: ModelSpec) -> np.ndarray:
    """Conserved values plus derived pressure: (..., npts, nvar + 1)."""
    p = _prim_or_nan(points, ms)[..., P_PRE]
    return np.concatenate([points, p[..., None]], axis=-1)


def _active(ax: int, dim: int) -> bool:
    """Whether array axis ``ax`` (0=z, 1=y, 2=x) is an active spatial axis."""
    return (2 - ax) < dim


def _window_extrema(
    per_cell: np.ndarray, dim: int, reduce: np.ufunc
) -> np.ndarray:
    """Reduce per-cell values over each 3**dim neighbourhood.

    ``per_cell`` covers the grid ghosted by one layer per active axis; the
    result covers the interior.
    """
    shifts = [(0, 1, 2) if _active(ax, dim) else (None,) for ax in range(3)]
    out = None
    for combo in product(*shifts):
        sel = tuple(
            slice(None) if o is None else slice(o, o - 2 or None)
            for o in combo
        )
        out = per_cell[sel] if out is None else reduce(out, per_cell[sel])
    return out


def detect_troubled(
    prev: np.ndarray,
    candidate: np.ndarray,
    ms: ModelSpec,
    mesh: Mesh,
    basis: Basis,
) -> np.ndarray:
    """Boolean (nz, ny, nx) mask of cells whose candidate is rejected.

    A cell is troubled when any checked value at any of its nodes or
    subcell means leaves the relaxed hull of the previous step's values
    (sampled at the same nodes-plus-subcell-means point set, so an
    unchanged cell can never reject itself) over the 3**dim
    neighbourhood, is not finite, or violates positivity of the partial
    densities or the pressure.
    """
    dim = mesh.dim
    nvar = ms.nvar
    ghosted = with_ghosts(prev, mesh, 1, basis=basis)
    ghosted = np.concatenate(
        [ghosted, project_to_subcells(ghosted, basis.degree, dim)], axis=-2
    )
    prev_vals = _checked_values(ghosted, ms)
    nb_min = _window_extrema(prev_vals.min(axis=-2), dim, np.minimum)
    nb_max = _window_extrema(prev_vals.max(axis=-2), dim, np.maximum)
    nb_scale = _window_extrema(
        np.abs(prev_vals).min(axis=-2), dim, np.minimum
    )
    delta = np.maximum(
        DMP_ABS,
        np.maximum(DMP_REL * (nb_max - nb_min), DMP_SCALE * nb_scale),
    )
    points = np.concatenate(
        [candidate, project_to_subcells(candidate, basis.degree, dim)],
        axis=-2,
    )
    cand_vals = _checked_values(points, ms)
    over = cand_vals.max(axis=-2) > nb_max + delta
    under = cand_vals.min(axis=-2) < nb_min - delta
    troubled = (over | under).any(axis=-1)
    troubled |= ~np.isfinite(cand_vals).all(axis=(-2, -1))
    positive = cand_vals[..., [Q_R1A, Q_R2A, nvar]]
    troubled |= (positive <= 0.0).any(axis=(-2, -1))
    return troubled


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def _linear_dofs(
    center: np.ndarray, slopes: list[np.ndarray], basis1: Basis, dim: int
) -> np.ndarray:
    """Degree-1 nodal DOFs of per-cell linears v_c + sum slope_a (xi_a - 1/2)."""
    xi = basis1.nodes - 0.5
    ndof = 2**dim
    out = np.repeat(center[..., None, :], ndof, axis=-2)
    shape = (2,) * dim
    for a in range(dim):
        br = [1] * dim
        br[dim - 1 - a] = 2
        pattern = np.broadcast_to(xi.reshape(br), shape).ravel()
        out += slopes[a][..., None, :] * pattern[:, None]
    return out


def _muscl_dofs(block: np.ndarray, ms: ModelSpec, dim: int, basis1: Basis):
    """Primitive linears on the patch interior + 1 ring from means ghosted 2."""
    prim = _prim_or_nan(block, ms)
    inner = [slice(None)] * prim.ndim
    for a in range(dim):
        inner[2 - a] = slice(1, -1)
    center = prim[tuple(inner)]
    slopes = []
    for a in range(dim):
        arr_ax = 2 - a
        fwd = [slice(None)] * prim.ndim
        bwd = [slice(None)] * prim.ndim
        mid = [slice(None)] * prim.ndim
        fwd[arr_ax] = slice(2, None)
        bwd[arr_ax] = slice(None, -2)
        mid[arr_ax] = slice(1, -1)
        for b in range(dim):
            if b != a:
                for sel in (fwd, bwd, mid):
                    sel[2 - b] = slice(1, -1)
        d_plus = prim[tuple(fwd)] - prim[tuple(mid)]
        d_minus = prim[tuple(mid)] - prim[tuple(bwd)]
        slopes.append(_minmod(d_plus, d_minus))
    return _linear_dofs(center, slopes, basis1, dim)


def _p0p2_dofs(block: np.ndarray, ms: ModelSpec, dim: int):
    """Primitive two-stage WENO DOFs on the patch interior + 1 ring.

    ``block`` holds conserved subcell means ghosted by 5 per active axis.
    Where the stage-one polynomial's centre value is inadmissible (it can
    overshoot at strong discontinuities even when every mean is fine) the
    centre falls back to the subcell mean itself, locally flattening the
    reconstruction instead of poisoning the patch.
    """
    op = build_weno(2)
    m = op.degree
    cons_dofs = weno_block(block, dim, op, mode="average")
    center_1d = op.basis.eval_at(0.5)[0]
    center_vec = center_1d
    for _ in range(dim - 1):
        center_vec = np.multiply.outer(center_vec, center_1d)
    center = np.einsum("d,...dv->...v", center_vec.ravel(), cons_dofs)
    prim = _prim_or_nan(center, ms)
    broken = ~np.isfinite(prim).all(axis=-1)
    if broken.any():
        crop = [slice(None)] * block.ndim
        for a in range(dim):
            crop[2 - a] = slice(m, -m)
        prim_mean = _prim_or_nan(block[tuple(crop)], ms)
        prim[broken] = prim_mean[broken]
    return weno_block(prim, dim, op, mode="center")


class SubcellLimiter:
    """Detect troubled DG cells and recompute them on subcell means.

    ``scheme`` picks the subcell update ("muscl" or "p0p2");
    ``force_all`` recomputes every cell every step regardless of the
    detector (useful to measure the subcell scheme's own accuracy).
    Instances carry the subcell means of cells limited on the previous
    step so their next update starts from the better-resolved data.
    """

    def __init__(self, scheme: str = "muscl", *, force_all: bool = False):
        if scheme not in SUBCELL_SCHEMES:
            raise ConfigError(f"unknown subcell scheme {scheme!r}")
        self.scheme = scheme
        self.force_all = force_all
        self.last_troubled = 0
        self._stored: dict[tuple[int, int, int], np.ndarray] = {}
        self._key = None

    def apply(
        self,
        state: np.ndarray,
        candidate: np.ndarray,
        bad: np.ndarray,
        ms: ModelSpec,
        mesh: Mesh,
        basis: Basis,
        dt: float,
        cfg: SchemeConfig,
    ) -> tuple[np.ndarray, int]:
        """Replace rejected cells of ``candidate``; return it and a count."""
        if cfg.scheme != "dg":
            raise ConfigError("subcell limiting applies to the dg scheme")
        degree = basis.degree
        dim = mesh.dim
        n_sub = 2 * degree + 1
        key = (mesh.ncells, dim, degree, ms.nvar, self.scheme)
        if key != self._key:
            self._stored = {}
            self._key = key
        if self.force_all:
            troubled = np.ones(state.shape[:3], dtype=bool)
        else:
            troubled = detect_troubled(state, candidate, ms, mesh, basis)
            troubled |= bad
        n_troubled = int(troubled.sum())
        self.last_troubled = n_troubled
        if n_troubled == 0:
            self._stored = {}
            return candidate, 0
        need = 2 if self.scheme == "muscl" else 5
        rings = max(1, ceil(need / n_sub))
        ghosted = with_ghosts(state, mesh, rings, basis=basis)
        sub_means = project_to_subcells(ghosted, degree, dim)
        _flatten_inadmissible(sub_means, ms)
        self._fill_stored(sub_means, mesh, rings, n_sub, dim)
        grid = _subcell_grid(sub_means, n_sub, dim)
        new_patches = self._advance(
            grid, troubled, ms, mesh, dt, cfg, rings, n_sub, need
        )
        cells = np.argwhere(troubled)
        candidate[troubled] = reconstruct_from_subcells(
            new_patches, degree, dim
        )
        self._stored = {
            tuple(idx): patch for idx, patch in zip(cells, new_patches)
        }
        return candidate, n_troubled

    def _fill_stored(self, sub_means, mesh, rings, n_sub, dim):
        """Overwrite projected means with stored patches (and wrap images)."""
        if not self._stored:
            return
        offsets = [rings if _active(ax, dim) else 0 for ax in range(3)]
        sizes = sub_means.shape[:3]
        n_ax = (mesh.ncells[2], mesh.ncells[1], mesh.ncells[0])
        shifts = []
        for ax in range(3):
            spatial = 2 - ax
            wraps = (
                _active(ax, dim) and mesh.bc[spatial][0] == "periodic"
            )
            shifts.append((-1, 0, 1) if wraps else (0,))
        for cell, patch in self._stored.items():
            base = tuple(cell[ax] + offsets[ax] for ax in range(3))
            for combo in product(*shifts):
                pos = tuple(
                    base[ax] + combo[ax] * n_ax[ax] for ax in range(3)
                )
                if all(0 <= pos[ax] < sizes[ax] for ax in range(3)):
                    sub_means[pos] = patch

    def _advance(self, grid, troubled, ms, mesh, dt, cfg, rings, n_sub, need):
        """Advance each troubled cell's subcell means by one FV step.

        Patches whose updated means come out inadmissible are recomputed
        with progressively more dissipative subcell schemes (down to a
        first-order Godunov update), so one marginal subcell cannot poison
        later steps.  Only the failing patches rerun.
        """
        dim = mesh.dim
        ncells = tuple(n_sub if ax < dim else 1 for ax in range(3))
        hi = tuple(mesh.spacing[ax] if ax < dim else 1.0 for ax in range(3))
        sub_mesh = Mesh(lo=(0.0, 0.0, 0.0), hi=hi, ncells=ncells, dim=dim)
        blocks = _gather_blocks(grid, troubled, dim, rings, n_sub, need)
        n_troubled = blocks.shape[0]
        out = np.empty((n_troubled, n_sub**dim, ms.nvar))
        cascade = ("p0p2", "muscl", "godunov")
        cascade = cascade[cascade.index(self.scheme):]
        remaining = np.arange(n_troubled)
        for level, scheme in enumerate(cascade):
            new = _advance_blocks(
                blocks[remaining], scheme, ms, sub_mesh, dt, cfg, n_sub, need
            )
            if level == len(cascade) - 1:
                out[remaining] = new
                break
            prim = _prim_or_nan(new, ms)
            good = np.isfinite(prim).all(axis=(-2, -1))
            out[remaining[good]] = new[good]
            remaining = remaining[~good]
            if remaining.size == 0:
                break
        return out


def _advance_blocks(blocks, scheme, ms, sub_mesh, dt, cfg, n_sub, need):
    """One-step FV update of stacked patch windows with one subcell scheme.

    For 1D/2D problems every patch shares its local geometry, so all
    patches run as one batch along the inactive z slot; 3D patches run
    one at a time.
    """
    dim = sub_mesh.dim
    sub_degree = {"godunov": 0, "muscl": 1, "p0p2": 2}[scheme]
    sub_basis = build_basis(sub_degree)
    sub_cfg = SchemeConfig(
        scheme="fv",
        degree=sub_degree,
        flux=cfg.flux,
        predictor="primitive",
        face_quadrature="averaged",
        cfl=cfg.cfl,
    )
    bodies = [blocks] if dim < 3 else list(blocks)
    results = []
    for body in bodies:
        inner = [slice(None)] * 4
        for a in range(dim):
            inner[2 - a] = slice(need, need + n_sub)
        means = body[tuple(inner)]
        if scheme == "godunov":
            ring = [slice(None)] * 4
            for a in range(dim):
                ring[2 - a] = slice(need - 1, need + n_sub + 1)
            rec = _prim_or_nan(body[tuple(ring)], ms)[..., None, :]
        elif scheme == "muscl":
            crop = [slice(None)] * 4
            for a in range(dim):
                crop[2 - a] = slice(need - 2, need + n_sub + 2)
            rec = _muscl_dofs(body[tuple(crop)], ms, dim, sub_basis)
        else:
            rec = _p0p2_dofs(body, ms, dim)
        new, _ = fv_core(means, rec, ms, sub_basis, sub_mesh, dt, sub_cfg)
        results.append(new)
    n_batch = blocks.shape[0]
    if dim < 3:
        return results[0].reshape(n_batch, n_sub**dim, ms.nvar)
    return np.stack([r.reshape(n_sub**3, ms.nvar) for r in results])


def _flatten_inadmissible(sub_means: np.ndarray, ms: ModelSpec) -> None:
    """Flatten cells whose projected subcell means are inadmissible.

    Projection of a polynomial with strong internal jumps (a freshly
    projected discontinuous initial state, or a neighbour reconstructed
    from limited means) can put individual subcell means outside the
    admissible set even though the cell as a whole is fine.  Replacing
    every subcell of such a cell by the cell mean keeps the cell integral
    exactly (the subdivision is uniform) and restores usable data.
    """
    prim = _prim_or_nan(sub_means, ms)
    bad_cell = ~np.isfinite(prim).all(axis=(-2, -1))
    if bad_cell.any():
        cell_mean = sub_means[bad_cell].mean(axis=-2)
        sub_means[bad_cell] = cell_mean[:, None, :]


def _subcell_grid(sub_means: np.ndarray, n_sub: int, dim: int) -> np.ndarray:
    """Unfold per-cell subcell means into one global subcell grid."""
    gz, gy, gx, _, nvar = sub_means.shape
    ns = tuple(n_sub if _active(ax, dim) else 1 for ax in range(3))
    grid = sub_means.reshape(gz, gy, gx, *ns, nvar)
    grid = grid.transpose(0, 3, 1, 4, 2, 5, 6)
    return grid.reshape(gz * ns[0], gy * ns[1], gx * ns[2], nvar)


def _gather_blocks(grid, troubled, dim, rings, n_sub, need):
    """Stack each troubled cell's subcell window (with ``need`` ghosts).

    Returns (n_troubled, [z,] y, x, nvar) windows; for 1D/2D the leading
    axis doubles as the inactive z slot of the solver's array layout.
    """
    cells = np.argwhere(troubled)
    blocks = []
    for cell in cells:
        sel = []
        for ax in range(3):
            if _active(ax, dim):
                start = (cell[ax] + rings) * n_sub - need
                sel.append(slice(start, start + n_sub + 2 * need))
            else:
                sel.append(slice(None))
        window = grid[tuple(sel)]
        blocks.append(window[0] if dim < 3 else window)
    return np.stack(blocks)
