"""Cell-local space-time Galerkin predictor (Picard iteration).

Each cell's degree-N nodal polynomial is extended to a space-time
polynomial on (N+1)^(dim+1) Gauss-Legendre nodes by solving the weak
in-time system

    T  q_new  =  psi(0) * w  -  dt * w_p * L(q)(tau_p),

where T couples only the time direction (upwinded at tau = 0 against the
known input polynomial) and L is the in-cell spatial operator (flux
divergence plus nonconservative products) evaluated by collocation at the
space-time nodes.  A conservative form iterates on conserved nodal values;
the primitive form iterates on primitive values, mapping the conserved
rate through the inverse state-map jacobian each sweep (chain rule).

Intermediate iterates may leave the admissible set and return; only the
converged polynomial is validated.  Failure (non-finite values, an
inadmissible converged polynomial, or a residual that never contracts)
is reported per cell so the caller can route those cells to the subcell
limiter.
"""

from __future__ import annotations

import numpy as np

from .basis import Basis, dof_apply, dof_face_trace
from .errors import PredictorDiverged
from .kernels import (
    cons_rate_to_prim_rate_batch,
    cons_to_prim_batch,
    flux_prim_batch,
    ncp_action_batch,
    prim_to_cons_batch,
)
from .model import ModelSpec
from .state import P_ALP, P_PRE, P_RHO1, P_RHO2

CONVERGED_TOL = 1e-11


def _flat(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr.reshape(-1, arr.shape[-1]))


def _var_scale(w: np.ndarray) -> np.ndarray:
    """Per-variable magnitude floor for relative residuals."""
    scale = np.abs(w).reshape(-1, w.shape[-1]).max(axis=0)
    return np.maximum(scale, 1e-14 * max(scale.max(), 1.0))


def _prim_admissible(v_flat: np.ndarray, ms: ModelSpec) -> np.ndarray:
    """Vectorized admissibility of primitive states (finite, positive
    densities, fraction strictly inside (0,1), pressure above the floor)."""
    ok = np.isfinite(v_flat).all(axis=1)
    ok &= v_flat[:, P_RHO1] > 0.0
    ok &= v_flat[:, P_RHO2] > 0.0
    ok &= (v_flat[:, P_ALP] > 0.0) & (v_flat[:, P_ALP] < 1.0)
    ok &= v_flat[:, P_PRE] + ms.pi1 > 0.0
    ok &= v_flat[:, P_PRE] + ms.pi2 > 0.0
    return ok


def _rate_from_nodal(
    prim_flat: np.ndarray,
    q: np.ndarray,
    basis: Basis,
    dim: int,
    spacing,
    params: np.ndarray,
) -> np.ndarray:
    """Conserved rate L(q) by collocation: flux divergence of the nodal
    flux interpolant plus the nonconservative action on conserved
    gradients.  ``prim_flat`` are the primitive states of the nodes of
    ``q`` (flattened)."""
    rate = np.zeros_like(q)
    for axis in range(dim):
        grad = dof_apply(basis.diff, q, axis=axis, dim=dim) / spacing[axis]
        flux = np.empty_like(prim_flat)
        flux_prim_batch(prim_flat, params, axis, flux)
        dflux = dof_apply(basis.diff, flux.reshape(q.shape), axis=axis, dim=dim)
        ncp = np.empty_like(prim_flat)
        ncp_action_batch(prim_flat, _flat(grad), params, axis, ncp)
        rate += dflux / spacing[axis] + ncp.reshape(q.shape)
    return rate


def conserved_rate(
    state: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    dim: int,
    spacing,
    params: np.ndarray,
    primitive: bool,
) -> np.ndarray:
    """Conserved-variable rate of a nodal block in either representation."""
    flat = _flat(state)
    if primitive:
        q = np.empty_like(flat)
        prim_to_cons_batch(flat, params, q)
        return _rate_from_nodal(flat, q.reshape(state.shape), basis, dim, spacing, params)
    prim = np.empty_like(flat)
    ok = np.empty(flat.shape[0], dtype=np.bool_)
    cons_to_prim_batch(flat, params, prim, ok)
    return _rate_from_nodal(prim, state, basis, dim, spacing, params)


def _spatial_operator_cons(
    q: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    dim: int,
    spacing,
    params: np.ndarray,
) -> np.ndarray:
    """L(q) on conserved space-time nodes (collocation)."""
    return conserved_rate(q, ms, basis, dim, spacing, params, False)


def _spatial_operator_prim(
    v: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    dim: int,
    spacing,
    params: np.ndarray,
) -> np.ndarray:
    """Primitive-variable rate: conserved in-cell operator mapped through
    the inverse state-map jacobian at each node (collocation)."""
    vf = _flat(v)
    rate_q = conserved_rate(v, ms, basis, dim, spacing, params, True)
    rate_v = np.empty_like(vf)
    cons_rate_to_prim_rate_batch(vf, _flat(rate_q), params, rate_v)
    return rate_v.reshape(v.shape)


def _state_admissible(
    state: np.ndarray, ms: ModelSpec, params: np.ndarray, primitive: bool
) -> np.ndarray:
    """Per-node admissibility of a nodal state block (..., nvar)."""
    flat = _flat(state)
    if primitive:
        ok = _prim_admissible(flat, ms)
    else:
        prim = np.empty_like(flat)
        ok = np.empty(flat.shape[0], dtype=np.bool_)
        cons_to_prim_batch(flat, params, prim, ok)
    return ok.reshape(state.shape[:-1])


def predict_batch(
    w: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    dim: int,
    dt: float,
    spacing,
    mode: str = "conservative",
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Run the Picard predictor for a batch of cells.

    ``w``: (..., ndof, nvar) nodal input polynomials (conserved for
    ``mode="conservative"``, primitive for ``mode="primitive"``).
    Returns ``(space_time, bad, residuals)`` where ``space_time`` has shape
    (..., nt, ndof, nvar) with nt = N+1 time nodes, ``bad`` flags cells
    whose iteration failed (non-finite or inadmissible final iterate, or
    updates that never contracted), and ``residuals`` is the history of
    global state-relative update norms.  Intermediate iterates are allowed
    to leave the admissible set; only the converged polynomial is
    validated.  Contraction is judged per cell and variable against the
    largest update seen during the iteration (a dimensionless measure that
    stays meaningful for near-stagnation cells, where state-relative
    residuals blow up on variables that are themselves near zero).
    ``w`` must carry at least one leading cell axis.
    """
    op = _spatial_operator_cons if mode == "conservative" else _spatial_operator_prim
    params = ms.phys_params()
    nt = basis.n_nodes
    lead = w.shape[:-2]
    nvar = w.shape[-1]
    state = np.repeat(w[..., None, :, :], nt, axis=-3)
    scale = _var_scale(w)
    # absolute update sizes below this are roundoff jitter, not signal
    noise = np.maximum(1e-12 * scale, 1e-14 * scale.max())
    residuals: list[float] = []
    budget = basis.degree + 2
    rhs_w = basis.trace_left.reshape((1,) * len(lead) + (nt, 1, 1)) * w[..., None, :, :]
    wp = basis.weights.reshape((nt, 1, 1))
    per_var = np.zeros(lead + (nvar,))
    largest = np.zeros(lead + (nvar,))
    for _ in range(budget):
        with np.errstate(all="ignore"):
            rate = op(state, ms, basis, dim, spacing, params)
            new_state = np.einsum(
                "pq,...qdv->...pdv", basis.time_matrix_inv, rhs_w - dt * wp * rate
            )
            delta = np.abs(new_state - state)
        per_var = delta.reshape(lead + (-1, nvar)).max(axis=-2)
        per_var = np.where(np.isfinite(per_var), per_var, np.inf)
        largest = np.maximum(largest, per_var)
        rel = per_var / scale
        res = float(rel.max()) if rel.size else 0.0
        residuals.append(res)
        state = new_state
        if res < CONVERGED_TOL:
            break
    # a healthy Picard iteration contracts geometrically, so the final
    # update must sit well below the largest one; cells whose converged
    # polynomial is non-finite or inadmissible are unusable either way
    bad = (per_var > np.maximum(0.5 * largest, noise)).any(axis=-1)
    bad |= ~np.isfinite(state).reshape(lead + (-1,)).all(axis=-1)
    node_ok = _state_admissible(state, ms, params, mode == "primitive")
    bad |= ~node_ok.reshape(lead + (-1,)).all(axis=-1)
    if bad.any():
        state[bad] = np.repeat(w[bad][..., None, :, :], nt, axis=-3)
    return state, bad, residuals


def predictor_conservative(
    w: np.ndarray, ms: ModelSpec, basis: Basis, dim: int, dt: float, spacing
) -> np.ndarray:
    """Single-cell conservative predictor; raises on failure."""
    stp, bad, _ = predict_batch(w[None], ms, basis, dim, dt, spacing, "conservative")
    if bad[0]:
        raise PredictorDiverged("space-time predictor failed to contract")
    return stp[0]


def predictor_primitive(
    w_star: np.ndarray, ms: ModelSpec, basis: Basis, dim: int, dt: float, spacing
) -> np.ndarray:
    """Single-cell primitive predictor; raises on failure."""
    stp, bad, _ = predict_batch(w_star[None], ms, basis, dim, dt, spacing, "primitive")
    if bad[0]:
        raise PredictorDiverged("space-time predictor failed to contract")
    return stp[0]


def flux_trace(
    stp: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    dim: int,
    axis: int,
    side: int,
    primitive: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Conserved state and flux traces of a space-time polynomial.

    ``stp``: (..., nt, ndof, nvar); ``side`` 0 = low face, 1 = high face.
    The flux is first interpolated nodally (f evaluated at the space-time
    nodes) and then extrapolated to the face, matching the rest of the
    scheme's collocation structure.  Returns arrays with shape
    (..., nt, ndof_face, nvar).
    """
    params = ms.phys_params()
    flat = _flat(stp)
    if primitive:
        v_flat = flat
        q_nodes = np.empty_like(flat)
        prim_to_cons_batch(v_flat, params, q_nodes)
    else:
        q_nodes = flat
        v_flat = np.empty_like(flat)
        ok = np.empty(flat.shape[0], dtype=np.bool_)
        cons_to_prim_batch(flat, params, v_flat, ok)
    f_nodes = np.empty_like(flat)
    flux_prim_batch(v_flat, params, axis, f_nodes)
    trace = basis.trace_right if side == 1 else basis.trace_left
    q_face = dof_face_trace(trace, q_nodes.reshape(stp.shape), axis, dim)
    f_face = dof_face_trace(trace, f_nodes.reshape(stp.shape), axis, dim)
    return q_face, f_face
