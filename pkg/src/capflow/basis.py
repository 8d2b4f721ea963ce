"""Nodal Gauss-Legendre bases on the unit interval and derived operators.

Everything the discretization needs from polynomial machinery lives here:
interpolation/differentiation/trace operators of the degree-N Lagrange
basis at Gauss-Legendre nodes, the oscillation-indicator bilinear form,
shifted-cell average and midpoint matrices for reconstruction stencils,
the space-time coefficient matrix of the local predictor, and projection/
reconstruction operators between a DG polynomial and its subcell averages.

All operators are exact for polynomials (Gauss-Legendre quadrature of
polynomial integrands) and precomputed once per degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DEGREE = 9


def gl_nodes_weights(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


def lagrange_eval(nodes: np.ndarray, points) -> np.ndarray:
    """Evaluation matrix E[j, p] = psi_p(points[j]) of the Lagrange basis.

    Valid anywhere (polynomial extrapolation outside [0, 1] included).
    Points that coincide with a node reproduce the Kronecker property
    exactly.
    """
    points = np.atleast_1d(np.asarray(points, dtype=float))
    bary = _barycentric_weights(nodes)
    diff = points[:, None] - nodes[None, :]
    out = np.empty((points.size, nodes.size))
    on_node = diff == 0.0
    # product formula: psi_p(x) = bary_p * prod_{q != p} (x - xi_q)
    full = diff.prod(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = full[:, None] * bary[None, :] / diff
    hit = on_node.any(axis=1)
    if np.any(hit):
        out[hit] = on_node[hit].astype(float)
    return out


def lagrange_diff_matrix(nodes: np.ndarray) -> np.ndarray:
    """Differentiation matrix D[p, q] = psi_q'(xi_p).

    Row sums vanish identically (constants are annihilated exactly)."""
    bary = _barycentric_weights(nodes)
    n = nodes.size
    d = np.zeros((n, n))
    for p in range(n):
        for q in range(n):
            if p != q:
                d[p, q] = (bary[q] / bary[p]) / (nodes[p] - nodes[q])
        d[p, p] = -np.sum(d[p, :])
    return d


@dataclass(frozen=True)
class Basis:
    """Degree-N nodal Lagrange basis at Gauss-Legendre points of [0, 1].

    ``diff`` maps nodal values to nodal derivative values; ``trace_left``/
    ``trace_right`` evaluate at the interval ends; ``osc`` is the
    oscillation indicator Sigma[l, m] = sum over derivative orders alpha of
    the L2 pairing of the alpha-th basis derivatives (symmetric positive
    semidefinite, annihilating constants); ``time_matrix_inv``/
    ``trace_left_weak`` solve the space-time predictor's weak time system
    q_new = Tinv (psi(0) w - dt * w_p * residual_p).
    """

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    diff: np.ndarray
    trace_left: np.ndarray
    trace_right: np.ndarray
    osc: np.ndarray
    time_matrix_inv: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.degree + 1

    def eval_at(self, points) -> np.ndarray:
        return lagrange_eval(self.nodes, points)


@lru_cache(maxsize=None)
def build_basis(degree: int) -> Basis:
    """Construct (and cache) all degree-``degree`` operators."""
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"basis degree must be in [0, {MAX_DEGREE}]")
    nodes, weights = gl_nodes_weights(degree + 1)
    diff = lagrange_diff_matrix(nodes)
    trace_left = lagrange_eval(nodes, 0.0)[0]
    trace_right = lagrange_eval(nodes, 1.0)[0]
    # oscillation indicator: sum_alpha (D^alpha)^T W (D^alpha); the nodal
    # differentiation matrix is exact on the polynomial space, and the
    # integrand of each term has degree <= 2N - 2, handled exactly by the
    # (N+1)-point rule.
    osc = np.zeros((degree + 1, degree + 1))
    d_pow = np.eye(degree + 1)
    for _ in range(degree):
        d_pow = diff @ d_pow
        osc += d_pow.T @ (weights[:, None] * d_pow)
    osc = 0.5 * (osc + osc.T)
    # weak time system of the predictor: T[p,q] = psi_p(1) psi_q(1) - w_q D[q,p]
    t_mat = np.outer(trace_right, trace_right) - (weights[:, None] * diff).T
    time_matrix_inv = np.linalg.inv(t_mat)
    return Basis(
        degree=degree,
        nodes=nodes,
        weights=weights,
        diff=diff,
        trace_left=trace_left,
        trace_right=trace_right,
        osc=osc,
        time_matrix_inv=time_matrix_inv,
    )


def shifted_average_matrix(basis: Basis, offsets) -> np.ndarray:
    """A[j, p] = average of psi_p over the unit cell at integer offset o_j.

    Row j constrains the polynomial's mean over [o_j, o_j + 1]; offset 0 is
    the cell the basis lives on.  Exact via Gauss-Legendre quadrature.
    """
    offsets = np.asarray(offsets, dtype=float)
    out = np.empty((offsets.size, basis.n_nodes))
    for j, off in enumerate(offsets):
        pts = basis.nodes + off
        out[j] = basis.weights @ lagrange_eval(basis.nodes, pts)
    return out


def shifted_midpoint_matrix(basis: Basis, offsets) -> np.ndarray:
    """C[j, p] = psi_p evaluated at the midpoint of the cell at offset o_j."""
    offsets = np.asarray(offsets, dtype=float)
    return lagrange_eval(basis.nodes, offsets + 0.5)


@lru_cache(maxsize=None)
def subcell_operators(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Projection to and constrained reconstruction from subcell averages.

    With N_sub = 2N + 1 subcells per axis, ``project`` (N_sub x (N+1)) takes
    nodal DOFs to exact subcell means; ``reconstruct`` ((N+1) x N_sub) is
    the least-squares pseudo-inverse constrained to preserve the total cell
    average exactly.  They compose to the identity on polynomial data.
    """
    basis = build_basis(degree)
    n_sub = 2 * degree + 1
    gl_x, gl_w = gl_nodes_weights(degree + 1)
    project = np.empty((n_sub, degree + 1))
    for s in range(n_sub):
        pts = (s + gl_x) / n_sub
        project[s] = gl_w @ lagrange_eval(basis.nodes, pts)
    # KKT system: minimize ||P r - s||^2 subject to w . r = mean(s)
    n = degree + 1
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = 2.0 * project.T @ project
    kkt[:n, n] = basis.weights
    kkt[n, :n] = basis.weights
    rhs = np.zeros((n + 1, n_sub))
    rhs[:n] = 2.0 * project.T
    rhs[n] = 1.0 / n_sub
    reconstruct = np.linalg.solve(kkt, rhs)[:n]
    return project, reconstruct


def tensor_weights(basis: Basis, dim: int) -> np.ndarray:
    """Flattened tensor-product quadrature weights over (N+1)^dim nodes."""
    w = basis.weights
    out = w
    for _ in range(dim - 1):
        out = np.multiply.outer(out, w)
    return out.ravel()


def dof_apply(matrix: np.ndarray, dofs: np.ndarray, axis: int, dim: int) -> np.ndarray:
    """Apply a 1D operator along one tensor direction of flattened DOFs.

    ``dofs`` has shape (..., n_nodes**dim, nvar); ``axis`` is the spatial
    direction (0 = x fastest-varying).  Returns an array of the same shape
    with ``matrix`` (m x n_nodes) contracted against that direction; m may
    differ from n_nodes only when m == n_nodes (kept square here to keep
    the flattened layout).
    """
    n = matrix.shape[1]
    lead = dofs.shape[:-2]
    nvar = dofs.shape[-1]
    shape = lead + (n,) * dim + (nvar,)
    work = dofs.reshape(shape)
    # tensor index order is (..., z, y, x, var): spatial axis k lives at
    # position len(lead) + (dim - 1 - k)
    pos = len(lead) + (dim - 1 - axis)
    work = np.moveaxis(work, pos, -2)
    out = np.einsum("pq,...qv->...pv", matrix, work)
    out = np.moveaxis(out, -2, pos)
    return out.reshape(lead + (n**dim, nvar))


def dof_face_trace(
    trace_vec: np.ndarray, dofs: np.ndarray, axis: int, dim: int
) -> np.ndarray:
    """Contract a trace vector along one tensor direction of flattened DOFs.

    Returns shape (..., n_nodes**(dim-1), nvar): the polynomial restricted
    to the face orthogonal to ``axis``.
    """
    n = trace_vec.size
    lead = dofs.shape[:-2]
    nvar = dofs.shape[-1]
    work = dofs.reshape(lead + (n,) * dim + (nvar,))
    pos = len(lead) + (dim - 1 - axis)
    work = np.moveaxis(work, pos, -2)
    out = np.einsum("q,...qv->...v", trace_vec, work)
    return out.reshape(lead + (n ** (dim - 1), nvar))


def dof_face_lift(
    vec: np.ndarray, face_vals: np.ndarray, axis: int, dim: int
) -> np.ndarray:
    """Adjoint of :func:`dof_face_trace`: spread face values back over the
    full DOF tensor, scaled by ``vec`` along the lifted direction.

    ``face_vals``: (..., n_nodes**(dim-1), nvar); result has shape
    (..., n_nodes**dim, nvar) with entry ``vec[p_axis] * face_vals[p_perp]``.
    """
    n = vec.size
    lead = face_vals.shape[:-2]
    nvar = face_vals.shape[-1]
    work = face_vals.reshape(lead + (n,) * (dim - 1) + (nvar,))
    pos = len(lead) + (dim - 1 - axis)
    work = np.expand_dims(work, pos)
    shape = [1] * work.ndim
    shape[pos] = n
    out = work * vec.reshape(shape)
    return np.ascontiguousarray(out).reshape(lead + (n**dim, nvar))
