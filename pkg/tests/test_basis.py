"""Polynomial-exactness and spectral-operator checks for capflow.basis."""

import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from capflow.basis import (
    build_basis,
    dof_apply,
    dof_face_trace,
    gl_nodes_weights,
    lagrange_eval,
    shifted_average_matrix,
    shifted_midpoint_matrix,
    subcell_operators,
    tensor_weights,
)

DEGREES = [0, 1, 2, 3, 4, 5]


def random_poly(rng, degree):
    """Coefficients (low order first) of a random degree-``degree`` poly."""
    return rng.uniform(-1.0, 1.0, degree + 1)


@pytest.mark.parametrize("degree", DEGREES)
def test_nodes_weights_basic(degree):
    b = build_basis(degree)
    assert b.nodes.shape == (degree + 1,)
    assert np.all((b.nodes > 0.0) & (b.nodes < 1.0))
    assert np.all(np.diff(b.nodes) > 0.0)
    assert abs(b.weights.sum() - 1.0) < 1e-14
    # quadrature integrates monomials up to degree 2N+1 exactly
    for k in range(2 * degree + 2):
        exact = 1.0 / (k + 1)
        assert abs(b.weights @ b.nodes**k - exact) < 1e-13


def test_degree_one_nodes_closed_form():
    b = build_basis(1)
    expected = [0.5 - 1.0 / (2.0 * math.sqrt(3.0)), 0.5 + 1.0 / (2.0 * math.sqrt(3.0))]
    np.testing.assert_allclose(b.nodes, expected, rtol=0, atol=1e-15)
    np.testing.assert_allclose(b.weights, [0.5, 0.5], rtol=0, atol=1e-15)


@pytest.mark.parametrize("degree", DEGREES)
def test_kronecker_property(degree):
    b = build_basis(degree)
    eye = b.eval_at(b.nodes)
    np.testing.assert_allclose(eye, np.eye(degree + 1), rtol=0, atol=1e-13)


@pytest.mark.parametrize("degree", DEGREES)
def test_mass_orthogonality(degree):
    # integral of psi_m psi_p over [0,1] equals delta_mp w_p (degree 2N
    # integrand, quadrature exact): check against a denser rule.
    b = build_basis(degree)
    x, w = gl_nodes_weights(degree + 4)
    vals = lagrange_eval(b.nodes, x)
    mass = vals.T @ (w[:, None] * vals)
    np.testing.assert_allclose(mass, np.diag(b.weights), rtol=0, atol=1e-14)


@pytest.mark.parametrize("degree", DEGREES)
def test_diff_matrix_exact_on_polynomials(degree):
    rng = np.random.default_rng(10 + degree)
    b = build_basis(degree)
    coef = random_poly(rng, degree)
    nodal = npoly.polyval(b.nodes, coef)
    dnodal = npoly.polyval(b.nodes, npoly.polyder(coef))
    np.testing.assert_allclose(b.diff @ nodal, dnodal, rtol=0, atol=1e-11)
    # constants are annihilated exactly (row sums are identically zero)
    np.testing.assert_allclose(b.diff @ np.ones(degree + 1), 0.0, rtol=0, atol=1e-12)


@pytest.mark.parametrize("degree", DEGREES)
def test_lagrange_eval_extrapolates(degree):
    rng = np.random.default_rng(20 + degree)
    b = build_basis(degree)
    coef = random_poly(rng, degree)
    nodal = npoly.polyval(b.nodes, coef)
    pts = np.array([-1.3, -0.2, 0.0, 0.4, 1.0, 2.7])
    np.testing.assert_allclose(
        b.eval_at(pts) @ nodal, npoly.polyval(pts, coef), rtol=0, atol=1e-11
    )


@pytest.mark.parametrize("degree", DEGREES)
def test_trace_vectors(degree):
    rng = np.random.default_rng(30 + degree)
    b = build_basis(degree)
    coef = random_poly(rng, degree)
    nodal = npoly.polyval(b.nodes, coef)
    assert abs(b.trace_left @ nodal - npoly.polyval(0.0, coef)) < 1e-12
    assert abs(b.trace_right @ nodal - npoly.polyval(1.0, coef)) < 1e-12


@pytest.mark.parametrize("degree", DEGREES)
def test_oscillation_indicator_structure(degree):
    b = build_basis(degree)
    scale = np.abs(b.osc).max()
    np.testing.assert_allclose(b.osc, b.osc.T, rtol=0, atol=1e-13 * scale)
    np.testing.assert_allclose(
        b.osc @ np.ones(degree + 1), 0.0, rtol=0, atol=1e-12 * scale
    )
    eigs = np.linalg.eigvalsh(b.osc)
    assert eigs.min() >= -1e-12 * max(scale, 1.0)


def test_oscillation_indicator_linear_value():
    # degree 1: only first derivatives contribute; the hat functions have
    # slopes -sqrt(3) and +sqrt(3), so Sigma = [[3, -3], [-3, 3]].
    b = build_basis(1)
    np.testing.assert_allclose(b.osc, [[3.0, -3.0], [-3.0, 3.0]], rtol=0, atol=1e-12)


@pytest.mark.parametrize("degree", DEGREES)
def test_time_matrix_solves_weak_update(degree):
    # For polynomial q(tau) of degree N the weak time system is exact:
    # T qhat = psi(0) q(0) + w_p q'(tau_p).
    rng = np.random.default_rng(40 + degree)
    b = build_basis(degree)
    coef = random_poly(rng, degree)
    nodal = npoly.polyval(b.nodes, coef)
    dnodal = npoly.polyval(b.nodes, npoly.polyder(coef))
    rhs = b.trace_left * npoly.polyval(0.0, coef) + b.weights * dnodal
    np.testing.assert_allclose(b.time_matrix_inv @ rhs, nodal, rtol=0, atol=1e-10)


@pytest.mark.parametrize("degree", [2, 3, 4])
def test_shifted_average_matrix(degree):
    rng = np.random.default_rng(50 + degree)
    b = build_basis(degree)
    coef = random_poly(rng, degree)
    nodal = npoly.polyval(b.nodes, coef)
    offsets = [-2, -1, 0, 1, 3]
    avg = shifted_average_matrix(b, offsets) @ nodal
    anti = npoly.polyint(coef)
    for j, off in enumerate(offsets):
        exact = npoly.polyval(off + 1.0, anti) - npoly.polyval(float(off), anti)
        assert abs(avg[j] - exact) < 1e-11


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_shifted_midpoint_matrix(degree):
    rng = np.random.default_rng(60 + degree)
    b = build_basis(degree)
    coef = random_poly(rng, degree)
    nodal = npoly.polyval(b.nodes, coef)
    offsets = [-1, 0, 2]
    mid = shifted_midpoint_matrix(b, offsets) @ nodal
    np.testing.assert_allclose(
        mid, npoly.polyval(np.asarray(offsets) + 0.5, coef), rtol=0, atol=1e-11
    )


@pytest.mark.parametrize("degree", DEGREES)
def test_subcell_projection_exact_means(degree):
    rng = np.random.default_rng(70 + degree)
    b = build_basis(degree)
    project, _ = subcell_operators(degree)
    n_sub = 2 * degree + 1
    coef = random_poly(rng, degree)
    nodal = npoly.polyval(b.nodes, coef)
    means = project @ nodal
    anti = npoly.polyint(coef)
    for s in range(n_sub):
        exact = n_sub * (
            npoly.polyval((s + 1.0) / n_sub, anti) - npoly.polyval(s / n_sub, anti)
        )
        assert abs(means[s] - exact) < 1e-12


@pytest.mark.parametrize("degree", DEGREES)
def test_subcell_roundtrip_and_conservation(degree):
    rng = np.random.default_rng(80 + degree)
    b = build_basis(degree)
    project, reconstruct = subcell_operators(degree)
    # reconstruct(project(q)) == q for any polynomial data
    np.testing.assert_allclose(
        reconstruct @ project, np.eye(degree + 1), rtol=0, atol=1e-10
    )
    # total average is preserved even for non-polynomial subcell data
    n_sub = 2 * degree + 1
    sub = rng.uniform(-1.0, 1.0, n_sub)
    rec = reconstruct @ sub
    assert abs(b.weights @ rec - sub.mean()) < 1e-12


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_tensor_weights_sum(dim):
    b = build_basis(3)
    w = tensor_weights(b, dim)
    assert w.shape == ((b.n_nodes) ** dim,)
    assert abs(w.sum() - 1.0) < 1e-13


def test_dof_apply_differentiates_tensor_field():
    degree, dim = 3, 2
    b = build_basis(degree)
    n = b.n_nodes
    x = b.nodes
    # f(x, y) = (x^3 - 2x) * (y^2 + 1), flattened C order (y slow, x fast)
    fx = x**3 - 2.0 * x
    fy = x**2 + 1.0
    field = np.multiply.outer(fy, fx).reshape(n * n, 1)
    dx = dof_apply(b.diff, field, axis=0, dim=dim)
    expected = np.multiply.outer(fy, 3.0 * x**2 - 2.0).reshape(n * n, 1)
    np.testing.assert_allclose(dx, expected, rtol=0, atol=1e-11)
    dy = dof_apply(b.diff, field, axis=1, dim=dim)
    expected = np.multiply.outer(2.0 * x, fx).reshape(n * n, 1)
    np.testing.assert_allclose(dy, expected, rtol=0, atol=1e-11)


def test_dof_face_trace_matches_evaluation():
    degree, dim = 2, 2
    b = build_basis(degree)
    n = b.n_nodes
    x = b.nodes
    fx = 1.0 + 0.5 * x
    fy = x**2
    field = np.multiply.outer(fy, fx).reshape(n * n, 1)
    left_x = dof_face_trace(b.trace_left, field, axis=0, dim=dim)
    np.testing.assert_allclose(left_x[:, 0], fy * 1.0, rtol=0, atol=1e-12)
    right_y = dof_face_trace(b.trace_right, field, axis=1, dim=dim)
    np.testing.assert_allclose(right_y[:, 0], fx * 1.0, rtol=0, atol=1e-12)
