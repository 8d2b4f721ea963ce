"""Integral diagnostics: gradients, curl norms, energies, fits, periods."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capflow.basis import build_basis
from capflow.diagnostics import (
    CurlMonitor,
    TimeSeriesRecord,
    conserved_totals,
    convergence_fit,
    curl_gradient_integrals,
    error_norms_vs_exact,
    interface_energy_field,
    kinetic_energy,
    measure,
    nodal_gradient,
    oscillation_period,
    schlieren,
    small_oscillation_period,
)
from capflow.errors import ConfigError
from capflow.exact import DropletSpec, droplet_b_field
from capflow.mesh import Mesh, node_coords, project_function
from capflow.state import NVAR_BASE, Q_B, Q_MOM, Q_R1A, Q_R2A

from conftest import make_spec


def plane_mesh(n, lo=(0.0, 0.0), hi=(1.0, 1.0)):
    """2D mesh whose inactive z axis is centred on z = 0."""
    return Mesh(
        lo=(lo[0], lo[1], -1.0),
        hi=(hi[0], hi[1], 1.0),
        ncells=(n, n, 1),
        dim=2,
    )


def b_state(bfun, mesh, basis):
    """Zero conserved state carrying only the interface field rows."""

    def fn(x):
        out = np.zeros(x.shape[:-1] + (NVAR_BASE,))
        out[..., Q_B : Q_B + 3] = bfun(x)
        return out

    return project_function(fn, mesh, basis)


# --- nodal gradients ---------------------------------------------------------


def test_gradient_matches_analytic_polynomial():
    basis = build_basis(2)
    mesh = Mesh(lo=(0.0, 0.0, -1.0), hi=(1.0, 2.0, 1.0), ncells=(4, 3, 1), dim=2)
    coords = node_coords(mesh, basis)
    x, y = coords[..., 0], coords[..., 1]
    fields = np.stack([x**2 + 3 * x * y + 2 * y, (x - y) ** 2], axis=-1)
    grad = nodal_gradient(fields, mesh, basis)
    expect0 = np.stack([2 * x + 3 * y, 3 * x + 2, np.zeros_like(x)], axis=-1)
    expect1 = np.stack([2 * (x - y), -2 * (x - y), np.zeros_like(x)], axis=-1)
    assert np.abs(grad[..., 0, :] - expect0).max() < 1e-12
    assert np.abs(grad[..., 1, :] - expect1).max() < 1e-12


def test_gradient_inactive_axes_are_zero():
    basis = build_basis(1)
    mesh = Mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0), ncells=(6, 1, 1), dim=1)
    coords = node_coords(mesh, basis)
    fields = (2.5 * coords[..., 0])[..., None]
    grad = nodal_gradient(fields, mesh, basis)
    assert np.abs(grad[..., 0, 0] - 2.5).max() < 1e-13
    assert np.abs(grad[..., 0, 1:]).max() == 0.0


# --- curl and gradient integrals ---------------------------------------------


def test_rigid_rotation_integrals_exact():
    # b = (-y, x, 0): curl = (0,0,2) and grad Frobenius norm = sqrt(2)
    # everywhere, so on the unit square the integrals are 2, 4, sqrt(2), 2.
    basis = build_basis(2)
    mesh = plane_mesh(5)
    state = b_state(
        lambda x: np.stack(
            [-x[..., 1], x[..., 0], np.zeros_like(x[..., 0])], axis=-1
        ),
        mesh,
        basis,
    )
    raw = curl_gradient_integrals(state, mesh, basis)
    assert abs(raw["curl_l1"] - 2.0) < 1e-12
    assert abs(raw["curl_l2"] - 4.0) < 1e-12
    assert abs(raw["grad_l1"] - np.sqrt(2.0)) < 1e-12
    assert abs(raw["grad_l2"] - 2.0) < 1e-12
    mon = CurlMonitor(state, mesh, basis)
    l1, l2 = mon.normalized(state, mesh, basis)
    assert abs(l1 - np.sqrt(2.0)) < 1e-12
    assert abs(l2 - 2.0) < 1e-12


def test_gradient_field_has_no_curl():
    # b = grad(x^2 + xy + y^2) is curl-free; the quadrature should see
    # only roundoff while the gradient integrals stay O(1).
    basis = build_basis(2)
    mesh = plane_mesh(5)
    state = b_state(
        lambda x: np.stack(
            [
                2 * x[..., 0] + x[..., 1],
                x[..., 0] + 2 * x[..., 1],
                np.zeros_like(x[..., 0]),
            ],
            axis=-1,
        ),
        mesh,
        basis,
    )
    raw = curl_gradient_integrals(state, mesh, basis)
    assert raw["curl_l1"] < 1e-13
    assert raw["curl_l2"] < 1e-26
    assert raw["grad_l1"] > 1.0


def test_monitor_rejects_gradient_free_start():
    basis = build_basis(1)
    mesh = plane_mesh(3)
    state = np.zeros(mesh.array_shape + (basis.n_nodes**2, NVAR_BASE))
    with pytest.raises(ConfigError):
        CurlMonitor(state, mesh, basis)


def test_droplet_interface_field_near_curl_free():
    # The equilibrium droplet field is a gradient, so its discrete curl is
    # pure interpolation error and sits orders below the gradient norm.
    spec = DropletSpec(R=1.0, k_eps=0.3, p_atm=1.0, sigma=1.0, d=2)
    basis = build_basis(3)
    mesh = plane_mesh(32, lo=(-3.0, -3.0), hi=(3.0, 3.0))
    state = b_state(lambda x: droplet_b_field(x, spec), mesh, basis)
    mon = CurlMonitor(state, mesh, basis)
    l1, l2 = mon.normalized(state, mesh, basis)
    assert l1 < 5e-3
    assert l2 < 5e-5


def test_norms_invariant_under_quarter_turn():
    # Rotating the droplet centre by 90 degrees about the origin maps the
    # square box and its node set onto themselves, so every integral
    # diagnostic must come back identical.
    basis = build_basis(2)
    mesh = plane_mesh(8, lo=(-3.0, -3.0), hi=(3.0, 3.0))
    a = DropletSpec(
        R=1.0, k_eps=0.3, p_atm=1.0, sigma=1.0, d=2, center=(0.5, -0.3, 0.0)
    )
    b = DropletSpec(
        R=1.0, k_eps=0.3, p_atm=1.0, sigma=1.0, d=2, center=(0.3, 0.5, 0.0)
    )
    raw_a = curl_gradient_integrals(
        b_state(lambda x: droplet_b_field(x, a), mesh, basis), mesh, basis
    )
    raw_b = curl_gradient_integrals(
        b_state(lambda x: droplet_b_field(x, b), mesh, basis), mesh, basis
    )
    for key in raw_a:
        assert raw_a[key] == pytest.approx(raw_b[key], rel=1e-10)


def test_polynomial_field_rotation_invariance():
    # R b(R^T x) for the quarter turn R: an anisotropic quadratic field
    # and its rotated image must report identical integrals.
    basis = build_basis(2)
    mesh = plane_mesh(6, lo=(-1.0, -1.0), hi=(1.0, 1.0))

    def base(x):
        u, v = x[..., 0], x[..., 1]
        return np.stack(
            [u**2 + 2 * v, 3 * u * v - v**2, np.zeros_like(u)], axis=-1
        )

    def rotated(x):
        # R = [[0,-1],[1,0]]; R^T x = (y, -x); R (bx, by) = (-by, bx)
        pre = np.stack([x[..., 1], -x[..., 0], x[..., 2]], axis=-1)
        b = base(pre)
        return np.stack([-b[..., 1], b[..., 0], b[..., 2]], axis=-1)

    raw_a = curl_gradient_integrals(b_state(base, mesh, basis), mesh, basis)
    raw_b = curl_gradient_integrals(b_state(rotated, mesh, basis), mesh, basis)
    for key in raw_a:
        assert raw_a[key] == pytest.approx(raw_b[key], rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    coef=st.lists(
        st.floats(min_value=-2.0, max_value=2.0, allow_nan=False), min_size=6, max_size=6
    ),
    shift=st.tuples(
        st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
        st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
    ),
)
def test_norms_invariant_under_translation(coef, shift):
    basis = build_basis(2)
    c = np.array(coef)

    def field(x, ox=0.0, oy=0.0):
        u, v = x[..., 0] - ox, x[..., 1] - oy
        bx = c[0] + c[1] * u + c[2] * v
        by = c[3] + c[4] * u * v + c[5] * v**2
        return np.stack([bx, by, np.zeros_like(u)], axis=-1)

    mesh_a = plane_mesh(4)
    mesh_b = Mesh(
        lo=(shift[0], shift[1], -1.0),
        hi=(shift[0] + 1.0, shift[1] + 1.0, 1.0),
        ncells=(4, 4, 1),
        dim=2,
    )
    raw_a = curl_gradient_integrals(
        b_state(lambda x: field(x), mesh_a, basis), mesh_a, basis
    )
    raw_b = curl_gradient_integrals(
        b_state(lambda x: field(x, *shift), mesh_b, basis), mesh_b, basis
    )
    for key in raw_a:
        assert raw_a[key] == pytest.approx(raw_b[key], rel=1e-9, abs=1e-12)


# --- energies and totals ------------------------------------------------------


def test_uniform_kinetic_energy_exact():
    basis = build_basis(2)
    mesh = Mesh(lo=(0.0, 0.0, -1.0), hi=(2.0, 3.0, 1.0), ncells=(4, 5, 1), dim=2)
    state = np.zeros(mesh.array_shape + (basis.n_nodes**2, NVAR_BASE))
    state[..., Q_R1A] = 0.6
    state[..., Q_R2A] = 0.9
    state[..., Q_MOM : Q_MOM + 3] = (0.3, -0.6, 1.2)
    # 0.5 * (0.09 + 0.36 + 1.44) / 1.5 * area(6) = 3.78
    assert kinetic_energy(state, mesh, basis) == pytest.approx(3.78, rel=1e-13)


def test_conserved_totals_constant_state():
    basis = build_basis(1)
    mesh = Mesh(lo=(0.0, 0.0, -1.0), hi=(2.0, 0.5, 1.0), ncells=(3, 7, 1), dim=2)
    vals = np.arange(1.0, NVAR_BASE + 1.0)
    state = np.broadcast_to(
        vals, mesh.array_shape + (basis.n_nodes**2, NVAR_BASE)
    ).copy()
    totals = conserved_totals(state, mesh, basis)
    assert np.allclose(totals, vals * 1.0, rtol=1e-13)  # area = 2 * 0.5


def test_error_norms_constant_offset():
    basis = build_basis(2)
    mesh = Mesh(lo=(0.0, 0.0, -1.0), hi=(2.0, 1.0, 1.0), ncells=(5, 4, 1), dim=2)

    def exact(x):
        out = np.zeros(x.shape[:-1] + (NVAR_BASE,))
        out[..., 0] = x[..., 0] + 0.5 * x[..., 1]
        return out

    state = project_function(exact, mesh, basis)
    state[..., 3] += 1e-3
    l1, l2, linf = error_norms_vs_exact(state, exact, mesh, basis)
    area = 2.0
    assert l1[3] == pytest.approx(1e-3 * area, rel=1e-12)
    assert l2[3] == pytest.approx(1e-3 * np.sqrt(area), rel=1e-12)
    assert linf[3] == pytest.approx(1e-3, rel=1e-12)
    assert l1[0] < 1e-15 and linf[0] < 1e-13


# --- fits and period extraction ----------------------------------------------


def test_convergence_fit_recovers_cubic():
    pts = [(h, 5.0 * h**3) for h in (0.1, 0.05, 0.025)]
    assert convergence_fit(pts) == pytest.approx(3.0, abs=1e-12)


def test_convergence_fit_rejects_degenerate_input():
    with pytest.raises(ConfigError):
        convergence_fit([(0.1, 1e-3)])
    with pytest.raises(ConfigError):
        convergence_fit([(0.1, 1e-3), (0.05, 0.0)])
    with pytest.raises(ConfigError):
        convergence_fit([(0.1, 1e-3), (-0.05, 1e-4)])


def test_period_is_twice_minima_spacing():
    # sin^2(pi t / s) vanishes every s, so the reported period is 2 s.
    s = 0.73
    t = np.linspace(0.0, 5.3, 2000)
    e = np.sin(np.pi * t / s) ** 2
    assert oscillation_period(t, e) == pytest.approx(2.0 * s, rel=1e-5)


def test_period_of_oscillator_energy_roundtrip():
    # A mode with period T has kinetic energy sin^2(2 pi t / T) vanishing
    # each half period; extraction must return T even under damping.
    T = 1.3e-3
    t = np.linspace(0.0, 4.5e-3, 3000)
    e = np.exp(-t / 2e-3) * np.sin(2 * np.pi * t / T) ** 2
    assert oscillation_period(t, e) == pytest.approx(T, rel=1e-4)


def test_period_extraction_rejects_bad_series():
    with pytest.raises(ConfigError):
        oscillation_period([0.0, 1.0], [1.0, 0.0])
    with pytest.raises(ConfigError):
        oscillation_period([0.0, 2.0, 1.0, 3.0], [1.0, 0.0, 1.0, 0.0])
    with pytest.raises(ConfigError):
        oscillation_period(np.linspace(0, 1, 50), np.ones(50))
    t = np.linspace(0.0, 0.9, 200)
    with pytest.raises(ConfigError):  # single minimum is not enough
        oscillation_period(t, np.sin(np.pi * t / 0.73) ** 2)


def test_small_oscillation_reference_value():
    # sigma=60, densities 1000 and 1, semi-axes 3 mm and 2 mm.
    T = small_oscillation_period(60.0, 1000.0, 1.0, 3.0e-3, 2.0e-3)
    assert T == pytest.approx(1.309651273922389e-3, rel=1e-12)


# --- derived plot fields -----------------------------------------------------


def test_schlieren_constant_gradient_is_flat_floor():
    basis = build_basis(2)
    mesh = Mesh(lo=(0.0, 0.0, -1.0), hi=(1.0, 1.0, 1.0), ncells=(6, 1, 1), dim=1)
    coords = node_coords(mesh, basis)
    state = np.zeros(coords.shape[:-1] + (NVAR_BASE,))
    state[..., Q_R1A] = 2.0 + coords[..., 0]
    state[..., Q_R2A] = 0.0
    for strength in (15.0, 3.0):
        field = schlieren(state, mesh, basis, strength=strength)
        assert np.abs(field - np.exp(-strength)).max() < 1e-12


def test_schlieren_uniform_density_is_one():
    basis = build_basis(1)
    mesh = plane_mesh(4)
    state = np.zeros(mesh.array_shape + (basis.n_nodes**2, NVAR_BASE))
    state[..., Q_R1A] = 1.0
    assert np.all(schlieren(state, mesh, basis) == 1.0)


def test_interface_energy_field_value():
    ms = make_spec("gpncp", sigma=4.0)
    state = np.zeros((1, 1, 2, 3, NVAR_BASE))
    state[..., Q_B] = 0.6
    state[..., Q_B + 2] = 0.8
    field = interface_energy_field(state, ms)
    assert field.shape == (1, 1, 2, 3)
    assert np.abs(field - np.sqrt(2.0)).max() < 1e-13


# --- record assembly ---------------------------------------------------------


def test_measure_assembles_record():
    basis = build_basis(2)
    mesh = plane_mesh(4)
    state = b_state(
        lambda x: np.stack(
            [-x[..., 1], x[..., 0], np.zeros_like(x[..., 0])], axis=-1
        ),
        mesh,
        basis,
    )
    state[..., Q_R1A] = 1.0
    state[..., Q_MOM] = 0.5
    ms = make_spec("gpncp")
    monitor = CurlMonitor(state, mesh, basis)
    rec = measure(state, ms, mesh, basis, monitor, t=0.25, dt=0.01, troubled_fraction=0.125)
    assert isinstance(rec, TimeSeriesRecord)
    assert rec.t == 0.25 and rec.dt == 0.01
    assert rec.curl_l1 == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert rec.curl_l2 == pytest.approx(2.0, rel=1e-12)
    assert rec.grad_b_l1 == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert rec.kinetic_energy == pytest.approx(0.125, rel=1e-12)
    assert rec.totals.shape == (NVAR_BASE,)
    assert rec.troubled_fraction == 0.125
    header, values = rec.header(), rec.values()
    assert len(header) == len(values)
    assert header[0] == "t" and header[-1] == "troubled_fraction"
    assert all(isinstance(v, float) for v in values)
