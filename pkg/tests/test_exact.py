"""Reference-field tests: droplet profiles, shock setup, and ellipse fields.

Oracles: adaptive quadrature (scipy.integrate.quad) for the pressure
integral, central differences for gradient/ODE identities, and the
Rankine-Hugoniot conditions for the shock state.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from capflow import exact as ex
from capflow.state import P_ALP, P_B, P_COL, P_PRE, P_RHO1, P_RHO2, P_VEL


def std_droplet(**kw) -> ex.DropletSpec:
    base = dict(R=1.0, k_eps=0.3, p_atm=1.0, sigma=1.0, d=2)
    base.update(kw)
    return ex.DropletSpec(**base)


# --- colour profile -------------------------------------------------------


def test_colour_reference_values():
    assert ex.droplet_colour(1.0, 0.3) == 0.5
    assert ex.droplet_colour(1.3, 0.3) == pytest.approx(math.erfc(1.0) / 2.0, rel=1e-14)
    assert math.erfc(1.0) / 2.0 == pytest.approx(0.0786, abs=5e-5)
    assert ex.droplet_colour(0.0, 0.3) == pytest.approx(1.0, abs=5e-6)


@given(
    k=st.floats(0.05, 1.0),
    r_lo=st.floats(0.0, 4.0),
    dr=st.floats(1e-6, 4.0),
)
def test_colour_monotone_decreasing(k, r_lo, dr):
    assert ex.droplet_colour(r_lo + dr, k) <= ex.droplet_colour(r_lo, k)


# --- interface-normal field -----------------------------------------------


def test_b_field_peak_centre_and_direction():
    spec = std_droplet(R=1.3, k_eps=0.25, center=(0.2, -0.1, 0.0))
    on_radius = np.array([0.2 + 1.3, -0.1, 0.0])
    b = ex.droplet_b_field(on_radius, spec)
    peak = 1.0 / (math.sqrt(math.pi) * spec.k_eps * spec.R)
    assert np.linalg.norm(b) == pytest.approx(peak, rel=1e-13)
    # points inward along -x here
    assert b[0] == pytest.approx(-peak, rel=1e-13)
    assert abs(b[1]) < 1e-15 and abs(b[2]) < 1e-15
    centre = ex.droplet_b_field(np.array(spec.center), spec)
    assert np.all(centre == 0.0)


def test_b_field_matches_fd_gradient_of_colour(rng):
    spec = std_droplet(R=1.3, k_eps=0.25, center=(0.2, -0.1, 0.0))
    pts = rng.uniform(-2.0, 2.0, size=(100, 3))
    b = ex.droplet_b_field(pts, spec)
    h = 1e-5
    centre = np.asarray(spec.center)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        cp = ex.droplet_colour(np.linalg.norm(pts + e - centre, axis=1) / spec.R, spec.k_eps)
        cm = ex.droplet_colour(np.linalg.norm(pts - e - centre, axis=1) / spec.R, spec.k_eps)
        fd = (cp - cm) / (2.0 * h)
        assert np.max(np.abs(b[:, i] - fd)) < 1e-8


def test_b_field_discretely_curl_free(rng):
    spec = std_droplet(R=1.1, k_eps=0.3)
    pts = rng.uniform(-2.0, 2.0, size=(60, 3))
    h = 1e-5
    grads = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        grads.append((ex.droplet_b_field(pts + e, spec) - ex.droplet_b_field(pts - e, spec)) / (2 * h))
    curl = np.stack(
        [
            grads[1][:, 2] - grads[2][:, 1],
            grads[2][:, 0] - grads[0][:, 2],
            grads[0][:, 1] - grads[1][:, 0],
        ],
        axis=-1,
    )
    peak = 1.0 / (math.sqrt(math.pi) * spec.k_eps * spec.R)
    assert np.max(np.abs(curl)) < 1e-7 * peak


# --- pressure profile -------------------------------------------------------


def test_pressure_against_adaptive_quadrature(rng):
    for _ in range(25):
        k = rng.uniform(0.05, 0.45)
        r_star = rng.uniform(0.005, 1.0 + 12.0 * k + 0.5)
        mine = float(ex._interface_integral(r_star, k))
        lo = max(r_star, ex.R_STAR_FLOOR)
        hi = 1.0 + 12.0 * k
        ref = 0.0
        if lo < hi:
            ref, _ = quad(
                lambda r: math.exp(-(((r - 1.0) / k) ** 2)) / (math.sqrt(math.pi) * k * r),
                lo,
                hi,
                limit=400,
                epsabs=1e-14,
                epsrel=1e-13,
                points=[1.0] if lo < 1.0 else None,
            )
        assert abs(mine - ref) < 1e-11


def test_pressure_monotone_floor_and_far_field():
    spec = std_droplet()
    grid = np.linspace(0.0, 6.0, 400)
    p = ex.droplet_pressure(grid, spec)
    assert np.all(np.diff(p) <= 1e-14 * np.max(p))
    assert p[-1] == spec.p_atm  # beyond truncation radius: exactly ambient
    assert ex.droplet_pressure(0.0, spec) == ex.droplet_pressure(ex.R_STAR_FLOOR, spec)
    assert np.all(p >= spec.p_atm)


def test_pressure_sigma_zero_is_ambient():
    spec = std_droplet(sigma=0.0, p_atm=7.5)
    grid = np.linspace(0.0, 5.0, 50)
    assert np.all(ex.droplet_pressure(grid, spec) == 7.5)


def test_pressure_satisfies_radial_balance_ode():
    # dp/dr* = -(d-1) (sigma/R) exp(-((r*-1)/k)^2) / (sqrt(pi) k r*)
    for d in (2, 3):
        spec = std_droplet(d=d, sigma=2.0, R=1.4, k_eps=0.35)
        radii = np.linspace(0.4, 2.4, 21)
        h = 1e-6
        fd = (ex.droplet_pressure(radii + h, spec) - ex.droplet_pressure(radii - h, spec)) / (2 * h)
        kernel = np.exp(-(((radii - 1.0) / spec.k_eps) ** 2)) / (
            math.sqrt(math.pi) * spec.k_eps * radii
        )
        exact_slope = -(d - 1) * spec.sigma / spec.R * kernel
        assert np.max(np.abs(fd - exact_slope)) < 1e-6 * np.max(np.abs(exact_slope))


def test_pressure_jump_sharp_interface_limit():
    for d in (2, 3):
        spec = std_droplet(R=2.0, k_eps=1e-3, p_atm=5.0, sigma=3.0, d=d)
        target = (d - 1) * spec.sigma / spec.R
        assert ex.droplet_pressure_delta(spec) == pytest.approx(target, rel=1e-5)


def test_pressure_jump_quadratic_thickness_law():
    spec03 = std_droplet(k_eps=0.3)
    assert ex.capillary_jump_estimate(spec03) == pytest.approx(1.045, rel=1e-12)
    for k in (0.1, 0.2, 0.3, 0.4):
        spec = std_droplet(k_eps=k)
        dp = ex.droplet_pressure_delta(spec)
        est = ex.capillary_jump_estimate(spec)
        assert abs(dp - est) < 0.10 * dp


def test_pressure_jump_deviation_scales_quadratically():
    ks = np.geomspace(0.05, 0.4, 8)
    devs = []
    for k in ks:
        spec = std_droplet(k_eps=float(k))
        devs.append(ex.droplet_pressure_delta(spec) - 1.0)
    slope = np.polyfit(np.log(ks), np.log(np.abs(devs)), 1)[0]
    assert 1.8 <= slope <= 2.2


# --- composed droplet initial condition -------------------------------------


def test_droplet_ic_field_composition(rng):
    spec = std_droplet(
        R=3e-3,
        k_eps=1.0 / 6.0,
        p_atm=1e5,
        sigma=60.0,
        rho1_0=1000.0,
        rho2_0=1.0,
        u0=(12.0, 12.0, 0.0),
    )
    pts = rng.uniform(-6e-3, 6e-3, size=(40, 3))
    pts[:, 2] = 0.0
    v = ex.droplet_ic(pts, spec)
    r_star = np.linalg.norm(pts, axis=1) / spec.R
    c = ex.droplet_colour(r_star, spec.k_eps)
    lo, hi = spec.alpha_bounds
    assert np.allclose(v[:, P_COL], c, rtol=0, atol=0)
    assert np.allclose(v[:, P_ALP], lo + (hi - lo) * c)
    assert np.all(v[:, P_RHO1] == 1000.0) and np.all(v[:, P_RHO2] == 1.0)
    assert np.all(v[:, P_VEL] == 12.0) and np.all(v[:, P_VEL + 2] == 0.0)
    assert np.allclose(v[:, P_PRE], ex.droplet_pressure(r_star, spec))
    assert np.allclose(v[:, P_B : P_B + 3], ex.droplet_b_field(pts, spec))


# --- smooth periodic advection test ------------------------------------------


def test_convergence_ic_hand_evaluated_samples():
    spec = ex.ConvergenceSpec()
    v0 = ex.convergence_ic(np.array([0.0, 0.0, 0.0]), spec)
    assert v0[P_RHO1] == pytest.approx(1000.0, rel=1e-14)
    assert v0[P_RHO2] == pytest.approx(1.0, rel=1e-14)
    assert v0[P_COL] == pytest.approx(1.0, abs=5e-6)
    assert v0[P_ALP] == pytest.approx(0.01 + 0.98 * v0[P_COL], rel=1e-14)

    x, y = 1.2, 0.7
    v = ex.convergence_ic(np.array([x, y, 0.0]), spec)
    w = math.pi / 3.0
    rho1 = 1000.0 * (1.0 + 0.1 * math.sin(w * (2 * x + y)) * math.cos(w * (x - 2 * y)))
    rho2 = 1.0 * (1.0 + 0.1 * math.sin(w * (x - 2 * y)) * math.cos(w * (2 * x + y)))
    assert v[P_RHO1] == pytest.approx(rho1, rel=1e-14)
    assert v[P_RHO2] == pytest.approx(rho2, rel=1e-14)
    assert v[P_VEL] == 3.0 and v[P_VEL + 1] == 3.0


def test_convergence_ic_delta_zero_constant_densities(rng):
    spec = ex.ConvergenceSpec(delta=0.0)
    pts = rng.uniform(-3.0, 3.0, size=(30, 3))
    pts[:, 2] = 0.0
    v = ex.convergence_ic(pts, spec)
    assert np.all(v[:, P_RHO1] == 1000.0)
    assert np.all(v[:, P_RHO2] == 1.0)


def test_convergence_ic_exact_transport(rng):
    spec = ex.ConvergenceSpec()
    pts = rng.uniform(-3.0, 3.0, size=(50, 3))
    pts[:, 2] = 0.0
    # integer number of box crossings: solution returns to the initial state
    assert np.allclose(
        ex.convergence_ic(pts, spec, t=12.0), ex.convergence_ic(pts, spec), rtol=0, atol=1e-11
    )
    # generic time: equals the initial condition sampled at the wrapped pre-image
    t = 0.73
    pre = ex.advected_positions(pts, t, spec.u0, spec.domain_lo, spec.domain_hi)
    assert np.allclose(
        ex.convergence_ic(pts, spec, t=t), ex.convergence_ic(pre, spec), rtol=0, atol=1e-12
    )


def test_advected_positions_wrapping():
    lo = (-3.0, -3.0, 0.0)
    hi = (3.0, 3.0, 0.0)
    out = ex.advected_positions(np.array([2.0, -2.0, 0.5]), 1.0, (3.0, 3.0, 3.0), lo, hi)
    assert out[0] == pytest.approx(-1.0)
    assert out[1] == pytest.approx(1.0)  # -5 wraps into [-3, 3)
    assert out[2] == pytest.approx(0.5 - 3.0)  # zero-extent axis: unwrapped shift


# --- shock / liquid column ----------------------------------------------------


def test_normal_shock_mach_one_is_identity():
    p, rho, u, speed = ex.normal_shock_jump(1.0, 1.4, 1e5, 1.18)
    assert p == pytest.approx(1e5, rel=1e-14)
    assert rho == pytest.approx(1.18, rel=1e-14)
    assert u == pytest.approx(0.0, abs=1e-12)
    assert speed == pytest.approx(math.sqrt(1.4e5 / 1.18), rel=1e-14)


def test_normal_shock_satisfies_rankine_hugoniot():
    gamma, p1, rho1 = 1.4, 1.0e5, 1.18
    p2, rho2, u2, speed = ex.normal_shock_jump(1.3, gamma, p1, rho1)
    assert p2 / p1 == pytest.approx((2 * gamma * 1.3**2 - (gamma - 1)) / (gamma + 1), rel=1e-14)
    assert p2 / p1 == pytest.approx(1.805, abs=1e-3)
    # conservation of mass, momentum, and energy flux in the shock frame
    w1, w2 = -speed, u2 - speed
    e1, e2 = p1 / (gamma - 1), p2 / (gamma - 1)
    assert rho1 * w1 == pytest.approx(rho2 * w2, rel=1e-12)
    assert rho1 * w1**2 + p1 == pytest.approx(rho2 * w2**2 + p2, rel=1e-12)
    f1 = (e1 + 0.5 * rho1 * w1**2 + p1) * w1
    f2 = (e2 + 0.5 * rho2 * w2**2 + p2) * w2
    assert f1 == pytest.approx(f2, rel=1e-12)


def test_shock_column_ic_regions(rng):
    spec = ex.DropletSpec(
        R=3.2e-3,
        k_eps=0.05,
        p_atm=1e5,
        sigma=0.072,
        d=2,
        alpha_bounds=(1e-5, 1.0 - 1e-5),
        rho1_0=998.2,
        rho2_0=1.18,
    )
    shock_x = -4.0e-3
    pts = rng.uniform(-8e-3, 8e-3, size=(200, 3))
    pts[:, 2] = 0.0
    v = ex.shock_column_ic(pts, spec, gamma_gas=1.4, mach=1.3, shock_x=shock_x)
    base = ex.droplet_ic(pts, spec)
    ahead = pts[:, 0] >= shock_x
    assert np.array_equal(v[ahead], base[ahead])
    p2, rho2, u2, _ = ex.normal_shock_jump(1.3, 1.4, 1e5, 1.18)
    behind = ~ahead
    assert np.all(v[behind, P_PRE] == p2)
    assert np.all(v[behind, P_RHO2] == rho2)
    assert np.all(v[behind, P_VEL] == u2)
    # liquid density, volume fraction, and interface field keep ambient profiles
    assert np.array_equal(v[behind, P_RHO1], base[behind, P_RHO1])
    assert np.array_equal(v[behind, P_ALP], base[behind, P_ALP])
    assert np.array_equal(v[behind, P_B : P_B + 3], base[behind, P_B : P_B + 3])


def test_shock_mach_below_one_rejected():
    with pytest.raises(ValueError):
        ex.normal_shock_jump(0.9, 1.4, 1e5, 1.18)


# --- smoothed ellipse -----------------------------------------------------------


def std_ellipse(**kw) -> ex.EllipseSpec:
    base = dict(Rx=3e-3, Ry=2e-3, eps=5e-4, p_atm=1e5, sigma=60.0)
    base.update(kw)
    return ex.EllipseSpec(**base)


def test_ellipse_circular_limit_reduces_to_droplet(rng):
    esp = std_ellipse(Rx=2.5e-3, Ry=2.5e-3)
    dsp = ex.DropletSpec(R=2.5e-3, k_eps=0.2, p_atm=1e5, sigma=60.0, d=2)
    pts = rng.uniform(-6e-3, 6e-3, size=(200, 3))
    pts[:, 2] = 0.0
    ve = ex.ellipse_ic(pts, esp)
    vd = ex.droplet_ic(pts, dsp)
    scale = np.maximum(np.max(np.abs(vd), axis=0), 1e-300)
    assert np.max(np.abs(ve - vd) / scale) < 1e-9
    radii = np.array([0.0, 1e-3, 2.5e-3, 4e-3])
    assert np.allclose(ex.ellipse_curvature_radius(radii, esp), 2.5e-3, rtol=1e-12)


def test_ellipse_on_axis_symmetry():
    esp = std_ellipse()
    on_x = ex.ellipse_ic(np.array([[2.2e-3, 0.0, 0.0], [-3.5e-3, 0.0, 0.0]]), esp)
    assert np.all(on_x[:, P_B + 1] == 0.0)
    assert np.all(on_x[:, P_B] != 0.0)
    on_y = ex.ellipse_ic(np.array([[0.0, 1.7e-3, 0.0]]), esp)
    assert np.all(on_y[:, P_B] == 0.0)


def test_ellipse_b_matches_fd_gradient(rng):
    esp = std_ellipse(rotation=0.5, center=(1e-4, -2e-4, 0.0))
    pts = rng.uniform(-6e-3, 6e-3, size=(100, 3))
    pts[:, 2] = 0.0
    v = ex.ellipse_ic(pts, esp)
    scale = np.max(np.abs(v[:, P_B : P_B + 2]))
    h = 1e-9
    for i in range(2):
        e = np.zeros(3)
        e[i] = h
        cp = ex.ellipse_ic(pts + e, esp)[:, P_COL]
        cm = ex.ellipse_ic(pts - e, esp)[:, P_COL]
        fd = (cp - cm) / (2.0 * h)
        assert np.max(np.abs(v[:, P_B + i] - fd)) < 1e-6 * scale


def test_ellipse_rotation_equivariance(rng):
    theta = 0.7
    base = std_ellipse()
    tilted = std_ellipse(rotation=theta)
    pts = rng.uniform(-5e-3, 5e-3, size=(60, 3))
    pts[:, 2] = 0.0
    rot = np.array(
        [
            [math.cos(theta), -math.sin(theta), 0.0],
            [math.sin(theta), math.cos(theta), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    v_base = ex.ellipse_ic(pts, base)
    v_tilt = ex.ellipse_ic(pts @ rot.T, tilted)
    for idx in (P_RHO1, P_RHO2, P_PRE, P_ALP, P_COL):
        assert np.allclose(v_tilt[:, idx], v_base[:, idx], rtol=1e-12, atol=1e-12)
    b_rotated = v_base[:, P_B : P_B + 3] @ rot.T
    scale = np.max(np.abs(b_rotated))
    assert np.max(np.abs(v_tilt[:, P_B : P_B + 3] - b_rotated)) < 1e-12 * scale


def test_ellipse_curvature_radius_bounds_and_boundary_query():
    esp = std_ellipse()
    lo = esp.Ry**2 / esp.Rx  # tightest curvature radius (major-axis tips)
    hi = esp.Rx**2 / esp.Ry  # flattest (minor-axis tips)
    radii = np.linspace(0.0, 6e-3, 50)
    rk = ex.ellipse_curvature_radius(radii, esp)
    assert np.all(np.isfinite(rk))
    assert np.all(rk > 0.99 * lo) and np.all(rk < 1.01 * hi)
    on_boundary = ex.ellipse_curvature_radius(np.array([esp.Ry, esp.Rx, 2.5e-3]), esp)
    assert np.all(np.isfinite(on_boundary)) and np.all(on_boundary > 0.0)


def test_ellipse_pressure_exceeds_ambient_inside():
    esp = std_ellipse()
    centre = ex.ellipse_ic(np.zeros(3), esp)
    assert centre[P_PRE] > esp.p_atm
    far = ex.ellipse_ic(np.array([50e-3, 40e-3, 0.0]), esp)
    assert far[P_PRE] == pytest.approx(esp.p_atm, rel=1e-14)


# --- spec validation ------------------------------------------------------------


def test_spec_validation_errors():
    with pytest.raises(ValueError):
        ex.DropletSpec(R=-1.0, k_eps=0.3, p_atm=1.0, sigma=1.0)
    with pytest.raises(ValueError):
        ex.DropletSpec(R=1.0, k_eps=0.0, p_atm=1.0, sigma=1.0)
    with pytest.raises(ValueError):
        ex.DropletSpec(R=1.0, k_eps=0.3, p_atm=1.0, sigma=1.0, d=4)
    with pytest.raises(ValueError):
        ex.EllipseSpec(Rx=1.0, Ry=-1.0, eps=0.1)
    with pytest.raises(ValueError):
        ex.EllipseSpec(Rx=1.0, Ry=1.0, eps=0.0)


@settings(max_examples=25)
@given(k=st.floats(0.05, 0.45), r1=st.floats(0.0, 5.0), dr=st.floats(1e-3, 3.0))
def test_pressure_monotone_property(k, r1, dr):
    spec = std_droplet(k_eps=k)
    p1 = float(ex.droplet_pressure(r1, spec))
    p2 = float(ex.droplet_pressure(r1 + dr, spec))
    assert p2 <= p1 + 1e-12 * abs(p1)
