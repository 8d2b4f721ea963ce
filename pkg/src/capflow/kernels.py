"""Compiled batched versions of the per-state model operations.

Every routine here mirrors a scalar reference function in
:mod:`capflow.model` but operates on arrays of states with shape
``(n, nvar)`` and a packed parameter vector (``ModelSpec.phys_params()``),
so the solver loops stay allocation-light and JIT-compiled.  Parity with
the scalar reference is enforced by the test suite.

Conventions:
  * ``params`` layout: gamma1, gamma2, pi1, pi2, sigma, ch, b_floor,
    variant code (0 = weakly hyperbolic, 1 = hyperbolized, 2 = curl
    cleaning), alpha lower bound, alpha upper bound.
  * invalid states never raise; they clear the ``ok`` flag (where present)
    and leave best-effort values, so callers decide how to recover.
"""

from __future__ import annotations

import numpy as np
from numba import njit as _njit

from .state import (
    P_ALP,
    P_B,
    P_COL,
    P_PRE,
    P_PSI,
    P_RHO1,
    P_RHO2,
    P_VEL,
    Q_ALP,
    Q_B,
    Q_COL,
    Q_ENE,
    Q_MOM,
    Q_PSI,
    Q_R1A,
    Q_R2A,
)

# params vector slots
PAR_G1 = 0
PAR_G2 = 1
PAR_PI1 = 2
PAR_PI2 = 3
PAR_SIGMA = 4
PAR_CH = 5
PAR_BFLOOR = 6
PAR_VARIANT = 7
PAR_AMIN = 8
PAR_AMAX = 9

VARIANT_WH = 0.0
VARIANT_GP = 1.0
VARIANT_GLM = 2.0


def njit(**kw):
    """IEEE semantics for every kernel: invalid operations and zero
    divisions produce inf/NaN instead of raising, so unrecoverable
    states poison their outputs and surface in the trouble masks."""
    return _njit(cache=True, error_model="numpy", **kw)


@njit()
def _mixture_terms(a1, g1, g2, pi1, pi2):
    a2 = 1.0 - a1
    g = a1 * (g2 - 1.0) + a2 * (g1 - 1.0)
    h = a1 * g1 * pi1 * (g2 - 1.0) + a2 * g2 * pi2 * (g1 - 1.0)
    big = (g1 - 1.0) * (g2 - 1.0)
    return g, h, big


@njit()
def _mixture_speed_sq(rho1, rho2, a1, p, g1, g2, pi1, pi2):
    a2 = 1.0 - a1
    z1 = g1 * (p + pi1)
    z2 = g2 * (p + pi2)
    rho = a1 * rho1 + a2 * rho2
    denom = a1 * z2 + a2 * z1
    a_sq = z1 * z2 / (rho * denom)
    coupling = a1 * a2 * (z2 - z1) / denom
    return a_sq, coupling


@njit()
def prim_to_cons_batch(v: np.ndarray, params: np.ndarray, out: np.ndarray) -> None:
    g1, g2 = params[PAR_G1], params[PAR_G2]
    pi1, pi2 = params[PAR_PI1], params[PAR_PI2]
    sigma = params[PAR_SIGMA]
    glm = params[PAR_VARIANT] == VARIANT_GLM
    n = v.shape[0]
    for i in range(n):
        rho1 = v[i, P_RHO1]
        rho2 = v[i, P_RHO2]
        ux = v[i, P_VEL]
        uy = v[i, P_VEL + 1]
        uz = v[i, P_VEL + 2]
        p = v[i, P_PRE]
        a1 = v[i, P_ALP]
        a2 = 1.0 - a1
        rho = a1 * rho1 + a2 * rho2
        g, h, big = _mixture_terms(a1, g1, g2, pi1, pi2)
        rhoe = (p * g + h) / big
        bx = v[i, P_B]
        by = v[i, P_B + 1]
        bz = v[i, P_B + 2]
        nb = np.sqrt(bx * bx + by * by + bz * bz)
        out[i, Q_R1A] = a1 * rho1
        out[i, Q_R2A] = a2 * rho2
        out[i, Q_MOM] = rho * ux
        out[i, Q_MOM + 1] = rho * uy
        out[i, Q_MOM + 2] = rho * uz
        out[i, Q_ENE] = rhoe + 0.5 * rho * (ux * ux + uy * uy + uz * uz) + sigma * nb
        out[i, Q_ALP] = a1
        out[i, Q_B] = bx
        out[i, Q_B + 1] = by
        out[i, Q_B + 2] = bz
        out[i, Q_COL] = v[i, P_COL]
        if glm:
            out[i, Q_PSI] = v[i, P_PSI]
            out[i, Q_PSI + 1] = v[i, P_PSI + 1]
            out[i, Q_PSI + 2] = v[i, P_PSI + 2]


@njit()
def cons_to_prim_batch(
    q: np.ndarray, params: np.ndarray, out: np.ndarray, ok: np.ndarray
) -> None:
    """Batched inverse state map; ``ok[i]`` is cleared for inadmissible
    states (volume fraction outside (0, 1), nonpositive phase density,
    pressure at or below the stiffened-gas floor, or non-finite output)."""
    g1, g2 = params[PAR_G1], params[PAR_G2]
    pi1, pi2 = params[PAR_PI1], params[PAR_PI2]
    sigma = params[PAR_SIGMA]
    amin, amax = params[PAR_AMIN], params[PAR_AMAX]
    glm = params[PAR_VARIANT] == VARIANT_GLM
    n = q.shape[0]
    for i in range(n):
        a1_raw = q[i, Q_ALP]
        good = (a1_raw > 0.0) and (a1_raw < 1.0)
        a1 = min(max(a1_raw, amin), amax)
        a2 = 1.0 - a1
        rho1 = q[i, Q_R1A] / a1
        rho2 = q[i, Q_R2A] / a2
        rho = q[i, Q_R1A] + q[i, Q_R2A]
        ux = q[i, Q_MOM] / rho
        uy = q[i, Q_MOM + 1] / rho
        uz = q[i, Q_MOM + 2] / rho
        bx = q[i, Q_B]
        by = q[i, Q_B + 1]
        bz = q[i, Q_B + 2]
        nb = np.sqrt(bx * bx + by * by + bz * bz)
        rhoe = q[i, Q_ENE] - 0.5 * rho * (ux * ux + uy * uy + uz * uz) - sigma * nb
        g, h, big = _mixture_terms(a1, g1, g2, pi1, pi2)
        p = (rhoe * big - h) / g
        good = good and (rho1 > 0.0) and (rho2 > 0.0)
        good = good and (p + pi1 > 0.0) and (p + pi2 > 0.0)
        good = good and np.isfinite(p) and np.isfinite(rho)
        out[i, P_RHO1] = rho1
        out[i, P_RHO2] = rho2
        out[i, P_VEL] = ux
        out[i, P_VEL + 1] = uy
        out[i, P_VEL + 2] = uz
        out[i, P_PRE] = p
        out[i, P_ALP] = a1
        out[i, P_B] = bx
        out[i, P_B + 1] = by
        out[i, P_B + 2] = bz
        out[i, P_COL] = q[i, Q_COL]
        if glm:
            out[i, P_PSI] = q[i, Q_PSI]
            out[i, P_PSI + 1] = q[i, Q_PSI + 1]
            out[i, P_PSI + 2] = q[i, Q_PSI + 2]
        ok[i] = good


@njit()
def flux_prim_batch(
    v: np.ndarray, params: np.ndarray, axis: int, out: np.ndarray
) -> None:
    """Directional physical flux from primitive states (shared by all
    variants): transport + pressure + capillary stress, ``u . b`` in the
    axis-aligned interface-field row, zero elsewhere."""
    g1, g2 = params[PAR_G1], params[PAR_G2]
    pi1, pi2 = params[PAR_PI1], params[PAR_PI2]
    sigma = params[PAR_SIGMA]
    b_floor = params[PAR_BFLOOR]
    n = v.shape[0]
    nvar = out.shape[1]
    for i in range(n):
        rho1 = v[i, P_RHO1]
        rho2 = v[i, P_RHO2]
        p = v[i, P_PRE]
        a1 = v[i, P_ALP]
        a2 = 1.0 - a1
        rho = a1 * rho1 + a2 * rho2
        ux = v[i, P_VEL]
        uy = v[i, P_VEL + 1]
        uz = v[i, P_VEL + 2]
        bx = v[i, P_B]
        by = v[i, P_B + 1]
        bz = v[i, P_B + 2]
        un = v[i, P_VEL + axis]
        bn = v[i, P_B + axis]
        nb_reg = np.sqrt(bx * bx + by * by + bz * bz + b_floor * b_floor)
        nb = np.sqrt(bx * bx + by * by + bz * bz)
        om0 = sigma * bn * bx / nb_reg
        om1 = sigma * bn * by / nb_reg
        om2 = sigma * bn * bz / nb_reg
        if axis == 0:
            om0 -= sigma * nb_reg
        elif axis == 1:
            om1 -= sigma * nb_reg
        else:
            om2 -= sigma * nb_reg
        g, h, big = _mixture_terms(a1, g1, g2, pi1, pi2)
        rhoe = (p * g + h) / big
        ene = rhoe + 0.5 * rho * (ux * ux + uy * uy + uz * uz) + sigma * nb
        for r in range(nvar):
            out[i, r] = 0.0
        out[i, Q_R1A] = a1 * rho1 * un
        out[i, Q_R2A] = a2 * rho2 * un
        out[i, Q_MOM] = rho * ux * un + om0
        out[i, Q_MOM + 1] = rho * uy * un + om1
        out[i, Q_MOM + 2] = rho * uz * un + om2
        out[i, Q_MOM + axis] += p
        out[i, Q_ENE] = (ene + p) * un + om0 * ux + om1 * uy + om2 * uz
        out[i, Q_B + axis] = ux * bx + uy * by + uz * bz


@njit()
def ncp_action_batch(
    v: np.ndarray,
    grad: np.ndarray,
    params: np.ndarray,
    axis: int,
    out: np.ndarray,
) -> None:
    """Nonconservative term B_axis(v) . grad for conserved-variable
    gradients, expanded row by row (no matrix assembly)."""
    g1, g2 = params[PAR_G1], params[PAR_G2]
    pi1, pi2 = params[PAR_PI1], params[PAR_PI2]
    sigma = params[PAR_SIGMA]
    ch = params[PAR_CH]
    b_floor = params[PAR_BFLOOR]
    variant = params[PAR_VARIANT]
    n = v.shape[0]
    nvar = out.shape[1]
    k = axis
    for i in range(n):
        rho1 = v[i, P_RHO1]
        rho2 = v[i, P_RHO2]
        p = v[i, P_PRE]
        a1 = v[i, P_ALP]
        a2 = 1.0 - a1
        rho = a1 * rho1 + a2 * rho2
        un = v[i, P_VEL + k]
        _, coupling = _mixture_speed_sq(rho1, rho2, a1, p, g1, g2, pi1, pi2)
        for r in range(nvar):
            out[i, r] = 0.0
        # volume fraction row
        out[i, Q_ALP] = (
            un * grad[i, Q_ALP]
            + coupling * un / rho * (grad[i, Q_R1A] + grad[i, Q_R2A])
            - coupling / rho * grad[i, Q_MOM + k]
        )
        # colour row
        out[i, Q_COL] = un * grad[i, Q_COL]
        # interface-field antisymmetric remainder
        for c in range(3):
            if c == k:
                acc = 0.0
                for l in range(3):
                    if l != k:
                        acc -= v[i, P_VEL + l] * grad[i, Q_B + l]
                out[i, Q_B + c] += acc
            else:
                out[i, Q_B + c] += un * grad[i, Q_B + c]
        if variant == VARIANT_GP:
            bx = v[i, P_B]
            by = v[i, P_B + 1]
            bz = v[i, P_B + 2]
            nb_reg = np.sqrt(bx * bx + by * by + bz * bz + b_floor * b_floor)
            coef = sigma / nb_reg
            bk = v[i, P_B + k]
            dot_b = bx * grad[i, Q_B] + by * grad[i, Q_B + 1] + bz * grad[i, Q_B + 2]
            out[i, Q_MOM + k] += coef * dot_b
            acc = 0.0
            for c in range(3):
                out[i, Q_MOM + c] -= coef * bk * grad[i, Q_B + c]
                bl = v[i, P_B + c]
                ul = v[i, P_VEL + c]
                acc += coef * (un * bl - bk * ul) * grad[i, Q_B + c]
            out[i, Q_ENE] += acc
        elif variant == VARIANT_GLM:
            # b_i gains +ch eps_{i k m} d psi_m; psi_i gains -ch eps_{i k m} d b_m
            for c in range(3):
                for m in range(3):
                    e = _eps3(c, k, m)
                    if e != 0.0:
                        out[i, Q_B + c] += ch * e * grad[i, Q_PSI + m]
                        out[i, Q_PSI + c] -= ch * e * grad[i, Q_B + m]
                out[i, Q_PSI + c] += un * grad[i, Q_PSI + c]


@njit()
def _eps3(i: int, j: int, k: int) -> float:
    if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        return 1.0
    if (i, j, k) in ((0, 2, 1), (2, 1, 0), (1, 0, 2)):
        return -1.0
    return 0.0


@njit()
def cons_rate_to_prim_rate_batch(
    v: np.ndarray, rate: np.ndarray, params: np.ndarray, out: np.ndarray
) -> None:
    """Batched inverse-jacobian action of the state map (primitive-variable
    predictor update)."""
    g1, g2 = params[PAR_G1], params[PAR_G2]
    pi1, pi2 = params[PAR_PI1], params[PAR_PI2]
    sigma = params[PAR_SIGMA]
    b_floor = params[PAR_BFLOOR]
    glm = params[PAR_VARIANT] == VARIANT_GLM
    dg_dalpha = g2 - g1
    dh_dalpha = g1 * pi1 * (g2 - 1.0) - g2 * pi2 * (g1 - 1.0)
    n = v.shape[0]
    for i in range(n):
        rho1 = v[i, P_RHO1]
        rho2 = v[i, P_RHO2]
        p = v[i, P_PRE]
        a1 = v[i, P_ALP]
        a2 = 1.0 - a1
        rho = a1 * rho1 + a2 * rho2
        ux = v[i, P_VEL]
        uy = v[i, P_VEL + 1]
        uz = v[i, P_VEL + 2]
        bx = v[i, P_B]
        by = v[i, P_B + 1]
        bz = v[i, P_B + 2]
        d_alpha = rate[i, Q_ALP]
        out[i, P_ALP] = d_alpha
        out[i, P_RHO1] = (rate[i, Q_R1A] - rho1 * d_alpha) / a1
        out[i, P_RHO2] = (rate[i, Q_R2A] + rho2 * d_alpha) / a2
        d_rho = rate[i, Q_R1A] + rate[i, Q_R2A]
        dux = (rate[i, Q_MOM] - ux * d_rho) / rho
        duy = (rate[i, Q_MOM + 1] - uy * d_rho) / rho
        duz = (rate[i, Q_MOM + 2] - uz * d_rho) / rho
        out[i, P_VEL] = dux
        out[i, P_VEL + 1] = duy
        out[i, P_VEL + 2] = duz
        out[i, P_B] = rate[i, Q_B]
        out[i, P_B + 1] = rate[i, Q_B + 1]
        out[i, P_B + 2] = rate[i, Q_B + 2]
        out[i, P_COL] = rate[i, Q_COL]
        if glm:
            out[i, P_PSI] = rate[i, Q_PSI]
            out[i, P_PSI + 1] = rate[i, Q_PSI + 1]
            out[i, P_PSI + 2] = rate[i, Q_PSI + 2]
        nb_reg = np.sqrt(bx * bx + by * by + bz * bz + b_floor * b_floor)
        d_surface = (
            sigma
            * (bx * rate[i, Q_B] + by * rate[i, Q_B + 1] + bz * rate[i, Q_B + 2])
            / nb_reg
        )
        usq = ux * ux + uy * uy + uz * uz
        udotdu = ux * dux + uy * duy + uz * duz
        d_rhoe = rate[i, Q_ENE] - 0.5 * usq * d_rho - rho * udotdu - d_surface
        g, _, big = _mixture_terms(a1, g1, g2, pi1, pi2)
        out[i, P_PRE] = (big * d_rhoe - (p * dg_dalpha + dh_dalpha) * d_alpha) / g


@njit()
def _fast_speed(v_row, params, axis: int) -> float:
    """Largest acoustic-capillary speed along ``axis`` for one state."""
    g1, g2 = params[PAR_G1], params[PAR_G2]
    pi1, pi2 = params[PAR_PI1], params[PAR_PI2]
    sigma = params[PAR_SIGMA]
    b_floor = params[PAR_BFLOOR]
    rho1 = v_row[P_RHO1]
    rho2 = v_row[P_RHO2]
    p = v_row[P_PRE]
    a1 = v_row[P_ALP]
    a2 = 1.0 - a1
    rho = a1 * rho1 + a2 * rho2
    sound_sq, _ = _mixture_speed_sq(rho1, rho2, a1, p, g1, g2, pi1, pi2)
    bx = v_row[P_B]
    by = v_row[P_B + 1]
    bz = v_row[P_B + 2]
    bnorm = np.sqrt(bx * bx + by * by + bz * bz + b_floor * b_floor)
    bhat_n = v_row[P_B + axis] / bnorm
    perp_sq = 1.0 - bhat_n * bhat_n
    capillary_sq = sigma / rho * bnorm * perp_sq
    half_sum = 0.5 * (sound_sq + capillary_sq)
    mid_root = np.sqrt(half_sum * half_sum - perp_sq * sound_sq * capillary_sq)
    return np.sqrt(half_sum + mid_root)


@njit()
def max_signal_batch(
    v: np.ndarray, params: np.ndarray, naxes: int, out: np.ndarray
) -> None:
    """Per-state largest |eigenvalue| over sweep axes 0..naxes-1."""
    ch = params[PAR_CH]
    glm = params[PAR_VARIANT] == VARIANT_GLM
    n = v.shape[0]
    for i in range(n):
        worst = 0.0
        for axis in range(naxes):
            un = abs(v[i, P_VEL + axis])
            lam = un + _fast_speed(v[i], params, axis)
            if glm:
                lam_c = un + ch
                if lam_c > lam:
                    lam = lam_c
            if lam > worst:
                worst = lam
        out[i] = worst


@njit()
def signal_bounds_batch(
    v: np.ndarray, params: np.ndarray, axis: int, lo: np.ndarray, hi: np.ndarray
) -> None:
    """Per-state smallest/largest eigenvalue along one axis (for HLL)."""
    ch = params[PAR_CH]
    glm = params[PAR_VARIANT] == VARIANT_GLM
    n = v.shape[0]
    for i in range(n):
        un = v[i, P_VEL + axis]
        fast = _fast_speed(v[i], params, axis)
        if glm and ch > fast:
            fast = ch
        lo[i] = un - fast
        hi[i] = un + fast
