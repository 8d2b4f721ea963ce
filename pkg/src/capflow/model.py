"""Pointwise model algebra for compressible two-phase flow with capillary
forces carried by an interface field ``b`` (the gradient of a colour
function).

Three formulations of the same physics are supported, selected by
``ModelSpec.variant``:

``"wh"``
    The baseline system.  The interface field is advanced through the
    semi-conservative split ``d/dt b + div[(u.b) I] + [grad b - (grad b)^T] u
    = 0``; no further coupling terms.  The system has real eigenvalues but a
    defective eigenbasis (weakly hyperbolic), so only eigenvalues are
    available for it.

``"gpncp"``
    Adds Godunov-Powell-type nonconservative symmetriser terms (proportional
    to the curl of ``b``) to the momentum and energy equations, which
    restores a full eigenbasis.  These terms vanish identically on
    curl-free fields, so smooth exact solutions are unchanged.

``"glm"``
    Augments the baseline with a cleaning field ``psi`` coupled through curl
    terms at a configurable speed ``ch``, which propagates curl errors away
    (generalized Lagrange multiplier approach, as used for divergence
    cleaning in MHD).  Momentum and energy stay fully conservative.

All functions here are scalar-state reference implementations: clear,
dtype-generic (complex inputs work, enabling complex-step derivative
oracles), and deliberately free of performance tricks.  The batched float64
versions used by the solver live in :mod:`capflow.kernels` and are
parity-tested against these.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPhysical
from . import eos
from .state import (
    NVAR_BASE,
    NVAR_CLEAN,
    P_ALP,
    P_B,
    P_COL,
    P_PSI,
    P_PRE,
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
    axis_frame,
    rotate_rows_from_axis,
    rotate_state_to_axis,
)

VARIANTS = ("wh", "gpncp", "glm")


@dataclass(frozen=True)
class ModelSpec:
    """Immutable physical model description.

    Parameters
    ----------
    variant:
        One of ``"wh"``, ``"gpncp"``, ``"glm"``.
    gamma1, gamma2:
        Stiffened-gas exponents of the two phases (> 1).
    pi1, pi2:
        Stiffened-gas pressure offsets [Pa] (>= 0).
    sigma:
        Surface tension coefficient [N/m] (>= 0).
    ch:
        Cleaning wave speed [m/s]; required > 0 for the ``glm`` variant.
    kappa:
        Cleaning-field damping rate [1/s]; fixed to zero (undamped cleaning).
    b_floor:
        Regularization scale for ``||b||``: everywhere the model divides by
        the interface-field magnitude it uses
        ``sqrt(||b||^2 + b_floor^2)``, so all capillary terms vanish
        smoothly in pure-phase regions where ``b = 0``.
    alpha_bounds:
        Volume fraction is clamped into this closed interval before any
        division by ``alpha1`` or ``alpha2``.
    """

    variant: str = "gpncp"
    gamma1: float = 4.0
    gamma2: float = 1.4
    pi1: float = 20.0
    pi2: float = 0.0
    sigma: float = 1.0
    ch: float = 0.0
    kappa: float = 0.0
    b_floor: float = 1e-10
    alpha_bounds: tuple[float, float] = (1e-6, 1.0 - 1e-6)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; pick from {VARIANTS}")
        if not (self.gamma1 > 1.0 and self.gamma2 > 1.0):
            raise ValueError("EOS exponents gamma1, gamma2 must exceed 1")
        if self.pi1 < 0.0 or self.pi2 < 0.0:
            raise ValueError("EOS pressure offsets must be nonnegative")
        if self.sigma < 0.0:
            raise ValueError("surface tension coefficient must be nonnegative")
        if self.variant == "glm" and not self.ch > 0.0:
            raise ValueError("the glm variant requires a positive cleaning speed ch")
        if self.kappa != 0.0:
            raise ValueError("nonzero cleaning damping is out of scope (kappa must be 0)")
        amin, amax = self.alpha_bounds
        if not (0.0 < amin < amax < 1.0):
            raise ValueError("alpha_bounds must satisfy 0 < min < max < 1")
        if self.b_floor <= 0.0:
            raise ValueError("b_floor must be positive")

    @property
    def nvar(self) -> int:
        return NVAR_CLEAN if self.variant == "glm" else NVAR_BASE

    @property
    def variant_code(self) -> int:
        """Integer tag used by the compiled kernels: 0=wh, 1=gpncp, 2=glm."""
        return VARIANTS.index(self.variant)

    def phys_params(self) -> np.ndarray:
        """Pack the numeric parameters for the compiled kernels."""
        return np.array(
            [
                self.gamma1,
                self.gamma2,
                self.pi1,
                self.pi2,
                self.sigma,
                self.ch,
                self.b_floor,
                float(self.variant_code),
                self.alpha_bounds[0],
                self.alpha_bounds[1],
            ]
        )


@dataclass(frozen=True)
class WaveData:
    """Eigenstructure of the directional quasilinear system in primitive
    variables.

    ``eigenvalues`` always has ``nvar`` entries.  ``right_vectors`` is the
    square matrix of right eigenvectors (columns, primitive components) for
    the gpncp/glm variants and ``None`` for wh (defective basis).  ``aux``
    collects the auxiliary scalars of the closed forms, and ``degenerate``
    marks states where the capillary wave structure collapses (interface
    field below the floor or aligned with the sweep axis) and a
    capillary-free fallback basis was returned.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray | None
    aux: dict[str, float] = field(default_factory=dict)
    degenerate: bool = False


def reg_norm(bx, by, bz, b_floor):
    """Regularized magnitude ``sqrt(||b||^2 + b_floor^2)``."""
    return np.sqrt(bx * bx + by * by + bz * bz + b_floor * b_floor)


def prim_to_cons(v: np.ndarray, ms: ModelSpec) -> np.ndarray:
    """Forward map primitive -> conserved, including the capillary energy
    ``sigma * ||b||`` in the total energy density."""
    rho1, rho2 = v[P_RHO1], v[P_RHO2]
    ux, uy, uz = v[P_VEL], v[P_VEL + 1], v[P_VEL + 2]
    p, a1 = v[P_PRE], v[P_ALP]
    a2 = 1.0 - a1
    rho = a1 * rho1 + a2 * rho2
    rhoe = eos.energy_from_pressure(p, a1, ms.gamma1, ms.gamma2, ms.pi1, ms.pi2)
    nb = np.sqrt(v[P_B] ** 2 + v[P_B + 1] ** 2 + v[P_B + 2] ** 2)
    q = np.empty_like(v)
    q[Q_R1A] = a1 * rho1
    q[Q_R2A] = a2 * rho2
    q[Q_MOM] = rho * ux
    q[Q_MOM + 1] = rho * uy
    q[Q_MOM + 2] = rho * uz
    q[Q_ENE] = rhoe + 0.5 * rho * (ux * ux + uy * uy + uz * uz) + ms.sigma * nb
    q[Q_ALP] = a1
    q[Q_B : Q_B + 3] = v[P_B : P_B + 3]
    q[Q_COL] = v[P_COL]
    if ms.variant == "glm":
        q[Q_PSI : Q_PSI + 3] = v[P_PSI : P_PSI + 3]
    return q


def cons_to_prim(q: np.ndarray, ms: ModelSpec) -> np.ndarray:
    """Invert :func:`prim_to_cons`.

    The volume fraction is clamped into ``ms.alpha_bounds`` before dividing;
    states outside the admissible set raise :class:`NonPhysical`.
    """
    a1_raw = q[Q_ALP]
    if not np.iscomplexobj(q):
        if not (0.0 < a1_raw < 1.0):
            raise NonPhysical(f"volume fraction {a1_raw} outside (0, 1)")
    a1 = np.clip(a1_raw.real, *ms.alpha_bounds) + (a1_raw - a1_raw.real)
    a2 = 1.0 - a1
    rho1 = q[Q_R1A] / a1
    rho2 = q[Q_R2A] / a2
    rho = q[Q_R1A] + q[Q_R2A]
    ux, uy, uz = q[Q_MOM] / rho, q[Q_MOM + 1] / rho, q[Q_MOM + 2] / rho
    nb = np.sqrt(q[Q_B] ** 2 + q[Q_B + 1] ** 2 + q[Q_B + 2] ** 2)
    rhoe = q[Q_ENE] - 0.5 * rho * (ux * ux + uy * uy + uz * uz) - ms.sigma * nb
    p = eos.pressure_from_energy(rhoe, a1, ms.gamma1, ms.gamma2, ms.pi1, ms.pi2)
    if not np.iscomplexobj(q):
        if rho1 <= 0.0 or rho2 <= 0.0:
            raise NonPhysical(f"nonpositive phase density (rho1={rho1}, rho2={rho2})")
        if p + ms.pi1 <= 0.0 or p + ms.pi2 <= 0.0:
            raise NonPhysical(f"pressure {p} below the stiffened-gas floor")
    v = np.empty_like(q)
    v[P_RHO1] = rho1
    v[P_RHO2] = rho2
    v[P_VEL] = ux
    v[P_VEL + 1] = uy
    v[P_VEL + 2] = uz
    v[P_PRE] = p
    v[P_ALP] = a1
    v[P_B : P_B + 3] = q[Q_B : Q_B + 3]
    v[P_COL] = q[Q_COL]
    if ms.variant == "glm":
        v[P_PSI : P_PSI + 3] = q[Q_PSI : Q_PSI + 3]
    return v


def surface_tension_tensor(b: np.ndarray, ms: ModelSpec) -> np.ndarray:
    """Capillary stress ``sigma * ||b|| * (b b^T / ||b||^2 - I)``, written so
    every term carries one factor of ``||b||`` and vanishes smoothly at
    ``b = 0``."""
    nb = reg_norm(b[0], b[1], b[2], ms.b_floor)
    return ms.sigma * (np.outer(b, b) / nb - nb * np.eye(3, dtype=b.dtype))


def physical_flux_prim(v: np.ndarray, ms: ModelSpec, axis: int) -> np.ndarray:
    """Directional physical flux evaluated from a primitive state.

    All variants share the same flux: mass/momentum/energy transport with
    the capillary stress, zero rows for the volume fraction and colour
    function (pure transport, handled as nonconservative products), and
    ``(u . b)`` in the interface-field row aligned with ``axis``.
    """
    i, _, _ = axis_frame(axis)
    rho1, rho2 = v[P_RHO1], v[P_RHO2]
    p, a1 = v[P_PRE], v[P_ALP]
    a2 = 1.0 - a1
    rho = a1 * rho1 + a2 * rho2
    vel = v[P_VEL : P_VEL + 3]
    b = v[P_B : P_B + 3]
    un = vel[i]
    nb = reg_norm(b[0], b[1], b[2], ms.b_floor)
    # row i of the capillary stress
    omega_row = ms.sigma * (b[i] * b / nb)
    omega_row[i] -= ms.sigma * nb
    q = prim_to_cons(v, ms)
    f = np.zeros_like(v)
    f[Q_R1A] = q[Q_R1A] * un
    f[Q_R2A] = q[Q_R2A] * un
    f[Q_MOM + 0] = rho * vel[0] * un + omega_row[0]
    f[Q_MOM + 1] = rho * vel[1] * un + omega_row[1]
    f[Q_MOM + 2] = rho * vel[2] * un + omega_row[2]
    f[Q_MOM + i] += p
    f[Q_ENE] = (q[Q_ENE] + p) * un + omega_row @ vel
    f[Q_B + i] = vel @ b
    return f


def physical_flux(q: np.ndarray, ms: ModelSpec, axis: int) -> np.ndarray:
    """Directional physical flux from a conserved state."""
    return physical_flux_prim(cons_to_prim(q, ms), ms, axis)


def ncp_matrix_prim(v: np.ndarray, ms: ModelSpec, axis: int) -> np.ndarray:
    """Coefficient matrix of the nonconservative products along ``axis``,
    acting on gradients of the conserved variables.

    Rows present in every variant: volume-fraction transport with the
    velocity-divergence coupling, colour transport, and the antisymmetric
    remainder of the interface-field equation.  The gpncp variant adds the
    momentum/energy symmetrisers; the glm variant adds the curl coupling
    between ``b`` and ``psi``.
    """
    k, _, _ = axis_frame(axis)
    n = ms.nvar
    rho1, rho2 = v[P_RHO1], v[P_RHO2]
    p, a1 = v[P_PRE], v[P_ALP]
    a2 = 1.0 - a1
    rho = a1 * rho1 + a2 * rho2
    vel = v[P_VEL : P_VEL + 3]
    b = v[P_B : P_B + 3]
    un = vel[k]
    _, coupling = eos.mixture_speed_sq(
        rho1, rho2, a1, p, ms.gamma1, ms.gamma2, ms.pi1, ms.pi2
    )
    mat = np.zeros((n, n), dtype=v.dtype)
    # volume fraction: u_k d_k alpha1 - (K/rho) * (d_k m_k - u_k (d_k q0 + d_k q1))
    mat[Q_ALP, Q_ALP] = un
    mat[Q_ALP, Q_R1A] = coupling * un / rho
    mat[Q_ALP, Q_R2A] = coupling * un / rho
    mat[Q_ALP, Q_MOM + k] = -coupling / rho
    # colour transport (the colour function itself is the conserved entry)
    mat[Q_COL, Q_COL] = un
    # interface-field antisymmetric remainder:
    #   row b_i, direction k:  u_k d_k b_i - delta_ik sum_l u_l d_k b_l
    for i_comp in range(3):
        if i_comp == k:
            for l_comp in range(3):
                if l_comp != k:
                    mat[Q_B + i_comp, Q_B + l_comp] -= vel[l_comp]
        else:
            mat[Q_B + i_comp, Q_B + i_comp] += un
    if ms.variant == "gpncp":
        nb = reg_norm(b[0], b[1], b[2], ms.b_floor)
        coef = ms.sigma / nb
        # momentum symmetriser: delta_ik sum_l b_l d_k b_l - b_k d_k b_i
        for l_comp in range(3):
            mat[Q_MOM + k, Q_B + l_comp] += coef * b[l_comp]
        for i_comp in range(3):
            mat[Q_MOM + i_comp, Q_B + i_comp] -= coef * b[k]
        # energy symmetriser: velocity contraction of the momentum rows
        for l_comp in range(3):
            mat[Q_ENE, Q_B + l_comp] += coef * (vel[k] * b[l_comp] - b[k] * vel[l_comp])
    if ms.variant == "glm":
        eps = _levi_civita()
        for i_comp in range(3):
            for m_comp in range(3):
                e = eps[i_comp, k, m_comp]
                if e != 0.0:
                    mat[Q_B + i_comp, Q_PSI + m_comp] += ms.ch * e
                    mat[Q_PSI + i_comp, Q_B + m_comp] -= ms.ch * e
            mat[Q_PSI + i_comp, Q_PSI + i_comp] += un
    return mat


def _levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
    eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
    return eps


def ncp_action_prim(
    v: np.ndarray, grad_q: np.ndarray, ms: ModelSpec, axis: int
) -> np.ndarray:
    """Apply the nonconservative coefficient matrix to a conserved-variable
    gradient without forming the matrix."""
    return ncp_matrix_prim(v, ms, axis) @ grad_q


def cons_rate_to_prim_rate(v: np.ndarray, rate_q: np.ndarray, ms: ModelSpec) -> np.ndarray:
    """Map a conserved-variable time derivative to the primitive one, i.e.
    apply the inverse of the jacobian of :func:`prim_to_cons` at ``v``.

    Closed form; used by the primitive-variable predictor.
    """
    rho1, rho2 = v[P_RHO1], v[P_RHO2]
    p, a1 = v[P_PRE], v[P_ALP]
    a2 = 1.0 - a1
    rho = a1 * rho1 + a2 * rho2
    vel = v[P_VEL : P_VEL + 3]
    b = v[P_B : P_B + 3]
    out = np.empty_like(v)
    d_alpha = rate_q[Q_ALP]
    out[P_ALP] = d_alpha
    out[P_RHO1] = (rate_q[Q_R1A] - rho1 * d_alpha) / a1
    out[P_RHO2] = (rate_q[Q_R2A] + rho2 * d_alpha) / a2
    d_rho = rate_q[Q_R1A] + rate_q[Q_R2A]
    d_vel = (rate_q[Q_MOM : Q_MOM + 3] - vel * d_rho) / rho
    out[P_VEL : P_VEL + 3] = d_vel
    out[P_B : P_B + 3] = rate_q[Q_B : Q_B + 3]
    out[P_COL] = rate_q[Q_COL]
    if ms.variant == "glm":
        out[P_PSI : P_PSI + 3] = rate_q[Q_PSI : Q_PSI + 3]
    nb = reg_norm(b[0], b[1], b[2], ms.b_floor)
    d_surface = ms.sigma * (b @ rate_q[Q_B : Q_B + 3]) / nb
    d_rhoe = (
        rate_q[Q_ENE]
        - 0.5 * (vel @ vel) * d_rho
        - rho * (vel @ d_vel)
        - d_surface
    )
    g, _, big_gamma = eos.mixture_terms(a1, ms.gamma1, ms.gamma2, ms.pi1, ms.pi2)
    dg_dalpha = ms.gamma2 - ms.gamma1
    dh_dalpha = ms.gamma1 * ms.pi1 * (ms.gamma2 - 1.0) - ms.gamma2 * ms.pi2 * (
        ms.gamma1 - 1.0
    )
    out[P_PRE] = (big_gamma * d_rhoe - (p * dg_dalpha + dh_dalpha) * d_alpha) / g
    return out


def _complex_step_jacobian(fn, x: np.ndarray, n_out: int) -> np.ndarray:
    """Machine-precision jacobian of ``fn`` at ``x`` by complex-step
    differentiation."""
    step = 1e-100
    jac = np.empty((n_out, len(x)))
    for j in range(len(x)):
        xp = x.astype(complex)
        xp[j] += 1j * step
        jac[:, j] = fn(xp).imag / step
    return jac


def quasilinear_matrix_prim(v: np.ndarray, ms: ModelSpec, axis: int) -> np.ndarray:
    """Directional quasilinear coefficient matrix in primitive variables,
    assembled from the flux and the nonconservative terms by exact
    (complex-step) differentiation:

        C = (dQ/dV)^-1 (dF/dV + B dQ/dV).

    This construction is independent of the closed-form eigenstructure and
    is what the verification suites check the eigenvectors against.
    """
    dqdv = _complex_step_jacobian(lambda x: prim_to_cons(x, ms), v, len(v))
    dfdv = _complex_step_jacobian(lambda x: physical_flux_prim(x, ms, axis), v, len(v))
    bmat = ncp_matrix_prim(v, ms, axis)
    return np.linalg.solve(dqdv, dfdv + bmat @ dqdv)


def _eigen_aux(v: np.ndarray, ms: ModelSpec) -> dict[str, float]:
    """Auxiliary scalars of the closed-form eigenstructure, for the x-sweep
    of an already-rotated primitive state.

    Includes numerically stable equivalents of the textbook expressions for
    the slow-wave quantities (the naive ``sqrt(k1 - k3)`` forms cancel
    catastrophically when the capillary speed is tiny).
    """
    rho1, rho2 = v[P_RHO1], v[P_RHO2]
    p, a1 = v[P_PRE], v[P_ALP]
    a2 = 1.0 - a1
    rho = a1 * rho1 + a2 * rho2
    sound_sq, coupling = eos.mixture_speed_sq(
        rho1, rho2, a1, p, ms.gamma1, ms.gamma2, ms.pi1, ms.pi2
    )
    bx, by, bz = v[P_B], v[P_B + 1], v[P_B + 2]
    bnorm = reg_norm(bx, by, bz, ms.b_floor)
    bhat1, bhat2, bhat3 = bx / bnorm, by / bnorm, bz / bnorm
    perp_sq = 1.0 - bhat1 * bhat1
    capillary_sq = ms.sigma / rho * bnorm * perp_sq
    half_sum = 0.5 * (sound_sq + capillary_sq)
    half_diff = 0.5 * (sound_sq - capillary_sq)
    mid_root = np.sqrt(half_sum * half_sum - perp_sq * sound_sq * capillary_sq)
    fast = np.sqrt(half_sum + mid_root)
    # cancellation-free equivalents of sqrt(half_sum - mid_root) and of the
    # transverse coefficients, via fast^2 * slow^2 = perp_sq an^2 ac^2 and
    # (half_diff - mid_root)(half_diff + mid_root) = -bhat1^2 an^2 ac^2
    slow = np.sqrt(sound_sq * capillary_sq * perp_sq) / fast if fast > 0 else 0.0
    denom_mid = half_diff + mid_root
    trans_fast = (
        -bhat1 * bhat1 * sound_sq * capillary_sq / (denom_mid * fast)
        if denom_mid * fast != 0.0
        else 0.0
    )
    trans_slow = denom_mid / slow if slow > 0.0 else 0.0
    aux = {
        "sound_sq": float(sound_sq),
        "coupling": float(coupling),
        "capillary_sq": float(capillary_sq),
        "bnorm": float(bnorm),
        "bhat1": float(bhat1),
        "bhat2": float(bhat2),
        "bhat3": float(bhat3),
        "half_sum_sq": float(half_sum),
        "half_diff_sq": float(half_diff),
        "mid_root": float(mid_root),
        "fast": float(fast),
        "slow": float(slow),
        "trans_fast": float(trans_fast),
        "trans_slow": float(trans_slow),
        "dens1_coef": float((coupling + a1) * rho1 / a1),
        "dens2_coef": float((coupling - a2) * rho2 / a2),
        "bfield_coef": float(bnorm / capillary_sq) if capillary_sq > 0.0 else 0.0,
        "rho": float(rho),
    }
    if ms.variant == "glm":
        ch = ms.ch
        g_mix, _, big_gamma = eos.mixture_terms(
            a1, ms.gamma1, ms.gamma2, ms.pi1, ms.pi2
        )
        num = bhat1 * bhat1 * sound_sq + ch * ch * (1.0 + big_gamma / g_mix)
        den = ch * ch * (capillary_sq - ch * ch) + sound_sq * (
            ch * ch - capillary_sq * perp_sq
        )
        clean_coupling = num / den
        aux["clean_coupling"] = float(clean_coupling)
        aux["trans_fast_clean"] = float(
            (half_diff + bhat1 * bhat1 * capillary_sq + mid_root) / fast
        )
        aux["trans_slow_clean"] = float(
            -bhat1 * bhat1 * capillary_sq * slow / denom_mid
        ) if denom_mid != 0.0 else 0.0
        aux["clean_col1"] = float(
            bhat1 * bhat1 - ch * ch * clean_coupling + perp_sq * capillary_sq * clean_coupling
        )
        aux["clean_col2"] = float(1.0 + bhat2 * bhat2 * (capillary_sq * clean_coupling - 1.0))
        aux["clean_col3"] = float(1.0 + bhat3 * bhat3 * (capillary_sq * clean_coupling - 1.0))
        aux["clean_col4"] = float(1.0 - capillary_sq * clean_coupling)
        aux["clean_col5"] = float(1.0 + ch * ch * clean_coupling - capillary_sq * clean_coupling)
        aux["clean_col6"] = float(bhat1 * ch * ch * clean_coupling)
    return aux


def eigenvalues_axis(v: np.ndarray, ms: ModelSpec, axis: int) -> np.ndarray:
    """Closed-form eigenvalues along ``axis`` (always available, all
    variants)."""
    vr = rotate_state_to_axis(v, axis)
    aux = _eigen_aux(vr, ms)
    un = vr[P_VEL]
    lam = np.full(ms.nvar, un)
    lam[-4] = un - aux["fast"]
    lam[-3] = un + aux["fast"]
    lam[-2] = un - aux["slow"]
    lam[-1] = un + aux["slow"]
    if ms.variant == "glm":
        lam[6] = lam[7] = un - ms.ch
        lam[8] = lam[9] = un + ms.ch
    return lam


def max_abs_eigenvalue(v: np.ndarray, ms: ModelSpec, axes=(0, 1, 2)) -> float:
    """Largest signal speed over the requested sweep directions."""
    worst = 0.0
    for axis in axes:
        lam = eigenvalues_axis(v, ms, axis)
        worst = max(worst, float(np.abs(lam).max()))
    return worst


def _gpncp_vectors(vr: np.ndarray, aux: dict[str, float]) -> np.ndarray:
    """Right eigenvectors (x-sweep, primitive components) for the gpncp
    variant: seven transport modes plus two fast and two slow
    capillary-acoustic waves."""
    n = NVAR_BASE
    r = np.zeros((n, n))
    bhat1, bhat2, bhat3 = aux["bhat1"], aux["bhat2"], aux["bhat3"]
    perp_sq = 1.0 - bhat1 * bhat1
    # transport modes
    r[P_COL, 0] = 1.0
    r[P_B, 1] = bhat1 * bhat3
    r[P_B + 2, 1] = perp_sq
    r[P_B, 2] = bhat1 * bhat2
    r[P_B + 1, 2] = perp_sq
    r[P_ALP, 3] = 1.0
    r[P_VEL + 1, 4] = -bhat3
    r[P_VEL + 2, 4] = bhat2
    r[P_RHO2, 5] = 1.0
    r[P_RHO1, 6] = 1.0
    waves = [
        (-1.0, aux["fast"], aux["trans_fast"]),
        (+1.0, aux["fast"], aux["trans_fast"]),
        (-1.0, aux["slow"], aux["trans_slow"]),
        (+1.0, aux["slow"], aux["trans_slow"]),
    ]
    for j, (sign, speed, trans) in enumerate(waves):
        col = 7 + j
        r[P_RHO1, col] = -bhat1 * aux["dens1_coef"]
        r[P_RHO2, col] = bhat1 * aux["dens2_coef"]
        r[P_VEL, col] = -sign * bhat1 * speed
        r[P_VEL + 1, col] = sign * bhat2 * trans
        r[P_VEL + 2, col] = sign * bhat3 * trans
        r[P_PRE, col] = -bhat1 * aux["rho"] * aux["sound_sq"]
        r[P_ALP, col] = bhat1 * aux["coupling"]
        r[P_B, col] = speed * trans * aux["bfield_coef"]
    return r


def _glm_vectors(vr: np.ndarray, aux: dict[str, float], ms: ModelSpec) -> np.ndarray:
    """Right eigenvectors (x-sweep, primitive components) for the glm
    variant: six transport modes, four cleaning waves, two fast and two slow
    capillary-acoustic waves."""
    n = NVAR_CLEAN
    r = np.zeros((n, n))
    ch = ms.ch
    bhat1, bhat2, bhat3 = aux["bhat1"], aux["bhat2"], aux["bhat3"]
    bnorm = aux["bnorm"]
    rho = aux["rho"]
    sigma = ms.sigma
    h1, h2, h3 = aux["clean_col1"], aux["clean_col2"], aux["clean_col3"]
    h4, h5, h6 = aux["clean_col4"], aux["clean_col5"], aux["clean_col6"]
    # transport modes
    r[P_PSI, 0] = 1.0
    r[P_COL, 1] = 1.0
    r[P_ALP, 2] = 1.0
    r[P_VEL + 1, 3] = -vr[P_B + 2]
    r[P_VEL + 2, 3] = vr[P_B + 1]
    r[P_RHO2, 4] = 1.0
    r[P_RHO1, 5] = 1.0
    # cleaning waves: lam = u - ch, u - ch, u + ch, u + ch, coupling the
    # (b2, psi3) and (b3, psi2) pairs
    press_coef = rho * ch * ch
    for j, (sign, family) in enumerate([(-1.0, 2), (-1.0, 3), (+1.0, 2), (+1.0, 3)]):
        col = 6 + j
        r[P_RHO1, col] = -h1 * aux["dens1_coef"]
        r[P_RHO2, col] = h1 * aux["dens2_coef"]
        r[P_VEL, col] = -sign * h1 * ch
        r[P_PRE, col] = h5 * press_coef
        r[P_ALP, col] = h1 * aux["coupling"]
        r[P_B, col] = h6 * bnorm
        if family == 2:
            r[P_VEL + 1, col] = sign * h2 * ch * bhat1 / bhat2
            r[P_VEL + 2, col] = -sign * h4 * ch * bhat1 * bhat3
            r[P_B + 1, col] = press_coef / (bhat2 * sigma)
            r[P_PSI + 2, col] = -sign * press_coef / (bhat2 * sigma)
        else:
            r[P_VEL + 1, col] = -sign * h4 * ch * bhat1 * bhat2
            r[P_VEL + 2, col] = sign * h3 * ch * bhat1 / bhat3
            r[P_B + 2, col] = press_coef / (bhat3 * sigma)
            r[P_PSI + 1, col] = sign * press_coef / (bhat3 * sigma)
    waves = [
        (-1.0, aux["fast"], aux["trans_fast_clean"]),
        (+1.0, aux["fast"], aux["trans_fast_clean"]),
        (-1.0, aux["slow"], aux["trans_slow_clean"]),
        (+1.0, aux["slow"], aux["trans_slow_clean"]),
    ]
    for j, (sign, speed, trans) in enumerate(waves):
        col = 10 + j
        r[P_RHO1, col] = trans * aux["dens1_coef"]
        r[P_RHO2, col] = -trans * aux["dens2_coef"]
        r[P_VEL, col] = sign * trans * speed
        r[P_VEL + 1, col] = sign * aux["capillary_sq"] * bhat1 * bhat2
        r[P_VEL + 2, col] = sign * aux["capillary_sq"] * bhat1 * bhat3
        r[P_PRE, col] = trans * rho * aux["sound_sq"]
        r[P_ALP, col] = -trans * aux["coupling"]
        r[P_B, col] = speed * bhat1 * bnorm
    return r


def _degenerate_vectors(vr: np.ndarray, aux: dict[str, float], ms: ModelSpec) -> np.ndarray:
    """Capillary-free fallback basis used when the interface field vanishes
    or aligns with the sweep axis: exact transport/acoustic (and for glm,
    cleaning) modes of the zero-capillary limit."""
    n = ms.nvar
    r = np.zeros((n, n))
    sound = np.sqrt(aux["sound_sq"])
    bx = vr[P_B]
    contacts = [P_RHO1, P_RHO2, P_VEL + 1, P_VEL + 2, P_ALP, P_COL, P_B]
    if ms.variant != "glm":
        contacts += [P_B + 1, P_B + 2]
    else:
        contacts += [P_PSI]
    for col, row in enumerate(contacts):
        r[row, col] = 1.0
    col = len(contacts)
    for sign in (-1.0, +1.0):
        r[P_RHO1, col] = aux["dens1_coef"]
        r[P_RHO2, col] = -aux["dens2_coef"]
        r[P_VEL, col] = sign * sound
        r[P_PRE, col] = aux["rho"] * aux["sound_sq"]
        r[P_ALP, col] = -aux["coupling"]
        r[P_B, col] = bx
        col += 1
    if ms.variant == "glm":
        # cleaning pairs (b2, psi3) and (b3, psi2) decouple at zero capillary
        for sign in (-1.0, +1.0):
            r[P_B + 1, col] = 1.0
            r[P_PSI + 2, col] = -sign
            col += 1
            r[P_B + 2, col] = 1.0
            r[P_PSI + 1, col] = sign
            col += 1
    return r


def _degenerate_values(vr: np.ndarray, aux: dict[str, float], ms: ModelSpec) -> np.ndarray:
    sound = np.sqrt(aux["sound_sq"])
    un = vr[P_VEL]
    n_contacts = 9 if ms.variant != "glm" else 8
    lam = np.full(ms.nvar, un)
    lam[n_contacts] = un - sound
    lam[n_contacts + 1] = un + sound
    if ms.variant == "glm":
        lam[10] = lam[11] = un - ms.ch
        lam[12] = lam[13] = un + ms.ch
    return lam


_DEGENERACY_TOL = 1e-12


def eigen_decomposition(v: np.ndarray, ms: ModelSpec, axis: int = 0) -> WaveData:
    """Full directional eigenstructure in primitive variables.

    For the wh variant only eigenvalues are returned (``right_vectors`` is
    ``None``).  Near-degenerate capillary structure (interface field below
    ten floors, or aligned with / orthogonal to the sweep axis within
    ``1e-12``) falls back to the capillary-free basis and is flagged.
    """
    vr = rotate_state_to_axis(np.asarray(v, dtype=float), axis)
    aux = _eigen_aux(vr, ms)
    un = vr[P_VEL]
    degenerate = (
        aux["bnorm"] <= 10.0 * ms.b_floor
        or aux["bhat1"] ** 2 <= _DEGENERACY_TOL
        or 1.0 - aux["bhat1"] ** 2 <= _DEGENERACY_TOL
        or aux["capillary_sq"] <= _DEGENERACY_TOL * aux["sound_sq"]
    )
    if ms.variant == "wh":
        lam = eigenvalues_axis(v, ms, axis)
        return WaveData(lam, None, aux, degenerate)
    if degenerate:
        lam = _degenerate_values(vr, aux, ms)
        r = _degenerate_vectors(vr, aux, ms)
    else:
        lam = np.full(ms.nvar, un)
        lam[-4], lam[-3] = un - aux["fast"], un + aux["fast"]
        lam[-2], lam[-1] = un - aux["slow"], un + aux["slow"]
        if ms.variant == "glm":
            lam[6] = lam[7] = un - ms.ch
            lam[8] = lam[9] = un + ms.ch
            r = _glm_vectors(vr, aux, ms)
        else:
            r = _gpncp_vectors(vr, aux)
    return WaveData(lam, rotate_rows_from_axis(r, axis), aux, degenerate)
