"""One-step ADER schemes and the time-marching driver.

Two space discretizations share the same machinery:

* ``dg``: modal-free nodal DG storing per-cell tensor-product polynomials;
  the update combines a collocation volume term with path-conservative
  face fluctuations built from the space-time predictor traces.
* ``fv``: cell means with dimension-by-dimension WENO reconstruction; the
  reconstructed polynomials feed the same predictor and face terms, and
  the update projects back to the mean.

Face terms use HLL-type fluctuations ``D∓ = F* − f̂ + ω∓ B̄ Δq`` where the
central flux, the wave-speed bounds, and the segment-path average ``B̄``
are frozen per face from space-time-face-averaged states by default
(``face_quadrature="averaged"``) or recomputed per space-time node
(``"nodal"``).  The two fluctuations always satisfy
``D⁻ + D⁺ = f̂_R − f̂_L + B̄ Δq``, which makes conservative rows telescope
to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Basis, build_basis, dof_face_lift, tensor_weights
from .errors import ConfigError, SimulationBlowup
from .kernels import (
    cons_to_prim_batch,
    max_signal_batch,
    ncp_action_batch,
    prim_to_cons_batch,
    signal_bounds_batch,
)
from .mesh import Mesh, cell_averages, project_function, with_ghosts
from .model import ModelSpec
from .predictor import conserved_rate, flux_trace, predict_batch
from .weno import WenoOperator, build_weno, primitive_reconstruct, weno_reconstruct

# stability coefficients of the one-step scheme per polynomial degree
TIME_CFL = (1.0, 0.33, 0.17, 0.10, 0.069, 0.045, 0.038, 0.03, 0.02, 0.01)

# wave-speed spans below this (relative) threshold collapse to the
# symmetric local Lax-Friedrichs splitting
DEGENERATE_SPAN = 1e-14

_PATH_NODES, _PATH_WEIGHTS = np.polynomial.legendre.leggauss(3)
_PATH_NODES = 0.5 * (_PATH_NODES + 1.0)
_PATH_WEIGHTS = 0.5 * _PATH_WEIGHTS

_SCHEMES = ("dg", "fv")
_FLUXES = ("hll", "rusanov")
_PREDICTORS = ("conservative", "primitive")
_FACE_QUADRATURES = ("averaged", "nodal")


@dataclass(frozen=True)
class SchemeConfig:
    """Discretization choices for one run.

    ``degree`` is the polynomial degree of the DG ansatz or of the WENO
    reconstruction (the time expansion always matches it).
    """

    scheme: str = "dg"
    degree: int = 3
    flux: str = "hll"
    predictor: str = "conservative"
    face_quadrature: str = "averaged"
    cfl: float = 0.9

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.flux not in _FLUXES:
            raise ConfigError(f"unknown flux {self.flux!r}")
        if self.predictor not in _PREDICTORS:
            raise ConfigError(f"unknown predictor {self.predictor!r}")
        if self.face_quadrature not in _FACE_QUADRATURES:
            raise ConfigError(f"unknown face quadrature {self.face_quadrature!r}")
        if not 0 <= self.degree < len(TIME_CFL):
            raise ConfigError(f"degree must be in [0, {len(TIME_CFL) - 1}]")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must be in (0, 1]")


def _c2p(q: np.ndarray, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    flat = np.ascontiguousarray(q.reshape(-1, q.shape[-1]))
    prim = np.empty_like(flat)
    ok = np.empty(flat.shape[0], dtype=np.bool_)
    cons_to_prim_batch(flat, params, prim, ok)
    return prim.reshape(q.shape), ok.reshape(q.shape[:-1])


def _p2c(v: np.ndarray, params: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(v.reshape(-1, v.shape[-1]))
    cons = np.empty_like(flat)
    prim_to_cons_batch(flat, params, cons)
    return cons.reshape(v.shape)


def blend_weights(
    s_lo: np.ndarray, s_hi: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fluctuation splitting weights ω∓ from the signed speed bounds.

    Requires ``s_lo <= 0 <= s_hi``.  Degenerate spans (both bounds at
    zero, up to roundoff) fall back to the symmetric splitting so the
    formulas never divide by zero; the returned mask marks those faces.
    """
    span = s_hi - s_lo
    floor = DEGENERATE_SPAN * np.maximum(np.maximum(np.abs(s_lo), np.abs(s_hi)), 1.0)
    degenerate = ~(span > floor)  # catches NaN spans as well
    safe = np.where(degenerate, 1.0, span)
    w_minus = np.where(degenerate, 0.5, -s_lo / safe)
    w_plus = np.where(degenerate, 0.5, s_hi / safe)
    return w_minus, w_plus, degenerate


def segment_ncp_average(
    q_lo: np.ndarray,
    q_hi: np.ndarray,
    dq: np.ndarray,
    params: np.ndarray,
    axis: int,
) -> np.ndarray:
    """``(∫₀¹ B(q(s)) ds) · dq`` along the straight conserved segment.

    ``q_lo``/``q_hi``: (F, nvar) path endpoints; ``dq``: (F, K, nvar) jump
    vectors the averaged matrix acts on.  Three-point Gauss quadrature.
    """
    nf, nk, nvar = dq.shape
    dq_flat = np.ascontiguousarray(dq.reshape(nf * nk, nvar))
    out = np.zeros_like(dq_flat)
    act = np.empty_like(dq_flat)
    prim = np.empty((nf, nvar))
    ok = np.empty(nf, dtype=np.bool_)
    for s, wgt in zip(_PATH_NODES, _PATH_WEIGHTS):
        q_s = np.ascontiguousarray(q_lo + s * (q_hi - q_lo))
        cons_to_prim_batch(q_s, params, prim, ok)
        v_rep = np.ascontiguousarray(np.repeat(prim, nk, axis=0))
        ncp_action_batch(v_rep, dq_flat, params, axis, act)
        out += wgt * act
    return out.reshape(nf, nk, nvar)


def face_fluctuations(
    q_co_l: np.ndarray,
    q_co_r: np.ndarray,
    q_l: np.ndarray,
    f_l: np.ndarray,
    q_r: np.ndarray,
    f_r: np.ndarray,
    ms: ModelSpec,
    axis: int,
    flux: str = "hll",
) -> tuple[np.ndarray, np.ndarray]:
    """Path-conservative fluctuations D∓ for a batch of faces.

    ``q_co_*``: (F, nvar) conserved coefficient states; wave-speed bounds
    and the path-averaged nonconservative matrix are frozen from them.
    ``q_*``/``f_*``: (F, K, nvar) traced states and fluxes the linear
    fluctuation formulas are applied to.  States that defeat the
    primitive-variable recovery propagate NaNs into the result rather
    than raising, so a troubled-cell detector can deal with them.
    """
    params = ms.phys_params()
    nf, _, _ = q_l.shape
    with np.errstate(all="ignore"):
        v_l, _ = _c2p(q_co_l, params)
        v_r, _ = _c2p(q_co_r, params)
        v_m, _ = _c2p(0.5 * (q_co_l + q_co_r), params)
        lo = np.empty((3, nf))
        hi = np.empty((3, nf))
        for i, v in enumerate((v_l, v_r, v_m)):
            signal_bounds_batch(
                np.ascontiguousarray(v), params, axis, lo[i], hi[i]
            )
        dq = q_r - q_l
        if flux == "hll":
            s_lo = np.minimum(0.0, np.minimum(lo[0], lo[2]))
            s_hi = np.maximum(0.0, np.maximum(hi[1], hi[2]))
        else:
            s_max = np.maximum(np.abs(lo).max(axis=0), np.abs(hi).max(axis=0))
            s_lo, s_hi = -s_max, s_max
        w_minus, w_plus, degenerate = blend_weights(s_lo, s_hi)
        sl = s_lo[:, None, None]
        sh = s_hi[:, None, None]
        span = np.where(degenerate, 1.0, s_hi - s_lo)[:, None, None]
        central = (sh * f_l - sl * f_r + (sl * sh) * dq) / span
        if degenerate.any():
            s_max = np.maximum(np.abs(s_lo), np.abs(s_hi))[:, None, None]
            local_lf = 0.5 * (f_l + f_r) - 0.5 * s_max * dq
            central = np.where(degenerate[:, None, None], local_lf, central)
        b_dq = segment_ncp_average(q_co_l, q_co_r, dq, params, axis)
        d_minus = central - f_l + w_minus[:, None, None] * b_dq
        d_plus = f_r - central + w_plus[:, None, None] * b_dq
    return d_minus, d_plus


def _predict_block(
    dofs_g: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    mesh: Mesh,
    dt: float,
    cfg: SchemeConfig,
    prim_input: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Space-time predictor for every cell of a (ghosted) dof block.

    ``dofs_g``: (gz, gy, gx, ndof, nvar), conserved nodal values unless
    ``prim_input``.  Returns the space-time block
    (gz, gy, gx, nt, ndof, nvar) in the representation selected by
    ``cfg.predictor`` together with the per-cell failure mask.
    """
    params = ms.phys_params()
    grid = dofs_g.shape[:3]
    ndof, nvar = dofs_g.shape[-2:]
    cells = dofs_g.reshape(-1, ndof, nvar)
    bad_input = np.zeros(cells.shape[0], dtype=bool)
    if cfg.predictor == "primitive":
        if not prim_input:
            prim, ok = _c2p(cells, params)
            w = prim
            bad_input = ~ok.all(axis=-1)
        else:
            w = cells
    else:
        w = _p2c(cells, params) if prim_input else cells
    stp, bad, _ = predict_batch(
        w, ms, basis, mesh.dim, dt, mesh.spacing, mode=cfg.predictor
    )
    bad |= bad_input
    nt = basis.n_nodes
    return stp.reshape(grid + (nt, ndof, nvar)), bad.reshape(grid)


def _interior(mesh: Mesh) -> tuple[slice, ...]:
    """Slices selecting the interior of a 1-ring ghosted block."""
    return tuple(
        slice(1, -1) if 2 - ax < mesh.dim else slice(None) for ax in range(3)
    )


def _axis_face_terms(
    stp_g: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    mesh: Mesh,
    axis: int,
    cfg: SchemeConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Time-integrated fluctuations for every face along ``axis``.

    ``stp_g``: ghosted space-time block.  Returns (d_minus, d_plus), each
    shaped (... interior grid with n+1 entries along ``axis`` ..., ndof_face,
    nvar); entry f sits between cells f-1 and f of the interior grid.
    """
    dim = mesh.dim
    primitive = cfg.predictor == "primitive"
    sel = [slice(None)] * 3
    for j in range(dim):
        if j != axis:
            sel[2 - j] = slice(1, -1)
    block = stp_g[tuple(sel)]
    arr_ax = 2 - axis
    take = [slice(None)] * block.ndim
    take[arr_ax] = slice(None, -1)
    left = block[tuple(take)]
    take[arr_ax] = slice(1, None)
    right = block[tuple(take)]
    q_l, f_l = flux_trace(left, ms, basis, dim, axis, 1, primitive)
    q_r, f_r = flux_trace(right, ms, basis, dim, axis, 0, primitive)
    grid = q_l.shape[:3]
    nt, nface, nvar = q_l.shape[3:]
    wt = basis.weights
    if cfg.face_quadrature == "averaged":
        qa_l = np.einsum("t,...tfv->...fv", wt, q_l).reshape(-1, nface, nvar)
        fa_l = np.einsum("t,...tfv->...fv", wt, f_l).reshape(-1, nface, nvar)
        qa_r = np.einsum("t,...tfv->...fv", wt, q_r).reshape(-1, nface, nvar)
        fa_r = np.einsum("t,...tfv->...fv", wt, f_r).reshape(-1, nface, nvar)
        wf = tensor_weights(basis, dim - 1) if dim > 1 else np.ones(1)
        q_co_l = np.einsum("f,nfv->nv", wf, qa_l)
        q_co_r = np.einsum("f,nfv->nv", wf, qa_r)
        d_minus, d_plus = face_fluctuations(
            q_co_l, q_co_r, qa_l, fa_l, qa_r, fa_r, ms, axis, cfg.flux
        )
        d_minus = d_minus.reshape(grid + (nface, nvar))
        d_plus = d_plus.reshape(grid + (nface, nvar))
    else:
        q_ln = q_l.reshape(-1, 1, nvar)
        f_ln = f_l.reshape(-1, 1, nvar)
        q_rn = q_r.reshape(-1, 1, nvar)
        f_rn = f_r.reshape(-1, 1, nvar)
        d_minus, d_plus = face_fluctuations(
            q_ln[:, 0, :], q_rn[:, 0, :], q_ln, f_ln, q_rn, f_rn, ms, axis, cfg.flux
        )
        d_minus = np.einsum(
            "t,...tfv->...fv", wt, d_minus.reshape(grid + (nt, nface, nvar))
        )
        d_plus = np.einsum(
            "t,...tfv->...fv", wt, d_plus.reshape(grid + (nt, nface, nvar))
        )
    return d_minus, d_plus


def _volume_rate(
    stp_int: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    mesh: Mesh,
    cfg: SchemeConfig,
) -> np.ndarray:
    """Time-integrated conserved volume rate of the interior block."""
    params = ms.phys_params()
    with np.errstate(all="ignore"):
        rate = conserved_rate(
            stp_int,
            ms,
            basis,
            mesh.dim,
            mesh.spacing,
            params,
            cfg.predictor == "primitive",
        )
    return np.einsum("t,...tdv->...dv", basis.weights, rate)


def dg_step(
    dofs: np.ndarray,
    ms: ModelSpec,
    mesh: Mesh,
    basis: Basis,
    dt: float,
    cfg: SchemeConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """One unlimited ADER-DG step.

    ``dofs``: interior conserved nodal values (nz, ny, nx, ndof, nvar).
    Returns the updated dofs and the mask of cells whose predictor failed
    (their faces and volume terms were built from the frozen fallback).
    """
    dim = mesh.dim
    g = with_ghosts(dofs, mesh, 1, basis=basis)
    stp_g, bad_g = _predict_block(g, ms, basis, mesh, dt, cfg)
    core = _interior(mesh)
    new = dofs - dt * _volume_rate(stp_g[core], ms, basis, mesh, cfg)
    lift_l = basis.trace_left / basis.weights
    lift_r = basis.trace_right / basis.weights
    for axis in range(dim):
        d_minus, d_plus = _axis_face_terms(stp_g, ms, basis, mesh, axis, cfg)
        arr_ax = 2 - axis
        take = [slice(None)] * d_plus.ndim
        take[arr_ax] = slice(None, -1)
        at_left = d_plus[tuple(take)]
        take[arr_ax] = slice(1, None)
        at_right = d_minus[tuple(take)]
        new -= (dt / mesh.spacing[axis]) * (
            dof_face_lift(lift_l, at_left, axis, dim)
            + dof_face_lift(lift_r, at_right, axis, dim)
        )
    return new, bad_g[core]


def fv_core(
    means: np.ndarray,
    rec_g: np.ndarray,
    ms: ModelSpec,
    basis: Basis,
    mesh: Mesh,
    dt: float,
    cfg: SchemeConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Finite-volume mean update from caller-supplied reconstruction data.

    ``means``: interior cell means; ``rec_g``: per-cell nodal DOFs covering
    the interior plus exactly one ghost ring per active axis, primitive or
    conserved according to ``cfg.predictor``.  ``mesh`` only provides the
    dimensionality and spacings, so callers may describe sub-grids with it.
    Leading array axes beyond the active ones are carried along unchanged
    (the z slot can batch independent 1D/2D problems).
    """
    dim = mesh.dim
    stp_g, bad_g = _predict_block(
        rec_g, ms, basis, mesh, dt, cfg, prim_input=cfg.predictor == "primitive"
    )
    core = _interior(mesh)
    vol = _volume_rate(stp_g[core], ms, basis, mesh, cfg)
    wvol = tensor_weights(basis, dim)
    new = means - dt * np.einsum("d,...dv->...v", wvol, vol)
    wf = tensor_weights(basis, dim - 1) if dim > 1 else np.ones(1)
    for axis in range(dim):
        d_minus, d_plus = _axis_face_terms(stp_g, ms, basis, mesh, axis, cfg)
        dm_mean = np.einsum("f,...fv->...v", wf, d_minus)
        dp_mean = np.einsum("f,...fv->...v", wf, d_plus)
        arr_ax = 2 - axis
        take = [slice(None)] * dm_mean.ndim
        take[arr_ax] = slice(None, -1)
        at_left = dp_mean[tuple(take)]
        take[arr_ax] = slice(1, None)
        at_right = dm_mean[tuple(take)]
        new -= (dt / mesh.spacing[axis]) * (at_left + at_right)
    return new, bad_g[core]


def fv_step(
    means: np.ndarray,
    ms: ModelSpec,
    mesh: Mesh,
    op: WenoOperator,
    dt: float,
    cfg: SchemeConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """One ADER-WENO finite-volume step on cell means (nz, ny, nx, nvar)."""
    if cfg.predictor == "primitive":
        rec = primitive_reconstruct(means, mesh, op, ms, ring=1)
    else:
        rec = weno_reconstruct(means, mesh, op, ring=1)
    return fv_core(means, rec, ms, op.basis, mesh, dt, cfg)


def compute_dt(
    states: np.ndarray,
    ms: ModelSpec,
    mesh: Mesh,
    degree: int,
    cfg: SchemeConfig,
    primitive: bool = False,
    t: float = 0.0,
) -> float:
    """Stable time step from the per-degree stability coefficients.

    ``states``: any nodal block (..., nvar).  dt = cfl · k_N · min(Δx) /
    (dim · max signal speed).  Ghost states never enlarge the signal bound
    for the supported boundary conditions (they mirror or copy interior
    states up to a normal-velocity sign), so interior nodes suffice.
    ``t`` only labels the blow-up report when the bound is not finite.
    """
    params = ms.phys_params()
    flat = np.ascontiguousarray(states.reshape(-1, states.shape[-1]))
    if not primitive:
        prim = np.empty_like(flat)
        ok = np.empty(flat.shape[0], dtype=np.bool_)
        with np.errstate(all="ignore"):
            cons_to_prim_batch(flat, params, prim, ok)
        flat = prim
    sig = np.empty(flat.shape[0])
    with np.errstate(all="ignore"):
        max_signal_batch(flat, params, mesh.dim, sig)
    lam = float(sig.max())
    if not np.isfinite(lam) or lam <= 0.0:
        raise SimulationBlowup("signal speed estimate is not finite", t)
    return cfg.cfl * TIME_CFL[degree] * mesh.min_spacing / (mesh.dim * lam)


@dataclass
class RunResult:
    """Final state of a run plus bookkeeping counters."""

    state: np.ndarray
    t: float
    steps: int
    troubled_steps: int
    basis: Basis
    scheme: str


def initial_state(
    ic, ms: ModelSpec, mesh: Mesh, cfg: SchemeConfig, basis: Basis
) -> np.ndarray:
    """Project a primitive-variable initial condition onto the scheme's
    storage: conserved nodal dofs for DG, conserved means for FV."""
    params = ms.phys_params()
    vfield = project_function(ic, mesh, basis)
    qfield = _p2c(vfield, params)
    if cfg.scheme == "dg":
        return qfield
    return cell_averages(qfield, basis, mesh.dim)


def run(
    ms: ModelSpec,
    mesh: Mesh,
    cfg: SchemeConfig,
    ic,
    t_end: float,
    *,
    limiter=None,
    on_step=None,
    max_steps: int = 1_000_000,
) -> RunResult:
    """March the scheme from ``ic`` (primitive-variable callable of the
    coordinate array) to ``t_end``.

    ``limiter``: optional a-posteriori detector/corrector applied to each
    candidate step (see :mod:`capflow.limiter`); ``on_step`` is called as
    ``on_step(t, dt, state)`` after every accepted step.  Raises
    :class:`SimulationBlowup` when the state stops being finite.
    """
    basis = build_basis(cfg.degree)
    op = build_weno(cfg.degree) if cfg.scheme == "fv" else None
    state = initial_state(ic, ms, mesh, cfg, basis)
    t = 0.0
    steps = 0
    troubled_steps = 0
    eps = 1e-12 * max(t_end, 1.0)
    while t < t_end - eps:
        dt = compute_dt(state, ms, mesh, cfg.degree, cfg, t=t)
        dt = min(dt, t_end - t)
        if not np.isfinite(dt) or dt <= 0.0:
            raise SimulationBlowup("time step collapsed", t)
        if cfg.scheme == "dg":
            candidate, bad = dg_step(state, ms, mesh, basis, dt, cfg)
        else:
            candidate, bad = fv_step(state, ms, mesh, op, dt, cfg)
        if limiter is not None:
            candidate, n_troubled = limiter.apply(
                state, candidate, bad, ms, mesh, basis, dt, cfg
            )
            troubled_steps += int(n_troubled > 0)
        elif bad.any():
            troubled_steps += 1
        if not np.isfinite(candidate).all():
            raise SimulationBlowup("state left the finite range", t + dt)
        state = candidate
        t += dt
        steps += 1
        if on_step is not None:
            on_step(t, dt, state)
        if steps >= max_steps:
            raise SimulationBlowup("step budget exhausted before t_end", t)
    return RunResult(
        state=state,
        t=t,
        steps=steps,
        troubled_steps=troubled_steps,
        basis=basis,
        scheme=cfg.scheme,
    )
