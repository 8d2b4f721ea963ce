"""Canonical problem presets wired to the exact-solution generators.

Each case maps a flat, typed parameter set plus the model and mesh onto an
initial condition (primitive fields over coordinates) and, when one is
known, an exact solution at arbitrary time.  Interface-energy parameters
that the fluxes must agree on (surface tension, EOS exponents) are read
from the model description rather than duplicated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigError
from .exact import (
    ConvergenceSpec,
    DropletSpec,
    EllipseSpec,
    advected_positions,
    convergence_ic,
    droplet_ic,
    ellipse_ic,
    shock_column_ic,
)
from .mesh import Mesh
from .model import ModelSpec
from .state import NVAR_BASE, P_ALP, P_COL, P_PRE, P_RHO1, P_RHO2, P_VEL

FieldFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CaseSetup:
    """Initial condition and optional exact reference of one problem.

    ``ic`` maps coordinates (..., 3) to primitive fields (..., nvar);
    ``exact`` maps a time to a function of the same signature, or is None
    when no closed-form solution exists.
    """

    ic: FieldFn
    exact: Callable[[float], FieldFn] | None


def _pad(fn: FieldFn, nvar: int) -> FieldFn:
    """Extend an 11-variable primitive field with zero cleaning rows."""
    if nvar == NVAR_BASE:
        return fn

    def padded(x):
        v = fn(x)
        out = np.zeros(v.shape[:-1] + (nvar,))
        out[..., :NVAR_BASE] = v
        return out

    return padded


def _require_plane_or_volume(name: str, mesh: Mesh) -> None:
    if mesh.dim < 2:
        raise ConfigError(f"case {name!r} needs a 2D or 3D mesh")


def _build_uniform(p, ms: ModelSpec, mesh: Mesh) -> CaseSetup:
    vals = np.zeros(NVAR_BASE)
    vals[P_RHO1] = p["rho1"]
    vals[P_RHO2] = p["rho2"]
    vals[P_VEL : P_VEL + 3] = (p["ux"], p["uy"], p["uz"])
    vals[P_PRE] = p["p"]
    vals[P_ALP] = p["alpha"]
    vals[P_COL] = p["colour"]

    def base(x):
        return np.broadcast_to(vals, x.shape[:-1] + (NVAR_BASE,)).copy()

    ic = _pad(base, ms.nvar)
    return CaseSetup(ic=ic, exact=lambda t: ic)


def _build_advection(p, ms: ModelSpec, mesh: Mesh) -> CaseSetup:
    _require_plane_or_volume("advection", mesh)
    spec = ConvergenceSpec(
        R=p["R"],
        k_eps=p["k_eps"],
        p_atm=p["p_atm"],
        sigma=ms.sigma,
        rho1_0=p["rho1"],
        rho2_0=p["rho2"],
        delta=p["delta"],
        omega=p["omega"],
        alpha_bounds=(p["alpha_min"], p["alpha_max"]),
        u0=(p["ux"], p["uy"], 0.0),
        domain_lo=(mesh.lo[0], mesh.lo[1], 0.0),
        domain_hi=(mesh.hi[0], mesh.hi[1], 0.0),
    )

    def exact(t: float) -> FieldFn:
        return _pad(lambda x: convergence_ic(x, spec, t), ms.nvar)

    return CaseSetup(ic=exact(0.0), exact=exact)


def _build_curl_advection(p, ms: ModelSpec, mesh: Mesh) -> CaseSetup:
    _require_plane_or_volume("curl_advection", mesh)
    spec = DropletSpec(
        R=p["R"],
        k_eps=p["k_eps"],
        p_atm=p["p_atm"],
        sigma=ms.sigma,
        d=mesh.dim,
        alpha_bounds=(p["alpha_min"], p["alpha_max"]),
        rho1_0=p["rho1"],
        rho2_0=p["rho2"],
        u0=(p["ux"], p["uy"], p["uz"]),
    )
    lo = np.asarray(mesh.lo)
    hi = np.array([mesh.hi[ax] if ax < mesh.dim else mesh.lo[ax] for ax in range(3)])

    def exact(t: float) -> FieldFn:
        return _pad(
            lambda x: droplet_ic(advected_positions(x, t, spec.u0, lo, hi), spec),
            ms.nvar,
        )

    return CaseSetup(ic=exact(0.0), exact=exact)


def _build_droplet(p, ms: ModelSpec, mesh: Mesh) -> CaseSetup:
    _require_plane_or_volume("droplet", mesh)
    spec = DropletSpec(
        R=p["R"],
        k_eps=p["k_eps"],
        p_atm=p["p_atm"],
        sigma=ms.sigma,
        d=mesh.dim,
        alpha_bounds=(p["alpha_min"], p["alpha_max"]),
        rho1_0=p["rho1"],
        rho2_0=p["rho2"],
    )
    ic = _pad(lambda x: droplet_ic(x, spec), ms.nvar)
    return CaseSetup(ic=ic, exact=lambda t: ic)


def _build_shock_column(p, ms: ModelSpec, mesh: Mesh) -> CaseSetup:
    _require_plane_or_volume("shock_column", mesh)
    spec = DropletSpec(
        R=p["R"],
        k_eps=p["k_eps"],
        p_atm=p["p_atm"],
        sigma=ms.sigma,
        d=mesh.dim,
        alpha_bounds=(p["alpha_min"], p["alpha_max"]),
        rho1_0=p["rho1"],
        rho2_0=p["rho2"],
    )
    gas_sound = math.sqrt(ms.gamma2 * p["p_atm"] / p["rho2"])
    standoff = p["mach"] * gas_sound * p["standoff_time"]
    nominal = spec.center[0] - p["R"] - standoff
    dx = mesh.spacing[0]
    shock_x = mesh.lo[0] + round((nominal - mesh.lo[0]) / dx) * dx
    ic = _pad(
        lambda x: shock_column_ic(x, spec, ms.gamma2, p["mach"], shock_x),
        ms.nvar,
    )
    return CaseSetup(ic=ic, exact=None)


def _build_ellipse(p, ms: ModelSpec, mesh: Mesh) -> CaseSetup:
    if mesh.dim != 2:
        raise ConfigError("case 'ellipse' needs a 2D mesh")
    spec = EllipseSpec(
        Rx=p["rx"],
        Ry=p["ry"],
        eps=p["eps"],
        rotation=math.radians(p["rotation_deg"]),
        p_atm=p["p_atm"],
        sigma=ms.sigma,
        alpha_bounds=(p["alpha_min"], p["alpha_max"]),
        rho1_0=p["rho1"],
        rho2_0=p["rho2"],
    )
    ic = _pad(lambda x: ellipse_ic(x, spec), ms.nvar)
    return CaseSetup(ic=ic, exact=None)


@dataclass(frozen=True)
class CaseDef:
    summary: str
    params: Mapping[str, tuple[type, object]]  # key -> (type, default)
    build: Callable[[dict, ModelSpec, Mesh], CaseSetup]


CASES: dict[str, CaseDef] = {
    "uniform": CaseDef(
        summary="free stream: constant primitive state everywhere",
        params={
            "rho1": (float, 1000.0),
            "rho2": (float, 1.0),
            "ux": (float, 0.0),
            "uy": (float, 0.0),
            "uz": (float, 0.0),
            "p": (float, 1.0e5),
            "alpha": (float, 0.5),
            "colour": (float, 0.5),
        },
        build=_build_uniform,
    ),
    "advection": CaseDef(
        summary="capillary column advecting through sinusoidal phase densities",
        params={
            "R": (float, 1.0),
            "k_eps": (float, 0.3),
            "p_atm": (float, 1.0),
            "rho1": (float, 1000.0),
            "rho2": (float, 1.0),
            "delta": (float, 0.1),
            "omega": (float, math.pi / 3.0),
            "ux": (float, 3.0),
            "uy": (float, 3.0),
            "alpha_min": (float, 0.01),
            "alpha_max": (float, 0.99),
        },
        build=_build_advection,
    ),
    "curl_advection": CaseDef(
        summary="equilibrium droplet advecting in a uniform velocity field",
        params={
            "R": (float, 3.0e-3),
            "k_eps": (float, 1.0 / 6.0),
            "p_atm": (float, 1.0e5),
            "rho1": (float, 1000.0),
            "rho2": (float, 1.0),
            "ux": (float, 12.0),
            "uy": (float, 12.0),
            "uz": (float, 0.0),
            "alpha_min": (float, 0.01),
            "alpha_max": (float, 0.99),
        },
        build=_build_curl_advection,
    ),
    "droplet": CaseDef(
        summary="static equilibrium droplet (capillary pressure jump)",
        params={
            "R": (float, 1.0),
            "k_eps": (float, 0.2),
            "p_atm": (float, 1.0),
            "rho1": (float, 1000.0),
            "rho2": (float, 1.0),
            "alpha_min": (float, 0.01),
            "alpha_max": (float, 0.99),
        },
        build=_build_droplet,
    ),
    "shock_column": CaseDef(
        summary="planar gas shock running into a liquid column",
        params={
            "mach": (float, 1.3),
            "R": (float, 3.2e-3),
            "k_eps": (float, 0.05),
            "p_atm": (float, 1.0e5),
            "rho1": (float, 998.2),
            "rho2": (float, 1.18),
            "alpha_min": (float, 1.0e-5),
            "alpha_max": (float, 1.0 - 1.0e-5),
            "standoff_time": (float, 1.0e-6),
        },
        build=_build_shock_column,
    ),
    "ellipse": CaseDef(
        summary="oscillating elliptical column released at a shape extremum",
        params={
            "rx": (float, 3.0e-3),
            "ry": (float, 2.0e-3),
            "eps": (float, 5.0e-4),
            "p_atm": (float, 1.0e5),
            "rho1": (float, 1000.0),
            "rho2": (float, 1.0),
            "alpha_min": (float, 0.01),
            "alpha_max": (float, 0.99),
            "rotation_deg": (float, 30.0),
        },
        build=_build_ellipse,
    ),
}


def case_names() -> tuple[str, ...]:
    return tuple(CASES)


def build_case(
    name: str, params: Mapping[str, object], ms: ModelSpec, mesh: Mesh
) -> CaseSetup:
    """Materialize a case from typed parameters (missing keys take defaults)."""
    if name not in CASES:
        raise ConfigError(f"unknown case {name!r}; pick from {case_names()}")
    case = CASES[name]
    unknown = set(params) - set(case.params)
    if unknown:
        raise ConfigError(f"case {name!r} does not take {sorted(unknown)}")
    filled = {key: params.get(key, default) for key, (_, default) in case.params.items()}
    return case.build(filled, ms, mesh)
