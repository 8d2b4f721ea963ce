"""Integral diagnostics over nodal fields.

Everything here consumes the solver's per-cell tensor-node representation
directly: gradients come from the exact differentiation matrix of the
nodal basis, and integrals are the corresponding Gauss-Legendre
quadratures, so polynomial data is measured without extra discretization
error.

The interface-field constraint monitor reports the two normalised norms

    L1 = int |curl b|   / [ int ||grad b||_F   at t=0 ],
    L2 = int |curl b|^2 / [ int ||grad b||_F^2 at t=0 ],

whose denominators are frozen from the discrete initial data by
:class:`CurlMonitor`.  The droplet-oscillation period is recovered from
the kinetic-energy history, which vanishes twice per shape oscillation:
the period is twice the spacing of successive energy minima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import Basis, dof_apply, tensor_weights
from .errors import ConfigError
from .mesh import Mesh, integral_norms, project_function
from .model import ModelSpec
from .state import Q_B, Q_MOM, Q_R1A, Q_R2A


def nodal_gradient(fields: np.ndarray, mesh: Mesh, basis: Basis) -> np.ndarray:
    """Per-node spatial gradient of nodal fields.

    ``fields``: (nz, ny, nx, ndof, m) values of m quantities; returns
    (nz, ny, nx, ndof, m, 3) with derivatives along inactive axes zero.
    """
    out = np.zeros(fields.shape + (3,))
    for axis in range(mesh.dim):
        out[..., axis] = dof_apply(basis.diff, fields, axis, mesh.dim) / (
            mesh.spacing[axis]
        )
    return out


def _quadrature_total(values: np.ndarray, mesh: Mesh, basis: Basis) -> float:
    """Integral over the box of per-node scalars (nz, ny, nx, ndof)."""
    w = tensor_weights(basis, mesh.dim)
    return float(mesh.cell_volume * np.sum(values * w))


def curl_gradient_integrals(
    state: np.ndarray, mesh: Mesh, basis: Basis
) -> dict[str, float]:
    """Raw integrals of the interface-field curl and gradient magnitudes.

    Returns ``curl_l1`` = int |curl b|, ``curl_l2`` = int |curl b|^2,
    ``grad_l1`` = int ||grad b||_F, ``grad_l2`` = int ||grad b||_F^2.
    """
    b = state[..., Q_B : Q_B + 3]
    grad = nodal_gradient(b, mesh, basis)  # (..., ndof, 3 comp, 3 deriv)
    curl = np.stack(
        [
            grad[..., 2, 1] - grad[..., 1, 2],
            grad[..., 0, 2] - grad[..., 2, 0],
            grad[..., 1, 0] - grad[..., 0, 1],
        ],
        axis=-1,
    )
    curl_sq = (curl**2).sum(axis=-1)
    grad_sq = (grad**2).sum(axis=(-2, -1))
    return {
        "curl_l1": _quadrature_total(np.sqrt(curl_sq), mesh, basis),
        "curl_l2": _quadrature_total(curl_sq, mesh, basis),
        "grad_l1": _quadrature_total(np.sqrt(grad_sq), mesh, basis),
        "grad_l2": _quadrature_total(grad_sq, mesh, basis),
    }


class CurlMonitor:
    """Normalised curl-constraint norms with t=0 denominators.

    The denominators are the gradient integrals of the *discrete* initial
    state (projection error included), so an initially exact gradient
    field reports the pure growth of constraint violations.
    """

    def __init__(self, state0: np.ndarray, mesh: Mesh, basis: Basis):
        base = curl_gradient_integrals(state0, mesh, basis)
        if base["grad_l1"] <= 0.0 or base["grad_l2"] <= 0.0:
            raise ConfigError(
                "curl norms undefined: initial interface field has no gradient"
            )
        self.denom_l1 = base["grad_l1"]
        self.denom_l2 = base["grad_l2"]

    @classmethod
    def maybe(cls, state0: np.ndarray, mesh: Mesh, basis: Basis):
        """Monitor for the run, or None when the norms are undefined
        (gradient-free initial interface field)."""
        try:
            return cls(state0, mesh, basis)
        except ConfigError:
            return None

    def normalized(self, state: np.ndarray, mesh: Mesh, basis: Basis):
        raw = curl_gradient_integrals(state, mesh, basis)
        return raw["curl_l1"] / self.denom_l1, raw["curl_l2"] / self.denom_l2


def kinetic_energy(state: np.ndarray, mesh: Mesh, basis: Basis) -> float:
    """Total kinetic energy int 1/2 rho |u|^2 of conserved nodal data."""
    rho = state[..., Q_R1A] + state[..., Q_R2A]
    mom_sq = (state[..., Q_MOM : Q_MOM + 3] ** 2).sum(axis=-1)
    return _quadrature_total(0.5 * mom_sq / rho, mesh, basis)


def conserved_totals(state: np.ndarray, mesh: Mesh, basis: Basis) -> np.ndarray:
    """Integral of every conserved variable over the box."""
    w = tensor_weights(basis, mesh.dim)
    return mesh.cell_volume * np.sum(state * w[:, None], axis=(0, 1, 2, 3))


def error_norms_vs_exact(
    state: np.ndarray, exact_fn, mesh: Mesh, basis: Basis
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """L1/L2/Linf norms per variable of (state - exact at the nodes).

    ``exact_fn`` maps a coordinate array (..., 3) to values in the same
    representation as ``state`` (conserved vs. primitive is the caller's
    contract).
    """
    exact = project_function(exact_fn, mesh, basis)
    return integral_norms(state - exact, mesh, basis)


def convergence_fit(points) -> float:
    """Order estimate: slope of the logarithmic least-squares fit.

    ``points`` is a sequence of (mesh spacing, error) pairs; at least two
    with positive entries are required.
    """
    pts = [(float(h), float(e)) for h, e in points]
    if len(pts) < 2:
        raise ConfigError("convergence fit needs at least two mesh levels")
    if any(h <= 0.0 or e <= 0.0 for h, e in pts):
        raise ConfigError("convergence fit needs positive spacings and errors")
    log_h = np.log([h for h, _ in pts])
    log_e = np.log([e for _, e in pts])
    slope, _ = np.polyfit(log_h, log_e, 1)
    return float(slope)


def oscillation_period(times, energies) -> float:
    """Droplet oscillation period from the kinetic-energy history.

    The droplet's kinetic energy vanishes at every half oscillation, so
    the period is twice the mean spacing between successive interior
    minima of the series; each discrete minimum is refined by a quadratic
    fit through its three samples.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    if t.ndim != 1 or t.shape != e.shape or t.size < 3:
        raise ConfigError("period extraction needs a 1D series of >= 3 samples")
    if not (np.diff(t) > 0).all():
        raise ConfigError("period extraction needs strictly increasing times")
    minima = []
    for i in range(1, t.size - 1):
        if e[i] <= e[i - 1] and e[i] <= e[i + 1] and (e[i] < e[i - 1] or e[i] < e[i + 1]):
            ts, es = t[i - 1 : i + 2], e[i - 1 : i + 2]
            a, b, _ = np.polyfit(ts, es, 2)
            minima.append(-b / (2 * a) if a > 0 else t[i])
    if len(minima) < 2:
        raise ConfigError("period extraction needs at least two energy minima")
    return 2.0 * float(np.diff(minima).mean())


def small_oscillation_period(
    sigma: float, rho1: float, rho2: float, rx: float, ry: float
) -> float:
    """Reference period of small ellipse oscillations about a circle.

    With mean radius R = (rx + ry)/2 the linearised restoring dynamics
    give T = 2 pi / sqrt(6 sigma / ((rho1 + rho2) R^3)).
    """
    r = 0.5 * (rx + ry)
    return 2.0 * np.pi / np.sqrt(6.0 * sigma / ((rho1 + rho2) * r**3))


def schlieren(
    state: np.ndarray, mesh: Mesh, basis: Basis, strength: float = 15.0
) -> np.ndarray:
    """Exponentially scaled density-gradient magnitude per node.

    Returns exp(-strength * |grad rho| / max |grad rho|); the maximum is
    taken over the whole field and guards the uniform-density case.
    """
    rho = (state[..., Q_R1A] + state[..., Q_R2A])[..., None]
    grad = nodal_gradient(rho, mesh, basis)[..., 0, :]
    mag = np.sqrt((grad**2).sum(axis=-1))
    peak = mag.max()
    if peak <= 0.0:
        return np.ones_like(mag)
    return np.exp(-strength * mag / peak)


def interface_energy_field(state: np.ndarray, ms: ModelSpec) -> np.ndarray:
    """Fourth root of the capillary energy density, sigma |b|, per node."""
    b = state[..., Q_B : Q_B + 3]
    return (ms.sigma * np.sqrt((b**2).sum(axis=-1))) ** 0.25


@dataclass
class TimeSeriesRecord:
    """One row of the scalar run history."""

    t: float
    dt: float
    curl_l1: float
    curl_l2: float
    grad_b_l1: float
    kinetic_energy: float
    totals: np.ndarray
    troubled_fraction: float

    def header(self) -> list[str]:
        names = [
            "t",
            "dt",
            "curl_l1",
            "curl_l2",
            "grad_b_l1",
            "kinetic_energy",
        ]
        names += [f"total_q{i}" for i in range(len(self.totals))]
        names.append("troubled_fraction")
        return names

    def values(self) -> list[float]:
        vals = [
            self.t,
            self.dt,
            self.curl_l1,
            self.curl_l2,
            self.grad_b_l1,
            self.kinetic_energy,
            *self.totals,
            self.troubled_fraction,
        ]
        return [float(v) for v in vals]


def measure(
    state: np.ndarray,
    ms: ModelSpec,
    mesh: Mesh,
    basis: Basis,
    monitor: CurlMonitor | None,
    t: float,
    dt: float,
    troubled_fraction: float = 0.0,
) -> TimeSeriesRecord:
    """Assemble one history row from a conserved nodal state.

    ``monitor`` may be None for runs whose initial interface field has no
    gradient; the normalised curl norms then report zero.
    """
    raw = curl_gradient_integrals(state, mesh, basis)
    if monitor is None:
        curl_l1, curl_l2 = 0.0, 0.0
    else:
        curl_l1 = raw["curl_l1"] / monitor.denom_l1
        curl_l2 = raw["curl_l2"] / monitor.denom_l2
    return TimeSeriesRecord(
        t=t,
        dt=dt,
        curl_l1=curl_l1,
        curl_l2=curl_l2,
        grad_b_l1=raw["grad_l1"],
        kinetic_energy=kinetic_energy(state, mesh, basis),
        totals=conserved_totals(state, mesh, basis),
        troubled_fraction=troubled_fraction,
    )
