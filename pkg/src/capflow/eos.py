"""Stiffened-gas mixture equation of state under pressure equilibrium.

Each phase k follows ``rho_k e_k = (p + gamma_k Pi_k) / (gamma_k - 1)``.
With both phases at a common pressure and temperature equilibrium not
enforced, the mixture internal energy density is

    rho e = (p * G(alpha1) + H(alpha1)) / GAMMA

with

    G     = alpha1 (gamma2 - 1) + alpha2 (gamma1 - 1)
    H     = alpha1 gamma1 Pi1 (gamma2 - 1) + alpha2 gamma2 Pi2 (gamma1 - 1)
    GAMMA = (gamma1 - 1)(gamma2 - 1).

All functions accept scalars or numpy arrays and are dtype generic, so they
can be fed complex inputs for derivative checks.
"""

from __future__ import annotations

import numpy as np


def mixture_terms(alpha1, gamma1, gamma2, pi1, pi2):
    """Return the mixture EOS coefficients ``(G, H, GAMMA)``."""
    alpha2 = 1.0 - alpha1
    g = alpha1 * (gamma2 - 1.0) + alpha2 * (gamma1 - 1.0)
    h = alpha1 * gamma1 * pi1 * (gamma2 - 1.0) + alpha2 * gamma2 * pi2 * (gamma1 - 1.0)
    big_gamma = (gamma1 - 1.0) * (gamma2 - 1.0)
    return g, h, big_gamma


def energy_from_pressure(p, alpha1, gamma1, gamma2, pi1, pi2):
    """Mixture internal energy density ``rho e`` at pressure ``p``."""
    g, h, big_gamma = mixture_terms(alpha1, gamma1, gamma2, pi1, pi2)
    return (p * g + h) / big_gamma


def pressure_from_energy(rhoe, alpha1, gamma1, gamma2, pi1, pi2):
    """Invert :func:`energy_from_pressure` for the pressure."""
    g, h, big_gamma = mixture_terms(alpha1, gamma1, gamma2, pi1, pi2)
    return (rhoe * big_gamma - h) / g


def phase_speeds_sq(rho1, rho2, p, gamma1, gamma2, pi1, pi2):
    """Squared sound speeds of the two pure phases."""
    a1_sq = gamma1 * (p + pi1) / rho1
    a2_sq = gamma2 * (p + pi2) / rho2
    return a1_sq, a2_sq


def mixture_speed_sq(rho1, rho2, alpha1, p, gamma1, gamma2, pi1, pi2):
    """Squared mixture sound speed (harmonic, Wood-type average) and the
    volume-fraction/velocity-divergence coupling coefficient.

    Returns ``(a_sq, K)`` where ``K`` multiplies the velocity divergence in
    the nonconservative volume-fraction equation:

        K = alpha1 alpha2 (rho2 a2^2 - rho1 a1^2)
            / (alpha1 rho2 a2^2 + alpha2 rho1 a1^2).
    """
    a1_sq, a2_sq = phase_speeds_sq(rho1, rho2, p, gamma1, gamma2, pi1, pi2)
    alpha2 = 1.0 - alpha1
    rho = alpha1 * rho1 + alpha2 * rho2
    z1 = rho1 * a1_sq
    z2 = rho2 * a2_sq
    den = alpha1 * z2 + alpha2 * z1
    a_sq = z1 * z2 / (rho * den)
    coupling = alpha1 * alpha2 * (z2 - z1) / den
    return a_sq, coupling
