"""Mixture stiffened-gas EOS unit tests."""

from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from capflow import eos

GAMMAS = st.floats(min_value=1.05, max_value=7.0)
PIS = st.floats(min_value=0.0, max_value=1e9)
ALPHAS = st.floats(min_value=1e-6, max_value=1.0 - 1e-6)
RHOS = st.floats(min_value=1e-3, max_value=1e5)
PRESSURES = st.floats(min_value=1e-2, max_value=1e9)


def test_identical_ideal_phases_reduce_to_single_gas():
    # both phases gamma=1.4, no offsets: p = (gamma - 1) * rhoe
    p = eos.pressure_from_energy(2.5, 0.5, 1.4, 1.4, 0.0, 0.0)
    assert np.isclose(p, 1.0, rtol=0.0, atol=1e-14)


@given(p=PRESSURES, a1=ALPHAS, g1=GAMMAS, g2=GAMMAS, pi1=PIS, pi2=PIS)
@settings(max_examples=200)
def test_pressure_energy_round_trip(p, a1, g1, g2, pi1, pi2):
    rhoe = eos.energy_from_pressure(p, a1, g1, g2, pi1, pi2)
    back = eos.pressure_from_energy(rhoe, a1, g1, g2, pi1, pi2)
    assert np.isclose(back, p, rtol=1e-12, atol=1e-12 * (1.0 + pi1 + pi2))


def test_air_sound_speed_value():
    a1_sq, a2_sq = eos.phase_speeds_sq(998.0, 1.18, 1e5, 4.4, 1.4, 6e8, 0.0)
    assert np.isclose(np.sqrt(a2_sq), np.sqrt(1.4 * 1e5 / 1.18), rtol=1e-14)
    assert np.isclose(np.sqrt(a2_sq), 344.6, rtol=1e-3)


@given(rho1=RHOS, rho2=RHOS, p=PRESSURES, a1=ALPHAS)
@settings(max_examples=200)
def test_wood_speed_is_harmonic_compressibility_average(rho1, rho2, p, a1):
    g1, g2, pi1, pi2 = 4.0, 1.4, 20.0, 0.0
    a_sq, _ = eos.mixture_speed_sq(rho1, rho2, a1, p, g1, g2, pi1, pi2)
    a1_sq, a2_sq = eos.phase_speeds_sq(rho1, rho2, p, g1, g2, pi1, pi2)
    rho = a1 * rho1 + (1.0 - a1) * rho2
    inv = a1 / (rho1 * a1_sq) + (1.0 - a1) / (rho2 * a2_sq)
    assert np.isclose(1.0 / (rho * a_sq), inv, rtol=1e-12)


def test_pure_phase_limits():
    g1, g2, pi1, pi2 = 4.0, 1.4, 20.0, 0.0
    rho1, rho2, p = 1000.0, 1.0, 2.0
    a1_sq, a2_sq = eos.phase_speeds_sq(rho1, rho2, p, g1, g2, pi1, pi2)
    near_one, near_zero = 1.0 - 1e-12, 1e-12
    a_sq_hi, coup_hi = eos.mixture_speed_sq(rho1, rho2, near_one, p, g1, g2, pi1, pi2)
    a_sq_lo, coup_lo = eos.mixture_speed_sq(rho1, rho2, near_zero, p, g1, g2, pi1, pi2)
    assert np.isclose(a_sq_hi, a1_sq, rtol=1e-9)
    assert np.isclose(a_sq_lo, a2_sq, rtol=1e-9)
    assert abs(coup_hi) < 1e-9 and abs(coup_lo) < 1e-9


def test_coupling_vanishes_at_impedance_match():
    # choose states with rho1 a1^2 = rho2 a2^2 exactly: same gamma, no
    # offsets, any densities -> z_k = gamma * p
    a_sq, coup = eos.mixture_speed_sq(5.0, 0.25, 0.37, 3.0, 1.4, 1.4, 0.0, 0.0)
    assert coup == 0.0
    assert a_sq > 0.0
