"""Shared fixtures and admissible-state samplers."""

from __future__ import annotations

import numpy as np
import pytest

from capflow.model import ModelSpec
from capflow.state import NVAR_BASE, NVAR_CLEAN


def make_spec(variant: str, **kw) -> ModelSpec:
    """Two-phase test model: a stiff liquid-like phase and an ideal-gas-like
    phase, with order-one surface tension."""
    defaults = dict(
        variant=variant,
        gamma1=4.0,
        gamma2=1.4,
        pi1=20.0,
        pi2=0.0,
        sigma=1.0,
        b_floor=1e-10,
    )
    if variant == "glm":
        defaults["ch"] = 40.0
    defaults.update(kw)
    return ModelSpec(**defaults)


def sample_state(rng: np.random.Generator, nvar: int) -> np.ndarray:
    """Random admissible primitive state away from eigen degeneracies:
    volume fraction in [0.05, 0.95], interface field of order one with its
    axis-aligned direction cosine squared in [0.05, 0.95]."""
    v = np.zeros(nvar)
    v[0] = rng.uniform(100.0, 2000.0)
    v[1] = rng.uniform(0.1, 5.0)
    v[2:5] = rng.uniform(-10.0, 10.0, 3)
    v[5] = rng.uniform(0.5, 10.0)
    v[6] = rng.uniform(0.05, 0.95)
    while True:
        b = rng.uniform(-1.0, 1.0, 3)
        norm = np.linalg.norm(b)
        if norm < 0.1:
            continue
        cos_sq = (b / norm) ** 2
        if 0.05 < cos_sq[0] < 0.95 and cos_sq[1] > 0.02 and cos_sq[2] > 0.02:
            break
    v[7:10] = b
    v[10] = rng.uniform(0.0, 1.0)
    if nvar == NVAR_CLEAN:
        v[11:14] = rng.uniform(-1.0, 1.0, 3)
    return v


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture(params=["wh", "gpncp", "glm"])
def any_spec(request) -> ModelSpec:
    return make_spec(request.param)


@pytest.fixture(params=["gpncp", "glm"])
def hyperbolic_spec(request) -> ModelSpec:
    return make_spec(request.param)
