"""Strict, typed run configuration loaded from flat key-value files.

The file format is INI-style: one section per concern, scalar values only,
and every key checked against a schema — unknown sections or keys are
errors, as are malformed values.  Command-line overrides are applied as
(section, key) -> raw-string replacements before typing, so a flag and a
file line always behave identically.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Mapping

from .cases import CASES, CaseSetup, build_case, case_names
from .errors import ConfigError
from .mesh import BC_KINDS, Mesh
from .model import ModelSpec
from .solver import SchemeConfig

LIMITER_CHOICES = ("off", "muscl", "p0p2")


def _float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}") from None


def _int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}") from None


def _str(raw: str) -> str:
    return raw.strip()


def _tokens(raw: str) -> list[str]:
    return raw.replace(",", " ").split()


def _floats3(raw: str) -> tuple[float, float, float]:
    toks = _tokens(raw)
    if len(toks) != 3:
        raise ConfigError(f"expected three numbers, got {raw!r}")
    return tuple(_float(t) for t in toks)


def _ints_upto3(raw: str) -> tuple[int, ...]:
    toks = _tokens(raw)
    if len(toks) > 3 or not toks:
        raise ConfigError(f"expected up to three integers, got {raw!r}")
    return tuple(_int(t) for t in toks)


def _cells_for_dim(cells: tuple[int, ...], dim: int) -> tuple[int, int, int]:
    """Cell counts per axis: one value broadcasts over the active axes;
    otherwise one value per active axis (trailing entries of 1 allowed)."""
    if len(cells) == 1:
        cells = cells * dim
    if len(cells) < dim or any(n != 1 for n in cells[dim:]):
        raise ConfigError(
            f"cells {cells} does not fit a {dim}-dimensional mesh"
        )
    return tuple(cells[:dim]) + (1,) * (3 - dim)


def _bc_pair(raw: str) -> tuple[str, str]:
    toks = _tokens(raw)
    if len(toks) == 1:
        toks = toks * 2
    if len(toks) != 2 or any(t not in BC_KINDS for t in toks):
        raise ConfigError(
            f"boundary spec {raw!r} must be one or two of {BC_KINDS}"
        )
    return (toks[0], toks[1])


# (converter, default) per section.key; section [case] is handled apart
# because its keys depend on the chosen case.
_SCHEMA: dict[str, dict[str, tuple[object, object]]] = {
    "model": {
        "variant": (_str, "gpncp"),
        "gamma1": (_float, 4.0),
        "gamma2": (_float, 1.4),
        "pi1": (_float, 20.0),
        "pi2": (_float, 0.0),
        "sigma": (_float, 1.0),
        "ch": (_float, 0.0),
        "b_floor": (_float, 1.0e-10),
    },
    "mesh": {
        "dim": (_int, 1),
        "lo": (_floats3, (0.0, 0.0, 0.0)),
        "hi": (_floats3, (1.0, 0.0, 0.0)),
        "cells": (_ints_upto3, (64,)),
        "bc_x": (_bc_pair, ("periodic", "periodic")),
        "bc_y": (_bc_pair, ("periodic", "periodic")),
        "bc_z": (_bc_pair, ("periodic", "periodic")),
    },
    "scheme": {
        "scheme": (_str, "dg"),
        "order": (_int, 3),
        "flux": (_str, "hll"),
        "predictor": (_str, "conservative"),
        "face_quadrature": (_str, "averaged"),
        "cfl": (_float, 0.9),
        "limiter": (_str, "off"),
    },
    "run": {
        "t_end": (_float, 0.0),
        "max_steps": (_int, 1_000_000),
        "seed": (_int, 0),
    },
    "output": {
        "dir": (_str, "out"),
        "frames": (_int, 1),
        "schlieren_strength": (_float, 15.0),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated description of one simulation run."""

    model: ModelSpec
    mesh: Mesh
    scheme: SchemeConfig
    limiter: str
    t_end: float
    max_steps: int
    seed: int
    out_dir: str
    frames: int
    schlieren_strength: float
    case: str
    case_params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.limiter not in LIMITER_CHOICES:
            raise ConfigError(
                f"limiter must be one of {LIMITER_CHOICES}, got {self.limiter!r}"
            )
        if self.t_end < 0.0:
            raise ConfigError("t_end must be nonnegative")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be positive")
        if self.frames < 1:
            raise ConfigError("frames must be at least 1")
        if not self.schlieren_strength > 0.0:
            raise ConfigError("schlieren_strength must be positive")
        if self.case not in CASES:
            raise ConfigError(
                f"unknown case {self.case!r}; pick from {case_names()}"
            )

    def setup(self) -> CaseSetup:
        return build_case(self.case, self.case_params, self.model, self.mesh)

    def make_limiter(self):
        if self.limiter == "off":
            return None
        from .limiter import SubcellLimiter

        return SubcellLimiter(scheme=self.limiter)


def _parse_file(path: str | None) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str  # keys are case-sensitive
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file: {exc}") from None
    return {
        section: dict(parser.items(section)) for section in parser.sections()
    }


def _check_known(raw: dict[str, dict[str, str]]) -> None:
    for section, items in raw.items():
        if section == "case":
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in items:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")


def _typed(raw: dict[str, dict[str, str]], section: str) -> dict[str, object]:
    out = {}
    for key, (convert, default) in _SCHEMA[section].items():
        if section in raw and key in raw[section]:
            out[key] = convert(raw[section][key])
        else:
            out[key] = default
    return out


def _typed_case(raw: dict[str, dict[str, str]]) -> tuple[str, dict[str, object]]:
    items = dict(raw.get("case", {}))
    name = items.pop("name", "uniform").strip()
    if name not in CASES:
        raise ConfigError(f"unknown case {name!r}; pick from {case_names()}")
    schema = CASES[name].params
    params: dict[str, object] = {}
    for key, value in items.items():
        if key not in schema:
            raise ConfigError(f"case {name!r} does not take key {key!r}")
        kind = schema[key][0]
        params[key] = _int(value) if kind is int else (
            _float(value) if kind is float else _str(value)
        )
    return name, params


def load_config(
    path: str | None = None,
    overrides: Mapping[tuple[str, str], str] | None = None,
) -> RunConfig:
    """Load, override, type-check, and cross-validate a run configuration.

    ``overrides`` maps (section, key) to raw replacement strings and is
    subject to the same schema as the file.
    """
    raw = _parse_file(path)
    for (section, key), value in (overrides or {}).items():
        raw.setdefault(section, {})[key] = value
    _check_known(raw)

    model_kw = _typed(raw, "model")
    mesh_kw = _typed(raw, "mesh")
    scheme_kw = _typed(raw, "scheme")
    run_kw = _typed(raw, "run")
    out_kw = _typed(raw, "output")
    case_name, case_params = _typed_case(raw)

    try:
        model = ModelSpec(**model_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    mesh = Mesh(
        lo=mesh_kw["lo"],
        hi=mesh_kw["hi"],
        ncells=_cells_for_dim(mesh_kw["cells"], mesh_kw["dim"]),
        dim=mesh_kw["dim"],
        bc=(mesh_kw["bc_x"], mesh_kw["bc_y"], mesh_kw["bc_z"]),
    )
    limiter = scheme_kw.pop("limiter")
    degree = scheme_kw.pop("order")
    scheme = SchemeConfig(degree=degree, **scheme_kw)

    cfg = RunConfig(
        model=model,
        mesh=mesh,
        scheme=scheme,
        limiter=limiter,
        t_end=run_kw["t_end"],
        max_steps=run_kw["max_steps"],
        seed=run_kw["seed"],
        out_dir=out_kw["dir"],
        frames=out_kw["frames"],
        schlieren_strength=out_kw["schlieren_strength"],
        case=case_name,
        case_params=case_params,
    )
    cfg.setup()  # surface case/mesh incompatibilities at load time
    return cfg
