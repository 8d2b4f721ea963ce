"""Batch command line for the solver.

Subcommands:

* ``run <config>`` — one simulation: frames, time series, error norms.
* ``convergence <config>`` — the same case on a sequence of meshes given
  by repeated ``--mesh`` flags; fits per-variable convergence orders and
  writes ``convergence.csv``.
* ``verify`` — the randomized eigenstructure / path-consistency /
  quadrature property battery.
* ``exact <case> [config]`` — sample a case's exact solution onto the
  configured mesh and dump it as a VTK frame.

Flags mirror config keys and always win over the file; the output
directory additionally honours the ``CAPFLOW_OUT`` environment variable
(file < environment < ``--out``).  Exit codes: 0 success, 1 failed
verification, 2 configuration error, 3 simulation blowup (time on
stderr).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .errors import ConfigError, SimulationBlowup

OUT_DIR_ENV = "CAPFLOW_OUT"

_MODEL_CHOICES = ("wh", "gpncp", "glm")
_FLUX_CHOICES = ("hll", "rusanov")
_LIMITER_CHOICES = ("off", "muscl", "p0p2")


def _add_override_flags(sp: argparse.ArgumentParser, repeat_mesh: bool = False):
    sp.add_argument("--order", type=int, help="polynomial degree")
    sp.add_argument("--model", choices=_MODEL_CHOICES, help="model variant")
    sp.add_argument("--ch", type=float, help="cleaning wave speed")
    if repeat_mesh:
        sp.add_argument(
            "--mesh",
            action="append",
            metavar="CELLS",
            help="cells per axis, e.g. '64' or '64 32'; repeat for the"
            " refinement sequence",
        )
    else:
        sp.add_argument("--mesh", metavar="CELLS", help="cells per axis")
    sp.add_argument("--flux", choices=_FLUX_CHOICES, help="Riemann flux")
    sp.add_argument("--limiter", choices=_LIMITER_CHOICES, help="subcell limiter")
    sp.add_argument("--tend", type=float, help="final time")
    sp.add_argument("--out", help="output directory")


def _overrides(args: argparse.Namespace) -> dict[tuple[str, str], str]:
    over: dict[tuple[str, str], str] = {}
    env_out = os.environ.get(OUT_DIR_ENV)
    if env_out:
        over[("output", "dir")] = env_out
    if getattr(args, "order", None) is not None:
        over[("scheme", "order")] = str(args.order)
    if getattr(args, "model", None):
        over[("model", "variant")] = args.model
    if getattr(args, "ch", None) is not None:
        over[("model", "ch")] = repr(args.ch)
    mesh = getattr(args, "mesh", None)
    if isinstance(mesh, str):
        over[("mesh", "cells")] = mesh
    if getattr(args, "flux", None):
        over[("scheme", "flux")] = args.flux
    if getattr(args, "limiter", None):
        over[("scheme", "limiter")] = args.limiter
    if getattr(args, "tend", None) is not None:
        over[("run", "t_end")] = repr(args.tend)
    if getattr(args, "out", None):
        over[("output", "dir")] = args.out
    return over


def _describe(cfg, mesh: bool = True) -> str:
    parts = [
        f"case {cfg.case}",
        f"model {cfg.model.variant}",
        f"scheme {cfg.scheme.scheme} degree {cfg.scheme.degree}",
    ]
    if mesh:
        cells = "x".join(str(n) for n in cfg.mesh.ncells[: cfg.mesh.dim])
        parts.append(f"mesh {cells}")
    parts.append(f"t_end {cfg.t_end!r}")
    return "  ".join(parts)


def _print_errors(errors, nvar: int) -> None:
    from .state import conserved_names

    l1, l2, linf = errors
    print("error norms against the exact solution:")
    for name, e1, e2, em in zip(conserved_names(nvar), l1, l2, linf):
        print(f"  {name:<24} L1 {e1:.6e}  L2 {e2:.6e}  Linf {em:.6e}")


def cmd_run(args: argparse.Namespace) -> int:
    from .config import load_config
    from .driver import simulate

    cfg = load_config(args.config, _overrides(args))
    print(_describe(cfg))
    art = simulate(cfg)
    res = art.result
    print(
        f"steps {res.steps}  reached t {res.t!r}  troubled steps"
        f" {res.troubled_steps}"
    )
    print(f"time series: {art.csv_path}  ({len(art.records)} rows)")
    if art.frame_paths:
        print(f"frames: {art.frame_paths[0]} .. {art.frame_paths[-1]}")
    if art.errors is not None:
        _print_errors(art.errors, cfg.model.nvar)
    return 0


def _fit_or_nan(pairs) -> float:
    from .diagnostics import convergence_fit

    try:
        return convergence_fit(pairs)
    except ConfigError:
        return float("nan")


def cmd_convergence(args: argparse.Namespace) -> int:
    from .config import load_config
    from .diagnostics import convergence_fit
    from .driver import simulate
    from .state import conserved_names

    meshes = args.mesh or []
    if len(meshes) < 2:
        raise ConfigError(
            "convergence needs at least two --mesh levels, coarse to fine"
        )
    base_over = _overrides(args)
    base_over.pop(("mesh", "cells"), None)

    probe = load_config(args.config, {**base_over, ("mesh", "cells"): meshes[0]})
    if probe.setup().exact is None:
        raise ConfigError(
            f"case {probe.case!r} has no exact solution to converge against"
        )
    out_root = probe.out_dir
    names = conserved_names(probe.model.nvar)
    ialpha = names.index("volume_fraction")
    print(_describe(probe, mesh=False))
    print(f"mesh sequence: {', '.join(meshes)}")

    levels = []  # (h, (l1, l2, linf)) per mesh
    for i, cells in enumerate(meshes):
        sub = os.path.join(out_root, f"level_{i}_{cells.replace(' ', 'x')}")
        cfg = load_config(
            args.config,
            {**base_over, ("mesh", "cells"): cells, ("output", "dir"): sub},
        )
        art = simulate(cfg, write_frames=False)
        h = cfg.mesh.spacing[0]
        levels.append((h, art.errors))
        print(
            f"  cells {cells:<12} h {h:.6e}  volume_fraction L1"
            f" {art.errors[0][ialpha]:.6e}  steps {art.result.steps}"
        )
    csv_path = os.path.join(out_root, "convergence.csv")
    lines = ["level,h,variable,l1,l2,linf"]
    for lev, (h, (l1, l2, linf)) in enumerate(levels):
        for k, name in enumerate(names):
            lines.append(
                f"{lev},{h!r},{name},{float(l1[k])!r},{float(l2[k])!r},"
                f"{float(linf[k])!r}"
            )
    for k, name in enumerate(names):
        orders = [
            _fit_or_nan([(h, errs[norm][k]) for h, errs in levels])
            for norm in range(3)
        ]
        lines.append(
            f"fit,nan,{name},{orders[0]!r},{orders[1]!r},{orders[2]!r}"
        )
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

    alpha_fit = convergence_fit([(h, errs[0][ialpha]) for h, errs in levels])
    print(f"fitted volume_fraction L1 order: {alpha_fit:.3f}")
    print(f"wrote {csv_path}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    from . import verification as ver

    results = [ver.quadrature_check()]
    eigen_variants = ("gpncp", "glm") if args.model is None else (args.model,)
    path_variants = _MODEL_CHOICES if args.model is None else (args.model,)
    for variant in eigen_variants:
        if variant != "wh":  # no eigenvector basis to check for wh
            results.append(
                ver.eigenstructure_check(variant, args.samples, args.seed)
            )
    for variant in path_variants:
        results.append(
            ver.path_consistency_check(variant, args.samples, args.seed)
        )
    ok = True
    for res in results:
        print(res.line())
        ok = ok and res.passed
    return 0 if ok else 1


def cmd_exact(args: argparse.Namespace) -> int:
    from .basis import build_basis
    from .config import load_config
    from .driver import simulate  # noqa: F401  (keeps import graph warm)
    from .mesh import project_function
    from .output import write_vtk_frame
    from .solver import _p2c

    over = _overrides(args)
    over[("case", "name")] = args.case
    cfg = load_config(args.config, over)
    setup = cfg.setup()
    if setup.exact is None:
        raise ConfigError(f"case {args.case!r} has no exact solution to dump")
    t = cfg.t_end
    basis = build_basis(cfg.scheme.degree)
    vfield = project_function(setup.exact(t), cfg.mesh, basis)
    qfield = _p2c(vfield, cfg.model.phys_params())
    if not np.isfinite(qfield).all():
        raise ConfigError(
            f"exact solution of case {args.case!r} is not admissible at t={t!r}"
        )
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"exact_{args.case}.vtk")
    write_vtk_frame(
        path,
        qfield,
        cfg.model,
        cfg.mesh,
        basis,
        cfg.schlieren_strength,
        title=f"exact {args.case} t={t!r}",
    )
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capflow",
        description="two-phase flow solver with surface tension: batch runs,"
        " mesh-refinement studies, and model verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured simulation")
    p_run.add_argument("config", help="configuration file")
    _add_override_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser(
        "convergence", help="run a mesh sequence and fit convergence orders"
    )
    p_conv.add_argument("config", help="configuration file")
    _add_override_flags(p_conv, repeat_mesh=True)
    p_conv.set_defaults(func=cmd_convergence)

    p_ver = sub.add_parser(
        "verify", help="randomized eigenstructure/path/quadrature checks"
    )
    p_ver.add_argument("--model", choices=_MODEL_CHOICES, help="restrict variant")
    p_ver.add_argument("--samples", type=int, default=1000)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.set_defaults(func=cmd_verify)

    p_ex = sub.add_parser(
        "exact", help="dump a case's exact solution as a VTK frame"
    )
    p_ex.add_argument("case", help="case name")
    p_ex.add_argument("config", nargs="?", help="optional configuration file")
    _add_override_flags(p_ex)
    p_ex.set_defaults(func=cmd_exact)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SimulationBlowup as exc:
        print(f"simulation blowup at t={exc.time!r}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
