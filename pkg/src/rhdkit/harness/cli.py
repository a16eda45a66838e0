"""Command-line interface.

Subcommands: list-scenarios, recover-bench, run1d, run2d, convergence.
Exit codes: 0 success, 1 configuration error, 2 numerical abort.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from ..config import (RECOVERY_METHODS, RESCALE_MODES, SchemeConfig,
                      load_config_file)
from ..errors import ConfigError, StepFailure
from ..solver1d import run_1d
from ..solver2d import run_2d
from .bench import RandomBenchSpec, recover_bench
from .convergence import convergence_study, scheme_config_for
from .fieldio import emit_field, emit_stats
from .scenarios import SCENARIOS, build_field, get_scenario


def _add_common(p):
    p.add_argument("--config", help="INI config file")
    p.add_argument("--cfl", type=float)
    p.add_argument("--strict-pcp", action="store_true", default=None)
    p.add_argument("--no-pcp-limiter", action="store_true", default=None)
    p.add_argument("--recovery", choices=RECOVERY_METHODS)
    p.add_argument("--rescale", choices=RESCALE_MODES)
    p.add_argument("--seed", type=int, default=0)


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="rhdkit",
        description="PCP finite volume HWENO schemes for special "
                    "relativistic hydrodynamics")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list-scenarios", help="print the scenario presets")

    b = sub.add_parser("recover-bench", help="random recovery benchmark")
    b.add_argument("--set", type=int, choices=(1, 2, 3), required=True)
    b.add_argument("--n", type=int, default=10 ** 6)
    b.add_argument("--methods", default="nr1,nr2,hybrid,analytical")
    b.add_argument("--out", default="recover_bench.csv")
    _add_common(b)

    for name, dim in (("run1d", 1), ("run2d", 2)):
        r = sub.add_parser(name, help=f"run a {dim}D scenario")
        r.add_argument("--scenario", required=True)
        r.add_argument("--nx", type=int)
        if dim == 2:
            r.add_argument("--ny", type=int)
        r.add_argument("--tfinal", type=float)
        r.add_argument("--out", default=None)
        _add_common(r)

    c = sub.add_parser("convergence", help="mesh refinement study")
    c.add_argument("--scenario", required=True)
    c.add_argument("--meshes", default="120,150,180")
    c.add_argument("--tfinal", type=float)
    c.add_argument("--out", default=None)
    _add_common(c)
    return ap


def _scheme_config(args):
    cfg = SchemeConfig()
    scen_over = {}
    if getattr(args, "config", None):
        cfg, scen_over, _ = load_config_file(args.config)
    kw = {}
    if getattr(args, "cfl", None) is not None:
        kw["cfl"] = args.cfl
    if getattr(args, "strict_pcp", None):
        kw["strict_pcp"] = True
    if getattr(args, "no_pcp_limiter", None):
        kw["pcp_limiter"] = False
    if getattr(args, "recovery", None):
        kw["recovery"] = args.recovery
    if getattr(args, "rescale", None):
        kw["rescale"] = args.rescale
    return (replace(cfg, **kw) if kw else cfg), scen_over


def _mesh_from(args, preset, scen_over):
    nx = args.nx or int(scen_over.get("nx", 0)) or preset.default_mesh[0]
    if preset.dim == 1:
        return (nx,)
    ny = getattr(args, "ny", None) or int(scen_over.get("ny", 0)) \
        or preset.default_mesh[1]
    return (nx, ny)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except StepFailure as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return 2


def _dispatch(args):
    if args.command == "list-scenarios":
        for name, preset in sorted(SCENARIOS.items()):
            mesh = "x".join(str(m) for m in preset.default_mesh)
            print(f"{name:18s} {preset.dim}D  gamma={preset.gamma:.4g}  "
                  f"T={preset.tfinal:g}  mesh={mesh}  {preset.notes}")
        return 0

    if args.command == "recover-bench":
        cfg, _ = _scheme_config(args)
        spec = RandomBenchSpec(args.set, args.n, args.seed)
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        stats = recover_bench(spec, methods, cfg.recovery_cfg)
        emit_stats(stats, args.out)
        for s in stats:
            print(f"{s.method:10s} max_err={s.max_err:.3e} "
                  f"mean_err={s.mean_err:.3e} iters={s.mean_iters:.4f} "
                  f"neg={s.neg_count} nonconv={s.nonconv_count} "
                  f"wall={s.wall_ms:.0f}ms")
        print(f"wrote {args.out}")
        return 0

    if args.command in ("run1d", "run2d"):
        cfg, scen_over = _scheme_config(args)
        preset = get_scenario(args.scenario or scen_over.get("name"))
        want = 1 if args.command == "run1d" else 2
        if preset.dim != want:
            raise ConfigError(f"scenario '{preset.name}' is {preset.dim}D")
        mesh = _mesh_from(args, preset, scen_over)
        tfinal = args.tfinal or float(scen_over.get("tfinal", 0)) \
            or preset.tfinal
        field = build_field(preset, mesh)
        runner = run_1d if preset.dim == 1 else run_2d
        result = runner(field, tfinal, scheme_config_for(preset, cfg))
        out = args.out or f"{preset.name}.csv"
        emit_field(result, out, cfg, preset.name, tfinal)
        rep = result.reports[-1]
        print(f"{preset.name}: {len(result.reports)} steps to t={rep.t:g}, "
              f"alpha={tuple(round(a, 4) for a in rep.alpha)}, wrote {out}")
        return 0

    if args.command == "convergence":
        cfg, scen_over = _scheme_config(args)
        preset = get_scenario(args.scenario)
        meshes = [int(tok) for tok in args.meshes.split(",") if tok]
        report = convergence_study(preset, meshes, cfg, args.tfinal)
        print("N      L1           order   L2           order   "
              "Linf         order")
        for k, mesh in enumerate(report.meshes):
            cells = [f"{report.errors[n][k]:.3e}" for n in
                     ("L1", "L2", "Linf")]
            ords = ["  -  " if k == 0 else f"{report.orders[n][k - 1]:5.2f}"
                    for n in ("L1", "L2", "Linf")]
            print(f"{mesh:<6d} {cells[0]}    {ords[0]}   {cells[1]}    "
                  f"{ords[1]}   {cells[2]}    {ords[2]}")
        if args.out:
            import json
            with open(args.out, "w") as fh:
                json.dump({"meshes": report.meshes, "errors": report.errors,
                           "orders": report.orders}, fh, indent=1)
            print(f"wrote {args.out}")
        return 0

    raise ConfigError(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
