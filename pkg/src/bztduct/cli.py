"""Command-line interface.

Subcommands:
    eos-check   landmark table of the configured law as JSON
    shock       solve one oblique shock (upstream state + downstream tau)
    wave-curve  tagged wave-curve polyline CSV
    ramp        corner solution sectors as JSON (optional angular sweep)
    duct        full duct run into a run directory
    case-atlas  corner-pair classification and applicable solvers

Exit codes: 0 success, 2 configuration error, 3 solver abort (the
diagnostic is printed to stderr).
"""

import argparse
import json
import os
import sys

import numpy as np

from .config import ConfigError, parse_config, config_to_toml
from .eos import EosError, find_landmarks, fundamental_derivative
from .kinematics import KinematicsError, state_from_uv
from .shock import ShockError, solve_oblique_shock
from .corner import CornerError, solve_ramp
from .wave_curves import WaveCurveError
from .charfield.lattice import LatticeError
from .charfield.shockfit import ShockFitError
from .pipeline import (PipelineError, run_duct, case_atlas)
from .rundir import write_run_dir, dump_wave_curves, run_root

_SOLVER_ERRORS = (EosError, KinematicsError, ShockError, CornerError,
                  WaveCurveError, LatticeError, ShockFitError,
                  PipelineError)


def _add_common(p):
    p.add_argument("config", help="run configuration (TOML)")
    p.add_argument("--resolution", type=int, default=None,
                   help="override [numerics] n_lattice")
    p.add_argument("--cycles", type=int, default=None,
                   help="override [numerics] max_cycles")
    p.add_argument("--tol", type=float, default=None,
                   help="override [numerics] strength_tol")


def _load(args):
    cfg = parse_config(args.config)
    if getattr(args, "resolution", None):
        cfg.numerics_table["n_lattice"] = args.resolution
    if getattr(args, "cycles", None):
        cfg.numerics_table["max_cycles"] = args.cycles
    if getattr(args, "tol", None):
        cfg.numerics_table["strength_tol"] = args.tol
    return cfg


def cmd_eos_check(args):
    cfg = _load(args)
    eos = cfg.build_eos()
    out = {"law": cfg.eos_table["law"], "params": eos.params,
           "is_bzt": eos.is_bzt, "tail_exponent": eos.tail_gamma}
    if eos.is_bzt:
        lm = find_landmarks(eos)
        out["landmarks"] = lm.as_dict()
        out["ordering_ok"] = lm.ordered()
        mid = 0.5 * (lm.tau1_i + lm.tau2_i)
        out["min_fundamental_derivative"] = float(
            fundamental_derivative(eos, mid))
    out["enthalpy_derivative_residual"] = eos.enthalpy_residual(
        np.geomspace(eos.tau_min * 1.2, 100.0, 40))
    print(json.dumps(out, indent=1, sort_keys=True))
    return 0


def cmd_shock(args):
    cfg = _load(args)
    ctx = cfg.build_context()
    if args.u is not None:
        up = state_from_uv(ctx, args.u, args.v)
    else:
        up = state_from_uv(ctx, ctx.u0, 0.0)
    sh = solve_oblique_shock(ctx, up, args.tau_down, family=args.family)
    rec = sh.as_dict()
    rec["rh_residuals"] = list(sh.rh_residuals())
    print(json.dumps(rec, indent=1, sort_keys=True))
    return 0


def cmd_wave_curve(args):
    cfg = _load(args)
    ctx = cfg.build_context()
    dump_wave_curves(ctx, args.out)
    print(args.out)
    return 0


def cmd_ramp(args):
    cfg = _load(args)
    ctx = cfg.build_context()
    theta = cfg.duct_table["theta_minus"] if args.side == "lower" \
        else cfg.duct_table["theta_plus"]
    sol = solve_ramp(ctx, theta, args.side)
    rec = sol.as_dict()
    if args.sweep:
        angs = np.linspace(-np.pi / 2 * 0.98 if args.side == "lower"
                           else theta, theta if args.side == "lower"
                           else np.pi / 2 * 0.98, args.sweep)
        sweep = []
        for a in sorted(angs):
            st = sol.state_at_angle(a) if _angle_in_range(sol, a) else None
            if st is None:
                sweep.append({"angle": a, "vacuum": True})
            else:
                sweep.append({"angle": a, "u": st.u, "v": st.v,
                              "tau": st.tau})
        rec["sweep"] = sweep
    print(json.dumps(rec, indent=1, sort_keys=True))
    return 0


def _angle_in_range(sol, ang):
    los = [min(s.angle_lo, s.angle_hi) for s in sol.sectors]
    his = [max(s.angle_lo, s.angle_hi) for s in sol.sectors]
    return min(los) - 1e-12 <= ang <= max(his) + 1e-12


def cmd_duct(args):
    cfg = _load(args)
    ctx = cfg.build_context()
    params = cfg.build_params()
    sol = run_duct(ctx, params)
    run_dir = args.out or os.path.join(run_root(), "duct")
    manifest = write_run_dir(run_dir, cfg, ctx, sol, config_to_toml(cfg))
    summary = {
        "run_dir": run_dir,
        "interaction": manifest["interaction"]["pair"],
        "cycles_run": manifest["cycles_run"],
        "has_vacuum": manifest["has_vacuum"],
        "regions": len(manifest["regions"]),
        "residuals": manifest["residuals"],
    }
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def cmd_case_atlas(args):
    cfg = _load(args)
    ctx = cfg.build_context()
    rec = case_atlas(ctx, cfg.build_params())
    print(json.dumps(rec, indent=1, sort_keys=True))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="bztduct",
        description="Characteristics-based solver for supersonic duct "
                    "flow of fluids with nonconvex equations of state")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eos-check", help="verify the law and print "
                                         "landmark volumes")
    _add_common(p)
    p.set_defaults(fn=cmd_eos_check)

    p = sub.add_parser("shock", help="solve one oblique shock")
    _add_common(p)
    p.add_argument("--tau-down", type=float, required=True, dest="tau_down")
    p.add_argument("--family", type=int, choices=(1, 2), default=2)
    p.add_argument("--u", type=float, default=None,
                   help="upstream velocity x-component (default: inlet)")
    p.add_argument("--v", type=float, default=0.0)
    p.set_defaults(fn=cmd_shock)

    p = sub.add_parser("wave-curve", help="dump both wave curves as CSV")
    _add_common(p)
    p.add_argument("--out", default="wave_curves.csv")
    p.set_defaults(fn=cmd_wave_curve)

    p = sub.add_parser("ramp", help="corner solution sectors as JSON")
    _add_common(p)
    p.add_argument("--side", choices=("lower", "upper"), default="lower")
    p.add_argument("--sweep", type=int, default=0,
                   help="emit an angular state sweep of this many rays")
    p.set_defaults(fn=cmd_ramp)

    p = sub.add_parser("duct", help="full duct run into a run directory")
    _add_common(p)
    p.add_argument("--out", default=None, help="run directory "
                   "(default: $BZTDUCT_RUN_ROOT/duct)")
    p.set_defaults(fn=cmd_duct)

    p = sub.add_parser("case-atlas", help="classify the corner pair")
    _add_common(p)
    p.set_defaults(fn=cmd_case_atlas)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except _SOLVER_ERRORS as err:
        print(f"solver abort ({type(err).__name__}): {err}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
