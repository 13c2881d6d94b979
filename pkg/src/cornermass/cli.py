"""Command-line entry point: cornermass <verb> --config FILE [flags]."""

from __future__ import annotations

import argparse
import json
import os
import sys

VERBS = ("gen", "glue", "reduce", "smooth", "conformal", "mass", "check", "run", "verify")


def threads_from_env(env=None):
    """Thread cap from CORNERMASS_THREADS (None when unset)."""
    env = os.environ if env is None else env
    raw = env.get("CORNERMASS_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise SystemExit(f"CORNERMASS_THREADS must be a positive integer, got {raw!r}")
    return n


def _cap_threads(n):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def build_parser():
    ap = argparse.ArgumentParser(prog="cornermass",
                                 description="Corner smoothing and mass checks for axisymmetric data.")
    sub = ap.add_subparsers(dest="verb", required=True)
    for v in VERBS:
        p = sub.add_parser(v)
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--delta", help="comma-separated decreasing delta values")
        p.add_argument("--grid", help="n_rho,n_z[,r_max[,h_min]]")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tolerance-scale", type=float, dest="tol_scale",
                       help="multiply every acceptance tolerance")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    n = threads_from_env()
    if n is not None:
        _cap_threads(n)
    from .errors import CornerMassError
    from .pipeline import STAGES, Run, applicable, load_config, run, run_stage, verify, \
        write_plot_scripts

    try:
        cfg = load_config(args.config, delta=args.delta, grid=args.grid, out=args.out,
                          tol_scale=args.tol_scale)
        if args.verb == "verify":
            fails = verify(cfg)
            for f in fails:
                print(json.dumps(f, sort_keys=True))
            if not fails:
                print("verify: all checks passed")
            return 1 if fails else 0
        if args.verb == "run":
            man = run(cfg)
        else:
            if not applicable(cfg, args.verb):
                print(f"{args.verb}: not applicable to this config", file=sys.stderr)
                return 2
            r = Run(cfg)
            run_stage(r, args.verb)
            write_plot_scripts(r)
            man = r.manifest
        for st in STAGES:
            if st in man["stages"]:
                print(f"{st}: {json.dumps(man['stages'][st]['verdicts'], sort_keys=True)}")
        return 0
    except CornerMassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
