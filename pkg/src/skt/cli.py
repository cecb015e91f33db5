"""Command line entry point.

Exit codes: 0 success, 2 config parse error, 3 validation error (including
inadmissible coefficients), 4 non-convergence, 5 inequality violation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .attractor import ensemble, random_state, write_summary_csv
from .coefficients import check_admissibility, require_solvable
from .config import ConfigParseError, load_config
from .diagnostics import (GronwallInput, accumulate_bounds, discrete_gronwall,
                          write_ledger_csv)
from .errors import (LinearSolveFailure, NonConvergence, PreconditionViolation,
                     UnboundedReaction, ValidationError)
from .grid import State, format_float, read_snapshot, write_snapshot
from .stepper import run

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NONCONVERGENCE = 4
EXIT_VIOLATION = 5


def _progress(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def initial_state(cfg, base_dir="."):
    """Initial state described by ``cfg.initial``; snapshot paths resolve against ``base_dir``."""
    g = cfg.grid
    ini = cfg.initial
    if ini.kind == "constant":
        return State.constant(g, ini.u, ini.v)
    if ini.kind == "random":
        return random_state(g, ini.amplitude, cfg.seed)
    fields = []
    for path in (ini.u_path, ini.v_path):
        f, fg = read_snapshot(os.path.join(base_dir, path))
        if fg.shape != g.shape:
            raise ValidationError(f"initial: snapshot {path} does not match the grid")
        fields.append(f)
    return State(*fields)


def cmd_check(args):
    cfg = _load(args)
    rep = check_admissibility(cfg.coefficients)
    print(f"admissible = {str(rep.admissible).lower()}")
    print(f"alpha = {format_float(rep.alpha)}")
    print(f"d0 = {format_float(rep.d0)}")
    print(f"margin = {format_float(rep.margin)}")
    print(f"violations = {', '.join(rep.violations) if rep.violations else 'none'}")
    return EXIT_OK if rep.admissible else EXIT_VALIDATION


def _output_dir(cfg, args):
    out = args.output or cfg.output
    if not os.path.isabs(out):
        out = os.path.join(os.path.dirname(os.path.abspath(args.config)), out)
    os.makedirs(out, exist_ok=True)
    return out


def cmd_run(args):
    cfg = _load(args)
    c, g, scheme = cfg.coefficients, cfg.grid, cfg.scheme
    require_solvable(c)
    s0 = initial_state(cfg, os.path.dirname(os.path.abspath(args.config)))
    out = _output_dir(cfg, args)
    _progress(args, f"run: {int(round(cfg.T / scheme.k))} steps on grid {g.shape}")
    traj = run(s0, cfg.T, c, g, scheme)
    ledger = accumulate_bounds(traj, c, g, scheme)
    write_ledger_csv(os.path.join(out, "ledger.csv"), ledger)
    write_snapshot(os.path.join(out, "final_u.snap"), traj.states[-1].u, g)
    write_snapshot(os.path.join(out, "final_v.snap"), traj.states[-1].v, g)
    min_value = min((min(r.min_u, r.min_v) for r in traj.reports), default=0.0)
    positivity_ok = min_value >= -scheme.positivity_tol
    energy_ok = all(r.slack_energy >= -10 * scheme.nonlinear_tol for r in ledger.rows)
    summary = {key: val for key, val in ledger.summary.items()}
    summary.update({
        "steps": len(traj.reports),
        "T": traj.times[-1],
        "k": scheme.k,
        "seed": cfg.seed,
        "min_value": min_value,
        "clamp_mass": traj.clamp_mass,
        "positivity_ok": positivity_ok,
        "energy_ok": energy_ok,
    })
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _progress(args, f"run: done, min slack {summary['min_slack_energy']!r}")
    return EXIT_OK if (positivity_ok and energy_ok) else EXIT_VIOLATION


def cmd_ensemble(args):
    cfg = _load(args)
    c, g, scheme = cfg.coefficients, cfg.grid, cfg.scheme
    require_solvable(c)
    if cfg.initial.kind != "random":
        raise ValidationError("initial.kind: ensemble needs kind = random")
    if args.members < 1:
        raise ValidationError("--members: must be >= 1")
    if not args.r > 1:
        raise ValidationError("--r: must be > 1")
    seeds = [cfg.seed + i for i in range(args.members)]
    initials = [random_state(g, cfg.initial.amplitude, s) for s in seeds]
    out = _output_dir(cfg, args)
    _progress(args, f"ensemble: {args.members} members to T = {cfg.T!r}")
    res = ensemble(initials, cfg.T, c, g, scheme, r=args.r, seeds=seeds,
                   max_workers=args.workers)
    write_summary_csv(os.path.join(out, "ensemble.csv"), res)
    if res.hull_u is not None:
        write_snapshot(os.path.join(out, "hull_u.snap"), res.hull_u, g)
        write_snapshot(os.path.join(out, "hull_v.snap"), res.hull_v, g)
    print(f"alpha1 = {format_float(res.ball.alpha1)}")
    print(f"alpha2 = {format_float(res.ball.alpha2)}")
    print(f"radius_sq = {format_float(res.ball.radius_sq)}")
    print(f"hull_sup = {format_float(res.hull_sup)}")
    print(f"violations = {res.total_violations}")
    if any(m.error for m in res.members):
        return EXIT_NONCONVERGENCE
    return EXIT_OK if res.total_violations == 0 else EXIT_VIOLATION


def cmd_gronwall(args):
    gin = GronwallInput(a0=args.a0, tau=[args.tau] * args.n, lam=[args.lam] * (args.n + 1),
                        g=[args.g] * args.n, theta=args.theta)
    for n, A in enumerate(discrete_gronwall(gin)):
        print(f"{n} {format_float(A)}")
    return EXIT_OK


def build_parser():
    # Global flags are accepted before or after the subcommand; SUPPRESS keeps the
    # subparser from overwriting a value given before it.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seed")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="suppress progress lines")
    parser = argparse.ArgumentParser(prog="skt", parents=[common],
                                     description="SKT cross-diffusion solver and checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="report admissibility and alpha")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", parents=[common], help="run and write ledger, snapshots, summary")
    p.add_argument("config")
    p.add_argument("--output", default=None, help="override the config output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ensemble", parents=[common], help="absorbing-ball ensemble")
    p.add_argument("config")
    p.add_argument("--members", type=int, default=16)
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("gronwall", parents=[common], help="print the discrete Gronwall bound")
    p.add_argument("--a0", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_gronwall)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed = getattr(args, "seed", None)
    args.quiet = getattr(args, "quiet", False)
    try:
        return args.func(args)
    except ConfigParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, UnboundedReaction, PreconditionViolation) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NonConvergence, LinearSolveFailure) as exc:
        step = getattr(exc, "step", None)
        where = f" at step {step}" if step is not None else ""
        print(f"solver failure{where}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
