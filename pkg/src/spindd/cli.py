"""Command-line front end: ``spindd run|check|mms|macrospin``."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .checks import invariant_checks
from .config import PRESETS, RunConfig, load_config
from .coupling import run_simulation
from .errors import SpinDDError
from .llg import LLGScheme
from .output import CsvSink, state_fields, write_snapshot
from .regularization import RegParams
from .studies import MMSKind, run_macrospin, run_mms_study


def _regularize(cfg: RunConfig) -> RunConfig:
    """Switch on the regularized system with the interlayer-preset smoothing lengths."""
    reg = RegParams(eps_x=max(cfg.reg.eps_x, 2 * min(cfg.spec.hx, cfg.spec.hy)),
                    eps_t=max(cfg.reg.eps_t, 2 * cfg.coupling.dt))
    llg = dataclasses.replace(cfg.solvers.llg,
                              eps_exchange_reg=cfg.solvers.llg.eps_exchange_reg or 0.05)
    cfg.reg = reg
    cfg.solvers = dataclasses.replace(cfg.solvers, reg=reg, llg=llg)
    return cfg


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "t_end", None) is not None:
        cfg.coupling = dataclasses.replace(cfg.coupling, t_end=args.t_end)
    if getattr(args, "regularized", False):
        cfg = _regularize(cfg)
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    out_dir = args.out or cfg.output.directory
    os.makedirs(out_dir, exist_ok=True)
    grid, params, state = cfg.build()
    if args.no_validate:
        cfg.coupling = dataclasses.replace(cfg.coupling, validate=False)
    snap_every = cfg.output.snapshot_every if cfg.output.snapshot else 0
    counter = {"n": 0}

    def snapshot(st):
        path = os.path.join(out_dir, f"snap_{counter['n']:06d}.sdml")
        write_snapshot(path, state_fields(st))
        counter["n"] += 1

    with CsvSink(os.path.join(out_dir, cfg.output.csv)) as sink:
        res = run_simulation(state, params, grid, cfg.coupling, cfg.solvers, on_record=sink,
                             on_snapshot=snapshot if snap_every else None,
                             snapshot_every=snap_every)
    last = res.records[-1]
    print(f"{cfg.name or args.config}: t={last.t:.4g} steps={len(res.reports)} "
          f"E_total={last.E_total:.8g} S={last.S:.8g} -> {out_dir}")
    return 0


def cmd_check(args) -> int:
    cfg = _load(args)
    grid, params, state = cfg.build()
    res = run_simulation(state, params, grid, cfg.coupling, cfg.solvers)
    checks = invariant_checks(res, params, grid, cfg.coupling,
                              regularized=cfg.reg.active,
                              energy=cfg.checks.get("energy", True),
                              dissipation=cfg.checks.get("dissipation", False),
                              beta_ok=all(r.beta_ok for r in res.records))
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print("ALL PASS" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 1


def cmd_mms(args) -> int:
    table = run_mms_study(MMSKind(args.kind), tuple(args.ladder), args.min_order)
    print(table)
    return 0


def cmd_macrospin(args) -> int:
    res = run_macrospin(args.kind, dt=args.dt, t_end=args.t_end, alpha=args.alpha,
                        scheme=LLGScheme(args.scheme))
    print(f"{res.kind}: t={res.t_end:.6g} m={res.m_final.tolist()}")
    print(f"  reference={res.reference.tolist()}")
    print(f"  max error={res.error:.3e}  |m3-1|={res.m3_defect:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spindd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, hlp in (("run", cmd_run, "run a configuration file or preset"),
                          ("check", cmd_check, "run and evaluate the invariant suite")):
        q = sub.add_parser(name, help=hlp)
        q.add_argument("config", help=f"path or preset ({', '.join(PRESETS)})")
        q.add_argument("--t-end", type=float, default=None)
        q.add_argument("--regularized", action="store_true",
                       help="switch on space/time smoothing and exchange regularization")
        if name == "run":
            q.add_argument("--out", default=None, help="output directory")
            q.add_argument("--no-validate", action="store_true")
        q.set_defaults(func=fn)

    q = sub.add_parser("mms", help="manufactured-solution convergence study")
    q.add_argument("kind", choices=[k.value for k in MMSKind])
    q.add_argument("--ladder", type=int, nargs="+", default=[32, 64, 128])
    q.add_argument("--min-order", type=float, default=1.5)
    q.set_defaults(func=cmd_mms)

    q = sub.add_parser("macrospin", help="single-spin LLG against closed-form solutions")
    q.add_argument("kind", choices=["precession", "damping"])
    q.add_argument("--dt", type=float, default=1e-3)
    q.add_argument("--t-end", type=float, default=None)
    q.add_argument("--alpha", type=float, default=None)
    q.add_argument("--scheme", choices=[s.value for s in LLGScheme], default="rk2")
    q.set_defaults(func=cmd_macrospin)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpinDDError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if args.command == "check" else 2


if __name__ == "__main__":
    sys.exit(main())
