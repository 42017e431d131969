"""Command-line front end: single drops, the three sweep campaigns, and a
quick invariant self-check.

Exit codes: 0 success, 1 configuration error, 2 landing failure.
"""
import argparse
import csv
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config, save_config
from .sim import DropScenario, run_drop
from . import campaigns

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2

SCENARIO_FLAGS = ("height", "vx", "vy", "vz", "roll", "pitch", "yaw",
                  "roll_rate", "pitch_rate", "yaw_rate")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vhsip-landing",
        description="Reactive quadruped landing: drop tests and sweep campaigns.")
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--seed", type=int, help="override config seed")
    parser.add_argument("--workers", type=int, help="override worker count")
    parser.add_argument("--out", help="override output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    drop = sub.add_parser("drop", help="run a single drop scenario")
    for flag in SCENARIO_FLAGS:
        drop.add_argument("--" + flag.replace("_", "-"), type=float)
    drop.add_argument("--controller", choices=["lc", "naive"], default="lc")
    drop.add_argument("--no-log", action="store_true",
                      help="skip writing the per-tick CSV")

    sweep = sub.add_parser("sweep", help="run a campaign")
    sweep.add_argument("campaign", choices=["polar", "noise", "angular"])

    sub.add_parser("check", help="run the invariant self-check suite")
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def _prepare_out(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    save_config(cfg, os.path.join(cfg.out_dir, "config.yaml"))


def cmd_drop(cfg, args):
    overrides = {f: getattr(args, f) for f in SCENARIO_FLAGS
                 if getattr(args, f) is not None}
    scenario = DropScenario(seed=cfg.seed, **overrides)
    try:
        scenario.validate(cfg.vhsip.l0)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _prepare_out(cfg)
    out = run_drop(cfg, scenario, naive=(args.controller == "naive"),
                   collect_log=not args.no_log)
    if out.log:
        path = os.path.join(cfg.out_dir, "drop_log.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=sorted(out.log[0]),
                                    lineterminator="\n")
            writer.writeheader()
            writer.writerows(out.log)
    print(f"outcome: {'success' if out.success else 'failure'}"
          + (f" ({out.failure_mode})" if out.failure_mode else ""))
    print(f"touch down: t={out.td_time:.3f} s (detected {out.td_detect_time:.3f} s)")
    print(f"settle: t={out.settle_time:.3f} s  min height {out.min_height:.3f} m  "
          f"max tilt {out.max_tilt:.3f} rad")
    print(f"pivot offset u_o = [{out.u_o[0]:+.3f}, {out.u_o[1]:+.3f}] m")
    return EXIT_OK if out.success else EXIT_FAILED


def cmd_sweep(cfg, args):
    _prepare_out(cfg)
    def progress(key, sub, value):
        print(f"  {key} {'' if sub is None else sub}: {value}", flush=True)
    runner = {"polar": campaigns.sweep_polar,
              "noise": campaigns.sweep_noise,
              "angular": campaigns.sweep_angular}[args.campaign]
    rows = runner(cfg, cfg.out_dir, progress=progress)
    print(f"{args.campaign} sweep: {len(rows)} rows -> {cfg.out_dir}")
    return EXIT_OK


def cmd_check(cfg):
    """Fast self-contained invariant checks (not a replacement for the test
    suite); prints one line per check."""
    from .vhsip import select_stiffness, vertical_reference
    from .ocp import build_rollout, build_cost, optimal_virtual_foot, plan_landing
    from .qp import QpProblem, solve

    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"  [{'ok' if ok else 'FAIL'}] {name}")
        failures += int(not ok)

    rng = np.random.default_rng(0)
    p = cfg.vhsip
    for _ in range(50):
        cz_dot = -float(rng.uniform(0.3, 4.0))
        k, _ = select_stiffness(p, cz_dot)
        vert = vertical_reference(p.with_stiffness(k), cz_dot)
        if np.min(vert.cz) < p.delta_z - 1e-9 or np.any(vert.cz > p.l0 + 1e-9):
            check("vertical reference bounds", False)
            break
    else:
        check("vertical reference bounds", True)

    plan = plan_landing(p, np.array([1.0, -0.5, -2.0]))
    check("terminal velocity ~ 0", float(np.abs(plan.com_vel[-1, :2]).max()) < 1e-3)

    ok = True
    for _ in range(20):
        w2 = rng.uniform(0.0, 60.0, p.N + 1)
        roll = build_rollout(w2, p.Ts, p.N)
        cost = build_cost(roll, 1.0, 1.0, 1e-6)
        x0 = rng.normal(0.0, 1.0, 2)
        u = optimal_virtual_foot(cost, x0)
        grad = 2.0 * (cost.Qu * u + cost.Qxu @ x0)
        ok &= abs(grad) < 1e-8 * max(1.0, abs(cost.Qu))
    check("pivot optimality (zero gradient)", ok)

    ok = True
    for _ in range(30):
        n = int(rng.integers(2, 8))
        A = rng.normal(0.0, 1.0, (n, n))
        H = A @ A.T + np.eye(n)
        q = rng.normal(0.0, 1.0, n)
        C = rng.normal(0.0, 1.0, (2 * n, n))
        lb = rng.normal(-1.0, 1.0, 2 * n)
        sol = solve(QpProblem(H, q, C, lb))
        if sol.status != "solved":
            continue
        slack = C @ sol.z - lb
        g = H @ sol.z + q - C.T @ sol.lam
        ok &= bool(np.min(slack) > -1e-7 and np.max(np.abs(g)) < 1e-6
                   and np.min(sol.lam) > -1e-9 and abs(sol.lam @ slack) < 1e-6)
    check("QP KKT conditions", ok)

    print("all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return EXIT_OK if failures == 0 else EXIT_CONFIG


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigError, FileNotFoundError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "drop":
        return cmd_drop(cfg, args)
    if args.command == "sweep":
        return cmd_sweep(cfg, args)
    return cmd_check(cfg)


if __name__ == "__main__":
    sys.exit(main())
