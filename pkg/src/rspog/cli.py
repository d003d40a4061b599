"""Command-line entry point: ``rspog <subcommand> --config FILE [options]``.

Exit codes: 0 success, 1 computation or validation failure, 2 configuration
or usage error.  The output directory defaults to ``$RSPOG_OUT`` when set.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .coverage import DEFAULT_RAYS, ResolutionTooLow, coverage_map
from .degree import global_mean_degree, local_density, mean_degree_map
from .distribution import MODES, aggregate_distribution, aggregate_fast
from .environment import ConfigError, build_environment, load_config, validate_zone_spacing
from .io import config_digest, fmt, write_manifest, write_node_map
from .montecarlo import (
    RNG_ALGORITHM,
    SimulationConfig,
    compare,
    run_occupancy,
    snapshot_degree,
)

REFERENCE_NODE_LIMIT = 2500
TV_TOLERANCE = 0.02
FAST_REFERENCE_TOLERANCE = 1e-12


class GridTooLargeForReference(RuntimeError):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rspog", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rspog {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="environment config (JSON)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--threads", type=int, default=1)

    def mode(sp):
        sp.add_argument("--mode", choices=MODES, default="per-trip")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--fast", dest="fast", action="store_true", default=True)
        g.add_argument("--reference", dest="fast", action="store_false")

    sp = sub.add_parser("distribution", help="stationary presence distribution")
    common(sp)
    mode(sp)
    sp.add_argument("--edges", action="store_true", help="also write per-edge probabilities")

    sp = sub.add_parser("coverage", help="line-of-sight coverage map")
    common(sp)
    sp.add_argument("--rays", type=int, default=DEFAULT_RAYS)

    sp = sub.add_parser("degree", help="mean degree map")
    common(sp)
    mode(sp)
    sp.add_argument("--rays", type=int, default=DEFAULT_RAYS)
    sp.add_argument("--self-exclusion", action="store_true")

    sp = sub.add_parser("simulate", help="Monte Carlo occupancy (and snapshot degrees)")
    common(sp)
    sp.add_argument("--mode", choices=MODES, default="per-trip")
    sp.add_argument("--trips", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--snapshots", type=int, default=0)

    sp = sub.add_parser("validate", help="analytic vs Monte Carlo and fast vs reference")
    common(sp)
    sp.add_argument("--mode", choices=MODES, default="per-trip")
    sp.add_argument("--empirical-mode", choices=MODES, default=None,
                    help="mode of the simulated occupancy (defaults to --mode)")
    sp.add_argument("--trips", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)
    return p


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("RSPOG_OUT") or "rspog-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _distribution(env, args):
    if args.fast:
        return aggregate_fast(env, args.mode, edges=getattr(args, "edges", False),
                              threads=args.threads)
    return aggregate_distribution(env, args.mode, edges=getattr(args, "edges", False))


def _write_edges(path, env, dist):
    a = env.cell
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x1_m,y1_m,x2_m,y2_m,probability\n")
        for (u, v), p in sorted(dist.edge_prob.items()):
            fh.write(",".join(fmt(x) for x in (u[0] * a, u[1] * a, v[0] * a, v[1] * a, p)) + "\n")
    return Path(path)


def cmd_distribution(env, args, out):
    dist = _distribution(env, args)
    files = write_node_map(out, "distribution", env, dist.prob, "probability")
    if dist.edge_prob is not None:
        files.append(_write_edges(out / "distribution_edges.csv", env, dist))
    return files, {"mode": args.mode, "fast": args.fast}


def cmd_coverage(env, args, out):
    cov = coverage_map(env, K=args.rays)
    files = write_node_map(out, "coverage", env, cov.area, "coverage_m2")
    for w in validate_zone_spacing(env):
        print(f"warning: {w}", file=sys.stderr)
    for node, case, numeric, analytic in cov.diagnostics:
        print(f"diagnostic: node {tuple(node)} {case}: numeric {numeric:.6g} vs closed form "
              f"{analytic:.6g}", file=sys.stderr)
    return files, {"rays": args.rays}


def cmd_degree(env, args, out):
    dist = _distribution(env, args)
    cov = coverage_map(env, K=args.rays)
    N = env.config.station_count
    dens = local_density(dist, N, env.cell)
    deg = mean_degree_map(cov, dens, N=N, self_exclusion=args.self_exclusion)
    deg = dataclasses.replace(deg, global_mean=global_mean_degree(dist, deg))
    files = write_node_map(out, "degree_presence", env, dist.prob, "probability")
    files += write_node_map(out, "degree_coverage", env, cov.area, "coverage_m2")[:2]
    files += write_node_map(out, "degree", env, deg.degree, "degree")[:2]
    summary = out / "degree_summary.txt"
    summary.write_text(deg.summary())
    files.append(summary)
    sys.stdout.write(deg.summary())
    return files, {"mode": args.mode, "fast": args.fast, "rays": args.rays,
                   "self_exclusion": args.self_exclusion}


def cmd_simulate(env, args, out):
    cfg = SimulationConfig(trips=args.trips, stations=env.config.station_count,
                           seed=args.seed, mode=args.mode,
                           snapshots=max(args.snapshots, 1))
    emp = run_occupancy(env, cfg, threads=args.threads)
    files = write_node_map(out, "empirical", env, emp.prob, "probability")
    files += write_node_map(out, "empirical_stderr", env, emp.stderr, "stderr")[:2]
    params = {"mode": args.mode, "trips": args.trips, "seed": args.seed,
              "rng": RNG_ALGORITHM}
    if args.snapshots > 0:
        snap = snapshot_degree(env, cfg, threads=args.threads)
        files += write_node_map(out, "empirical_degree", env,
                                np.nan_to_num(snap.node_mean), "degree")[:2]
        text = out / "empirical_degree_summary.txt"
        text.write_text(f"global_mean_degree: {fmt(snap.global_mean)}\n"
                        f"snapshots: {snap.snapshots}\n")
        files.append(text)
        params["snapshots"] = args.snapshots
    return files, params


def cmd_validate(env, args, out):
    if env.n_free > REFERENCE_NODE_LIMIT:
        raise GridTooLargeForReference(
            f"{env.n_free} free nodes exceeds the reference limit of {REFERENCE_NODE_LIMIT}")
    emp_mode = args.empirical_mode or args.mode
    ref = aggregate_distribution(env, args.mode)
    fast = aggregate_fast(env, args.mode, threads=args.threads)
    emp = run_occupancy(env, SimulationConfig(trips=args.trips, seed=args.seed,
                                              mode=emp_mode), threads=args.threads)
    report = compare(ref, emp)
    max_delta = float(np.abs(ref.prob - fast.prob).max())
    ok = report.tv_distance <= TV_TOLERANCE and max_delta <= FAST_REFERENCE_TOLERANCE
    text = (report.to_text()
            + f"fast_vs_reference_max_delta: {max_delta:.6g}\n"
            + f"analytic_mode: {args.mode}\nempirical_mode: {emp_mode}\n"
            + f"result: {'PASS' if ok else 'FAIL'}\n")
    sys.stdout.write(text)
    report_path = out / "validate_report.txt"
    report_path.write_text(text)
    delta_path = out / "validate_delta.csv"
    with open(delta_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x_m,y_m,analytic,empirical,delta,z\n")
        for k, n in enumerate(env.nodes):
            x, y = env.position(n)
            fh.write(",".join(fmt(v) for v in (x, y, ref.prob[k], emp.prob[k],
                                               report.delta[k], report.z_scores[k])) + "\n")
    params = {"mode": args.mode, "empirical_mode": emp_mode, "trips": args.trips,
              "seed": args.seed, "rng": RNG_ALGORITHM}
    return [report_path, delta_path], params, (0 if ok else 1)


COMMANDS = {
    "distribution": cmd_distribution,
    "coverage": cmd_coverage,
    "degree": cmd_degree,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = Path(args.config).read_bytes()
        config = load_config(args.config)
        env = build_environment(config)
        if getattr(args, "rays", DEFAULT_RAYS) < 64:
            raise ResolutionTooLow(f"--rays must be at least 64, got {args.rays}")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except (ConfigError, ResolutionTooLow, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = _out_dir(args)
    start = time.perf_counter()
    try:
        result = COMMANDS[args.command](env, args, out)
    except GridTooLargeForReference as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    status = 0
    if len(result) == 3:
        files, params, status = result
    else:
        files, params = result
    params = dict(params, threads=args.threads)
    write_manifest(out / f"{args.command}_manifest.json",
                   digest=config_digest(raw), version=__version__,
                   subcommand=args.command, parameters=params,
                   timing={"elapsed": round(time.perf_counter() - start, 3)},
                   outputs=files)
    return status


if __name__ == "__main__":
    sys.exit(main())
