"""Command line front end.

Subcommands: solve (one instance end to end), toy2d (contamination and
radius sweeps on the synthetic plane shapes), bench (subgraph alignment
table), selfcheck (built-in oracle suites). Exit codes: 0 success, 1 bad
input, 2 solver ran out of budget, 3 selfcheck failure.

Flags override values from an optional JSON --config file, which in turn
overrides the built-in defaults. RGW_LOG={error,warn,info,debug} sets
verbosity.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .bpalm import RgwParams, solve_rgw
from .errors import RgwError
from .graphbench import (
    BenchmarkConfig,
    adjacency_cost,
    degree_marginal,
    matching_accuracy,
    run_alignment_benchmark,
    AlignmentInstance,
)
from .gwkernel import cost_matrix, pairwise_distances
from .ioformats import (
    load_dense_matrix,
    load_edge_list,
    load_point_cloud,
    load_weights,
    write_bench_csv,
    write_rho_csv,
    write_solution,
    write_sweep_csv,
)
from .measures import prob_vector
from .pisolver import SinkhornSettings
from .robustness import (
    OUTLIER_BOX,
    bound_vs_rho,
    contamination_sweep,
    overlapping_instance,
    rotate_points,
    sample_curve_points,
)

log = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}

# flag destinations that may come from the JSON config file
_CONFIG_KEYS = (
    "rho1", "rho2", "tau1", "tau2", "step_t", "step_c", "step_r",
    "max_iters", "tol", "step_mode", "seed", "marginals", "jobs",
)


def _float_list(text):
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated number list, got %r" % text)
    if not vals:
        raise argparse.ArgumentTypeError("empty list %r" % text)
    return vals


def _int_list(text):
    try:
        vals = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated integer list, got %r" % text)
    if not vals:
        raise argparse.ArgumentTypeError("empty list %r" % text)
    return vals


def _add_solver_flags(sp):
    sp.add_argument("--rho1", type=float, default=None, help="source ambiguity radius")
    sp.add_argument("--rho2", type=float, default=None, help="target ambiguity radius")
    sp.add_argument("--tau1", type=float, default=None, help="source marginal penalty weight")
    sp.add_argument("--tau2", type=float, default=None, help="target marginal penalty weight")
    sp.add_argument("--step-t", type=float, default=None, dest="step_t", help="plan step knob")
    sp.add_argument("--step-c", type=float, default=None, dest="step_c", help="alpha step knob")
    sp.add_argument("--step-r", type=float, default=None, dest="step_r", help="beta step knob")
    sp.add_argument("--max-iters", type=int, default=None, dest="max_iters")
    sp.add_argument("--tol", type=float, default=None, help="outer stopping tolerance")
    sp.add_argument("--step-mode", choices=["practical", "theoretical"], default=None,
                    dest="step_mode")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--config", default=None, help="JSON file with flag defaults")
    sp.add_argument("--jobs", type=int, default=None, help="worker pool size")


def _merge_config(args):
    if getattr(args, "config", None) is None:
        return args
    with open(args.config, "r", encoding="ascii") as f:
        cfg = json.load(f)
    unknown = set(cfg) - set(_CONFIG_KEYS)
    if unknown:
        raise RgwError("config keys not recognized: %s" % ", ".join(sorted(unknown)))
    for key, value in cfg.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def _build_params(args, max_iters_default=2000, sinkhorn=None):
    kwargs = {}
    for attr, field in (("rho1", "rho1"), ("rho2", "rho2"), ("tau1", "tau1"),
                        ("tau2", "tau2"), ("step_t", "t"), ("step_c", "c"),
                        ("step_r", "r"), ("tol", "outer_tolerance"),
                        ("step_mode", "step_mode")):
        value = getattr(args, attr, None)
        if value is not None:
            kwargs[field] = value
    kwargs["max_outer_iterations"] = (
        args.max_iters if getattr(args, "max_iters", None) is not None else max_iters_default
    )
    if sinkhorn is not None:
        kwargs["sinkhorn"] = sinkhorn
    return RgwParams(**kwargs).validate()


def _load_instance_side(path, kind):
    """Returns (cost matrix, graph or None, point count)."""
    if kind == "edge_list":
        g = load_edge_list(path)
        return adjacency_cost(g), g, g.node_count
    if kind == "point_cloud":
        pts = load_point_cloud(path)
        return pairwise_distances(pts), None, pts.shape[0]
    M = cost_matrix(load_dense_matrix(path))
    return M, None, M.shape[0]


def _resolve_marginal(choice, g, n, weights_path, flag):
    if choice == "degree":
        if g is None:
            raise RgwError("--marginals degree needs edge_list inputs (%s)" % flag)
        return degree_marginal(g)
    if choice == "file":
        if weights_path is None:
            raise RgwError("--marginals file needs %s" % flag)
        return prob_vector(load_weights(weights_path))
    return np.full(n, 1.0 / n)


def cmd_solve(args):
    args = _merge_config(args)
    params = _build_params(args)
    D, g_src, n = _load_instance_side(args.source, args.kind)
    Dbar, g_tgt, m = _load_instance_side(args.target, args.kind)
    mu = _resolve_marginal(args.marginals or "uniform", g_src, n, args.mu_weights, "--mu-weights")
    nu = _resolve_marginal(args.marginals or "uniform", g_tgt, m, args.nu_weights, "--nu-weights")
    pi, alpha, beta, report = solve_rgw(D, Dbar, mu, nu, params=params)
    files = write_solution(args.out, pi, alpha, beta, report, params=params, seed=args.seed)
    for w in report.warnings:
        log.warning("%s", w)
    print("objective %.12e after %d iterations (converged=%s)"
          % (report.objective_trace[-1], report.iterations, report.converged))
    print("wrote %s and %s" % files)
    if args.ground_truth == "identity":
        if n != m:
            raise RgwError("--ground-truth identity needs equal sizes, got %d vs %d" % (n, m))
        ident = AlignmentInstance(
            source=g_src, target=g_tgt, ground_truth=[(i, i) for i in range(n)],
        ) if g_src is not None and g_tgt is not None else None
        if ident is not None:
            acc = matching_accuracy(pi, ident)
        else:
            pred = pi.argmax(axis=1)
            acc = 100.0 * float(np.mean(pred == np.arange(n)))
        print("identity accuracy %.2f" % acc)
    return 0 if report.converged else 2


def cmd_toy2d(args):
    args = _merge_config(args)
    epsilons = args.epsilons
    if any(not 0.0 <= e < 1.0 for e in epsilons):
        raise RgwError("--epsilons values must lie in [0, 1)")
    if any(r < 0.0 for r in args.rhos):
        raise RgwError("--rhos values must be nonnegative")
    if args.n_source < 2 or args.n_target < 2:
        raise RgwError("--n-source and --n-target must be >= 2")
    seed = args.seed if args.seed is not None else 0
    jobs = args.jobs if args.jobs is not None else 1
    # desk-scale budgets; override with --max-iters / --tol
    params = _build_params(
        args, max_iters_default=500,
        sinkhorn=SinkhornSettings(inner_tolerance=1e-6, max_inner_iterations=200),
    )
    balanced_settings = SinkhornSettings(inner_tolerance=1e-7, max_inner_iterations=500)

    source = sample_curve_points(args.n_source, np.random.default_rng([seed, 10]))
    target = rotate_points(
        sample_curve_points(args.n_target, np.random.default_rng([seed, 11])), 0.7)
    rows = contamination_sweep(source, target, OUTLIER_BOX, epsilons, params=params,
                               seed=seed, jobs=jobs, balanced_settings=balanced_settings)
    os.makedirs(args.out, exist_ok=True)
    sweep_path = os.path.join(args.out, "values_vs_epsilon.csv")
    write_sweep_csv(sweep_path, rows)

    inst = overlapping_instance(epsilon=0.2, seed=seed)
    rho_rows = bound_vs_rho(inst, args.rhos, params=params,
                            balanced_settings=balanced_settings)
    rho_path = os.path.join(args.out, "bound_vs_rho.csv")
    write_rho_csv(rho_path, rho_rows)
    print("wrote %s and %s" % (sweep_path, rho_path))
    return 0


def cmd_bench(args):
    args = _merge_config(args)
    seeds = args.seeds if args.seeds is not None else [0, 1, 2, 3, 4]
    config = BenchmarkConfig(
        nodes=args.nodes,
        fractions=args.fractions,
        seeds=seeds,
        params=_build_params(args),
        attachment=args.attachment,
        marginals=args.marginals or "uniform",
        jobs=args.jobs if args.jobs is not None else 1,
    )
    rows = run_alignment_benchmark(config)
    write_bench_csv(args.out, rows)
    print("wrote %s" % args.out)
    print("nodes fraction    rgw_acc    bal_acc")

    def _mean(xs):
        return sum(xs) / len(xs) if xs else float("nan")

    for n in config.nodes:
        for f in config.fractions:
            acc = {"rgw": [], "balanced": []}
            for r in rows:
                if r.nodes == n and r.fraction == f and not np.isnan(r.accuracy):
                    acc[r.method].append(r.accuracy)
            print("%5d %8.3f %10.2f %10.2f" % (n, f, _mean(acc["rgw"]), _mean(acc["balanced"])))
    ok_rows = [r for r in rows if not np.isnan(r.accuracy)]
    return 0 if ok_rows else 1


def cmd_selfcheck(_args):
    from .selfcheck import run_all

    results = run_all()
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print("[%s] %s: %s" % (tag, res.name, res.detail))
        if not res.passed:
            failed += 1
    return 0 if failed == 0 else 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rgw",
        description="Gromov-Wasserstein alignment with KL ambiguity sets on the marginals",
    )
    parser.add_argument("--version", action="version", version="rgw %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one instance and write solution files")
    sp.add_argument("--source", required=True, help="source input file")
    sp.add_argument("--target", required=True, help="target input file")
    sp.add_argument("--kind", choices=["edge_list", "point_cloud", "dense_matrix"],
                    default="edge_list", help="input format for both files")
    sp.add_argument("--out", default="solution", help="output path prefix")
    sp.add_argument("--marginals", choices=["uniform", "degree", "file"], default=None)
    sp.add_argument("--mu-weights", default=None, dest="mu_weights")
    sp.add_argument("--nu-weights", default=None, dest="nu_weights")
    sp.add_argument("--ground-truth", choices=["identity"], default=None, dest="ground_truth")
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("toy2d", help="contamination sweep and bound-vs-radius sweep")
    sp.add_argument("--epsilons", type=_float_list, default=[0.0, 0.05, 0.1, 0.2])
    sp.add_argument("--rhos", type=_float_list, default=[0.0, 0.02, 0.05, 0.1, 0.2, 0.4])
    sp.add_argument("--n-source", type=int, default=60, dest="n_source")
    sp.add_argument("--n-target", type=int, default=80, dest="n_target")
    sp.add_argument("--out", default=".", help="output directory")
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_toy2d)

    sp = sub.add_parser("bench", help="subgraph alignment benchmark table")
    sp.add_argument("--nodes", type=_int_list, default=[100])
    sp.add_argument("--fractions", type=_float_list, default=[0.5])
    sp.add_argument("--seeds", type=_int_list, default=None)
    sp.add_argument("--attachment", type=int, default=2)
    sp.add_argument("--marginals", choices=["uniform", "degree"], default=None)
    sp.add_argument("--out", default="bench.csv", help="output CSV path")
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("selfcheck", help="run the built-in oracle suites")
    sp.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None):
    level = _LOG_LEVELS.get(os.environ.get("RGW_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; that is an input error here
        return 1 if exc.code == 2 else (exc.code or 0)
    try:
        return args.func(args)
    except RgwError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
