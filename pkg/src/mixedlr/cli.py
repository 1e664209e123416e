"""Command-line entry point: ``mixedlr <subcommand> ...``.

Exit codes: 0 success, 1 invalid spec or arguments, 2 solver error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .am import AmConfig, run_am
from .bench import ExperimentSpec, compare_table, lemma1_sweep, panel_spec, resolve_radius, run_panel
from .data import perturbed_init, random_truth, sample_instance, write_instance_csv
from .errors import InvalidSpec, MixedLRError, SolverError
from .gd import GdConfig, run_gd, tune_step_size
from .io import read_trace_csv, write_csv, write_trace_csv
from .metrics import DEFAULT_WINDOW_LO, fit_convergence_exponent
from .spectral import GridSpec, spectral_init

log = logging.getLogger("mixedlr")


def _problem_args(p):
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--n", type=int, default=None, help="samples (default 6 d)")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)


def _solver_args(p):
    _problem_args(p)
    p.add_argument("--init", choices=("perturbed", "spectral"), default="perturbed")
    p.add_argument("--radius", default="boundary",
                   help="'boundary', 'boundary*<f>' or an absolute radius")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--target", type=float, default=None, help="stop at this dist to the truth")
    p.add_argument("--grid-points", type=int, default=21)
    p.add_argument("--out", type=Path, required=True, help="trace CSV path")


def _experiment_args(p):
    p.add_argument("--spec", type=Path, help="JSON experiment spec")
    p.add_argument("--d-list", type=int, nargs="+")
    p.add_argument("--trials", type=int)
    p.add_argument("--root-seed", type=int)
    p.add_argument("--init", choices=("perturbed", "spectral"))
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", type=Path, default=Path("."))


def build_parser():
    parser = argparse.ArgumentParser(prog="mixedlr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic instance CSV")
    _problem_args(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("am", help="single alternating-minimization run")
    _solver_args(p)
    p.add_argument("--split", action="store_true", help="fresh sample group per round")

    p = sub.add_parser("gd", help="single gradient-heuristic run")
    _solver_args(p)
    p.add_argument("--gamma", type=float, default=None, help="step size (default: tuned)")

    p = sub.add_parser("rate", help="fit the convergence exponent of a trace CSV")
    p.add_argument("trace", type=Path)
    p.add_argument("--column", default="dist")
    p.add_argument("--window-lo", type=float, default=DEFAULT_WINDOW_LO)
    p.add_argument("--window-hi", type=float, default=None)

    p = sub.add_parser("panel", help="reproduce a figure panel")
    p.add_argument("name", choices=("fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "custom"))
    _experiment_args(p)

    p = sub.add_parser("table1", help="AM vs GD iterations and wall-clock")
    _experiment_args(p)

    p = sub.add_parser("lemma1", help="mismatch-set size against init error")
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--radii", type=float, nargs="+", default=[1.0, 0.5, 0.25, 0.125])
    p.add_argument("--absolute", action="store_true", help="radii are absolute, not boundary multiples")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    return parser


def _make_problem(args):
    n = args.n if args.n is not None else 6 * args.d
    if args.d < 1 or n < 1 or args.k < 1 or args.sigma < 0:
        raise InvalidSpec("need d, n, k >= 1 and sigma >= 0")
    truth = random_truth(args.k, args.d, args.seed, sigma=args.sigma)
    return truth, sample_instance(truth, n, args.seed)


def _make_init(args, truth, inst):
    if args.init == "spectral":
        if args.k != 2:
            raise InvalidSpec("spectral init supports k = 2 only")
        return spectral_init(inst, GridSpec(args.grid_points)), float("nan")
    try:
        radius = resolve_radius(args.radius, truth, inst.n)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc
    return perturbed_init(truth, radius, args.seed), radius


def _meta(args, inst, **extra):
    meta = dict(command=args.command, seed=args.seed, d=inst.d, n=inst.n, K=args.k,
                sigma=args.sigma, init=args.init, radius_policy=args.radius)
    meta.update(extra)
    return meta


def cmd_gen(args):
    _, inst = _make_problem(args)
    write_instance_csv(inst, args.out)
    print(args.out)


def cmd_am(args):
    truth, inst = _make_problem(args)
    init, radius = _make_init(args, truth, inst)
    rounds = args.rounds if args.rounds is not None else 50
    try:
        cfg = AmConfig(max_rounds=rounds, sample_split=args.split,
                       tol=args.tol if args.tol is not None else 1e-12,
                       target_precision=args.target, split_seed=args.seed)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc
    trace = run_am(inst, init, cfg)
    write_trace_csv(trace, args.out, _meta(args, inst, radius=radius, rounds=rounds, split=args.split,
                                           tol=cfg.tol, target=args.target))
    print(f"{trace.rounds} rounds, final dist {trace.dist_to_truth[-1]:.3e}")


def cmd_gd(args):
    truth, inst = _make_problem(args)
    init, radius = _make_init(args, truth, inst)
    gamma = args.gamma if args.gamma is not None else tune_step_size(inst, init)
    rounds = args.rounds if args.rounds is not None else 500
    try:
        cfg = GdConfig(gamma=gamma, max_rounds=rounds,
                       tol=args.tol if args.tol is not None else 0.0, target_precision=args.target)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc
    trace = run_gd(inst, init, cfg)
    write_trace_csv(trace, args.out, _meta(args, inst, radius=radius, rounds=rounds, gamma=gamma,
                                           tol=cfg.tol, target=args.target))
    print(f"gamma {gamma:.6g}, {trace.rounds} rounds, final dist {trace.dist_to_truth[-1]:.3e}")


def cmd_rate(args):
    try:
        columns = read_trace_csv(args.trace)
        seq = columns[args.column]
    except (OSError, KeyError) as exc:
        raise InvalidSpec(f"cannot read column {args.column!r} from {args.trace}: {exc}") from exc
    fit = fit_convergence_exponent(seq, (args.window_lo, args.window_hi))
    print(fit)


def _experiment_spec(args, panel):
    spec = ExperimentSpec.from_json(args.spec) if args.spec else panel_spec(panel)
    if args.spec and spec.panel != panel and panel != "custom":
        spec = replace(spec, panel=panel)
    overrides = {"d_list": args.d_list, "trials": args.trials, "root_seed": args.root_seed,
                 "init": args.init, "workers": args.workers}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        return replace(spec, **overrides)
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(str(exc)) from exc


def cmd_panel(args):
    spec = _experiment_spec(args, args.name)
    result = run_panel(spec, args.out_dir)
    for (d, sigma), fit in result.fits.items():
        print(f"d={d} sigma={sigma:g}: {fit if fit is not None else 'no fit'}")
    failed = [r for r in result.records if r.error]
    if failed:
        log.warning("%d of %d runs reported solver errors", len(failed), len(result.records))


def cmd_table1(args):
    spec = _experiment_spec(args, "table1")
    result = compare_table(spec, args.out_dir)
    for d, algo, its, wall in result.rows:
        print(f"d={d:<5d} {algo}  iterations={its:<6g} wall_clock_s={wall:.4g}")


def cmd_lemma1(args):
    result = lemma1_sweep(args.d, args.n, args.radii, args.trials, args.seed,
                          relative=not args.absolute, out_dir=args.out_dir)
    for dist, frac in zip(result.dists, result.mean_fracs):
        print(f"dist={dist:.4g}  mean |S|/n={frac:.4g}")
    print(f"fit: slope={result.slope:.4g} intercept={result.intercept:.3g} R2={result.r_squared:.4f}")


COMMANDS = {"gen": cmd_gen, "am": cmd_am, "gd": cmd_gd, "rate": cmd_rate,
            "panel": cmd_panel, "table1": cmd_table1, "lemma1": cmd_lemma1}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except SolverError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    except (InvalidSpec, MixedLRError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
