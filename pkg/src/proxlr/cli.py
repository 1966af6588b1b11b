"""Command line entry point: ``proxlr bench | gen | solve``."""

import argparse
import json
import logging
import sys

import numpy as np

from .bench import ExperimentSpec, compute_rmse, generate_instance, run_experiment, run_grid, \
    write_reports
from .estimators import FactoredSubgradient, NuclearDCA, ProjectedVariableSmoothing
from .exceptions import ProxLRError
from .operators import load_observation, save_observation

EXIT_OK = 0
EXIT_TRIAL_FAILURE = 2


def _add_data_args(p):
    p.add_argument("--n1", type=int, default=40)
    p.add_argument("--n2", type=int, default=50)
    p.add_argument("--rank", type=int, default=5)
    p.add_argument("--pm", type=float, default=0.5, help="sampling ratio p_m")
    p.add_argument("--pout", type=float, default=0.5, help="outlier ratio")
    p.add_argument("--outliers", choices=("uniform", "cauchy"), default="uniform")
    p.add_argument("--noise-var", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=42)


def _add_solver_args(p):
    p.add_argument("--model", choices=("proposed", "factored", "nuclear"), default="proposed")
    p.add_argument("--loss", default="scad:2.5", help="l1, scad:<theta> or mcp:<theta>")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--step", dest="step_decay", type=float, default=0.95,
                   help="geometric decay of the factored stepsize")
    p.add_argument("--step-base", type=float, default=1.0)
    p.add_argument("--t", dest="t_weight", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--max-time", type=float, default=60.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=None,
                   help="outer iteration cap; pins results independently of machine speed")


def build_parser():
    parser = argparse.ArgumentParser(prog="proxlr",
                                     description="Robust low-rank matrix recovery benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run trials and write a report")
    _add_data_args(bench)
    _add_solver_args(bench)
    bench.add_argument("--trials", type=int, default=10)
    bench.add_argument("--full", action="store_true", help="use 100 trials")
    bench.add_argument("--grid", action="store_true",
                       help="sweep the model's hyperparameter grid")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out", default="report.csv")

    gen = sub.add_parser("gen", help="write an instance fixture")
    _add_data_args(gen)
    gen.add_argument("--trial", type=int, default=0)
    gen.add_argument("--out", required=True, help=".json or binary fixture path")
    gen.add_argument("--truth", help="also save the planted matrix as .npy")

    solve = sub.add_parser("solve", help="run one solver on a fixture")
    solve.add_argument("fixture")
    _add_solver_args(solve)
    solve.add_argument("--rank", type=int, default=5)
    solve.add_argument("--truth", help=".npy planted matrix, to report RMSE")
    solve.add_argument("--out", help="save the estimate as .npy")
    solve.add_argument("--trace", help="write the iteration trace as CSV")
    return parser


def _spec_from_args(args, trials):
    return ExperimentSpec(n1=args.n1, n2=args.n2, rank=args.rank, p_m=args.pm, p_out=args.pout,
                          outliers=args.outliers, noise_var=args.noise_var, model=args.model,
                          loss=args.loss, lam=args.lam, step_base=args.step_base,
                          step_decay=args.step_decay, t_weight=args.t_weight, beta=args.beta,
                          sigma=args.sigma, trials=trials, seed=args.seed,
                          max_time_s=args.max_time, tol_rel=args.tol,
                          max_iters=args.max_iters)


def _cmd_bench(args):
    spec = _spec_from_args(args, 100 if args.full else args.trials)
    if args.grid:
        reports, best = run_grid(spec, n_jobs=args.jobs)
    else:
        reports = [run_experiment(spec, n_jobs=args.jobs)]
        best = None
    paths = write_reports(reports, args.out, best=best)
    for rep in reports:
        print(f"{rep.spec.method_id}: mean RMSE {rep.mean_rmse:.3e}, "
              f"mean runtime {rep.mean_runtime:.2f} s, {len(rep.failures)} failed")
    if best is not None:
        print(f"best: {best.spec.method_id} ({best.mean_rmse:.3e})")
    print("wrote " + ", ".join(paths))
    return EXIT_TRIAL_FAILURE if any(rep.failures for rep in reports) else EXIT_OK


def _cmd_gen(args):
    spec = ExperimentSpec(n1=args.n1, n2=args.n2, rank=args.rank, p_m=args.pm, p_out=args.pout,
                          outliers=args.outliers, noise_var=args.noise_var, trials=1,
                          seed=args.seed)
    obs, truth = generate_instance(spec, args.trial)
    extra = {"seed": args.seed, "trial": args.trial, "rank": args.rank,
             "outlier_idx": truth.outlier_idx.tolist()}
    save_observation(obs, args.out, extra=extra)
    if args.truth:
        np.save(args.truth, truth.x_star)
    print(f"wrote {args.out} (m={obs.m}, outliers={truth.outlier_idx.size})")
    return EXIT_OK


def _estimator_from_args(args):
    if args.model == "proposed":
        est = ProjectedVariableSmoothing(rank=args.rank, sigma=args.sigma, loss=args.loss,
                                         tol=args.tol, max_time=args.max_time)
    elif args.model == "factored":
        est = FactoredSubgradient(rank=args.rank, lam=args.lam, step_base=args.step_base,
                                  step_decay=args.step_decay, tol=args.tol,
                                  max_time=args.max_time)
    else:
        est = NuclearDCA(t_weight=args.t_weight, beta=args.beta, tol=args.tol,
                         max_time=args.max_time)
        if args.max_iters is not None:
            est.set_params(max_dca_iter=args.max_iters)
        return est
    if args.max_iters is not None:
        est.set_params(max_iter=args.max_iters)
    return est


def _cmd_solve(args):
    obs = load_observation(args.fixture)
    est = _estimator_from_args(args).fit(obs.operator, obs.y)
    result = {"model": args.model, "n_iter": est.n_iter_,
              "termination_reason": est.termination_reason_,
              "cost": float(est.cost(obs.operator, obs.y))}
    if args.truth:
        result["rmse"] = compute_rmse(est.coef_, np.load(args.truth))
    if args.out:
        np.save(args.out, est.coef_)
    if args.trace:
        est.trace_.to_csv(args.trace)
    print(json.dumps(result))
    return EXIT_OK


_COMMANDS = {"bench": _cmd_bench, "gen": _cmd_gen, "solve": _cmd_solve}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ProxLRError, ValueError, OSError) as exc:
        print(f"proxlr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
