"""Command-line interface: ``localdim <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .data import read_sample_csv
from .dimension import TOL_POLICIES, dim_envelope, local_dimension
from .errors import ConfigurationError, DomainError, InvariantError, NumericError, PreconditionError
from .jacobian import DEFAULT_SUB_BATCH, jacobian
from .net import load_model
from .shallow import analyze_shallow, dedupe, shallow_bounds_check

log = logging.getLogger("localdim")

SAMPLE_HELP = "sample CSV: one column per example, one row per input coordinate, optional header row"

RANK_SCHEMA = """\
output (JSON): {"rank", "max_rank", "margin", "tolerance", "singular_values"};
with --envelope-eps also "envelope": {"dim_plus", "dim_minus", "epsilon", "samples", "ranks"}.
--jacobian-csv writes the Jacobian, one row per (example, output) pair, header L{l}.w{r}.{c} / L{l}.b{r}."""

SHALLOW_SCHEMA = """\
output (JSON): {"closed_form_rank", "numeric_rank", "seen_regions", "l0_neurons", "l0_linear",
"bounds": {"seen_regions": [lo, hi], "l0": [lo, hi]}, "alpha", "margin", "n", "bounds_hold", "duplicates_dropped"}."""

TOY_SCHEMA = """\
files in --out:
  toy_table.csv   row,U1..U6,count   rows: init, final, from_U1..from_U6 (region distribution
                  of the trained parameters given the initial region; empty cells when no run started there)
  toy_runs.csv    run,w0,b0,v0,c0,region0,w,b,v,c,region,loss,proj_x,proj_y
  toy_table.json  config, rows, counts, diverged
  toy_table.png, toy_limit_points.png (unless --no-plots)"""

SADDLE_SCHEMA = """\
files in --out:
  saddle_seed<S>.csv   iteration,loss,region,local_dim,seen_regions,proj_x,proj_y (one per seed)
  saddle_runs.json     runs manifest: config and one entry per trajectory file
  saddle_summary.json  per seed: first_visits, transitions [iteration, from, to],
                       plateaus [{start, end, loss, region}], qualifies; qualifying_seeds
  saddle_seed<S>.png   (first qualifying seed, unless --no-plots)"""

CPL_SCHEMA = """\
files in --out:
  cpl_runs.csv       run,final_loss,steps,reached,local_dim,closed_form_rank,seen_regions,total_regions,
                     l0_neurons,l0_linear,margin,seen_bounds_ok,l0_bounds_ok
  cpl_sample.csv, cpl_targets.csv (sample CSV format), cpl_models/run<K>.json
  cpl_summary.json   config, success_rate, loss_clusters, max_local_dim, max_seen_regions, bound flags
  cpl_local_dim_vs_loss.png, cpl_seen_regions_vs_loss.png, cpl_predictions.png (unless --no-plots)"""

SWEEP_SCHEMA = """\
files in --out:
  {name}.csv   seed,width,epoch,n_params,max_rank,rank_train,rank_test,train_loss,train_error,test_error{extra}
  {name}.json  config and summary
  {name}_*.png (unless --no-plots)"""


def _common(p: argparse.ArgumentParser, out_default: str | None = None) -> None:
    p.add_argument("--seed", type=int, default=None, help="base random seed")
    p.add_argument("--out", default=out_default, help="output path (directory for experiments)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    p.add_argument("--tol-policy", choices=sorted(TOL_POLICIES), default="spectral",
                   help="singular-value cut-off for the numerical rank")
    p.add_argument("--sub-batch", type=int, default=DEFAULT_SUB_BATCH,
                   help="examples per Jacobian block (bounds peak memory)")
    p.add_argument("--no-plots", action="store_true", help="write CSV/JSON only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localdim", description="Local dimension of ReLU networks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter

    p = sub.add_parser("rank", help="local dimension of a saved model on a sample", epilog=RANK_SCHEMA,
                       formatter_class=fmt)
    p.add_argument("--model", required=True, help="model JSON {widths, out_act, weights, biases}")
    p.add_argument("--sample", required=True, help=SAMPLE_HELP)
    p.add_argument("--envelope-eps", type=float, default=None, help="also estimate dim+/dim- in this radius")
    p.add_argument("--envelope-samples", type=int, default=100)
    p.add_argument("--jacobian-csv", default=None, help="dump the Jacobian to this CSV file")
    _common(p)

    p = sub.add_parser("shallow-analyze", help="closed-form analysis of a (1, N1, 1) identity-output model",
                       epilog=SHALLOW_SCHEMA, formatter_class=fmt)
    p.add_argument("--model", required=True)
    p.add_argument("--sample", required=True, help=SAMPLE_HELP + "; duplicates are dropped with a warning")
    _common(p)

    p = sub.add_parser("toy-table", help="region statistics of GD on the (1,1,1) example",
                       epilog=TOY_SCHEMA, formatter_class=fmt)
    p.add_argument("--runs", type=int, default=ex.ToyTableConfig.runs)
    p.add_argument("--iters", type=int, default=ex.ToyTableConfig.iters)
    p.add_argument("--lr", type=float, default=ex.ToyTableConfig.lr)
    p.add_argument("--targets", type=float, nargs=3, default=ex.ToyTableConfig.targets)
    _common(p, "results/toy-table")

    p = sub.add_parser("saddle", help="saddle-to-saddle trajectories on the (1,1,1) example",
                       epilog=SADDLE_SCHEMA, formatter_class=fmt)
    p.add_argument("--n-seeds", type=int, default=ex.SaddleConfig.n_seeds)
    p.add_argument("--iters", type=int, default=ex.SaddleConfig.iters)
    p.add_argument("--lr", type=float, default=ex.SaddleConfig.lr)
    p.add_argument("--targets", type=float, nargs=3, default=ex.SaddleConfig.targets)
    p.add_argument("--window", type=int, default=ex.SaddleConfig.window, help="plateau window (iterations)")
    p.add_argument("--rel-drop", type=float, default=ex.SaddleConfig.rel_drop, help="plateau relative change")
    _common(p, "results/saddle")

    p = sub.add_parser("cpl", help="recover a piecewise-linear function with a shallow net",
                       epilog=CPL_SCHEMA, formatter_class=fmt)
    p.add_argument("--runs", type=int, default=ex.CplConfig.runs)
    p.add_argument("--width", type=int, default=ex.CplConfig.width)
    p.add_argument("--n-samples", type=int, default=ex.CplConfig.n_samples)
    p.add_argument("--data-seed", type=int, default=ex.CplConfig.data_seed)
    p.add_argument("--max-steps", type=int, default=ex.CplConfig.max_steps)
    p.add_argument("--lr", type=float, default=ex.CplConfig.lr)
    p.add_argument("--stop-loss", type=float, default=ex.CplConfig.stop_loss)
    p.add_argument("--grid", type=int, default=ex.CplConfig.grid, help="grid points for the total region count")
    _common(p, "results/cpl")

    for name, extra, help_ in (("width-sweep", ",mnist_max_rank", "ranks after training across widths"),
                               ("epoch-sweep", "", "ranks during training across seeds")):
        p = sub.add_parser(name, help=help_, formatter_class=fmt,
                           epilog=SWEEP_SCHEMA.format(name=name.replace("-", "_"), extra=extra))
        if name == "width-sweep":
            p.add_argument("--widths", type=int, nargs="+", default=list(ex.SweepConfig.widths))
            p.add_argument("--epochs", type=int, default=ex.SweepConfig.epochs)
        else:
            p.add_argument("--width", type=int, default=ex.SweepConfig.width)
            p.add_argument("--n-seeds", type=int, default=ex.SweepConfig.n_seeds)
            p.add_argument("--record-epochs", type=int, nargs="+", default=list(ex.SweepConfig.record_epochs))
        p.add_argument("--n-train", type=int, default=ex.SweepConfig.n_train)
        p.add_argument("--n-test", type=int, default=ex.SweepConfig.n_test)
        p.add_argument("--spread", type=float, default=ex.SweepConfig.spread, help="blob standard deviation")
        p.add_argument("--lr", type=float, default=ex.SweepConfig.lr)
        p.add_argument("--batch-size", type=int, default=ex.SweepConfig.batch_size)
        p.add_argument("--data-dir", default=None, help="directory with IDX train/t10k files instead of blobs")
        _common(p, f"results/{name}")
    return parser


def _seed(args, default: int) -> int:
    return default if args.seed is None else args.seed


def _load(args):
    arch, params = load_model(args.model)
    X = read_sample_csv(args.sample)
    return arch, params, X


def cmd_rank(args) -> dict:
    arch, params, X = _load(args)
    report = local_dimension(arch, params, X, args.tol_policy, sub_batch=args.sub_batch)
    doc = report.to_dict()
    if args.envelope_eps is not None:
        env = dim_envelope(arch, params, X, args.envelope_eps, args.envelope_samples, args.tol_policy,
                           seed=_seed(args, 0))
        doc["envelope"] = env.to_dict()
    if args.jacobian_csv:
        jacobian(arch, params, X, sub_batch=args.sub_batch).to_csv(args.jacobian_csv)
    return doc


def cmd_shallow(args) -> dict:
    arch, params, X = _load(args)
    if X.shape[0] != 1:
        raise ConfigurationError("shallow-analyze needs a one-dimensional sample")
    values, dropped = dedupe(X[0])
    if dropped:
        log.warning("dropped %d duplicate sample value(s); the rank is unaffected", dropped)
    analysis = analyze_shallow(arch, params, values)
    doc = analysis.to_dict()
    doc["bounds_hold"] = shallow_bounds_check(analysis)
    doc["duplicates_dropped"] = dropped
    return doc


def cmd_toy_table(args) -> dict:
    cfg = ex.ToyTableConfig(args.runs, args.iters, args.lr, tuple(args.targets), _seed(args, 0))
    res = ex.run_toy_table(cfg, args.out, plots=not args.no_plots)
    return {name: [None if np.isnan(v) else round(float(v), 4) for v in res.table[i]]
            for i, name in enumerate(ex.TOY_TABLE_ROWS)}


def cmd_saddle(args) -> dict:
    cfg = ex.SaddleConfig(seed=_seed(args, ex.SaddleConfig.seed), n_seeds=args.n_seeds, iters=args.iters,
                          lr=args.lr, targets=tuple(args.targets), window=args.window, rel_drop=args.rel_drop)
    runs = ex.run_saddle(cfg, args.out, plots=not args.no_plots, jobs=args.jobs)
    return {"qualifying_seeds": [r.seed for r in runs if r.qualifies],
            "seeds_visiting_4_5_6": [r.seed for r in runs if r.visits_in_order]}


def cmd_cpl(args) -> dict:
    cfg = ex.CplConfig(runs=args.runs, seed=_seed(args, 0), width=args.width, n_samples=args.n_samples,
                       data_seed=args.data_seed, lr=args.lr, max_steps=args.max_steps, stop_loss=args.stop_loss,
                       grid=args.grid)
    res = ex.run_cpl_recovery(cfg, args.out, plots=not args.no_plots)
    return {"success_rate": res.success_rate, "loss_clusters": res.loss_clusters(),
            "max_local_dim": max(r.local_dim for r in res.runs),
            "max_seen_regions": max(r.seen_regions for r in res.runs)}


def _sweep_config(args, **kw) -> ex.SweepConfig:
    return replace(ex.SweepConfig(), seed=_seed(args, 0), n_train=args.n_train, n_test=args.n_test,
                   spread=args.spread, lr=args.lr, batch_size=args.batch_size, data_dir=args.data_dir,
                   tol_policy=args.tol_policy, sub_batch=args.sub_batch, **kw)


def cmd_width_sweep(args) -> list:
    cfg = _sweep_config(args, widths=tuple(args.widths), epochs=args.epochs)
    rows = ex.run_width_sweep(cfg, args.out, plots=not args.no_plots, jobs=args.jobs)
    return [{k: r[k] for k in ("width", "max_rank", "rank_train", "rank_test", "test_error")} for r in rows]


def cmd_epoch_sweep(args) -> dict:
    cfg = _sweep_config(args, width=args.width, n_seeds=args.n_seeds, record_epochs=tuple(sorted(args.record_epochs)))
    res = ex.run_epoch_sweep(cfg, args.out, plots=not args.no_plots, jobs=args.jobs)
    dec = res.decreased()
    return {"rank_train_decreased": sum(dec.values()), "seeds": len(dec)}


COMMANDS = {
    "rank": cmd_rank,
    "shallow-analyze": cmd_shallow,
    "toy-table": cmd_toy_table,
    "saddle": cmd_saddle,
    "cpl": cmd_cpl,
    "width-sweep": cmd_width_sweep,
    "epoch-sweep": cmd_epoch_sweep,
}

ERRORS = (ConfigurationError, DomainError, PreconditionError, NumericError, InvariantError, OSError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        doc = COMMANDS[args.command](args)
    except ERRORS as exc:
        print(f"localdim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(doc, indent=2, default=ex._json_default)
    if args.command in ("rank", "shallow-analyze") and args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
