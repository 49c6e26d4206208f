"""Experiment drivers: the (1,1,1) region table and limit points, the
saddle-to-saddle run, piecewise-linear recovery with a shallow net, and the
width / epoch sweeps on synthetic classification data.

Every driver takes a config dataclass, returns a result object and, when
``out_dir`` is given, writes CSV/JSON files (plus PNG figures unless
``plots=False``). Results depend only on the config, including the seed.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import load_idx_classification, make_blobs, write_sample_csv
from .dimension import local_dimension
from .errors import ConfigurationError
from .net import (
    Architecture,
    InitScheme,
    Params,
    activation_pattern,
    forward,
    init_params,
    save_model,
)
from .shallow import TOY_X, analyze_shallow, project_many, seen_regions, toy_region, toy_region_of
from .train import (
    DEFAULT_HOOKS,
    Ensemble,
    LossKind,
    Objective,
    OptimizerConfig,
    detect_plateaus,
    run_trajectory,
    sgd_epoch,
    theta_hook,
)

log = logging.getLogger(__name__)

TOY_ARCH = Architecture((1, 1, 1))
TOY_TABLE_ROWS = ["init", "final"] + [f"from_U{j}" for j in range(1, 7)]


def _map(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Ordered map, optionally over worker processes. Each item carries its own
    seed, so the result does not depend on ``jobs``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _out(out_dir) -> Path | None:
    if out_dir is None:
        return None
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if (isinstance(v, float) and np.isnan(v)) else v for v in row])


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _positive(**knobs) -> None:
    for name, value in knobs.items():
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value}")


# --- region table for the (1,1,1) example -------------------------------------

@dataclass(frozen=True)
class ToyTableConfig:
    runs: int = 10_000
    iters: int = 300
    lr: float = 0.1
    targets: tuple = (0.0, 1.0, 3.0)
    seed: int = 0

    def __post_init__(self):
        _positive(runs=self.runs, iters=self.iters, lr=self.lr)


@dataclass
class ToyTableResult:
    config: ToyTableConfig
    table: np.ndarray  # (8, 6): init row, final row, 6 conditional rows
    counts: np.ndarray  # (8,) number of runs behind each row
    regions0: np.ndarray
    regions_final: np.ndarray
    thetas0: np.ndarray
    thetas_final: np.ndarray
    losses: np.ndarray
    diverged: int

    def row(self, name: str) -> np.ndarray:
        return self.table[TOY_TABLE_ROWS.index(name)]


def toy_initial_params(seed: int, runs: int) -> np.ndarray:
    """Standard-normal initializations; run k draws from generator (seed, k)."""
    return np.array([init_params(TOY_ARCH, InitScheme.STD_NORMAL, np.random.default_rng([seed, k])).flatten()
                     for k in range(runs)])


def region_table(r0: np.ndarray, r1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    table = np.full((8, 6), np.nan)
    counts = np.zeros(8, dtype=np.int64)
    table[0] = np.bincount(r0, minlength=7)[1:] / r0.size
    table[1] = np.bincount(r1, minlength=7)[1:] / r1.size
    counts[:2] = r0.size
    for j in range(1, 7):
        m = r0 == j
        counts[1 + j] = int(m.sum())
        if m.any():
            table[1 + j] = np.bincount(r1[m], minlength=7)[1:] / m.sum()
    return table, counts


def run_toy_table(config: ToyTableConfig = ToyTableConfig(), out_dir=None, plots: bool = True) -> ToyTableResult:
    out = _out(out_dir)
    objective = Objective(LossKind.MSE, np.array(TOY_X), np.array(config.targets, dtype=float))
    thetas0 = toy_initial_params(config.seed, config.runs)
    res = Ensemble(TOY_ARCH, objective).train(thetas0, OptimizerConfig("gd", config.lr), config.iters)
    r0 = toy_region(thetas0[:, 0], thetas0[:, 1])
    r1 = toy_region(res.thetas[:, 0], res.thetas[:, 1])
    table, counts = region_table(r0, r1)
    result = ToyTableResult(config, table, counts, r0, r1, thetas0, res.thetas, res.losses, int(res.diverged.sum()))
    if out is not None:
        _write_toy_table(result, out, plots)
    return result


def _write_toy_table(result: ToyTableResult, out: Path, plots: bool) -> None:
    table = result.table
    _write_csv(out / "toy_table.csv", ["row", "U1", "U2", "U3", "U4", "U5", "U6", "count"],
               ([name, *[float(v) for v in table[i]], int(result.counts[i])] for i, name in enumerate(TOY_TABLE_ROWS)))
    proj = _toy_projections(result.thetas_final)
    rows = []
    for k in range(result.thetas0.shape[0]):
        rows.append([k, *result.thetas0[k].tolist(), int(result.regions0[k]), *result.thetas_final[k].tolist(),
                     int(result.regions_final[k]), float(result.losses[k]), float(proj[k, 0]), float(proj[k, 1])])
    _write_csv(out / "toy_runs.csv",
               ["run", "w0", "b0", "v0", "c0", "region0", "w", "b", "v", "c", "region", "loss", "proj_x", "proj_y"], rows)
    _write_json(out / "toy_table.json", {
        "config": asdict(result.config),
        "rows": {name: [None if np.isnan(v) else float(v) for v in table[i]] for i, name in enumerate(TOY_TABLE_ROWS)},
        "counts": {name: int(result.counts[i]) for i, name in enumerate(TOY_TABLE_ROWS)},
        "diverged": result.diverged,
    })
    if plots:
        from . import plotting

        plotting.toy_table_figure(table, out / "toy_table.png")
        plotting.limit_points_figure(proj, result.regions_final, out / "toy_limit_points.png")


def _toy_projections(thetas: np.ndarray) -> np.ndarray:
    x = np.array(TOY_X)
    w, b, v, c = thetas.T
    outputs = v[:, None] * np.maximum(w[:, None] * x[None, :] + b[:, None], 0.0) + c[:, None]
    return project_many(outputs)


# --- saddle-to-saddle -------------------------------------------------------------

@dataclass(frozen=True)
class SaddleConfig:
    seed: int = 20
    n_seeds: int = 20
    iters: int = 1000
    lr: float = 0.1
    targets: tuple = (1.0, 0.0, 5.0)
    start_region: int = 4
    window: int = 10
    rel_drop: float = 1e-3

    def __post_init__(self):
        _positive(n_seeds=self.n_seeds, iters=self.iters, lr=self.lr, window=self.window, rel_drop=self.rel_drop)
        if self.start_region not in range(1, 7):
            raise ConfigurationError("start_region must be in 1..6")


@dataclass
class SaddleRun:
    seed: int
    trajectory: object
    first_visits: list
    transitions: list  # (iteration, from, to)
    plateaus: list  # dicts with start, end, loss, region

    @property
    def visits_in_order(self) -> bool:
        return [int(r) for r in self.first_visits[:3]] == [4, 5, 6]

    @property
    def qualifies(self) -> bool:
        return self.visits_in_order and len(self.plateaus) >= 2

    @property
    def plateau_regions(self) -> list:
        return [p["region"] for p in self.plateaus]

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "first_visits": self.first_visits,
            "transitions": self.transitions,
            "plateaus": self.plateaus,
            "final_loss": float(self.trajectory.losses[-1]),
            "final_region": self.trajectory.snapshots[-1].region,
            "visits_4_5_6": self.visits_in_order,
            "qualifies": self.qualifies,
        }


def saddle_initial_params(seed: int, region: int = 4) -> Params:
    """Standard-normal draw conditioned (by rejection) on the given toy region."""
    rng = np.random.default_rng(seed)
    while True:
        params = init_params(TOY_ARCH, InitScheme.STD_NORMAL, rng)
        if toy_region_of(params.weights[0][0, 0], params.biases[0][0]) == region:
            return params


def _first_visits(regions) -> list:
    seen = []
    for r in regions:
        if r not in seen:
            seen.append(r)
    return seen


def saddle_run(config: SaddleConfig, seed: int) -> SaddleRun:
    objective = Objective(LossKind.MSE, np.array(TOY_X), np.array(config.targets, dtype=float))
    params0 = saddle_initial_params(seed, config.start_region)
    traj = run_trajectory(TOY_ARCH, params0, objective, OptimizerConfig("gd", config.lr), config.iters,
                          record_every=1, hooks=DEFAULT_HOOKS + (theta_hook,), seed=seed)
    regions = traj.regions()
    transitions = [(traj.snapshots[k].iteration, regions[k - 1], regions[k])
                   for k in range(1, len(regions)) if regions[k] != regions[k - 1]]
    index = {s.iteration: s for s in traj.snapshots}
    plateaus = [{"start": a, "end": b, "loss": index[a].loss, "region": index[a].region}
                for a, b in detect_plateaus(traj, config.window, config.rel_drop)]
    return SaddleRun(seed, traj, _first_visits(regions), transitions, plateaus)


def run_saddle(config: SaddleConfig = SaddleConfig(), out_dir=None, plots: bool = True, jobs: int = 1) -> list[SaddleRun]:
    out = _out(out_dir)
    seeds = list(range(config.seed, config.seed + config.n_seeds))
    runs = _map(_SaddleTask(config), seeds, jobs)
    if out is not None:
        files = []
        for run in runs:
            name = f"saddle_seed{run.seed}.csv"
            run.trajectory.to_csv(out / name)
            files.append(name)
        _write_json(out / "saddle_runs.json", {
            "config": asdict(config),
            "runs": [dict(file=f, **r.trajectory.config) for f, r in zip(files, runs)],
        })
        _write_json(out / "saddle_summary.json", {
            "qualifying_seeds": [r.seed for r in runs if r.qualifies],
            "runs": [r.summary() for r in runs],
        })
        if plots:
            from . import plotting

            chosen = next((r for r in runs if r.qualifies), runs[0])
            traj = chosen.trajectory
            thetas = np.array([s.extra["theta"] for s in traj.snapshots])
            plotting.saddle_figure(thetas[:, :2], np.array([[s.proj_x, s.proj_y] for s in traj.snapshots]),
                                   traj.iterations, traj.losses, traj.regions(),
                                   [(p["start"], p["end"]) for p in chosen.plateaus],
                                   out / f"saddle_seed{chosen.seed}.png")
    return runs


class _SaddleTask:
    def __init__(self, config: SaddleConfig):
        self.config = config

    def __call__(self, seed: int) -> SaddleRun:
        return saddle_run(self.config, seed)


# --- recovery of a piecewise-linear function ----------------------------------------

@dataclass(frozen=True)
class CplConfig:
    runs: int = 50
    seed: int = 0
    width: int = 10
    n_samples: int = 25
    data_seed: int = 1
    lo: float = 1.0
    hi: float = 20.0
    knots: tuple = (1.0, 7.0, 14.0, 20.0)
    values: tuple = (0.0, 0.6, 0.2, 0.8)
    lr: float = 0.01
    max_steps: int = 200_000
    stop_loss: float = 1e-5
    grid: int = 10_000

    def __post_init__(self):
        _positive(runs=self.runs, width=self.width, n_samples=self.n_samples, lr=self.lr,
                  max_steps=self.max_steps, stop_loss=self.stop_loss, grid=self.grid)
        if not self.hi > self.lo:
            raise ConfigurationError("hi must exceed lo")
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise ConfigurationError("knots and values must have the same length >= 2")


@dataclass
class CplRun:
    run: int
    final_loss: float
    steps: int
    reached: bool
    local_dim: int
    closed_form_rank: int
    seen_regions: int
    total_regions: int
    l0_neurons: int
    l0_linear: int
    margin: float
    seen_bounds_ok: bool
    l0_bounds_ok: bool

    FIELDS = ("run", "final_loss", "steps", "reached", "local_dim", "closed_form_rank", "seen_regions",
              "total_regions", "l0_neurons", "l0_linear", "margin", "seen_bounds_ok", "l0_bounds_ok")

    def row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


@dataclass
class CplResult:
    config: CplConfig
    X: np.ndarray
    Y: np.ndarray
    runs: list[CplRun]
    thetas: np.ndarray

    @property
    def success_rate(self) -> float:
        return float(np.mean([r.reached for r in self.runs]))

    def loss_clusters(self, decimals: int = 4) -> list[float]:
        return sorted({round(max(r.final_loss, 0.0), decimals) for r in self.runs})


def cpl_target(config: CplConfig, x) -> np.ndarray:
    return np.interp(x, config.knots, config.values)


def cpl_sample(config: CplConfig) -> tuple[np.ndarray, np.ndarray]:
    X = np.random.default_rng(config.data_seed).uniform(config.lo, config.hi, config.n_samples)
    return X, cpl_target(config, X)


def run_cpl_recovery(config: CplConfig = CplConfig(), out_dir=None, plots: bool = True) -> CplResult:
    out = _out(out_dir)
    arch = Architecture((1, config.width, 1))
    X, Y = cpl_sample(config)
    objective = Objective(LossKind.MSE, X, Y)
    thetas0 = np.array([init_params(arch, InitScheme.HE_NORMAL, np.random.default_rng([config.seed, k])).flatten()
                        for k in range(config.runs)])
    res = Ensemble(arch, objective).train(thetas0, OptimizerConfig("adam", config.lr), config.max_steps,
                                          stop_loss=config.stop_loss)
    grid = np.linspace(config.lo, config.hi, config.grid)
    runs = []
    for k in range(config.runs):
        params = Params.from_flat(arch, res.thetas[k])
        a = analyze_shallow(arch, params, X)
        total = seen_regions(activation_pattern(forward(arch, params, grid[None, :])))
        lo_s, hi_s = a.bounds["seen_regions"]
        lo_l, hi_l = a.bounds["l0"]
        runs.append(CplRun(k, float(res.losses[k]), int(res.steps[k]), bool(res.stopped[k]), int(a.numeric_rank),
                           int(a.closed_form_rank), int(a.seen_regions), int(total), int(a.l0_neurons),
                           int(a.l0_linear), float(a.margin), bool(lo_s <= a.numeric_rank <= hi_s),
                           bool(lo_l <= a.numeric_rank <= hi_l)))
    result = CplResult(config, X, Y, runs, res.thetas)
    if out is not None:
        _write_cpl(result, arch, grid, out, plots)
    return result


def _write_cpl(result: CplResult, arch: Architecture, grid: np.ndarray, out: Path, plots: bool) -> None:
    _write_csv(out / "cpl_runs.csv", CplRun.FIELDS, (r.row() for r in result.runs))
    write_sample_csv(out / "cpl_sample.csv", result.X[None, :])
    write_sample_csv(out / "cpl_targets.csv", result.Y[None, :])
    models = out / "cpl_models"
    models.mkdir(exist_ok=True)
    for k, theta in enumerate(result.thetas):
        save_model(models / f"run{k}.json", arch, Params.from_flat(arch, theta))
    _write_json(out / "cpl_summary.json", {
        "config": asdict(result.config),
        "success_rate": result.success_rate,
        "loss_clusters": result.loss_clusters(),
        "max_local_dim": max(r.local_dim for r in result.runs),
        "max_seen_regions": max(r.seen_regions for r in result.runs),
        "max_rank": arch.max_rank(),
        "all_seen_bounds_ok": all(r.seen_bounds_ok for r in result.runs),
        "all_l0_bounds_ok": all(r.l0_bounds_ok for r in result.runs),
    })
    if plots:
        from . import plotting

        losses = np.array([r.final_loss for r in result.runs])
        plotting.cpl_figures(losses, np.array([r.local_dim for r in result.runs]),
                             np.array([r.seen_regions for r in result.runs]), out)
        # one network per distinct final loss level
        preds = {}
        for level in result.loss_clusters():
            k = next(r.run for r in result.runs if round(max(r.final_loss, 0.0), 4) == level)
            params = Params.from_flat(arch, result.thetas[k])
            preds[f"run {k} (loss {result.runs[k].final_loss:.1e})"] = forward(arch, params, grid[None, :]).output[0]
        plotting.cpl_prediction_figure(grid, cpl_target(result.config, grid), result.X, result.Y, preds,
                                       out / "cpl_predictions.png")


# --- width / epoch sweeps --------------------------------------------------------------

@dataclass(frozen=True)
class SweepData:
    X_train: np.ndarray
    labels_train: np.ndarray
    Y_train: np.ndarray
    X_test: np.ndarray
    labels_test: np.ndarray
    Y_test: np.ndarray


@dataclass(frozen=True)
class SweepConfig:
    widths: tuple = (2, 4, 6, 8, 12, 16, 24)
    epochs: int = 300
    record_epochs: tuple = (20, 100, 200, 300, 400, 500, 600)
    seed: int = 0
    n_seeds: int = 10
    width: int = 16  # epoch sweep
    n_train: int = 600
    n_test: int = 2000
    spread: float = 0.5
    data_seed: int = 1000
    lr: float = 0.1
    batch_size: int = 256
    data_dir: str | None = None
    tol_policy: str = "spectral"
    sub_batch: int = 256

    def __post_init__(self):
        _positive(epochs=self.epochs, n_seeds=self.n_seeds, width=self.width, n_train=self.n_train,
                  n_test=self.n_test, spread=self.spread, lr=self.lr, batch_size=self.batch_size)
        if any(w < 1 for w in self.widths) or any(e < 1 for e in self.record_epochs):
            raise ConfigurationError("widths and record epochs must be positive")


def sweep_data(config: SweepConfig) -> SweepData:
    if config.data_dir:
        rng = np.random.default_rng(config.data_seed)
        Xtr, ltr, Ytr = load_idx_classification(config.data_dir, "train")
        Xts, lts, Yts = load_idx_classification(config.data_dir, "test")
        itr = np.sort(rng.choice(Xtr.shape[1], size=min(config.n_train, Xtr.shape[1]), replace=False))
        its = np.sort(rng.choice(Xts.shape[1], size=min(config.n_test, Xts.shape[1]), replace=False))
        k = max(Ytr.shape[0], Yts.shape[0])
        pad = lambda Y: np.vstack([Y, np.zeros((k - Y.shape[0], Y.shape[1]))])  # noqa: E731
        return SweepData(Xtr[:, itr], ltr[itr], pad(Ytr)[:, itr], Xts[:, its], lts[its], pad(Yts)[:, its])
    Xtr, ltr, Ytr = make_blobs(config.n_train, seed=config.data_seed, spread=config.spread)
    Xts, lts, Yts = make_blobs(config.n_test, seed=config.data_seed + 1, spread=config.spread)
    return SweepData(Xtr, ltr, Ytr, Xts, lts, Yts)


SWEEP_FIELDS = ("seed", "width", "epoch", "n_params", "max_rank", "rank_train", "rank_test", "train_loss",
                "train_error", "test_error")


def _measure(arch: Architecture, params: Params, data: SweepData, config: SweepConfig, seed: int, epoch: int) -> dict:
    out_tr = forward(arch, params, data.X_train).output
    out_ts = forward(arch, params, data.X_test).output
    kw = dict(tol_policy=config.tol_policy, sub_batch=config.sub_batch)
    return {
        "seed": seed,
        "width": arch.widths[1],
        "epoch": epoch,
        "n_params": arch.param_count(),
        "max_rank": arch.max_rank(),
        "rank_train": local_dimension(arch, params, data.X_train, **kw).rank,
        "rank_test": local_dimension(arch, params, data.X_test, **kw).rank,
        "train_loss": Objective(LossKind.CROSS_ENTROPY, data.X_train, data.Y_train).value(out_tr),
        "train_error": float(np.mean(out_tr.argmax(axis=0) != data.labels_train)),
        "test_error": float(np.mean(out_ts.argmax(axis=0) != data.labels_test)),
    }


def _sweep_arch(data: SweepData, w: int) -> Architecture:
    return Architecture((data.X_train.shape[0], w, w, w, data.Y_train.shape[0]), "softmax")


def _train_and_record(config: SweepConfig, data: SweepData, w: int, seed: int, epochs: int, record: Sequence[int]):
    arch = _sweep_arch(data, w)
    rng = np.random.default_rng([seed, w])
    params = init_params(arch, InitScheme.GLOROT_UNIFORM_ZERO_BIAS, rng)
    rows = []
    record = set(record)
    for epoch in range(1, epochs + 1):
        params = sgd_epoch(arch, params, data.X_train, data.Y_train, LossKind.CROSS_ENTROPY,
                           config.lr, config.batch_size, rng)
        if epoch in record:
            rows.append(_measure(arch, params, data, config, seed, epoch))
    return rows


class _WidthTask:
    def __init__(self, config: SweepConfig, data: SweepData):
        self.config, self.data = config, data

    def __call__(self, w: int) -> dict:
        return _train_and_record(self.config, self.data, w, self.config.seed, self.config.epochs, [self.config.epochs])[0]


class _EpochTask:
    def __init__(self, config: SweepConfig, data: SweepData):
        self.config, self.data = config, data

    def __call__(self, seed: int) -> list[dict]:
        c = self.config
        return _train_and_record(c, self.data, c.width, seed, max(c.record_epochs), c.record_epochs)


def mnist_max_rank(w: int) -> int:
    """Max rank of the (784, w, w, w, 10) architecture."""
    return Architecture((784, w, w, w, 10)).max_rank()


def run_width_sweep(config: SweepConfig = SweepConfig(), out_dir=None, plots: bool = True, jobs: int = 1) -> list[dict]:
    out = _out(out_dir)
    data = sweep_data(config)
    rows = _map(_WidthTask(config, data), list(config.widths), jobs)
    for row in rows:
        row["mnist_max_rank"] = mnist_max_rank(row["width"])
    if out is not None:
        fields = SWEEP_FIELDS + ("mnist_max_rank",)
        _write_csv(out / "width_sweep.csv", fields, ([r[f] for f in fields] for r in rows))
        _write_json(out / "width_sweep.json", {"config": asdict(config), "rows": rows})
        if plots:
            from . import plotting

            x = np.array([r["n_params"] for r in rows])
            plotting.sweep_figure(x, {k: [r[k] for r in rows] for k in ("max_rank", "rank_test", "rank_train")},
                                  "number of parameters", out / "width_sweep_rank.png")
            plotting.sweep_figure(x, {k: [r[k] for r in rows] for k in ("train_loss", "train_error", "test_error")},
                                  "number of parameters", out / "width_sweep_error.png")
    return rows


@dataclass
class EpochSweepResult:
    config: SweepConfig
    rows: list[dict]

    def per_seed(self) -> dict[int, list[dict]]:
        out: dict[int, list[dict]] = {}
        for r in self.rows:
            out.setdefault(r["seed"], []).append(r)
        return out

    def decreased(self) -> dict[int, bool]:
        """Whether the train rank at the last recorded epoch is <= the first."""
        return {s: rs[-1]["rank_train"] <= rs[0]["rank_train"] for s, rs in self.per_seed().items()}


def run_epoch_sweep(config: SweepConfig = SweepConfig(), out_dir=None, plots: bool = True, jobs: int = 1) -> EpochSweepResult:
    out = _out(out_dir)
    data = sweep_data(config)
    seeds = list(range(config.seed, config.seed + config.n_seeds))
    rows = [r for chunk in _map(_EpochTask(config, data), seeds, jobs) for r in chunk]
    result = EpochSweepResult(config, rows)
    if out is not None:
        _write_csv(out / "epoch_sweep.csv", SWEEP_FIELDS, ([r[f] for f in SWEEP_FIELDS] for r in rows))
        dec = result.decreased()
        _write_json(out / "epoch_sweep.json", {
            "config": asdict(config),
            "rank_train_decreased": {str(k): v for k, v in dec.items()},
            "n_decreased": int(sum(dec.values())),
        })
        if plots:
            from . import plotting

            first = result.per_seed()[seeds[0]]
            x = np.array([r["epoch"] for r in first])
            plotting.sweep_figure(x, {k: [r[k] for r in first] for k in ("max_rank", "rank_test", "rank_train")},
                                  "epoch", out / "epoch_sweep_rank.png")
            series = {f"seed {s}": [r["rank_train"] for r in rs] for s, rs in result.per_seed().items()}
            plotting.sweep_figure(x, series, "epoch", out / "epoch_sweep_rank_train.png")
    return result
