"""Acceptance criteria 1-9. Each test prints one ``CRITERION k: PASS|FAIL`` line.

Run with ``pytest tests/test_acceptance.py -v``; the lines go straight to the
terminal even when output capture is on.
"""

import inspect
import time

import numpy as np
import pytest

import property_counter
import test_properties
from helpers import REGION_WB, TOY, X3, toy
from localdim import experiments as ex
from localdim.dimension import local_dimension
from localdim.jacobian import finite_diff_jacobian, jacobian
from localdim.net import Architecture, boundary_margin, forward, init_params, permute, rescale
from localdim.shallow import analyze_shallow, shallow_bounds_check

# pinned tolerances and runtime limits
FD_TOL = 1e-6
TABLE1_INIT = (0.33, 0.12, 0.05, 0.32, 0.13, 0.05)
TABLE1_FINAL = (0.50, 0.03, 0.00, 0.29, 0.18, 0.00)
TABLE1_INIT_TOL = 0.02
TABLE1_FINAL_TOL = 0.05
FIGURE_RANKS = (1, 2, 3, 2, 3, 2)
CPL_MAX_LOCAL_DIM = 8
CPL_MAX_SEEN = 5
CPL_MIN_SUCCESS = 0.5
SWEEP_MIN_DECREASED = 8
MIN_PROPERTY_CASES = 1000
LIMITS = {1: 10, 2: 10, 3: 1, 4: 30, 5: 120, 6: 60, 7: 300, 8: 300, 9: 600}


@pytest.fixture
def report(capsys):
    def emit(k: int, ok: bool, elapsed: float, detail: str) -> None:
        within = elapsed < LIMITS[k]
        status = "PASS" if ok and within else "FAIL"
        with capsys.disabled():
            print(f"\nCRITERION {k}: {status} ({elapsed:.1f}s, limit {LIMITS[k]}s) {detail}")
        assert ok, detail
        assert within, f"runtime {elapsed:.1f}s exceeds {LIMITS[k]}s"

    return emit


def random_arch(rng):
    depth = int(rng.integers(2, 5))
    widths = [int(rng.integers(1, 9)) for _ in range(depth + 1)]
    return Architecture(tuple(widths), "softmax" if rng.random() < 0.5 else "identity")


def test_criterion_1_jacobian_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    errors = []
    while len(errors) < 100:
        arch = random_arch(rng)
        p = init_params(arch, seed=rng)
        X = rng.standard_normal((arch.widths[0], int(rng.integers(1, 6))))
        if boundary_margin(forward(arch, p, X)) <= 1e-3:
            continue
        J = jacobian(arch, p, X).data
        F = finite_diff_jacobian(arch, p, X).data
        errors.append(np.abs(F - J).max() / (1 + np.abs(J).max()))
    worst = max(errors)
    report(1, worst <= FD_TOL, time.perf_counter() - t0, f"100 nets, worst relative error {worst:.2e} (tol {FD_TOL})")


def test_criterion_2_symmetry_invariance(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    equal = 0
    for _ in range(100):
        arch = random_arch(rng)
        p = init_params(arch, seed=rng)
        X = rng.standard_normal((arch.widths[0], int(rng.integers(1, 13))))
        hidden = arch.widths[1:-1]
        lam = np.exp(rng.uniform(np.log(0.1), np.log(10.0), sum(hidden)))
        q = rescale(arch, permute(arch, p, [rng.permutation(w) for w in hidden]), lam)
        equal += local_dimension(arch, p, X).rank == local_dimension(arch, q, X).rank
    report(2, equal == 100, time.perf_counter() - t0, f"rank equal in {equal}/100")


def test_criterion_3_figure_ranks(report):
    t0 = time.perf_counter()
    ranks = tuple(local_dimension(TOY, toy(*REGION_WB[j]), X3).rank for j in range(1, 7))
    report(3, ranks == FIGURE_RANKS, time.perf_counter() - t0, f"ranks {ranks}, expected {FIGURE_RANKS}")


def test_criterion_4_shallow_closed_form(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    same = bounds = done = 0
    while done < 200:
        width, n = int(rng.integers(1, 11)), int(rng.integers(2, 21))
        arch = Architecture((1, width, 1))
        p = init_params(arch, seed=rng)
        a = analyze_shallow(arch, p, rng.standard_normal(n))
        if a.margin <= 1e-6:
            continue
        done += 1
        same += a.closed_form_rank == a.numeric_rank
        bounds += shallow_bounds_check(a)
    report(4, same == 200 and bounds == 200, time.perf_counter() - t0,
           f"closed form = numeric {same}/200, both bound chains {bounds}/200")


def test_criterion_5_region_table(report):
    t0 = time.perf_counter()
    res = ex.run_toy_table(ex.ToyTableConfig(), plots=False)
    init, final = res.row("init"), res.row("final")
    d_init = np.abs(init - TABLE1_INIT).max()
    d_final = np.abs(final - TABLE1_FINAL).max()
    p11 = res.row("from_U1")[0]
    ok = d_init <= TABLE1_INIT_TOL and d_final <= TABLE1_FINAL_TOL and p11 == 1.0
    report(5, ok, time.perf_counter() - t0,
           f"init {np.round(init, 3).tolist()} (max dev {d_init:.3f}), final {np.round(final, 3).tolist()} "
           f"(max dev {d_final:.3f}), P(U1|U1) = {p11}")


def test_criterion_6_saddle_to_saddle(report):
    t0 = time.perf_counter()
    runs = ex.run_saddle(ex.SaddleConfig(), plots=False)
    good = [r.seed for r in runs if r.qualifies]
    report(6, len(good) >= 1, time.perf_counter() - t0,
           f"{len(runs)} seeds from {runs[0].seed}; U4 -> U5 -> U6 with >= 2 plateaus for seeds {good}")


def test_criterion_7_cpl_recovery(report):
    t0 = time.perf_counter()
    res = ex.run_cpl_recovery(ex.CplConfig(), plots=False)
    in_bounds = sum(r.seen_bounds_ok for r in res.runs)
    max_dim = max(r.local_dim for r in res.runs)
    max_seen = max(r.seen_regions for r in res.runs)
    ok = (in_bounds == len(res.runs) and max_dim <= CPL_MAX_LOCAL_DIM and max_seen <= CPL_MAX_SEEN
          and res.success_rate >= CPL_MIN_SUCCESS)
    report(7, ok, time.perf_counter() - t0,
           f"seen-region bounds {in_bounds}/{len(res.runs)}, max local dim {max_dim}, max seen regions {max_seen}, "
           f"loss < 1e-5 in {res.success_rate:.0%}")


def test_criterion_8_epoch_sweep(report):
    t0 = time.perf_counter()
    res = ex.run_epoch_sweep(ex.SweepConfig(), plots=False)
    below = all(r["rank_train"] <= r["max_rank"] for r in res.rows)
    dec = sum(res.decreased().values())
    report(8, below and dec >= SWEEP_MIN_DECREASED, time.perf_counter() - t0,
           f"train rank <= max rank in all rows: {below}; last <= first in {dec}/{len(res.decreased())} seeds")


def test_criterion_9_property_cases(report):
    t0 = time.perf_counter()
    property_counter.reset()
    failures = []
    for name, fn in inspect.getmembers(test_properties, inspect.isfunction):
        if not name.startswith("test_"):
            continue
        try:
            fn()
        except Exception as exc:  # report every failing property, not only the first
            failures.append(f"{name}: {type(exc).__name__}")
    total = property_counter.total()
    report(9, not failures and total >= MIN_PROPERTY_CASES, time.perf_counter() - t0,
           f"{total} property cases in {len(property_counter.COUNTS)} properties; failures {failures or 'none'}")
