"""Per-call cost of the instance-wise objective versus the pairwise risk.

Only the loss (and gradient) evaluation is timed; batches are generated
up front.
"""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import _backend, losses, metrics

BATCH_SIZES = (64, 128, 256, 512, 1024, 2048)


@dataclass
class BenchRow:
    method: str
    batch_size: int
    mean_ms: float
    calls: int


def _balanced_batch(n, seed):
    rng = np.random.default_rng([seed, n])
    y = np.zeros(n)
    y[: max(1, n // 2)] = 1.0
    if n == 1:
        # a lone instance cannot hold both classes; keep it positive
        return rng.random(1), y
    return rng.random(n), y


def time_call(fn, min_seconds=0.05, rounds=5, max_calls=100000):
    """Median over ``rounds`` of the mean seconds per call.

    Each round repeats ``fn`` until ``min_seconds`` elapse.
    """
    means, total = [], 0
    for _ in range(rounds):
        calls, t0 = 0, time.perf_counter()
        while True:
            fn()
            calls += 1
            elapsed = time.perf_counter() - t0
            if elapsed >= min_seconds or calls >= max_calls:
                break
        means.append(elapsed / calls)
        total += calls
    return statistics.median(means), total


def _instance_fn(scores, y, hp, kernel):
    aux = losses.AuxState()
    return lambda: losses.batch_objective_and_grad(scores, y, aux, hp, kernel=kernel)


def _pairwise_fn(scores, y, hp):
    pos, neg = scores[y == 1], scores[y == 0]
    if neg.size == 0:
        # degenerate batch: pair the single score with itself
        neg = pos
    if hp.is_tpauc:
        return lambda: metrics.pairwise_sq_risk_tpauc(pos, neg, hp.alpha, _fit(hp.beta, neg.size))
    return lambda: metrics.pairwise_sq_risk_opauc(pos, neg, _fit(hp.beta, neg.size))


def _fit(frac, n):
    # tiny batches may hold fewer than 1/frac negatives; widen to one item
    return frac if n * frac >= 1 - 1e-9 else 1.0


def run_bench(batch_sizes=BATCH_SIZES, hp=None, backends=None, seed=0,
              min_seconds=0.05, rounds=5, pairwise=True):
    """Time every backend and (optionally) the pairwise risk at each batch size."""
    hp = hp or losses.HyperParams(task="opauc", beta=1.0)
    backends = backends or _backend.available()
    rows = []
    for n in batch_sizes:
        scores, y = _balanced_batch(n, seed)
        for kernel in backends:
            sec, calls = time_call(_instance_fn(scores, y, hp, kernel), min_seconds, rounds)
            rows.append(BenchRow(f"instance_{kernel}", n, 1e3 * sec, calls))
        if pairwise:
            sec, calls = time_call(_pairwise_fn(scores, y, hp), min_seconds, rounds)
            rows.append(BenchRow("pairwise", n, 1e3 * sec, calls))
    return rows


def growth_ratios(rows):
    """``t(largest) / t(smallest)`` per method."""
    out = {}
    for method in sorted({r.method for r in rows}):
        mine = sorted((r for r in rows if r.method == method), key=lambda r: r.batch_size)
        out[method] = mine[-1].mean_ms / mine[0].mean_ms
    return out


def write_bench_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "batch_size", "mean_ms", "calls"])
        for r in rows:
            w.writerow([r.method, r.batch_size, f"{r.mean_ms:.6f}", r.calls])
