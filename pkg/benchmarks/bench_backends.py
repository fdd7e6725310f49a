"""Time the loss kernels against the pairwise risk across batch sizes.

Usage: python benchmarks/bench_backends.py [--out bench.csv] [--task opauc|tpauc]

Prints per-size timings, the 64 -> 2048 growth factors and, when both
backends are built, the compiled-over-python speedup per batch size.
"""

import argparse
import json

from pauckit import _backend, bench
from pauckit.losses import HyperParams


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="bench.csv")
    ap.add_argument("--task", choices=("opauc", "tpauc"), default="opauc")
    ap.add_argument("--min-seconds", type=float, default=0.1)
    ap.add_argument("--rounds", type=int, default=5)
    args = ap.parse_args(argv)

    hp = HyperParams(task=args.task, beta=0.5, alpha=0.5 if args.task == "tpauc" else 1.0)
    rows = bench.run_bench(bench.BATCH_SIZES, hp=hp, min_seconds=args.min_seconds, rounds=args.rounds)
    bench.write_bench_csv(rows, args.out)
    for r in rows:
        print(f"{r.method:>18} {r.batch_size:>6} {r.mean_ms:12.5f} ms")

    summary = {"growth": bench.growth_ratios(rows), "backends": _backend.available()}
    if {"compiled", "python"} <= set(_backend.available()):
        t = {(r.method, r.batch_size): r.mean_ms for r in rows}
        summary["speedup_compiled"] = {
            n: t["instance_python", n] / t["instance_compiled", n] for n in bench.BATCH_SIZES
        }
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
