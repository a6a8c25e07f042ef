"""Time the compiled kernels against the pure-python fallback.

Both backend modules are imported side by side and fed identical arrays,
so the numbers isolate kernel cost from corpus parsing and metric setup.
Each kernel's outputs are checked for exact agreement before timing.

Usage:
    python benchmarks/bench_backends.py [--repeats 5] [--seed 0]
"""

import argparse
import itertools
import math
import time

import numpy as np

from textdiv._kernels import _python

try:
    from textdiv._kernels import _speedups
except ImportError:
    _speedups = None

SLOT_BITS = 15

WORDS = [
    "river", "stone", "light", "garden", "window", "coffee", "train",
    "mountain", "paper", "silver", "morning", "harbor", "violin", "bread",
    "candle", "forest", "letter", "market", "autumn", "bridge", "lantern",
    "meadow", "thunder", "copper", "willow", "dust", "mirror", "orchard",
]


def build_partition_workload(rng):
    """Symmetric edge matrix plus every 8-of-16 role assignment."""
    size = 16
    values = rng.uniform(0.05, 2.0, size=(size, size))
    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 0.0)
    combos = np.array(
        list(itertools.combinations(range(size), 8)), dtype=np.int32
    )
    return values, combos


def build_utterances(rng, count=60):
    """Random token-id utterances over a small vocabulary."""
    utts = []
    for _ in range(count):
        length = int(rng.integers(6, 13))
        utts.append(rng.integers(0, len(WORDS), size=length).tolist())
    return utts


def flatten(utts, dtype=np.int32):
    flat = np.array([t for u in utts for t in u], dtype=dtype)
    off = np.zeros(len(utts) + 1, dtype=np.int64)
    np.cumsum([len(u) for u in utts], out=off[1:])
    return flat, off


def all_pairs(count):
    return np.array(
        [(i, j) for i in range(count) for j in range(count) if i != j],
        dtype=np.int32,
    )


def build_meteor_workload(rng):
    """Flat token and stem streams; stems collide pairwise to force matches."""
    utts = build_utterances(rng)
    tok_flat, tok_off = flatten(utts)
    stem_flat = tok_flat // 2
    return tok_flat, tok_off, stem_flat, tok_off, all_pairs(len(utts))


def build_cider_workload(rng, max_n=4):
    """Packed-key token stream with an idf table over half the seen grams."""
    utts = [[t + 1 for t in u] for u in build_utterances(rng)]
    tok_flat, tok_off = flatten(utts)
    seen = set()
    for u in utts:
        for k in range(1, max_n + 1):
            for i in range(len(u) - k + 1):
                key = 0
                for d in range(k):
                    key |= u[i + d] << (SLOT_BITS * d)
                seen.add(key)
    keys = np.array(sorted(seen), dtype=np.int64)
    keep = rng.random(len(keys)) < 0.5
    keys = keys[keep]
    vals = rng.uniform(0.5, 3.0, size=len(keys))
    return (
        tok_flat,
        tok_off,
        keys,
        vals,
        math.log(40.0),
        all_pairs(len(utts)),
        max_n,
        6.0,
    )


def best_time(fn, args, repeats):
    fn(*args)  # warm up
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    edge, combos = build_partition_workload(rng)
    workloads = [
        ("trm_masses_batch", (edge, combos, False)),
        ("min_mean_batch", (edge, combos)),
        ("meteor_score_pairs", build_meteor_workload(rng)),
        ("cider_sim_from_tokens", build_cider_workload(rng)),
    ]

    if _speedups is None:
        print("compiled extension not available; showing the fallback only")

    print(f"best of {args.repeats}, seed {args.seed}")
    print(f"{'kernel':<24}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for name, payload in workloads:
        py_fn = getattr(_python, name)
        py_best = best_time(py_fn, payload, args.repeats)
        row = f"{name:<24}{py_best * 1e3:>10.1f}ms"
        if _speedups is not None:
            c_fn = getattr(_speedups, name)
            if not np.array_equal(py_fn(*payload), c_fn(*payload)):
                raise SystemExit(f"{name}: backends disagree")
            c_best = best_time(c_fn, payload, args.repeats)
            row += f"{c_best * 1e3:>10.1f}ms{py_best / c_best:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
