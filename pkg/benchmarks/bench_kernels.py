"""Benchmark the compiled sampling/voting kernels against the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 5] [--size 96]

Both backends are imported directly (bypassing the env-var switch), checked
for bit-identical outputs on the benchmark inputs, then timed. Prints one
line per (kernel, backend) and the speedup.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ulfsynth.kernels import _pure

try:
    from ulfsynth.kernels import _fast
except ImportError:
    _fast = None


def time_call(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_sampling(size: int, repeats: int) -> list[tuple[str, float, float | None]]:
    rng = np.random.default_rng(0)
    volume = rng.random((size, size, size))
    labels = rng.integers(0, 9, (size, size, size)).astype(np.int32)
    n = size**3
    coords = np.column_stack(
        [rng.uniform(-1.0, size, n) for _ in range(3)]
    ).astype(np.float64)

    rows = []
    for name, args in (
        ("sample_linear", (volume, coords)),
        ("sample_nearest", (labels, coords)),
    ):
        pure_fn = getattr(_pure, name)
        pure_t = time_call(pure_fn, *args, repeats=repeats)
        fast_t = None
        if _fast is not None:
            fast_fn = getattr(_fast, name)
            assert np.array_equal(
                np.asarray(fast_fn(*args)), np.asarray(pure_fn(*args))
            ), f"{name}: backends disagree"
            fast_t = time_call(fast_fn, *args, repeats=repeats)
        rows.append((name, pure_t, fast_t))
    return rows


def bench_vote(size: int, repeats: int) -> list[tuple[str, float, float | None]]:
    rng = np.random.default_rng(1)
    votes = rng.integers(0, 9, (7, size**3)).astype(np.int32)
    rows = []
    for tie in (0, 1):
        name = f"vote_argmax(tie={tie})"
        pure_t = time_call(_pure.vote_argmax, votes, 9, tie, repeats=repeats)
        fast_t = None
        if _fast is not None:
            assert np.array_equal(
                np.asarray(_fast.vote_argmax(votes, 9, tie)),
                np.asarray(_pure.vote_argmax(votes, 9, tie)),
            ), f"{name}: backends disagree"
            fast_t = time_call(_fast.vote_argmax, votes, 9, tie, repeats=repeats)
        rows.append((name, pure_t, fast_t))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="best-of timing repeats")
    parser.add_argument("--size", type=int, default=96, help="cubic volume edge length")
    args = parser.parse_args()

    n = args.size**3
    print(f"volume {args.size}^3 = {n:,} voxels, best of {args.repeats}")
    if _fast is None:
        print("compiled backend unavailable; timing the numpy fallback only")
    header = f"{'kernel':<24}{'pure (ms)':>12}{'compiled (ms)':>16}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, pure_t, fast_t in bench_sampling(args.size, args.repeats) + bench_vote(
        args.size, args.repeats
    ):
        if fast_t is None:
            print(f"{name:<24}{pure_t * 1e3:>12.2f}{'-':>16}{'-':>10}")
        else:
            print(
                f"{name:<24}{pure_t * 1e3:>12.2f}{fast_t * 1e3:>16.2f}"
                f"{pure_t / fast_t:>9.1f}x"
            )


if __name__ == "__main__":
    main()
