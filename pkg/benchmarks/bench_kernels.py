"""Timing comparison of the compiled and numpy scoring kernels.

Runs the hot kernels at benchmark-like and larger-than-benchmark sizes,
verifies the backends agree to the last float32 ulp on the timed inputs,
and prints the per-call medians side by side.

Both backends accumulate in float64 and round once, but BLAS is free to
reorder the float64 sums, so a handful of values per ten million can land
on opposite sides of a float32 rounding boundary.  Agreement is therefore
checked in ulps rather than bytes.

    python -m benchmarks.bench_kernels [--repeats 200]
"""

import argparse
import statistics
import time

import numpy as np

from clickrank import _kernels

SIZES = [
    ("benchmark", 2_000, 64),
    ("medium", 20_000, 128),
    ("large", 100_000, 256),
]


def unit_rows(rng, n, dim):
    rows = rng.standard_normal((n, dim))
    return (rows / np.linalg.norm(rows, axis=1, keepdims=True)).astype(np.float32)


def time_call(fn, repeats):
    samples = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - started)
    return statistics.median(samples)


def ulp_distance(a, b):
    """Elementwise float32 ulp distance via order-preserving bit mapping."""
    ai = a.view(np.int32).astype(np.int64)
    bi = b.view(np.int32).astype(np.int64)
    ai = np.where(ai < 0, 0x80000000 - ai, ai)
    bi = np.where(bi < 0, 0x80000000 - bi, bi)
    return np.abs(ai - bi)


def bench_case(name, n, dim, repeats, backends):
    rng = np.random.default_rng(2024)
    items = unit_rows(rng, n, dim)
    query = unit_rows(rng, 1, dim)[0]
    like = unit_rows(rng, 1, dim)
    dislike = unit_rows(rng, 1, dim)

    rows = []
    outputs = {}
    for backend_name in backends:
        impl = _kernels.get_backend(backend_name)
        dot_s = time_call(lambda: impl.dot_scores(items, query), repeats)
        fb_s = time_call(
            lambda: impl.feedback_scores(items, query, items, like, dislike, 1.0, 0.5), repeats
        )
        outputs[backend_name] = (
            impl.dot_scores(items, query),
            impl.feedback_scores(items, query, items, like, dislike, 1.0, 0.5),
        )
        rows.append((backend_name, dot_s, fb_s))

    max_ulp = 0
    if len(outputs) == 2:
        (a_dot, a_fb), (b_dot, b_fb) = outputs.values()
        max_ulp = int(max(ulp_distance(a_dot, b_dot).max(), ulp_distance(a_fb, b_fb).max()))
    print(f"\n{name}: {n} items x {dim} dims ({repeats} repeats, median per call)")
    print(f"  {'backend':<8}  {'dot_scores':>12}  {'feedback_scores':>16}")
    for backend_name, dot_s, fb_s in rows:
        print(f"  {backend_name:<8}  {dot_s * 1e6:>10.1f}us  {fb_s * 1e6:>14.1f}us")
    if len(rows) == 2:
        print(
            f"  {'speedup':<8}  {rows[0][1] / rows[1][1]:>11.2f}x  {rows[0][2] / rows[1][2]:>15.2f}x"
        )
        print(f"  max backend disagreement: {max_ulp} ulp")
    return max_ulp <= 1


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200, help="timed calls per kernel")
    args = parser.parse_args()

    backends = _kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if len(backends) < 2:
        print("compiled extension not built; timing the numpy fallback only")

    all_agree = all([bench_case(name, n, dim, args.repeats, backends) for name, n, dim in SIZES])
    if not all_agree:
        raise SystemExit("backend outputs diverged by more than one ulp; see table above")


if __name__ == "__main__":
    main()
