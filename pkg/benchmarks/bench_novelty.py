"""Compare the compiled and pure-Python first-occurrence kernels.

    python benchmarks/bench_novelty.py --posts 200000 --repeat 3

Both backends get the same synthetic stream; outputs are checked for
equality before timings are reported.
"""

import argparse
import time

import numpy as np

from ecolens import kernels
from ecolens.novelty import EventTable, _eligible_mask, build_eligibility, count_frequencies
from ecolens.synth import SynthConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--posts", type=int, default=200_000)
    ap.add_argument("--p", type=float, default=0.05)
    ap.add_argument("--threshold", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = SynthConfig(posts=args.posts, p=args.p, seed=args.seed)
    table = EventTable.from_events(generate(cfg))
    elig = build_eligibility(count_frequencies(table), args.threshold)
    mask = _eligible_mask(table, elig)
    print(f"{args.posts} posts, {len(table.vocab)} libraries, {int(mask.sum())} eligible, {len(table.lib_ids)} imports")

    results, timings = {}, {}
    for name in kernels.available():
        mod = kernels.BACKENDS[name]
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = mod.detect_first_occurrences(table.offsets, table.lib_ids, mask)
            best = min(best, time.perf_counter() - t0)
        results[name], timings[name] = out, best

    names = list(results)
    for other in names[1:]:
        same = all(np.array_equal(a, b) for a, b in zip(results[names[0]], results[other]))
        print(f"{names[0]} == {other}: {same}")
    base = timings.get("python")
    for name in names:
        speedup = f"  ({base / timings[name]:.1f}x vs python)" if base and name != "python" else ""
        print(f"{name:>9}: {timings[name]:.3f}s best of {args.repeat}{speedup}")
    if "compiled" not in timings:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
