"""Compare the compiled block-matching core against the numpy fallback.

Run:  python benchmarks/bench_block_match.py [--repeats N]

Sizes cover the five half-resolution entrance ROIs plus a desk-scale case;
the per-segment deadline for the live pipeline is 2.0 s, so the descriptor
has to stay well inside that on the largest ROI.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from push_sentinel.flow import kernels

CASES = [
    ("desk 64x64", 64, 64),
    ("entrance 110 (504x158)", 504, 158),
    ("entrance 270/280 (508x370)", 508, 370),
    ("entrance 150 (507x525)", 507, 525),
    ("entrance E2 (562x215)", 562, 215),
]


def run_case(width: int, height: int, backend: str, repeats: int,
             radius: int = 8, block: int = 7) -> float:
    rng = np.random.default_rng(0)
    prev = rng.integers(0, 256, (height, width, 3), dtype=np.uint8)
    nxt = np.roll(prev, (3, 2), axis=(0, 1))
    kernels.block_match(prev, nxt, radius, block, backend=backend)  # warm up
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        kernels.block_match(prev, nxt, radius, block, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = ["pure"] + (["native"] if kernels.HAVE_NATIVE else [])
    if not kernels.HAVE_NATIVE:
        print("note: compiled core not built; showing the fallback only\n")

    print(f"{'case':<28} " + " ".join(f"{b:>10}" for b in backends) +
          ("    speedup" if len(backends) == 2 else ""))
    for name, width, height in CASES:
        times = {b: run_case(width, height, b, args.repeats) for b in backends}
        row = f"{name:<28} " + " ".join(f"{times[b]:>9.3f}s" for b in backends)
        if len(backends) == 2:
            row += f"    {times['pure'] / times['native']:>6.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
