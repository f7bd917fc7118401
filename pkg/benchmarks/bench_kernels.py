"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from fdivbandit import _kernels_py as py
from fdivbandit.core import make_rng

try:
    from fdivbandit import _kernels as cy
except ImportError:
    cy = None


def cases():
    rng = make_rng(0)
    members = rng.random((64, 4, 4))
    pi = np.full((4, 4), 0.25)
    rho = np.full(4, 0.25)
    pts = rng.random((300, 8))
    dist = np.max(np.abs(pts[:, None] - pts[None]), axis=2)
    return [
        ("d2_tables K=64 S=A=4", "d2_tables", (members, pi, rho)),
        ("greedy_cover K=300", "greedy_cover", (dist, 0.4)),
        ("lexicode n=16 d=8", "lexicode", (16, 8, 32)),
        ("lexicode n=20 d=10", "lexicode", (20, 10, 40)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<24}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for label, name, a in cases():
        t_py = min(timeit.repeat(lambda: getattr(py, name)(*a), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{label:<24}{t_py:12.2f}{'n/a':>14}{'':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: getattr(cy, name)(*a), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:<24}{t_py:12.2f}{t_cy:14.3f}{t_py / t_cy:9.1f}x")


if __name__ == "__main__":
    main()
