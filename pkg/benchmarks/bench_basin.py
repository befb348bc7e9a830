"""Time the compiled and numpy basin kernels on the default grid.

    python benchmarks/bench_basin.py [--problems p1,p4] [--repeat 3] [--size 600]
"""

import argparse
import time

import numpy as np

from octoroot.basin import GridSpec, backend_module, render
from octoroot.expr import builtin
from octoroot.methods import ALL_METHODS


def best_time(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problems", default="p1,p3,p6")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=600)
    args = ap.parse_args(argv)

    backends = ["python"]
    try:
        backend_module("compiled")
        backends.insert(0, "compiled")
    except ImportError:
        print("compiled kernel not built; timing the numpy fallback only")

    spec = GridSpec(width=args.size, height=args.size)
    print(f"{'problem':<8}{'method':<7}" + "".join(f"{b + ' [s]':>14}" for b in backends) + f"{'speedup':>10}{'same':>6}")
    for name in args.problems.split(","):
        p = builtin(name)
        for m in ALL_METHODS:
            times, grids = [], []
            for b in backends:
                t, g = best_time(lambda: render(m, None, p, spec, backend=b), args.repeat)
                times.append(t)
                grids.append(g)
            same = all(
                np.array_equal(g.root_index, grids[0].root_index) and np.array_equal(g.iterations, grids[0].iterations)
                for g in grids
            )
            speed = f"{times[-1] / times[0]:.2f}x" if len(times) > 1 else "-"
            print(f"{name:<8}{m.label:<7}" + "".join(f"{t:>14.3f}" for t in times) + f"{speed:>10}{str(same):>6}")


if __name__ == "__main__":
    main()
