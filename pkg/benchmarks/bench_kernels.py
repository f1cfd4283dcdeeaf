"""Time the compiled pivot kernel against the interpreted fallback.

Builds Cantor-string discretizations at a few depths and sweeps a fixed
grid of spectral parameters through ``sturm_pivots_many`` twice: once via
the numba-compiled kernel (if enabled) and once via the pure-python
implementation of the same loop.  Both produce identical counts; the
table reports wall time and speedup.

Run as ``python benchmarks/bench_kernels.py``; pass ``--depths``/``--lams``
to change the workload.
"""

import argparse
import time

import numpy as np

from fractalsturm import BoundaryCondition, assemble, cantor_ladder
from fractalsturm._kernels import (
    NUMBA_ENABLED,
    sturm_pivots_many,
    sturm_pivots_many_python,
)
from fractalsturm.measures import CompositeMeasure


def build(depth):
    p = CompositeMeasure.from_selfsim(cantor_ladder())
    return assemble(1.0, 0.0, p, BoundaryCondition(0.0, 0.0), depth=depth)


def run_once(kernel, disc, lams):
    negs = np.empty(lams.shape[0], dtype=np.int64)
    nears = np.empty(lams.shape[0], dtype=np.int64)
    t0 = time.perf_counter()
    kernel(disc.a_diag, disc.a_off, disc.b_diag, disc.b_off, lams, 1e-12, negs, nears)
    return time.perf_counter() - t0, negs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depths", type=int, nargs="+", default=[8, 10, 12, 14])
    ap.add_argument("--lams", type=int, default=2000, help="spectral parameters per sweep")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    lams = np.geomspace(1.0, 1e6, args.lams)
    if NUMBA_ENABLED:
        warm = build(4)
        run_once(sturm_pivots_many, warm, lams[:4])  # trigger jit compile
    else:
        print("numba disabled (FRACTALSTURM_NO_NUMBA or import failure); timing fallback only")

    print(f"{'nodes':>8} {'compiled':>12} {'interpreted':>12} {'speedup':>8}")
    for depth in args.depths:
        disc = build(depth)
        t_py = min(run_once(sturm_pivots_many_python, disc, lams)[0] for _ in range(args.repeats))
        if NUMBA_ENABLED:
            t_nb, negs_nb = min(
                (run_once(sturm_pivots_many, disc, lams) for _ in range(args.repeats)),
                key=lambda r: r[0],
            )
            if not np.array_equal(negs_nb, run_once(sturm_pivots_many_python, disc, lams)[1]):
                raise AssertionError("kernel outputs disagree")
            print(f"{disc.n_free:>8} {t_nb:>12.4f} {t_py:>12.4f} {t_py / t_nb:>8.1f}")
        else:
            print(f"{disc.n_free:>8} {'-':>12} {t_py:>12.4f} {'-':>8}")


if __name__ == "__main__":
    main()
