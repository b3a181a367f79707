"""Compare the numba and numpy backends of the smooth-symbol matrix contraction.

Two measurements:

* the contraction kernel alone on random data shaped like a degree-20 ball run,
  both backends in one process (results must agree);
* an end-to-end smooth trace, once per backend in a subprocess so the
  ``SEMITRACE_BACKEND`` switch is exercised the way users set it.

Usage::

    python3 benchmarks/bench_kernels.py [--degree 20] [--repeat 3]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from semitrace import _kernels
from semitrace.operators import BasisIndexer


def kernel_data(n: int, degree: int, inner: int, nk: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    rows = BasisIndexer(n, degree).array
    cols = BasisIndexer(n, inner).array
    span = degree + inner + 1
    shape = (nk,) + (span,) * n
    C = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    W = rng.random(nk)
    PB = rng.random((len(rows), nk))
    PG = rng.random((len(cols), nk))
    return C, W, PB, PG, rows.astype(np.int64), cols.astype(np.int64), n, degree


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


END_TO_END = """
import time
from semitrace import _kernels
from semitrace.geometry import SpaceParams
from semitrace.operators import smooth_semicommutator_trace
from semitrace.symbols import bump
f = bump(2, 0.6, [0.1, 0.0]); g = bump(2, 0.6, [0.0, 0.1])
smooth_semicommutator_trace(SpaceParams(2, 3.0), f, g, max_degree=4, inner_degree=4)
t0 = time.perf_counter()
v, _ = smooth_semicommutator_trace(SpaceParams(2, 3.0), f, g, max_degree={deg}, inner_degree={inner})
print(_kernels.BACKEND, time.perf_counter() - t0, repr(v))
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degree", type=int, default=20)
    ap.add_argument("--inner", type=int, default=30)
    ap.add_argument("--nodes", type=int, default=2000, help="quadrature nodes in the kernel test")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()

    data = kernel_data(2, args.degree, args.inner, args.nodes)
    print(f"kernel: {len(data[4])} x {len(data[5])} entries, {args.nodes} nodes")
    t_np, ref = best_of(lambda: _kernels.smooth_matrix_contract_numpy(*data), args.repeat)
    print(f"  numpy  {t_np:8.3f} s")
    try:
        from numba import njit
        jit = njit(cache=True)(_kernels._contract_loop)
        args_t = (_kernels.node_axis_last(data[0], data[6]),) + data[1:]
        jit(*args_t)  # compile outside the timing
        t_nb, out = best_of(lambda: jit(_kernels.node_axis_last(data[0], data[6]), *data[1:]),
                            args.repeat)
        print(f"  numba  {t_nb:8.3f} s   speed-up x{t_np / t_nb:.1f}   "
              f"max |diff| {np.max(np.abs(out - ref)):.1e}")
    except ImportError:
        print("  numba not installed")

    if args.skip_end_to_end:
        return
    print(f"end to end: smooth trace, degree {args.degree}, inner degree {args.inner}")
    code = END_TO_END.format(deg=args.degree, inner=args.inner)
    for backend in ("numba", "numpy"):
        env = dict(os.environ, SEMITRACE_BACKEND=backend)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
        if res.returncode:
            print(f"  {backend}: failed\n{res.stderr}")
            continue
        name, secs, val = res.stdout.split(maxsplit=2)
        print(f"  {name:6s} {float(secs):8.3f} s   trace {val.strip()}")


if __name__ == "__main__":
    main()
