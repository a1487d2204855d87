"""Compare the compiled and pure-Python pinching kernels.

Times ``pinch_td_batch`` and ``pinch_distribution_batch`` on stacks of
Haar unitaries, checks that both backends agree, and times one end-to-end
exact Clifford average under each backend (the pure path is forced with
``QEXTRAP_PURE_PYTHON=1`` in a subprocess).

Usage::

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --keys 4096 --dims 2 4 8 16 --repeat 5
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from qextrap import _accel, _pykernels
from qextrap.qcore import haar_unitary, random_density
from qextrap.rng import stream

END_TO_END = """
import time
from qextrap import _accel
from qextrap.bases import build_family
from qextrap.hiding import expected_pinch_distance
from qextrap.qcore import random_density
from qextrap.rng import stream
fam = build_family("clifford", 2)
fam.unitaries()
rng = stream(1)
a, b = random_density(4, rng).mat, random_density(4, rng).mat
t = time.perf_counter()
for _ in range({pairs}):
    v = expected_pinch_distance(fam, a, b).expected_td
print(_accel.BACKEND, time.perf_counter() - t, repr(v))
"""


def _inputs(keys: int, dim: int, seed: int = 0):
    rng = stream(seed, dim)
    u = np.stack([haar_unitary(dim, rng) for _ in range(keys)])
    a, b = random_density(dim, rng).mat, random_density(dim, rng).mat
    return u, a, b


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(keys: int, dims, repeat: int) -> list[dict]:
    c = _accel.compiled_kernels
    rows = []
    for dim in dims:
        u, a, b = _inputs(keys, dim)
        delta = a - b
        row = {"dim": dim, "keys": keys,
               "python_td": _best(lambda: _pykernels.pinch_td_batch(u, delta), repeat),
               "python_dist": _best(lambda: _pykernels.pinch_distribution_batch(u, a), repeat)}
        if c is not None:
            row["cython_td"] = _best(lambda: c.pinch_td_batch(u, delta), repeat)
            row["cython_dist"] = _best(lambda: c.pinch_distribution_batch(u, a), repeat)
            row["max_diff"] = float(max(
                np.max(np.abs(c.pinch_td_batch(u, delta) - _pykernels.pinch_td_batch(u, delta))),
                np.max(np.abs(c.pinch_distribution_batch(u, a) - _pykernels.pinch_distribution_batch(u, a)))))
        rows.append(row)
    return rows


def end_to_end(pairs: int, pure: bool) -> str:
    env = dict(os.environ)
    env.pop("QEXTRAP_PURE_PYTHON", None)
    if pure:
        env["QEXTRAP_PURE_PYTHON"] = "1"
    res = subprocess.run([sys.executable, "-c", END_TO_END.format(pairs=pairs)], env=env,
                         capture_output=True, text=True, check=True)
    return res.stdout.strip()


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--keys", type=int, default=2048, help="unitaries per batch")
    p.add_argument("--dims", type=int, nargs="+", default=[2, 4, 8, 16])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--pairs", type=int, default=20, help="state pairs in the end-to-end run")
    args = p.parse_args(argv)

    print(f"default backend: {_accel.BACKEND}")
    if _accel.compiled_kernels is None:
        print("compiled extension not available; timing the Python kernels only")
    print(f"{'dim':>4} {'keys':>6} {'py td':>10} {'cy td':>10} {'speedup':>8} "
          f"{'py dist':>10} {'cy dist':>10} {'speedup':>8} {'max diff':>10}")
    for r in kernel_table(args.keys, args.dims, args.repeat):
        if "cython_td" in r:
            print(f"{r['dim']:>4} {r['keys']:>6} {r['python_td']:>10.5f} {r['cython_td']:>10.5f} "
                  f"{r['python_td'] / r['cython_td']:>8.2f} {r['python_dist']:>10.5f} {r['cython_dist']:>10.5f} "
                  f"{r['python_dist'] / r['cython_dist']:>8.2f} {r['max_diff']:>10.2e}")
        else:
            print(f"{r['dim']:>4} {r['keys']:>6} {r['python_td']:>10.5f} {'-':>10} {'-':>8} "
                  f"{r['python_dist']:>10.5f} {'-':>10} {'-':>8} {'-':>10}")

    print(f"\nexact clifford:2 average over {args.pairs} pairs (backend, seconds, value):")
    for pure in (False, True):
        print("  " + end_to_end(args.pairs, pure))
    return 0


if __name__ == "__main__":
    sys.exit(main())
