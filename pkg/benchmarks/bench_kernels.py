"""Compare the compiled and pure-Python compression kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--number 2000]

Times the three kernel entry points on typical canonical renderings, then
one grid-scan cell end to end with each backend swapped in. Prints one line
per case with microseconds per call and the speedup.
"""

import argparse
import sys
import timeit

import numpy as np

from progderiv import kernels
from progderiv.derivative import NeighborhoodSpec, cdq_distances, pd_approx
from progderiv.distance import Compressor
from progderiv.sut import builtin
from progderiv.values import Real, Sequence


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def kernel_cases(backend):
    x = b"S[R:2.95,R:3.05]"
    y = b"S[R:2.9614,R:3.0187]"
    ys = [f"S[R:{a:.4f},R:{b:.4f}]".encode() for a, b in np.random.default_rng(0).uniform(2, 4, (32, 2))]
    big = np.random.default_rng(1).bytes(4096)
    return {
        "compressed_size (16 B)": lambda: backend.compressed_size(x, 9, 31),
        "compressed_size (4 KiB)": lambda: backend.compressed_size(big, 9, 31),
        "ncd_pair": lambda: backend.ncd_pair(x, y, 9, 31),
        "ncd_one_to_many (32)": lambda: backend.ncd_one_to_many(x, ys, 9, 31),
    }


def scan_cell():
    sut = builtin("sum1")
    a = Sequence([Real(2.95), Real(3.05)])
    nbhd = NeighborhoodSpec(32, 0.075, (20190, 49, 50))

    def run():
        d_out, d_in = cdq_distances(Compressor("gzip", 9))
        pd_approx(sut, d_out, d_in, a, nbhd)
    return run


def use(backend):
    for name in ("compressed_size", "ncd_pair", "ncd_one_to_many"):
        setattr(kernels, name, getattr(backend, name))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args(argv)

    if kernels.compiled_backend is None:
        print("compiled kernels are not built; only the Python backend is available", file=sys.stderr)
        return 1
    cb, pb = kernels.compiled_backend, kernels.python_backend
    print(f"{'case':28s} {'compiled us':>12s} {'python us':>12s} {'speedup':>8s}")
    compiled_cases, python_cases = kernel_cases(cb), kernel_cases(pb)
    for name in compiled_cases:
        tc = best_of(compiled_cases[name], args.repeat, args.number)
        tp = best_of(python_cases[name], args.repeat, args.number)
        print(f"{name:28s} {tc * 1e6:12.2f} {tp * 1e6:12.2f} {tp / tc:8.2f}")

    original = kernels.active
    cell = scan_cell()
    n = max(1, args.number // 100)
    use(cb)
    tc = best_of(cell, args.repeat, n)
    use(pb)
    tp = best_of(cell, args.repeat, n)
    use(original)
    print(f"{'scan cell (32 neighbours)':28s} {tc * 1e6:12.2f} {tp * 1e6:12.2f} {tp / tc:8.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
