"""Time the compiled and pure-Python kernel backends side by side.

    python3 benchmarks/bench_kernels.py [--repeats N]

Prints one row per (kernel, size) with the mean time per call for each
backend and the speed-up of the compiled core.
"""
import argparse
import timeit

import numpy as np

from afigan import _kernels, afi, linalg
from afigan.randsrc import Rng, dirichlet_rows


def cases():
    for b in (8, 16, 32, 64):
        feats = Rng(b).normal((b, 8))
        dist = linalg.normalize_distance_matrix(linalg.pairwise_distance_matrix(feats))
        centred = linalg.double_center(dist)
        alphas = np.abs(Rng(b + 1).normal((b, 5))) + 0.1
        yield "pairwise_distances", b, lambda f=feats: linalg.pairwise_distance_matrix(f)
        yield "jacobi_eigenvalues", b, lambda c=centred: linalg.symmetric_eigenvalues(c)
        yield "dirichlet_rows", b, lambda a=alphas: dirichlet_rows(a, Rng(0))
        yield "afi_augment", b, lambda f=feats: afi.afi_augment(f, afi.AfiConfig(), Rng(0))
    yield "normal_draws", 100_000, lambda: Rng(0).normal(100_000)


def measure(fn, repeats):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)
    backends = _kernels.available_backends()
    header = f"{'kernel':20s} {'size':>7s}" + "".join(f" {n + ' (ms)':>14s}" for n in backends)
    if len(backends) == 2:
        header += f" {'speed-up':>9s}"
    print(header)
    for name, size, fn in cases():
        times = []
        for backend in backends:
            with _kernels.use_backend(backend):
                times.append(measure(fn, args.repeats))
        row = f"{name:20s} {size:7d}" + "".join(f" {t * 1e3:14.3f}" for t in times)
        if len(times) == 2:
            row += f" {times[1] / times[0]:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
