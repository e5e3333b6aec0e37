"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Prints the median wall time per call for each available backend and the
speed-up of the compiled one.
"""

import argparse
import statistics
import time

import numpy as np

from spinres.constants import MU_B_MHZ_PER_T
from spinres.kernels import available_backends


def timed(fn, repeat):
    fn()  # warm-up
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def cases(rng):
    for n in (2, 8, 16, 32):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = a + a.conj().T
        yield f"jacobi_eigh n={n}", lambda k, h=h: k.jacobi_eigh(h)
    g = np.array([8.37, 7.25, 2.51, 2.04])
    w = np.array([74.9, 96.6, 101.0, 136.0])
    c = np.array([4.02, 4.98, 6.07, 6.16])
    b = np.linspace(0.0, 0.2, 1001)
    yield "linewidth_model 1001x4", lambda k: k.linewidth_model(b, 7.746, 4400.0, g, w, c, MU_B_MHZ_PER_T)
    yield "linewidth_jacobian 1001x4", lambda k: k.linewidth_jacobian(b, 4400.0, g, w, c, MU_B_MHZ_PER_T)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    backends = available_backends()
    names = sorted(backends)
    print(f"{'kernel':28s}" + "".join(f"{n:>14s}" for n in names) + ("   speed-up" if len(names) > 1 else ""))
    for label, call in cases(np.random.default_rng(0)):
        times = {n: timed(lambda: call(backends[n]), args.repeat) for n in names}
        row = f"{label:28s}" + "".join(f"{1e6 * times[n]:12.1f}us" for n in names)
        if "cython" in times:
            row += f"   {times['python'] / times['cython']:7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
