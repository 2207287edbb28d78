"""Compare the compiled and pure-Python encircled-energy kernels.

    python benchmarks/bench_kernels.py [--modes N] [--spectra K] [--repeat R]

Reports the best-of-R time per call for each kernel and backend, the
speedup, and the largest disagreement between the two backends.
"""
import argparse
import math
import sys
import timeit

import numpy as np

from vortexdiv import _kernels_py, ee, kernels
from vortexdiv.spectrum import ModeSpectrum

try:
    from vortexdiv import _kernels as compiled
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")

E0 = 1.0 - math.exp(-1.0)


def spectra(count, n_modes, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)
        out.append(ModeSpectrum({(n, 1): v for n, v in enumerate(c)}))
    return out


def cases(specs):
    zs = np.linspace(-ee.Z_MAX, ee.Z_MAX, ee.N_SCAN)
    lays = [ee.layout_for(s) for s in specs]
    return {
        "density": lambda impl: [kernels.density(l, 0.7, 3.1, impl=impl) for l in lays],
        "cumulative": lambda impl: [kernels.cumulative(l, 0.7, 9.3, impl=impl) for l in lays],
        "solve_t": lambda impl: [kernels.solve_t(l, 0.7, E0, 1.0, impl=impl) for l in lays],
        "objective_scan": lambda impl: [kernels.objective_scan(l, E0, zs, 0.0, impl=impl)[0]
                                        for l in lays],
    }


def disagreement(a, b):
    a, b = np.concatenate([np.ravel(x) for x in a]), np.concatenate([np.ravel(x) for x in b])
    ok = np.isfinite(a) & np.isfinite(b)
    return float(np.max(np.abs(a[ok] - b[ok]) / np.maximum(np.abs(b[ok]), 1e-300)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, default=10)
    ap.add_argument("--spectra", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    specs = spectra(args.spectra, args.modes, args.seed)
    print(f"{args.spectra} spectra, N = {args.modes}, best of {args.repeat}")
    print(f"{'kernel':<16}{'compiled [us]':>15}{'python [us]':>15}{'speedup':>10}{'max rel diff':>15}")
    for name, fn in cases(specs).items():
        times = {}
        for label, impl in (("compiled", compiled), ("python", _kernels_py)):
            best = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
            times[label] = best / len(specs) * 1e6
        diff = disagreement(fn(compiled), fn(_kernels_py))
        print(f"{name:<16}{times['compiled']:15.1f}{times['python']:15.1f}"
              f"{times['python'] / times['compiled']:10.1f}{diff:15.2e}")

    # end to end, through the public API with the backend swapped underneath
    saved = kernels.backend
    try:
        row = {}
        for label, impl in (("compiled", compiled), ("python", _kernels_py)):
            kernels.backend = impl
            row[label] = min(timeit.repeat(lambda: [ee.m2_ee(s) for s in specs],
                                           number=1, repeat=args.repeat)) / len(specs) * 1e6
    finally:
        kernels.backend = saved
    print(f"{'m2_ee':<16}{row['compiled']:15.1f}{row['python']:15.1f}"
          f"{row['python'] / row['compiled']:10.1f}{'':>15}")


if __name__ == "__main__":
    main()
