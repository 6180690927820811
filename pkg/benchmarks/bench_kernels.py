"""Time the compiled and numpy/Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Each row reports the best of --repeat runs and checks that both backends return the same result.
"""

import argparse
import time

import numpy as np

from qmertens import constants, kernels
from qmertens.fields import lookup_field
from qmertens.ideals import phi_table
from qmertens.ring import AlgebraicInt
from qmertens.sector import MODE_COUNT, MODE_PHI_SHIFT, Sector, binned_sum


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(scale):
    f = lookup_field(-4)
    one = AlgebraicInt(1, 0, f)
    k = AlgebraicInt(1, 1, f)
    X = int(2 * 10**6 * scale)
    R = 400 * scale**0.5
    s = Sector(f, one, "pi/3", R)
    full = Sector(f, one, "2pi", 150 * scale**0.5)
    P = int(3000 * scale)
    return [
        (f"phi_sieve X={X}", lambda b: np.asarray(kernels.get_backend(b).phi_sieve(f.B, f.C, X)[0])),
        (f"sector_bins count R={R:.0f}", lambda b: binned_sum(s, MODE_COUNT, backend=b).bins),
        (f"sector_bins phi(a)phi(a+k) R={full.R2 ** 0.5:.0f}",
         lambda b: binned_sum(full, MODE_PHI_SHIFT, k=k, backend=b).bins),
        (f"pair_sum X={P}", lambda b: constants.series_route(k, one, X=P, backend=b)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    a = ap.parse_args()
    names = kernels.available()
    print(f"backends: {', '.join(names)}")
    # warm the shared phi table so sector timings measure the kernels only
    phi_table(lookup_field(-4), int(160**2 * a.scale) + 10)
    header = f"{'kernel':40s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else "")
    print(header)
    for label, fn in cases(a.scale):
        times, outs = [], []
        for n in names:
            t, out = best_of(lambda: fn(n), a.repeat)
            times.append(t)
            outs.append(out)
        same = all(np.array_equal(np.asarray(outs[0]), np.asarray(o)) or
                   (np.ndim(o) == 0 and abs(float(outs[0]) - float(o)) <= 1e-13) for o in outs[1:])
        row = f"{label:40s}" + "".join(f"{t:11.4f}s" for t in times)
        if len(names) > 1:
            row += f"{times[names.index('python')] / times[names.index('cython')]:11.1f}x"
        print(row + ("" if same else "   MISMATCH"))


if __name__ == "__main__":
    main()
