"""Compare the compiled and pure-Python GIPSY kernels.

Usage:
    python benchmarks/bench_kernels.py [--repeat N] [--sizes 16,64,256]

Each size n is the number of prisms; the compressed grid then has up to
(2n+1)^2 cells. Both backends are checked for identical output before timing.
End-to-end ``gipsy_locate`` timings use whichever backend the package selected.
"""

from __future__ import annotations

import argparse
import random
import timeit

import numpy as np

from newsgeo.geo import GeoBoundingBox, GeoCoordinate, WeightedPlace
from newsgeo.gipsy import BACKEND, gipsy_locate
from newsgeo.gipsy import _kernels_py as py

try:
    from newsgeo.gipsy import _kernels as cy
except ImportError:
    cy = None


def kernel_inputs(n, rng):
    ncols = nrows = 2 * n + 1
    ix = np.sort(rng.integers(0, ncols + 1, size=(n, 2)), axis=1)
    iy = np.sort(rng.integers(0, nrows + 1, size=(n, 2)), axis=1)
    h = rng.integers(1, 10, size=n)
    args = (ix[:, 0].copy(), ix[:, 1].copy(), iy[:, 0].copy(), iy[:, 1].copy(), h.astype(np.int64), ncols, nrows)
    return [np.ascontiguousarray(a, dtype=np.int64) if isinstance(a, np.ndarray) else a for a in args]


def random_places(n, seed):
    rng = random.Random(seed)
    out = []
    for k in range(n):
        s, nn = sorted(rng.uniform(-10, 10) for _ in range(2))
        w, e = sorted(rng.uniform(-10, 10) for _ in range(2))
        out.append(WeightedPlace(f"p{k}", GeoCoordinate((s + nn) / 2, (w + e) / 2), GeoBoundingBox(s, nn, w, e), rng.randint(1, 9)))
    return out


def best(fn, repeat):
    t = timeit.Timer(fn)
    number, _ = t.autorange()
    return min(t.repeat(repeat, number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="16,64,256")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)

    if cy is None:
        print("compiled kernels not built; only the pure-Python backend is timed")
    print(f"{'kernel':<22}{'prisms':>7}{'cells':>9}{'python ms':>12}{'cython ms':>12}{'speedup':>9}")
    for n in sizes:
        kin = kernel_inputs(n, rng)
        elev_py = py.accumulate_elevation(*kin)
        mask = (elev_py == elev_py.max()).astype(np.uint8)
        rows = [
            ("accumulate_elevation", lambda: py.accumulate_elevation(*kin), cy and (lambda: cy.accumulate_elevation(*kin))),
            ("label_components", lambda: py.label_components(mask, True), cy and (lambda: cy.label_components(mask, True))),
        ]
        if cy is not None:
            assert np.array_equal(cy.accumulate_elevation(*kin), elev_py)
            lp, cp = py.label_components(mask, True)
            lc, cc = cy.label_components(mask, True)
            assert cp == cc and np.array_equal(lp, lc)
        for name, fpy, fcy in rows:
            tp = best(fpy, args.repeat) * 1e3
            tc = best(fcy, args.repeat) * 1e3 if fcy else float("nan")
            print(f"{name:<22}{n:>7}{elev_py.size:>9}{tp:>12.3f}{tc:>12.3f}{tp / tc:>8.1f}x")

    print(f"\ngipsy_locate end to end (backend: {BACKEND})")
    for n in sizes:
        places = random_places(n, n)
        print(f"  {n:>4} places: {best(lambda: gipsy_locate(places), args.repeat) * 1e3:9.3f} ms")


if __name__ == "__main__":
    main()
