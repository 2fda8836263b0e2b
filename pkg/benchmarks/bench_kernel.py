"""Compare the compiled graph-field kernel with the numpy fallback.

Usage: python3 benchmarks/bench_kernel.py [--nodes N] [--repeat R]
"""

from __future__ import annotations

import argparse
import timeit
from fractions import Fraction

import numpy as np

from admflux import kernel
from admflux.hypersurface_geometry import GraphFunction
from admflux.sphere_poly import SpherePolynomial
from admflux.spherical_frame import random_sphere_points


def inputs(n: int, r: float = 1e3, seed: int = 0):
    pts = random_sphere_points(n, np.random.default_rng(seed))
    f = GraphFunction.single(Fraction(1, 3), SpherePolynomial.parse("x1*x2^3"))
    jet = f.jet(r, pts)
    return r * pts, jet.cartesian_gradient(), jet.cartesian_hessian()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--mass", type=float, default=1.0)
    args = ap.parse_args()

    if kernel.graph_fields_compiled is None:
        print("compiled kernel not built; only the numpy path is available")
    print(f"{'nodes':>8}  {'numpy [ms]':>11}  {'cython [ms]':>11}  {'speedup':>7}  {'max |diff|':>10}")
    for n in args.nodes:
        x, grad, hess = inputs(n)
        py = lambda: kernel.graph_fields_python(x, args.mass, grad, hess)  # noqa: E731
        t_py = min(timeit.repeat(py, number=1, repeat=args.repeat)) * 1e3
        if kernel.graph_fields_compiled is None:
            print(f"{n:>8}  {t_py:>11.2f}  {'-':>11}  {'-':>7}  {'-':>10}")
            continue
        cy = lambda: kernel.graph_fields_compiled(x, args.mass, grad, hess)  # noqa: E731
        t_cy = min(timeit.repeat(cy, number=1, repeat=args.repeat)) * 1e3
        diff = max(float(np.max(np.abs(a - b))) for a, b in zip(py(), cy()))
        print(f"{n:>8}  {t_py:>11.2f}  {t_cy:>11.2f}  {t_py / t_cy:>7.1f}  {diff:>10.1e}")


if __name__ == "__main__":
    main()
