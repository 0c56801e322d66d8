"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times the two hot paths behind MAXSURF_BACKEND: the red-black SOR sweep of
the Plateau solver and the Enneper-graph quartic solve, plus an end-to-end
Plateau solve through each backend.

Run:  python3 benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from maxsurf._backend import _numba_available
from maxsurf._kernels import numpy_impl


def sweep_problem(n):
    rng = np.random.default_rng(0)
    u = rng.normal(size=(n, n))
    cE = rng.uniform(1.0, 3.0, (n, n))
    cN = rng.uniform(1.0, 3.0, (n, n))
    cW = np.roll(cE, 1, 0)
    cS = np.roll(cN, 1, 1)
    h = 2.0 / n
    D = (cE + cW + cN + cS) / h ** 2
    ii, jj = np.meshgrid(np.arange(1, n - 1), np.arange(1, n - 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    red = (ii + jj) % 2 == 0
    return (u, cE, cW, cN, cS, D, ii[red], jj[red], ii[~red], jj[~red], 1.0 / h ** 2)


def time_fn(fn, *args, repeats=3, **kw):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args, **kw)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sweeps(impls, n, sweeps):
    print(f"\nred-black SOR sweeps ({n}x{n} grid, {sweeps} sweeps)")
    base = None
    for name, impl in impls:
        args = sweep_problem(n)
        t = time_fn(lambda: impl.picard_sweeps(args[0].copy(), *args[1:], 1.8, sweeps))
        rate = sweeps * (n - 2) ** 2 / t / 1e6
        speed = "" if base is None else f"  ({base / t:.1f}x vs numpy)"
        base = base or t
        print(f"  {name:>6}: {t * 1e3:8.1f} ms   {rate:8.1f} Mnode-updates/s{speed}")


def bench_e2(impls, n):
    rng = np.random.default_rng(1)
    x1 = rng.uniform(-3, 3, n)
    x2 = rng.uniform(-3, 3, n)
    print(f"\nEnneper quartic solve ({n} points)")
    base = None
    for name, impl in impls:
        impl.e2_sigma(x1[:10], x2[:10])  # warm any JIT
        t = time_fn(lambda: impl.e2_sigma(x1, x2))
        speed = "" if base is None else f"  ({base / t:.1f}x vs numpy)"
        base = base or t
        print(f"  {name:>6}: {t * 1e3:8.1f} ms   {n / t / 1e6:8.2f} Mroots/s{speed}")


def bench_plateau(h):
    import os
    import subprocess
    import sys

    print(f"\nend-to-end Plateau solve (unit disc, h = 1/{round(1 / h)})")
    code = (
        "import numpy as np, time\n"
        "from maxsurf import maxgraph\n"
        "h = %r\n"
        "n = int(round(2.0/h)) + 1\n"
        "mg = maxgraph.GridGraph.from_function((-1.0, -1.0), h, n, n,\n"
        "    lambda X, Y: 0.0*X, maxgraph.disc_mask(1.0))\n"
        "bnd = lambda x, y: np.arcsinh(np.hypot(x - 3.0, y))\n"
        "maxgraph.solve_plateau(mg, bnd)  # warm jit\n"
        "t0 = time.perf_counter()\n"
        "sol, stats = maxgraph.solve_plateau(mg, bnd)\n"
        "print('    %%.2f s (sweeps %%d, newton %%d)' %% (time.perf_counter()-t0, "
        "stats.sweeps, stats.newton_steps))\n" % h)
    for backend in ("numba", "numpy"):
        if backend == "numba" and not _numba_available():
            continue
        env = dict(os.environ, MAXSURF_BACKEND=backend)
        print(f"  {backend:>6}:", flush=True)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller sizes")
    args = ap.parse_args()

    impls = [("numpy", numpy_impl)]
    if _numba_available():
        from maxsurf._kernels import numba_impl
        args_w = sweep_problem(16)
        numba_impl.picard_sweeps(args_w[0].copy(), *args_w[1:], 1.8, 2)  # JIT warmup
        impls.append(("numba", numba_impl))
    else:
        print("numba not importable; numpy only")

    n_grid = 129 if args.quick else 257
    n_sweep = 100 if args.quick else 300
    n_pts = 100_000 if args.quick else 1_000_000
    bench_sweeps(impls, n_grid, n_sweep)
    bench_e2(impls, n_pts)
    bench_plateau(1 / 32 if args.quick else 1 / 64)


if __name__ == "__main__":
    main()
