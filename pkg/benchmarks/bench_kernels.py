"""Compiled versus NumPy kernels on a normal-shock sized field.

Usage::

    python benchmarks/bench_kernels.py [--elements 100] [--p 3] [--nv 32] [--nz 32]
                                       [--repeat 5] [--threads 1]

Prints the best wall time per kernel and per full RK4 step for each
available backend, plus the speedup of the compiled core.
"""
import argparse
import time

import numpy as np

from bgkfr import kernels
from bgkfr.config import Config
from bgkfr.solver import setup


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_backend(name, args):
    kernels.use_backend(name)
    cfg = Config(case="normal_shock", mach=3.8, p=args.p, n_elements=args.elements,
                 n_v=args.nv, n_zeta=args.nz, kn=1.0, t_final=1.0, threads=args.threads)
    prob = setup(cfg)
    disc, solver = prob.disc, prob.solver
    f = prob.f0.copy()
    n_e, n_s = disc.shape[:2]
    f3 = f.reshape(n_e, n_s, -1)
    b = disc.basis
    out = np.empty_like(f3)
    gl, gr = (np.ascontiguousarray(g) for g in disc.bc.ghosts(f3))
    Q = disc.moments(f)
    dt = solver.time_step(Q)
    res = {
        "transport_rhs": lambda: kernels.transport_rhs(f3, b.D, b.gL_deriv, b.gR_deriv,
                                                       disc.rdx, disc.u_q, gl, gr, out),
        "squeeze_limit": lambda: kernels.squeeze_limit(f3.copy(), b.mean_weights, 1e-12),
        "moments": lambda: disc.moments(f),
        "equilibrium": lambda: solver.equilibrium_factors(Q),
        "rhs": lambda: solver.rhs(f),
        "rk4_step": lambda: solver.rk4_step(f.copy(), dt),
    }
    return {k: best_of(fn, args.repeat) for k, fn in res.items()}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--elements", type=int, default=100)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--nv", type=int, default=32)
    ap.add_argument("--nz", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    kernels.set_num_threads(args.threads)
    results = {name: bench_backend(name, args) for name in kernels.available()}
    names = list(next(iter(results.values())))
    header = f"{'kernel':<14}" + "".join(f"{b + ' [ms]':>16}" for b in results)
    if "cython" in results:
        header += f"{'speedup':>10}"
    print(f"field {args.elements} x {args.p + 1} x {args.nv} x {args.nz}, "
          f"threads={args.threads}, best of {args.repeat}")
    print(header)
    for k in names:
        row = f"{k:<14}" + "".join(f"{results[b][k] * 1e3:>16.3f}" for b in results)
        if "cython" in results:
            row += f"{results['python'][k] / results['cython'][k]:>10.2f}"
        print(row)


if __name__ == "__main__":
    main()
