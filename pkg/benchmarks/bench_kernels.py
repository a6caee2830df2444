"""Compare the compiled and pure-Python propagation kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--dim 64] [--steps 5000] [--repeat 3]

Each kernel is run on identical inputs with both backends; the table reports
the best wall time of ``--repeat`` runs, the speed-up, and the largest
relative difference between the two results.
"""

import argparse
import math
import time

import numpy as np

from etapt import kernels
from etapt.fock import FockSpace, su11_generators
from etapt.model import metric


def best_time(fn, repeat):
    best, result = math.inf, None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def rel_diff(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.max(np.abs(a)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def workloads(dim, steps, gamma=math.pi / 6, dt=1e-3):
    t = 0.5 * dt * np.arange(2 * steps + 1)
    omega = 1.0 + 0.3 * np.sin(2 * t)
    g = 0.5 * omega * math.tan(gamma)
    h0, hp, hm = omega.astype(complex), 1j * g, 1j * g
    width = dim + 3 * dim
    psi_wide = metric(FockSpace(width, 0), gamma, -0.5).entries[:, 0]
    space = FockSpace(dim, 8)
    K0, Kp, Km = su11_generators(space)
    mats = np.stack([K0.entries, Kp.entries, Km.entries])
    coeffs = np.stack([h0, hp, hm], axis=1)
    psi = psi_wide[:dim].copy()
    coords, _ = kernels.get_backend("python").wei_norman_rk4(h0, hp, hm, dt)
    return {
        "wei_norman_rk4": lambda b: b.wei_norman_rk4(h0, hp, hm, dt)[0],
        "su11_lift": lambda b: b.su11_lift(coords, psi_wide, dim),
        "rk4_dense": lambda b: b.rk4_dense(coeffs, mats, psi, dt)[0],
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--steps", type=int, default=5000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    python = kernels.get_backend("python")
    try:
        compiled = kernels.get_backend("compiled")
    except ImportError:
        compiled = None
        print("compiled extension not available; timing the Python backend only")

    print(f"dim={args.dim} steps={args.steps} repeat={args.repeat} default backend={kernels.BACKEND}")
    print(f"{'kernel':<16}{'python [s]':>12}{'compiled [s]':>14}{'speed-up':>10}{'rel. diff':>12}")
    for name, fn in workloads(args.dim, args.steps).items():
        t_py, r_py = best_time(lambda: fn(python), args.repeat)
        if compiled is None:
            print(f"{name:<16}{t_py:>12.4f}{'-':>14}{'-':>10}{'-':>12}")
            continue
        t_c, r_c = best_time(lambda: fn(compiled), args.repeat)
        print(f"{name:<16}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>10.1f}{rel_diff(r_py, r_c):>12.1e}")


if __name__ == "__main__":
    main()
