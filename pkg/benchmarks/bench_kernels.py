#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two inner fixed-point kernels and a full cell solve on
representative problem sizes. Run:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from vcells import kernels
from vcells.network import SystemParams, generate_network
from vcells.solver import SolverOptions, cell_from_instance


def _bench(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_joint_inner(cell, sweeps=200):
    U, B = cell.gain2.shape
    slope = np.ones((U, B))
    P0 = np.repeat(cell.max_power_w[:, None] / B, B, axis=1)
    args = (cell.gain2, cell.noise_w, cell.max_power_w, slope)

    def run_nb():
        kernels._joint_inner_nb(*args, P0.copy(), 1e6, 0.0, sweeps, 1e-9)

    def run_np():
        kernels.joint_inner_np(*args, P0.copy(), 1e6, 0.0, sweeps, 1e-9)

    return run_nb, run_np


def bench_assigned_inner(cell, sweeps=500):
    U = cell.n_users
    rng = np.random.default_rng(0)
    assign = rng.integers(0, cell.n_bs, size=U)
    gathered = np.ascontiguousarray(cell.gain2[:, assign])
    gsel = np.ascontiguousarray(cell.gain2[np.arange(U), assign])
    nsel = np.ascontiguousarray(cell.noise_w[assign])
    slope = np.ones(U)
    p0 = cell.max_power_w.copy()

    def run_nb():
        kernels._assigned_inner_nb(gathered, gsel, nsel, cell.max_power_w, slope, p0.copy(), 0.0, sweeps)

    def run_np():
        kernels.assigned_inner_np(gathered, gsel, nsel, cell.max_power_w, slope, p0.copy(), 0.0, sweeps)

    return run_nb, run_np


def main():
    if kernels.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"numba {kernels.numba.__version__}, numpy {np.__version__}")
    print(f"{'kernel':<28}{'size':<12}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for n_bs, n_users in ((3, 8), (6, 30), (8, 60)):
        inst = generate_network(SystemParams(), n_bs, n_users, seed=1)
        cell = cell_from_instance(inst, range(n_users), range(n_bs))
        for name, maker in (("joint_inner x200 sweeps", bench_joint_inner),
                            ("assigned_inner x500 sweeps", bench_assigned_inner)):
            run_nb, run_np = maker(cell)
            run_nb()  # compile before timing
            t_nb = _bench(run_nb)
            t_np = _bench(run_np)
            print(f"{name:<28}{f'{n_users}x{n_bs}':<12}{t_nb * 1e3:>8.2f}ms{t_np * 1e3:>8.1f}ms{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
