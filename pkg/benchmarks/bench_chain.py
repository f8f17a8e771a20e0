#!/usr/bin/env python3
"""Benchmark the back-action chain kernel: numba njit vs pure numpy.

Builds a representative readout instrument, pre-draws the per-cycle uniforms
and times both backends on the identical workload. Run with the package
installed:

    python benchmarks/bench_chain.py [--cycles N] [--repeats R]
"""

import argparse
import time

import numpy as np

from spinturnstile import _kernels
from spinturnstile.cycle import induced_instrument
from spinturnstile.model import SpinModelParams, build_total_hamiltonian


def build_workload(n_cycles: int, seed: int = 0):
    params = SpinModelParams(
        b_field=(0.0, 0.0, 1e-4), g_nuclear=1.2314e-3, g_ancilla=2.0,
        exchange=3e5, hyperfine_ancilla=1e5, hyperfine_gate=3e5,
    )
    h = build_total_hamiltonian(params)
    inst = induced_instrument([0, 0, 1.0], [1.0, 0, 0], h, 4e-6, 1.0, 1e-10, 1e9)
    kp, kn = inst.kraus_stacks()
    rng = np.random.default_rng(seed)
    rho0 = np.eye(4, dtype=complex) / 4
    uniforms = rng.random(n_cycles)
    return kp, kn, rho0, uniforms


def time_backend(fn, args, repeats):
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cycles", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    kp, kn, rho0, uniforms = build_workload(args.cycles)
    work = (kp, kn, rho0, uniforms)

    print(f"chain length: {args.cycles} cycles, {kp.shape[0]}+{kn.shape[0]} Kraus operators, "
          f"best of {args.repeats}")

    t_np, res_np = time_backend(_kernels.run_chain_numpy, work, args.repeats)
    print(f"numpy backend : {t_np:8.3f} s  ({args.cycles / t_np:10.0f} cycles/s)")

    try:
        _kernels.run_chain_numba(kp, kn, rho0, uniforms[:100])  # warm up the JIT
        t_nb, res_nb = time_backend(_kernels.run_chain_numba, work, args.repeats)
        print(f"numba backend : {t_nb:8.3f} s  ({args.cycles / t_nb:10.0f} cycles/s)")
        print(f"speedup       : {t_np / t_nb:8.1f} x")
        assert np.array_equal(res_np[0], res_nb[0]), "backends disagree on outcomes"
        print("outcome sequences identical across backends")
    except RuntimeError as exc:
        print(f"numba backend : skipped ({exc})")


if __name__ == "__main__":
    main()
