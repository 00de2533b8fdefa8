"""Compare the compiled state-evolution kernel against the numpy fallback.

Runs the full objective (state preparation, phase/mixer sweeps, expectation)
for a few problem sizes and depths with each backend and prints per-call
timings plus their agreement.  Usage:

    python benchmarks/kernel_benchmark.py [--repeats 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from modqaoa import _kernels_py
from modqaoa.graphs import connected_caveman
from modqaoa.hamiltonian import cost_diagonal
from modqaoa.simulator import QaoaParams, default_bounds

try:
    from modqaoa import _kernels
except ImportError:
    _kernels = None


def run_objective(backend, energies, params: QaoaParams) -> float:
    dim = energies.shape[0]
    n_qubits = dim.bit_length() - 1
    psi = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    backend.evolve(psi, energies, np.asarray(params.beta),
                   np.asarray(params.gamma), n_qubits)
    return -backend.expectation(psi, energies)


def time_backend(backend, energies, params, repeats: int) -> float:
    run_objective(backend, energies, params)  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeats):
        run_objective(backend, energies, params)
    return (time.perf_counter() - t0) / repeats


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    cases = [
        (connected_caveman(2, 3), 1),
        (connected_caveman(3, 4), 1),
        (connected_caveman(3, 4), 4),
        (connected_caveman(2, 6), 2),
        (connected_caveman(6, 4), 1),
    ]
    rng = np.random.default_rng(0)
    print(f"{'graph':>14} {'n':>3} {'p':>2} {'python':>12} {'compiled':>12}"
          f" {'speedup':>8}  agreement")
    for graph, p in cases:
        energies = cost_diagonal(graph).energies
        x = default_bounds(p).sample(rng)
        params = QaoaParams.from_vector(x)
        t_py = time_backend(_kernels_py, energies, params, args.repeats)
        if _kernels is None:
            print(f"{graph.label:>14} {graph.n_vertices:>3} {p:>2} "
                  f"{t_py * 1e6:>10.1f}us {'missing':>12}")
            continue
        t_c = time_backend(_kernels, energies, params, args.repeats)
        diff = abs(run_objective(_kernels, energies, params)
                   - run_objective(_kernels_py, energies, params))
        print(f"{graph.label:>14} {graph.n_vertices:>3} {p:>2} "
              f"{t_py * 1e6:>10.1f}us {t_c * 1e6:>10.1f}us "
              f"{t_py / t_c:>7.1f}x  |df|={diff:.2e}")


if __name__ == "__main__":
    main()
