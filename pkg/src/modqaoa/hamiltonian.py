"""Two-community modularity and its diagonal cost operator.

A community split of a graph is encoded as a spin vector ``s`` with entries
in {-1, +1}.  Its modularity is

    C(s) = (1 / 4|E|) * sum_ij B_ij s_i s_j,   B = A - k k^T / 2|E|,

where ``A`` is the adjacency matrix and ``k`` the degree vector.  The i == j
diagonal terms are kept: they add a constant shift, and keeping them makes
C(all ones) exactly zero.  Promoting each spin to a Pauli-Z operator turns C
into a diagonal cost operator; ``cost_diagonal`` tabulates that diagonal over
all 2**n computational basis states.

Basis-state convention, fixed project-wide: bit i of the index ``z`` is qubit
i (least significant bit = qubit 0), and bit value 0 maps to spin +1, bit
value 1 to spin -1.

All evaluations go through one elementwise kernel using the expansion

    sum_ij B_ij s_i s_j = 2 * sum_{(u,v) in E} s_u s_v - (sum_i k_i s_i)^2 / 2|E|,

accumulated in a fixed order, so scalar and vectorized paths agree bitwise:
the brute-force maximum, the tabulated diagonal's maximum and direct
``modularity`` calls are exactly equal, and complementing every spin leaves
each energy exactly unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, EmptyGraphError
from .graphs import MAX_VERTICES, Graph, adjacency_matrix

__all__ = [
    "ModularityMatrix",
    "CostDiagonal",
    "modularity_matrix",
    "modularity",
    "spins_from_index",
    "index_from_spins",
    "cost_diagonal",
    "best_partition_bruteforce",
]


@dataclass(frozen=True)
class ModularityMatrix:
    """Symmetric matrix ``B = A - k k^T / 2|E|`` plus the edge count."""

    b: np.ndarray
    num_edges: int


@dataclass(frozen=True)
class CostDiagonal:
    """Modularity of every basis state, indexed by the bit convention above."""

    energies: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(self.energies.shape[0]).bit_length() - 1

    @property
    def dim(self) -> int:
        return int(self.energies.shape[0])


def modularity_matrix(g: Graph) -> ModularityMatrix:
    if g.n_edges == 0:
        raise EmptyGraphError("modularity needs at least one edge")
    a = adjacency_matrix(g)
    k = a.sum(axis=1)
    b = a - np.outer(k, k) / (2.0 * g.n_edges)
    return ModularityMatrix(b=b, num_edges=g.n_edges)


def _energy_kernel(g: Graph, spins: np.ndarray) -> np.ndarray:
    """Shared modularity kernel; ``spins`` has shape ``(..., n_vertices)``.

    Elementwise with a fixed accumulation order (edges in lexicographic
    order, vertices in index order), so every lane of a batched call matches
    a scalar call bit for bit.
    """
    m = float(g.n_edges)
    deg = g.degrees().astype(np.float64)
    edge_sum = np.zeros(spins.shape[:-1])
    for u, v in g.edges:
        edge_sum = edge_sum + spins[..., u] * spins[..., v]
    deg_sum = np.zeros(spins.shape[:-1])
    for i in range(g.n_vertices):
        deg_sum = deg_sum + deg[i] * spins[..., i]
    return (2.0 * edge_sum - deg_sum * deg_sum / (2.0 * m)) / (4.0 * m)


def modularity(g: Graph, spins) -> float:
    """Modularity of the two-community split encoded by ``spins``."""
    if g.n_edges == 0:
        raise EmptyGraphError("modularity needs at least one edge")
    s = np.asarray(spins, dtype=np.float64)
    if s.shape != (g.n_vertices,):
        raise ValueError(
            f"expected {g.n_vertices} spins, got shape {s.shape}")
    if not np.all(np.abs(s) == 1.0):
        raise ValueError("spins must be +1 or -1")
    return float(_energy_kernel(g, s))


def spins_from_index(z: int, n: int) -> np.ndarray:
    """Spin vector for basis state ``z``: bit i clear -> s_i = +1."""
    bits = (z >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.float64)


def index_from_spins(spins) -> int:
    s = np.asarray(spins)
    bits = (1 - s.astype(np.int64)) // 2
    return int(bits @ (1 << np.arange(len(bits))))


def cost_diagonal(g: Graph, max_qubits: int = MAX_VERTICES) -> CostDiagonal:
    """Tabulate the modularity of all 2**n basis states.

    Chunked so the intermediate spin matrix never exceeds a few MB.  The
    result is exactly palindromic under bitwise complement because flipping
    every spin leaves every term of the kernel unchanged.
    """
    n = g.n_vertices
    if n > max_qubits:
        raise CapacityError(f"{n} qubits exceeds the cap of {max_qubits}")
    if g.n_edges == 0:
        raise EmptyGraphError("modularity needs at least one edge")
    dim = 1 << n
    energies = np.empty(dim)
    shifts = np.arange(n, dtype=np.int64)
    chunk = min(dim, 1 << 14)
    for start in range(0, dim, chunk):
        z = np.arange(start, min(start + chunk, dim), dtype=np.int64)
        s = (1 - 2 * ((z[:, None] >> shifts[None, :]) & 1)).astype(np.float64)
        energies[start:start + len(z)] = _energy_kernel(g, s)
    return CostDiagonal(energies=energies)


def best_partition_bruteforce(g: Graph,
                              max_qubits: int = MAX_VERTICES
                              ) -> tuple[np.ndarray, float]:
    """Exact modularity maximum by enumerating every spin assignment.

    Ties are broken toward the smallest basis-state index.  This scans
    assignments one by one on purpose: it is the slow, independent check
    against which the vectorized ``cost_diagonal`` is validated.
    """
    n = g.n_vertices
    if n > max_qubits:
        raise CapacityError(f"{n} qubits exceeds the cap of {max_qubits}")
    best_z = 0
    best_val = -np.inf
    for z in range(1 << n):
        val = float(_energy_kernel(g, spins_from_index(z, n)))
        if val > best_val:
            best_z, best_val = z, val
    return spins_from_index(best_z, n), best_val
