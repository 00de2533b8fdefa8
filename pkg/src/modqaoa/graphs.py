"""Benchmark graph construction, edge-list IO and Laplacian spectral tools.

Graphs here are small, simple, undirected and 0-indexed.  Two seeded families
are provided (ring-of-cliques "caveman" graphs and planted-partition graphs),
plus the spectral machinery used to rank edges by how much their removal
perturbs the Laplacian eigenvector matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CapacityError,
    EdgeListParseError,
    EdgeNotFoundError,
    GenerationError,
)

__all__ = [
    "Graph",
    "MAX_VERTICES",
    "connected_caveman",
    "random_partition",
    "is_connected",
    "adjacency_matrix",
    "laplacian_matrix",
    "laplacian_eigen",
    "eigenvector_distance",
    "spectral_edge_impact",
    "worst_case_edge",
    "remove_edge",
    "read_edge_list",
    "write_edge_list",
]

# Default cap on vertex count: a state-vector over n qubits needs 2**n
# amplitudes, so anything past this is unusable downstream anyway.
MAX_VERTICES = 24

# Edge-impact ties are broken lexicographically; floating-point noise between
# automorphic edges is far below this, genuine gaps are far above it.
TIE_BREAK_TOL = 1e-9


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph.

    Attributes
    ----------
    n_vertices : int
        Number of vertices, labelled ``0 .. n_vertices - 1``.
    edges : tuple of (int, int)
        Lexicographically sorted pairs ``(u, v)`` with ``u < v``.
    label : str
        Human-readable provenance tag carried into result tables.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < v < self.n_vertices):
                raise ValueError(f"bad edge ({u}, {v}) for n={self.n_vertices}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        if list(self.edges) != sorted(self.edges):
            raise ValueError("edges must be sorted lexicographically")

    @classmethod
    def from_edges(cls, n_vertices: int, edges, label: str = "") -> "Graph":
        """Build a graph from any iterable of pairs, normalizing orientation."""
        canon = sorted({(min(u, v), max(u, v)) for u, v in edges})
        return cls(n_vertices, tuple(canon), label)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in set(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def _check_capacity(n: int, max_vertices: int):
    if n > max_vertices:
        raise CapacityError(f"{n} vertices exceeds the cap of {max_vertices}")


def connected_caveman(num_cliques: int, clique_size: int,
                      max_vertices: int = MAX_VERTICES) -> Graph:
    """Ring of cliques: in each clique one edge is rewired to the next clique.

    For ``clique_size == 2`` removing the clique's only edge can never leave a
    connected graph, so that case keeps the clique edge and only adds the ring
    edge, which degenerates to the cycle ``C_{2 * num_cliques}``.
    """
    if num_cliques < 2 or clique_size < 2:
        raise ValueError("need at least 2 cliques of at least 2 vertices")
    n = num_cliques * clique_size
    _check_capacity(n, max_vertices)
    edges = set()
    for c in range(num_cliques):
        base = c * clique_size
        for i in range(clique_size):
            for j in range(i + 1, clique_size):
                edges.add((base + i, base + j))
        if clique_size > 2:
            edges.remove((base, base + 1))
        ring = (base - 1) % n
        edges.add((min(base, ring), max(base, ring)))
    return Graph.from_edges(n, edges, label=f"caveman-{num_cliques}-{clique_size}")


def random_partition(sizes, p_in: float, p_out: float, seed: int,
                     max_vertices: int = MAX_VERTICES,
                     max_retries: int = 100) -> Graph:
    """Planted-partition graph with blocks of the given sizes.

    Each intra-block pair is an edge with probability ``p_in``, each
    inter-block pair with probability ``p_out``.  Disconnected draws are
    redrawn with the seed incremented, up to ``max_retries`` attempts;
    the draw is deterministic given ``(sizes, p_in, p_out, seed)``.
    """
    sizes = list(sizes)
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("block sizes must be positive")
    for p, name in ((p_in, "p_in"), (p_out, "p_out")):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {p}")
    n = sum(sizes)
    _check_capacity(n, max_vertices)

    block = np.repeat(np.arange(len(sizes)), sizes)
    size_tag = "x".join(str(s) for s in sizes)
    for attempt in range(max_retries):
        trial_seed = seed + attempt
        rng = np.random.default_rng(trial_seed)
        edges = []
        for u in range(n):
            for v in range(u + 1, n):
                p = p_in if block[u] == block[v] else p_out
                if rng.random() < p:
                    edges.append((u, v))
        g = Graph.from_edges(n, edges,
                             label=f"partition-{size_tag}-s{trial_seed}")
        if is_connected(g):
            return g
    raise GenerationError(
        f"no connected draw in {max_retries} attempts (sizes={sizes}, "
        f"p_in={p_in}, p_out={p_out})", last_seed=seed + max_retries - 1)


def is_connected(g: Graph) -> bool:
    """Breadth-first connectivity check."""
    if g.n_vertices == 1:
        return True
    adj = [[] for _ in range(g.n_vertices)]
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return len(seen) == g.n_vertices


def adjacency_matrix(g: Graph) -> np.ndarray:
    a = np.zeros((g.n_vertices, g.n_vertices))
    for u, v in g.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


def laplacian_matrix(g: Graph) -> np.ndarray:
    a = adjacency_matrix(g)
    return np.diag(a.sum(axis=1)) - a


def laplacian_eigen(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the graph Laplacian, deterministically oriented.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and eigenvectors in
    the columns of ``v``.  Each eigenvector is sign-normalized so that its
    first component of largest absolute value is positive, which pins an
    otherwise arbitrary sign choice.  Degenerate eigenspaces keep whatever
    basis the backend returns; only the signs are canonicalized.
    """
    w, v = np.linalg.eigh(laplacian_matrix(g))
    for j in range(v.shape[1]):
        lead = int(np.argmax(np.abs(v[:, j])))
        if v[lead, j] < 0:
            v[:, j] = -v[:, j]
    return w, v


def eigenvector_distance(g: Graph, h: Graph) -> float:
    """Frobenius distance between the Laplacian eigenvector matrices."""
    if g.n_vertices != h.n_vertices:
        raise ValueError("graphs must have the same vertex count")
    _, vg = laplacian_eigen(g)
    _, vh = laplacian_eigen(h)
    return float(np.linalg.norm(vg - vh))


def spectral_edge_impact(g: Graph, edge: tuple[int, int]) -> float:
    """How much removing ``edge`` perturbs the Laplacian eigenvectors."""
    return eigenvector_distance(g, remove_edge(g, edge))


def worst_case_edge(g: Graph) -> tuple[int, int]:
    """Edge whose removal maximally perturbs the eigenvector matrix.

    Near-ties (within ``TIE_BREAK_TOL``) are broken in favour of the
    lexicographically smallest edge.
    """
    if not g.edges:
        raise EdgeNotFoundError("graph has no edges")
    best_edge = None
    best_impact = -math.inf
    for e in g.edges:
        impact = spectral_edge_impact(g, e)
        if impact > best_impact + TIE_BREAK_TOL:
            best_edge = e
            best_impact = impact
    return best_edge


def remove_edge(g: Graph, edge: tuple[int, int]) -> Graph:
    """Copy of ``g`` without ``edge``; the edge must exist."""
    u, v = min(edge), max(edge)
    if (u, v) not in set(g.edges):
        raise EdgeNotFoundError(f"edge ({u}, {v}) not in graph")
    kept = tuple(e for e in g.edges if e != (u, v))
    label = f"{g.label}-minus-{u}-{v}" if g.label else f"minus-{u}-{v}"
    return Graph(g.n_vertices, kept, label)


# --------------------------------------------------------------------------
# Edge-list text format: one "u v" pair per line, '#' comments, an optional
# leading "n <count>" header fixing the vertex count (needed to round-trip
# isolated vertices).  The writer emits the header, a label comment and the
# edges in sorted order so identical graphs always produce identical bytes.
# --------------------------------------------------------------------------

def write_edge_list(g: Graph, path) -> None:
    lines = []
    if g.label:
        lines.append(f"# label: {g.label}")
    lines.append(f"n {g.n_vertices}")
    for u, v in g.edges:
        lines.append(f"{u} {v}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> Graph:
    """Parse an edge-list file; malformed input reports its line number."""
    text = Path(path).read_text()
    n_declared = None
    label = ""
    edges = []
    seen = set()
    max_vertex = -1
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            comment = line[1:].strip()
            if comment.startswith("label:"):
                label = comment[len("label:"):].strip()
            continue
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "n":
            if edges or n_declared is not None:
                raise EdgeListParseError(
                    "header must appear once, before any edge", line_no)
            if len(tokens) != 2:
                raise EdgeListParseError("header must be 'n <count>'", line_no)
            try:
                n_declared = int(tokens[1])
            except ValueError:
                raise EdgeListParseError(
                    f"bad vertex count {tokens[1]!r}", line_no) from None
            if n_declared < 1:
                raise EdgeListParseError("vertex count must be >= 1", line_no)
            continue
        if len(tokens) != 2:
            raise EdgeListParseError(
                f"expected two vertex ids, got {len(tokens)} tokens", line_no)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListParseError(
                f"non-integer vertex id in {line!r}", line_no) from None
        if u < 0 or v < 0:
            raise EdgeListParseError("vertex ids must be non-negative", line_no)
        if u == v:
            raise EdgeListParseError(f"self-loop on vertex {u}", line_no)
        u, v = min(u, v), max(u, v)
        if (u, v) in seen:
            raise EdgeListParseError(f"duplicate edge ({u}, {v})", line_no)
        seen.add((u, v))
        if n_declared is not None and v >= n_declared:
            raise EdgeListParseError(
                f"vertex {v} outside declared count {n_declared}", line_no)
        edges.append((u, v))
        max_vertex = max(max_vertex, v)
    if n_declared is None:
        if max_vertex < 0:
            raise EdgeListParseError("no edges and no 'n <count>' header", 1)
        n_declared = max_vertex + 1
    if not label:
        label = Path(path).stem
    return Graph.from_edges(n_declared, edges, label=label)
