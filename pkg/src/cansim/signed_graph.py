"""Signed digraphs and their purely structural quantities.

Orientation convention: an edge record ``(source=l, target=k, w)`` means agent
``k`` listens to agent ``l`` and populates ``W[k, l] = w``.  Rows of the
adjacency and Laplacian matrices are receivers, columns are senders, so row
``k`` of ``W`` lists the in-neighbours of node ``k``.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graph input."""


class Connectivity(enum.IntEnum):
    """Connectivity classes ordered by strength."""

    DISCONNECTED = 0
    WEAK = 1
    QUASI_STRONG = 2
    STRONG = 3

    @property
    def label(self) -> str:
        return {
            Connectivity.DISCONNECTED: "Disconnected",
            Connectivity.WEAK: "Weak",
            Connectivity.QUASI_STRONG: "QuasiStrong",
            Connectivity.STRONG: "Strong",
        }[self]


Edge = tuple[int, int, float]


@dataclass(frozen=True)
class SignedDigraph:
    """Weighted signed digraph with 0-based node indices.

    ``edges`` holds ``(source, target, weight)`` triples.  Validation rejects
    self-loops, zero weights, duplicate ordered pairs and out-of-range
    indices.
    """

    n_nodes: int
    edges: tuple[Edge, ...] = ()
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise GraphError(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        clean = []
        seen = set()
        for i, e in enumerate(self.edges):
            src, dst, w = int(e[0]), int(e[1]), float(e[2])
            where = f"edge #{i} ({src + 1}->{dst + 1}, w={w:g})"
            if not (0 <= src < self.n_nodes and 0 <= dst < self.n_nodes):
                raise GraphError(f"{where}: index out of range 1..{self.n_nodes}")
            if src == dst:
                raise GraphError(f"{where}: self-loop")
            if w == 0.0:
                raise GraphError(f"{where}: zero weight")
            if not np.isfinite(w):
                raise GraphError(f"{where}: non-finite weight")
            if (src, dst) in seen:
                raise GraphError(f"{where}: duplicate ordered edge")
            seen.add((src, dst))
            clean.append((src, dst, w))
        object.__setattr__(self, "edges", tuple(clean))
        if self.node_labels is not None:
            labels = tuple(str(s) for s in self.node_labels)
            if len(labels) != self.n_nodes:
                raise GraphError(f"expected {self.n_nodes} labels, got {len(labels)}")
            object.__setattr__(self, "node_labels", labels)

    @classmethod
    def from_adjacency(cls, W: np.ndarray, labels: Sequence[str] | None = None) -> "SignedDigraph":
        """Build from an adjacency matrix with ``W[k, l]`` = weight of edge l -> k."""
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise GraphError("adjacency matrix must be square")
        if np.any(np.diag(W) != 0):
            raise GraphError("adjacency matrix has nonzero diagonal (self-loop)")
        ks, ls = np.nonzero(W)
        edges = tuple((int(l), int(k), float(W[k, l])) for k, l in zip(ks, ls))
        return cls(W.shape[0], edges, tuple(labels) if labels is not None else None)

    @cached_property
    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.n_nodes, self.n_nodes))
        for src, dst, w in self.edges:
            W[dst, src] = w
        W.flags.writeable = False
        return W

    @cached_property
    def laplacian(self) -> np.ndarray:
        return laplacian_bundle(self).L

    def in_neighbors(self, k: int) -> list[int]:
        return [src for src, dst, _ in self.edges if dst == k]

    def subgraph(self, nodes: Iterable[int]) -> "SignedDigraph":
        """Induced subgraph, re-indexed in ascending order of ``nodes``."""
        nodes = sorted(set(int(v) for v in nodes))
        index = {v: i for i, v in enumerate(nodes)}
        edges = tuple(
            (index[s], index[d], w) for s, d, w in self.edges if s in index and d in index
        )
        labels = None
        if self.node_labels is not None:
            labels = tuple(self.node_labels[v] for v in nodes)
        return SignedDigraph(len(nodes), edges, labels)

    def to_doc(self) -> dict:
        doc = {
            "n": self.n_nodes,
            "edges": [{"from": s + 1, "to": d + 1, "w": w} for s, d, w in self.edges],
        }
        if self.node_labels is not None:
            doc["labels"] = list(self.node_labels)
        return doc


def parse_graph(doc: dict) -> SignedDigraph:
    """Validate a graph document (1-based ``from``/``to`` indices)."""
    if not isinstance(doc, dict):
        raise GraphError("graph document must be a JSON object")
    if "n" not in doc:
        raise GraphError("graph: missing field 'n'")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise GraphError(f"graph.n: expected positive integer, got {n!r}")
    raw = doc.get("edges", [])
    if not isinstance(raw, list):
        raise GraphError("graph.edges: expected a list")
    edges = []
    for i, e in enumerate(raw):
        if not isinstance(e, dict):
            raise GraphError(f"graph.edges[{i}]: expected an object")
        for key in ("from", "to", "w"):
            if key not in e:
                raise GraphError(f"graph.edges[{i}]: missing field '{key}'")
        src, dst, w = e["from"], e["to"], e["w"]
        if not isinstance(src, int) or not isinstance(dst, int):
            raise GraphError(f"graph.edges[{i}]: 'from'/'to' must be integers")
        if not isinstance(w, (int, float)) or isinstance(w, bool):
            raise GraphError(f"graph.edges[{i}]: 'w' must be a number")
        edges.append((src - 1, dst - 1, float(w)))
    labels = doc.get("labels")
    if labels is not None and not isinstance(labels, list):
        raise GraphError("graph.labels: expected a list of strings")
    return SignedDigraph(n, tuple(edges), tuple(labels) if labels is not None else None)


@dataclass(frozen=True)
class LaplacianBundle:
    L: np.ndarray
    M_of_L: np.ndarray
    D: np.ndarray


def comparison_matrix(A) -> np.ndarray:
    """``|a_ii|`` on the diagonal, ``-|a_ij|`` off it."""
    A = np.asarray(A, dtype=float)
    M = -np.abs(A)
    np.fill_diagonal(M, np.abs(np.diag(A)))
    return M


def laplacian_bundle(g: SignedDigraph) -> LaplacianBundle:
    W = np.array(g.adjacency)
    D = np.abs(W).sum(axis=1)
    L = np.diag(D) - W
    M = -np.abs(W)
    # diagonal built from the same absolute sums so M(L) @ 1 == 0 exactly
    M[np.diag_indices_from(M)] = D
    return LaplacianBundle(L=L, M_of_L=M, D=D)


# --------------------------------------------------------------------------
# strong components


@dataclass(frozen=True)
class ComponentPartition:
    """SCCs in topological order plus the leader/follower split."""

    n_nodes: int
    sccs: tuple[tuple[int, ...], ...]
    closed_flags: tuple[bool, ...]

    @property
    def cscs(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c for c, closed in zip(self.sccs, self.closed_flags) if closed)

    @property
    def leaders(self) -> tuple[int, ...]:
        return tuple(v for c in self.cscs for v in c)

    @property
    def followers(self) -> tuple[int, ...]:
        return tuple(
            v for c, closed in zip(self.sccs, self.closed_flags) if not closed for v in c
        )

    @property
    def csc_count(self) -> int:
        return len(self.cscs)

    @property
    def csc_sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cscs)

    @property
    def K(self) -> int:
        return len(self.leaders)

    @property
    def order(self) -> np.ndarray:
        """Leader-first permutation: ``order[i]`` is the original index at slot i."""
        return np.array(self.leaders + self.followers, dtype=int)


def _tarjan(n: int, succ: list[list[int]]) -> list[list[int]]:
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            for j in range(i, len(succ[v])):
                w = succ[v][j]
                if index[w] == -1:
                    work.append((v, j + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return out


def strong_components(g: SignedDigraph) -> ComponentPartition:
    """Strong components (edge signs ignored), topologically ordered.

    Ties in topological rank are broken by the smallest original index, so
    the output is deterministic.
    """
    n = g.n_nodes
    succ: list[list[int]] = [[] for _ in range(n)]
    for s, d, _ in g.edges:
        succ[s].append(d)
    for lst in succ:
        lst.sort()
    comps = _tarjan(n, succ)
    comp_of = [0] * n
    for ci, c in enumerate(comps):
        for v in c:
            comp_of[v] = ci
    indeg = [0] * len(comps)
    dag: list[set[int]] = [set() for _ in comps]
    for s, d, _ in g.edges:
        a, b = comp_of[s], comp_of[d]
        if a != b and b not in dag[a]:
            dag[a].add(b)
            indeg[b] += 1
    closed = [deg == 0 for deg in indeg]
    heap = [(comps[ci][0], ci) for ci in range(len(comps)) if indeg[ci] == 0]
    heapq.heapify(heap)
    ordered = []
    remaining = list(indeg)
    while heap:
        _, ci = heapq.heappop(heap)
        ordered.append(ci)
        for cj in dag[ci]:
            remaining[cj] -= 1
            if remaining[cj] == 0:
                heapq.heappush(heap, (comps[cj][0], cj))
    return ComponentPartition(
        n_nodes=n,
        sccs=tuple(tuple(comps[ci]) for ci in ordered),
        closed_flags=tuple(closed[ci] for ci in ordered),
    )


def _undirected_connected(g: SignedDigraph) -> bool:
    adj: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for s, d, _ in g.edges:
        adj[s].append(d)
        adj[d].append(s)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == g.n_nodes


def classify_connectivity(g: SignedDigraph, partition: ComponentPartition | None = None) -> Connectivity:
    partition = partition or strong_components(g)
    if len(partition.sccs) == 1:
        return Connectivity.STRONG
    # a finite DAG with a single source has that source reaching everything
    if partition.csc_count == 1:
        return Connectivity.QUASI_STRONG
    if _undirected_connected(g):
        return Connectivity.WEAK
    return Connectivity.DISCONNECTED


# --------------------------------------------------------------------------
# structural balance


@dataclass(frozen=True)
class BalanceVerdict:
    """Balance of the subgraph induced by ``nodes``.

    ``gauge[i]`` is the sign of ``nodes[i]``.  On imbalance ``witness`` lists
    the (source, target, weight) edges of a contradictory cycle.
    """

    nodes: tuple[int, ...]
    balanced: bool
    gauge: np.ndarray | None = None
    witness: tuple[Edge, ...] = field(default=())

    @property
    def gauge_matrix(self) -> np.ndarray:
        if self.gauge is None:
            raise ValueError("unbalanced subgraph has no gauge")
        return np.diag(self.gauge)


def structural_balance(g: SignedDigraph, node_subset: Iterable[int] | None = None) -> BalanceVerdict:
    """Search a +-1 gauge with ``g_k g_l = sign(w_kl)`` on every induced edge.

    Every directed edge is its own constraint, so antiparallel edges of
    opposite sign are an immediate contradiction.  The lowest-index node of
    each undirected component is pinned to +1.
    """
    nodes = tuple(sorted(set(range(g.n_nodes) if node_subset is None else node_subset)))
    if not nodes:
        raise ValueError("structural_balance: empty node subset")
    inside = set(nodes)
    adj: dict[int, list[tuple[int, float, Edge]]] = {v: [] for v in nodes}
    for e in g.edges:
        s, d, w = e
        if s in inside and d in inside:
            sgn = 1.0 if w > 0 else -1.0
            adj[s].append((d, sgn, e))
            adj[d].append((s, sgn, e))

    sign: dict[int, float] = {}
    parent: dict[int, Edge | None] = {}
    for root in nodes:
        if root in sign:
            continue
        sign[root] = 1.0
        parent[root] = None
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for u, sgn, e in adj[v]:
                want = sign[v] * sgn
                if u not in sign:
                    sign[u] = want
                    parent[u] = e
                    queue.append(u)
                elif sign[u] != want:
                    return BalanceVerdict(nodes, False, None, _witness(v, u, e, parent))
    gauge = np.array([sign[v] for v in nodes])
    return BalanceVerdict(nodes, True, gauge, ())


def _witness(v: int, u: int, bad: Edge, parent: dict[int, Edge | None]) -> tuple[Edge, ...]:
    def path(x):
        out = []
        while parent[x] is not None:
            e = parent[x]
            out.append(e)
            x = e[0] if e[1] == x else e[1]
        return out

    pv, pu = path(v), path(u)
    common = set(pv) & set(pu)
    cycle = [e for e in pv if e not in common] + [e for e in pu if e not in common]
    return tuple(cycle) + (bad,)


# --------------------------------------------------------------------------
# block decomposition


@dataclass(frozen=True)
class LaplacianBlocks:
    """Leader-first split of the Laplacian.

    ``L_L`` is block diagonal with one block ``L_Lk[k]`` per closed strong
    component; ``L_FLk[k]`` are the matching column slices of ``L_FL``.
    """

    order: np.ndarray
    csc_slices: tuple[slice, ...]
    L_L: np.ndarray
    L_FL: np.ndarray
    L_F: np.ndarray

    @property
    def K(self) -> int:
        return self.L_L.shape[0]

    @property
    def L_Lk(self) -> list[np.ndarray]:
        return [self.L_L[s, s] for s in self.csc_slices]

    @property
    def L_FLk(self) -> list[np.ndarray]:
        return [self.L_FL[:, s] for s in self.csc_slices]

    def permuted(self) -> np.ndarray:
        K = self.K
        n = len(self.order)
        out = np.zeros((n, n))
        out[:K, :K] = self.L_L
        out[K:, :K] = self.L_FL
        out[K:, K:] = self.L_F
        return out

    def reassemble(self) -> np.ndarray:
        """Laplacian in the original node order."""
        P = self.permuted()
        L = np.empty_like(P)
        L[np.ix_(self.order, self.order)] = P
        return L


def laplacian_blocks(g: SignedDigraph, partition: ComponentPartition | None = None) -> LaplacianBlocks:
    partition = partition or strong_components(g)
    order = partition.order
    K = partition.K
    Lp = g.laplacian[np.ix_(order, order)]
    if K and np.any(Lp[:K, K:] != 0):
        raise GraphError("leader rows reference follower columns; partition does not match graph")
    slices = []
    start = 0
    for size in partition.csc_sizes:
        slices.append(slice(start, start + size))
        start += size
    return LaplacianBlocks(
        order=order,
        csc_slices=tuple(slices),
        L_L=Lp[:K, :K].copy(),
        L_FL=Lp[K:, :K].copy(),
        L_F=Lp[K:, K:].copy(),
    )
