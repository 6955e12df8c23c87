"""Random signed digraphs with a prescribed connectivity class and balance.

The structured generators take ``min_margin``: draws whose :func:`spectral_margin`
falls below it are rejected.
"""

from __future__ import annotations

import numpy as np

from .signed_graph import SignedDigraph, laplacian_blocks, strong_components, structural_balance


def _weights(rng: np.random.Generator, size: int, low: float, high: float) -> np.ndarray:
    return rng.uniform(low, high, size) if high > low else np.full(size, float(low))


def _signed(edges, gauge, rng, low, high, balanced):
    """Attach magnitudes and signs; balanced edges follow ``g_src * g_dst``."""
    mags = _weights(rng, len(edges), low, high)
    out = []
    for (s, d), m in zip(edges, mags):
        sgn = gauge[s] * gauge[d] if balanced else rng.choice((-1.0, 1.0))
        out.append((s, d, float(sgn * m)))
    return out


def _strong_edges(nodes, p, rng):
    """Random Hamiltonian cycle through ``nodes`` plus each other ordered pair with prob ``p``."""
    nodes = list(nodes)
    perm = rng.permutation(nodes)
    edges = {(int(perm[i]), int(perm[(i + 1) % len(perm)])) for i in range(len(perm))} if len(nodes) > 1 else set()
    for s in nodes:
        for d in nodes:
            if s != d and rng.random() < p:
                edges.add((s, d))
    return sorted(edges)


def random_strong(
    n: int,
    rng: np.random.Generator,
    balanced: bool,
    p: float = 0.5,
    low: float = 1.0,
    high: float = 2.0,
    min_margin: float = 0.0,
    max_tries: int = 1000,
) -> SignedDigraph:
    """Strongly connected graph on ``n >= 2`` nodes, balanced or not as requested."""
    for _ in range(max_tries):
        edges = _strong_edges(range(n), p, rng)
        gauge = rng.choice((-1.0, 1.0), n)
        g = SignedDigraph(n, tuple(_signed(edges, gauge, rng, low, high, balanced)))
        if structural_balance(g).balanced == balanced and _margin_ok(g, min_margin):
            return g
    raise RuntimeError("could not draw a graph with the requested balance and margin")


def _attach_followers(n_lead, n, sources_per, p_ff, rng):
    """Follower edges: every follower hears from an earlier node, plus extras."""
    edges = set()
    for f in range(n_lead, n):
        pool = list(range(f))
        k = min(sources_per, len(pool))
        for s in rng.choice(pool, size=k, replace=False):
            edges.add((int(s), f))
        for s in range(n_lead, n):
            if s != f and rng.random() < p_ff:
                edges.add((s, f))
    return edges


def random_quasi_strong(
    n_leaders: int,
    n_followers: int,
    rng: np.random.Generator,
    leaders_balanced: bool,
    p: float = 0.5,
    sources_per_follower: int = 2,
    p_ff: float = 0.2,
    low: float = 1.0,
    high: float = 2.0,
    min_margin: float = 0.0,
    max_tries: int = 1000,
) -> SignedDigraph:
    """One closed strong component on nodes ``0..K-1``; followers have no edges back.

    Each follower gets ``sources_per_follower`` in-edges from lower-index
    nodes, so every follower is reachable from the leaders.
    """
    n = n_leaders + n_followers
    for _ in range(max_tries):
        lead = _strong_edges(range(n_leaders), p, rng)
        gauge = rng.choice((-1.0, 1.0), n)
        lead_e = _signed(lead, gauge, rng, low, high, leaders_balanced)
        fol = sorted(_attach_followers(n_leaders, n, sources_per_follower, p_ff, rng))
        fol_e = _signed(fol, gauge, rng, low, high, balanced=False)
        g = SignedDigraph(n, tuple(lead_e + fol_e))
        if n_leaders == 1 or structural_balance(g, range(n_leaders)).balanced == leaders_balanced:
            if _margin_ok(g, min_margin):
                return g
    raise RuntimeError("could not draw a graph with the requested leader balance")


def random_weak(
    csc_sizes: tuple[int, ...],
    n_followers: int,
    rng: np.random.Generator,
    csc_balanced: tuple[bool, ...],
    p: float = 0.5,
    sources_per_follower: int = 2,
    p_ff: float = 0.2,
    low: float = 1.0,
    high: float = 2.0,
    min_margin: float = 0.0,
    max_tries: int = 1000,
) -> SignedDigraph:
    """Several closed strong components followed by followers.

    The first follower listens to every closed component so the graph is
    weakly connected (and, with two or more components, not quasi-strong).
    """
    if len(csc_sizes) != len(csc_balanced):
        raise ValueError("one balance flag per component")
    if n_followers < 1:
        raise ValueError("a weakly connected graph with several closed components needs followers")
    K = sum(csc_sizes)
    n = K + n_followers
    starts = np.cumsum((0,) + tuple(csc_sizes))[:-1]
    for _ in range(max_tries):
        gauge = rng.choice((-1.0, 1.0), n)
        edges = []
        for st, size, bal in zip(starts, csc_sizes, csc_balanced):
            e = _strong_edges(range(st, st + size), p, rng)
            edges += _signed(e, gauge, rng, low, high, bal)
        fol = _attach_followers(K, n, sources_per_follower, p_ff, rng)
        for st, size in zip(starts, csc_sizes):
            fol.add((int(rng.integers(st, st + size)), K))
        edges += _signed(sorted(fol), gauge, rng, low, high, balanced=False)
        g = SignedDigraph(n, tuple(edges))
        ok = all(
            size == 1 or structural_balance(g, range(st, st + size)).balanced == bal
            for st, size, bal in zip(starts, csc_sizes, csc_balanced)
        )
        if ok and _margin_ok(g, min_margin):
            return g
    raise RuntimeError("could not draw components with the requested balance")


def random_signed(n: int, rng: np.random.Generator, p: float = 0.4, weights=(-1.0, 1.0)) -> SignedDigraph:
    """Unstructured digraph: each ordered pair gets an edge with prob ``p``, weight drawn from ``weights``."""
    edges = []
    for s in range(n):
        for d in range(n):
            if s != d and rng.random() < p:
                edges.append((s, d, float(rng.choice(weights))))
    return SignedDigraph(n, tuple(edges))


def spectral_margin(g: SignedDigraph) -> float:
    """Smallest real part over the non-zero Laplacian modes of every leader
    block and of the follower block.

    Balanced closed components contribute one exact zero mode each, which is
    excluded.  The closed loop's residual at the settling time shrinks like
    ``(epsilon_T / T) ** (rho2 * kappa * margin)``, so this is the quantity
    that decides whether a run can reach a given tolerance.
    """
    part = strong_components(g)
    blocks = laplacian_blocks(g, part)
    vals = []
    for nodes, Lk in zip(part.cscs, blocks.L_Lk):
        ev = np.linalg.eigvals(Lk)
        if structural_balance(g, nodes).balanced:
            ev = np.delete(ev, np.argmin(np.abs(ev)))
        vals.extend(ev.real)
    if blocks.L_F.size:
        vals.extend(np.linalg.eigvals(blocks.L_F).real)
    return float(min(vals)) if vals else np.inf


def _margin_ok(g: SignedDigraph, min_margin: float) -> bool:
    return min_margin <= 0 or spectral_margin(g) >= min_margin
