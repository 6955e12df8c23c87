"""Spectral quantities and positivity certificates built on signed Laplacians.

Also hosts :func:`analyze_graph`, which bundles the structural and spectral
facts the simulator's verdict oracle needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .signed_graph import (
    BalanceVerdict,
    ComponentPartition,
    Connectivity,
    LaplacianBlocks,
    SignedDigraph,
    classify_connectivity,
    comparison_matrix,
    laplacian_blocks,
    strong_components,
    structural_balance,
)

TOL_PD = 1e-9
RANK_TOL = 1e-9


class AnalysisError(ValueError):
    """A precondition failed or a certificate could not be produced."""


def _pattern_strongly_connected(A: np.ndarray) -> bool:
    n = A.shape[0]
    if n == 1:
        return True
    R = (np.abs(A) > 0).astype(int)
    np.fill_diagonal(R, 1)
    reach = R.copy()
    for _ in range(int(np.ceil(np.log2(n))) + 1):
        reach = np.minimum(reach @ reach, 1)
    return bool(reach.all())


# --------------------------------------------------------------------------
# left positive vector


@dataclass(frozen=True)
class PerronData:
    p: np.ndarray

    @property
    def P(self) -> np.ndarray:
        return np.diag(self.p)


def left_positive_vector(L) -> PerronData:
    """Positive ``p`` with ``p^T M(L) = 0`` and ``sum(p) = 1``."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if n == 1:
        return PerronData(np.ones(1))
    if not _pattern_strongly_connected(L):
        raise AnalysisError("left_positive_vector: component is not strongly connected")
    M = comparison_matrix(L)
    _, s, vt = np.linalg.svd(M.T)
    null_dim = int(np.sum(s <= RANK_TOL * s[0]))
    if null_dim != 1:
        raise AnalysisError(f"left null space of M(L) has dimension {null_dim}, expected 1")
    p = vt[-1]
    p = p if p.sum() > 0 else -p
    p = p / p.sum()
    if np.any(p <= 0):
        raise AnalysisError("left null vector is not entrywise positive")
    return PerronData(p)


def balance_gap(L, gauge, perron: PerronData) -> float:
    """``min xi^T Lbar xi / xi^T P xi`` over ``xi != 0`` with ``xi^T G p = 0``.

    ``Lbar = (P L + L^T P) / 2``.  Solved as a generalized symmetric
    eigenproblem on an orthonormal basis of the constraint subspace.
    """
    L = np.asarray(L, dtype=float)
    gauge = np.asarray(gauge, dtype=float)
    n = L.shape[0]
    if n < 2:
        raise AnalysisError("balance_gap needs at least two nodes")
    if not np.allclose(np.diag(gauge) @ L @ np.diag(gauge), comparison_matrix(L), atol=1e-12):
        raise AnalysisError("balance_gap: gauge does not balance L")
    P = perron.P
    Lbar = 0.5 * (P @ L + L.T @ P)
    Q = sla.null_space((gauge * perron.p)[None, :])
    vals = sla.eigh(Q.T @ Lbar @ Q, Q.T @ P @ Q, eigvals_only=True)
    a = float(vals[0])
    if a <= TOL_PD:
        raise AnalysisError(f"balance_gap: a(L) = {a:g} is not positive")
    return a


# --------------------------------------------------------------------------
# diagonal stabilizers


@dataclass(frozen=True)
class DiagonalStabilizer:
    d: np.ndarray
    lambda_min: float

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.d)


def is_nonsingular_m_matrix(M, tol: float = TOL_PD) -> bool:
    M = np.asarray(M, dtype=float)
    off = M - np.diag(np.diag(M))
    if np.any(off > 0):
        return False
    return bool(np.min(np.linalg.eigvals(M).real) > tol)


def stabilizer_eligible(A) -> bool:
    """Nonsingular H-matrix, or a Laplacian of an unbalanced strong graph."""
    A = np.asarray(A, dtype=float)
    M = comparison_matrix(A)
    if is_nonsingular_m_matrix(M):
        return True
    scale = max(1.0, float(np.abs(A).max()))
    laplacian_like = np.allclose(M.sum(axis=1), 0.0, atol=1e-12 * scale)
    return bool(
        laplacian_like
        and _pattern_strongly_connected(A - np.diag(np.diag(A)))
        and np.min(np.linalg.eigvals(A).real) > TOL_PD
    )


def _stab_score(A: np.ndarray, s: np.ndarray) -> float:
    d = np.exp(s - s.max())
    S = d[:, None] * A + (d[:, None] * A).T
    return float(np.linalg.eigvalsh(S)[0])


def _ascend(A: np.ndarray, s: np.ndarray, budget: int) -> tuple[np.ndarray, float]:
    n = len(s)
    best = _stab_score(A, s)
    step = 1.0
    it = 0
    while it < budget and step > 1e-7:
        improved = False
        for i in range(n):
            for sgn in (1.0, -1.0):
                trial = s.copy()
                trial[i] += sgn * step
                val = _stab_score(A, trial)
                it += 1
                if val > best:
                    s, best, improved = trial, val, True
                    break
        if not improved:
            step *= 0.5
        else:
            step = min(step * 1.5, 4.0)
    return s, best


def diagonal_stabilizer(A, seed: int | None = 0, restarts: int = 8) -> DiagonalStabilizer:
    """Positive diagonal ``D`` (max entry 1) with ``D A + A^T D`` positive definite.

    Coordinate ascent on ``log D`` maximising the smallest eigenvalue, from
    ``D = I`` and then from random starts.  Raises if nothing reaches
    ``TOL_PD`` within the budget of ``200 * n`` evaluations per start.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if not stabilizer_eligible(A):
        raise AnalysisError("diagonal_stabilizer: input is neither a nonsingular H-matrix "
                            "nor an unbalanced strongly connected Laplacian")
    rng = np.random.default_rng(seed)
    budget = 200 * n
    starts = [np.zeros(n)] + [rng.normal(scale=2.0, size=n) for _ in range(restarts)]
    best_s, best_val = None, -np.inf
    for s0 in starts:
        s, val = _ascend(A, s0, budget)
        if val > best_val:
            best_s, best_val = s, val
        if best_val >= TOL_PD:
            break
    if best_val < TOL_PD:
        raise AnalysisError(f"diagonal_stabilizer: search budget exhausted (best {best_val:g})")
    d = np.exp(best_s - best_s.max())
    lam = float(np.linalg.eigvalsh(d[:, None] * A + (d[:, None] * A).T)[0])
    return DiagonalStabilizer(d=d, lambda_min=lam)


# --------------------------------------------------------------------------
# positive definiteness


def is_positive_definite(S, tol: float = TOL_PD) -> tuple[bool, float]:
    S = np.asarray(S, dtype=float)
    if np.max(np.abs(S - S.T), initial=0.0) > 1e-10 * max(1.0, float(np.abs(S).max(initial=0.0))):
        raise ValueError("is_positive_definite: matrix is not symmetric")
    lam = float(np.linalg.eigvalsh(0.5 * (S + S.T))[0])
    return lam > tol, lam


def schur_positive_definite(S1, S2, S3, tol: float = TOL_PD) -> tuple[bool, float]:
    """Test ``[[S1, S2^T], [S2, S3]] > 0`` via ``S3 > 0`` and its Schur complement.

    Returns the verdict and the smallest eigenvalue of the complement (or of
    ``S3`` when that already fails).
    """
    ok3, lam3 = is_positive_definite(S3, tol)
    if not ok3:
        return False, lam3
    S2 = np.asarray(S2, dtype=float)
    comp = np.asarray(S1, dtype=float) - S2.T @ np.linalg.solve(S3, S2)
    return is_positive_definite(0.5 * (comp + comp.T), tol)


# --------------------------------------------------------------------------
# containment weights


@dataclass(frozen=True)
class ContainmentWeights:
    """``varpi[:, k] = -L_F^{-1} L_FLk G_k 1`` for every closed strong component.

    ``gauges[k]`` is the component gauge, or all ones when it is unbalanced
    (``zero_limit[k]`` set: the component's limit is 0).  ``zeta`` is the
    single column in the quasi-strong case.
    """

    gauges: tuple[np.ndarray, ...]
    zero_limit: tuple[bool, ...]
    varpi: np.ndarray

    @property
    def zeta(self) -> np.ndarray:
        if self.varpi.shape[1] != 1:
            raise AttributeError("zeta is defined only with a single closed strong component")
        return self.varpi[:, 0]

    @property
    def row_sums(self) -> np.ndarray:
        return np.abs(self.varpi).sum(axis=1)


def containment_weights(blocks: LaplacianBlocks, balance: list[BalanceVerdict]) -> ContainmentWeights:
    if len(balance) != len(blocks.csc_slices):
        raise ValueError("one balance verdict per closed strong component is required")
    gauges, zero = [], []
    for sl, bv in zip(blocks.csc_slices, balance):
        size = sl.stop - sl.start
        if bv.balanced:
            gauges.append(np.asarray(bv.gauge, dtype=float))
            zero.append(False)
        else:
            gauges.append(np.ones(size))
            zero.append(True)
    nf = blocks.L_F.shape[0]
    if nf == 0:
        return ContainmentWeights(tuple(gauges), tuple(zero), np.zeros((0, len(gauges))))
    cond = np.linalg.cond(blocks.L_F)
    if not np.isfinite(cond) or cond > 1e12:
        raise AnalysisError("L_F is singular; connectivity classification is inconsistent")
    cols = [
        -np.linalg.solve(blocks.L_F, L_FLk @ gk) for L_FLk, gk in zip(blocks.L_FLk, gauges)
    ]
    varpi = np.column_stack(cols)
    if np.any(np.abs(varpi).sum(axis=1) > 1 + 1e-9):
        raise AnalysisError("containment weights violate the row-sum bound")
    return ContainmentWeights(tuple(gauges), tuple(zero), varpi)


# --------------------------------------------------------------------------
# quasi-strong certificate


@dataclass(frozen=True)
class Certificate:
    balanced: bool
    rho: float
    rho_bound: float
    matrix: np.ndarray
    lambda_min: float
    leader_gap: float | None = None


def _coupling_matrix(L_FL, L_F, xi_F):
    Xi = np.diag(xi_F)
    Upsilon = Xi @ L_F + L_F.T @ Xi
    C = L_FL.T @ Xi @ np.linalg.solve(Upsilon, Xi @ L_FL)
    return Upsilon, 0.5 * (C + C.T)


def quasi_strong_certificate(
    blocks: LaplacianBlocks,
    balance: BalanceVerdict,
    perron: PerronData | None = None,
    rho_factor: float = 0.5,
    seed: int | None = 0,
) -> Certificate:
    """Assemble the composite Lyapunov matrix for a quasi-strong graph (K >= 2).

    Balanced leaders use ``Xi_L = diag(p)`` and the gap ``a(L_L)``; unbalanced
    leaders use a diagonal stabilizer of ``L_L``.  The coupling is chosen at
    ``rho_factor`` times its upper bound; below the bound a matrix that is not
    positive definite is an error, above it the matrix is returned as is.
    """
    if len(blocks.csc_slices) != 1:
        raise AnalysisError("quasi_strong_certificate needs exactly one closed strong component")
    if blocks.K < 2:
        raise AnalysisError("quasi_strong_certificate requires K >= 2")
    if blocks.L_F.shape[0] == 0:
        raise AnalysisError("quasi_strong_certificate requires at least one follower")
    L_L, L_FL, L_F = blocks.L_L, blocks.L_FL, blocks.L_F
    xi_F = diagonal_stabilizer(L_F, seed=seed).d
    Xi_F = np.diag(xi_F)
    Upsilon, C = _coupling_matrix(L_FL, L_F, xi_F)
    c_max = float(np.linalg.eigvalsh(C)[-1])
    if balance.balanced:
        perron = perron or left_positive_vector(L_L)
        a = balance_gap(L_L, balance.gauge, perron)
        top = 2 * a * perron.P
        bound = 2 * a * float(perron.p.min()) / c_max
        rho = rho_factor * bound
        off = rho * Xi_F @ L_FL
    else:
        xi_L = diagonal_stabilizer(L_L, seed=seed).d
        top = np.diag(xi_L) @ L_L + L_L.T @ np.diag(xi_L)
        a = None
        bound = float(np.linalg.eigvalsh(top)[0]) / c_max
        rho = rho_factor * bound
        off = rho * Xi_F @ L_FL
    M = np.block([[top, off.T], [off, rho * Upsilon]])
    M = 0.5 * (M + M.T)
    ok, lam = is_positive_definite(M)
    if rho_factor < 1 and not ok:
        raise AnalysisError(f"certificate matrix is not positive definite below the bound (lambda_min {lam:g})")
    return Certificate(balance.balanced, rho, bound, M, lam, a)


# --------------------------------------------------------------------------
# bundled analysis


@dataclass(frozen=True)
class GraphAnalysis:
    graph: SignedDigraph
    connectivity: Connectivity
    partition: ComponentPartition
    blocks: LaplacianBlocks
    csc_balance: tuple[BalanceVerdict, ...]
    csc_perron: tuple[PerronData, ...]
    csc_gap: tuple[float | None, ...]
    whole_balance: BalanceVerdict
    containment: ContainmentWeights | None = None
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def leaders_balanced(self) -> bool:
        return all(bv.balanced for bv in self.csc_balance)

    def report(self) -> dict:
        part = self.partition
        out = {
            "connectivity": self.connectivity.label,
            "n": self.graph.n_nodes,
            "structurally_balanced": self.whole_balance.balanced,
            "gauge": None if self.whole_balance.gauge is None else self.whole_balance.gauge.astype(int).tolist(),
            "leaders": [v + 1 for v in part.leaders],
            "followers": [v + 1 for v in part.followers],
            "cscs": [],
            "laplacian_eigenvalues": [
                {"re": float(z.real), "im": float(z.imag)} for z in self.eigenvalues
            ],
        }
        for k, (nodes, bv, pd, gap) in enumerate(
            zip(part.cscs, self.csc_balance, self.csc_perron, self.csc_gap)
        ):
            entry = {
                "nodes": [v + 1 for v in nodes],
                "balanced": bv.balanced,
                "gauge": None if bv.gauge is None else bv.gauge.astype(int).tolist(),
                "p": pd.p.tolist(),
                "a_L": gap,
            }
            if not bv.balanced:
                try:
                    Lk = self.blocks.L_Lk[k]
                    entry["stabilizer"] = diagonal_stabilizer(Lk).d.tolist()
                except AnalysisError as exc:
                    entry["stabilizer_error"] = str(exc)
            if not bv.balanced:
                entry["witness"] = [[s + 1, d + 1, w] for s, d, w in bv.witness]
            out["cscs"].append(entry)
        if self.containment is not None and self.containment.varpi.size:
            out["varpi"] = self.containment.varpi.tolist()
            out["varpi_row_sums"] = self.containment.row_sums.tolist()
            if self.blocks.L_F.shape[0]:
                try:
                    out["follower_stabilizer"] = diagonal_stabilizer(self.blocks.L_F).d.tolist()
                except AnalysisError as exc:
                    out["follower_stabilizer_error"] = str(exc)
        return out


def analyze_graph(g: SignedDigraph) -> GraphAnalysis:
    part = strong_components(g)
    conn = classify_connectivity(g, part)
    blocks = laplacian_blocks(g, part)
    balances, perrons, gaps = [], [], []
    for k, nodes in enumerate(part.cscs):
        bv = structural_balance(g, nodes)
        Lk = blocks.L_Lk[k]
        pd = left_positive_vector(Lk)
        gap = balance_gap(Lk, bv.gauge, pd) if bv.balanced and len(nodes) > 1 else None
        balances.append(bv)
        perrons.append(pd)
        gaps.append(gap)
    # every follower is reachable from some closed component, so L_F is
    # nonsingular even for disconnected graphs
    containment = containment_weights(blocks, balances)
    return GraphAnalysis(
        graph=g,
        connectivity=conn,
        partition=part,
        blocks=blocks,
        csc_balance=tuple(balances),
        csc_perron=tuple(perrons),
        csc_gap=tuple(gaps),
        whole_balance=structural_balance(g),
        containment=containment,
        eigenvalues=np.sort_complex(np.linalg.eigvals(g.laplacian)),
    )
