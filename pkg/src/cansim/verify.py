"""Convergence verdicts on trajectories and the predicted-limit oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gain import GainSchedule, envelope
from .signed_graph import Connectivity
from .simulator import Scenario, Trajectory
from .spectral import GraphAnalysis, analyze_graph


def default_tolerance(x0) -> float:
    return 1e-3 * max(1.0, float(np.max(np.abs(x0))) if len(x0) else 1.0)


@dataclass
class Verdict:
    prop: str
    passed: bool
    residual: float
    tol: float
    t_eval: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "property": self.prop,
            "pass": bool(self.passed),
            "residual": float(self.residual),
            "tol": float(self.tol),
            "t_eval": float(self.t_eval),
            "details": self.details,
        }

    def summary(self) -> str:
        return f"{self.prop}: {'pass' if self.passed else 'FAIL'} at t = {self.t_eval:g} (residual {self.residual:.3g}, tol {self.tol:.3g})"


# --------------------------------------------------------------------------
# predicted limits


@dataclass(frozen=True)
class PredictedLimit:
    """Limit state of the disturbance-free closed loop.

    ``leader_values[k]`` is the signed level ``c_k`` of closed component k
    (0 for unbalanced ones); component k settles at ``c_k * G_k 1``.
    """

    kind: str
    limit: np.ndarray
    leader_values: tuple[float, ...]
    followers: np.ndarray


def predicted_limits(analysis: GraphAnalysis, x0, disturbed: bool = False) -> PredictedLimit:
    if disturbed:
        raise ValueError(
            "predicted limits apply to disturbance-free runs only; the reaching phase shifts the limit"
        )
    x0 = np.asarray(x0, dtype=float)
    part, blocks, cw = analysis.partition, analysis.blocks, analysis.containment
    n = analysis.graph.n_nodes
    if x0.shape != (n,):
        raise ValueError(f"x0 has {x0.size} entries, graph has {n} nodes")
    xp = x0[blocks.order]
    lim = np.zeros(n)
    levels = []
    for k, sl in enumerate(blocks.csc_slices):
        bv = analysis.csc_balance[k]
        if bv.balanced:
            c = float(analysis.csc_perron[k].p @ (bv.gauge * xp[sl]))
            lim[sl] = c * bv.gauge
        else:
            c = 0.0
        levels.append(c)
    K = blocks.K
    xf = cw.varpi @ np.array(levels) if n > K else np.zeros(0)
    lim[K:] = xf
    out = np.empty(n)
    out[blocks.order] = lim

    conn = analysis.connectivity
    any_balanced = any(bv.balanced for bv in analysis.csc_balance)
    if not any_balanced:
        kind = "stability"
    elif conn == Connectivity.STRONG:
        kind = "bipartite_consensus"
    elif conn == Connectivity.QUASI_STRONG:
        kind = "interval_bipartite"
    elif conn == Connectivity.WEAK:
        kind = "bipartite_containment"
    else:
        kind = "componentwise"
    return PredictedLimit(kind, out, tuple(levels), xf)


# --------------------------------------------------------------------------
# verdict checkers


def _window(traj: Trajectory, T: float) -> np.ndarray:
    if T > traj.t[-1] + 1e-12 * max(1.0, T):
        raise ValueError(f"verdict time {T} is beyond the end of the trajectory ({traj.t[-1]})")
    traj.index_of(T)  # grid must contain T
    return traj.after(T)


def check_stability(traj: Trajectory, T: float, tol: float) -> Verdict:
    w = _window(traj, T)
    res = float(np.max(np.abs(traj.x[w]))) if traj.n else 0.0
    return Verdict("stability", res <= tol, res, tol, T)


def _bipartite(X: np.ndarray, XT: np.ndarray, tol: float) -> tuple[float, float, bool]:
    """(x*, deviation, degenerate) for samples ``X`` after T and the sample ``XT`` at T."""
    x_star = float(np.median(np.abs(XT)))
    dev = float(np.max(np.abs(np.abs(X) - x_star))) if X.size else 0.0
    return x_star, dev, x_star <= tol


def check_bipartite_consensus(traj: Trajectory, T: float, tol: float) -> Verdict:
    """Magnitudes agree on a common ``x* > 0`` (median of ``|x_k(T)|``)."""
    w = _window(traj, T)
    x_star, dev, degenerate = _bipartite(traj.x[w], traj.at(T), tol)
    details = {"x_star": x_star}
    if degenerate:
        details["degenerate"] = "stability instead"
    return Verdict("bipartite_consensus", dev <= tol and not degenerate, dev, tol, T, details)


def _require(analysis: GraphAnalysis, allowed, name):
    if analysis.connectivity not in allowed:
        raise ValueError(f"{name} needs a {'/'.join(c.label for c in allowed)} graph, got {analysis.connectivity.label}")


def check_interval_bipartite(traj: Trajectory, analysis: GraphAnalysis, T: float, tol: float) -> Verdict:
    _require(analysis, (Connectivity.QUASI_STRONG,), "interval bipartite consensus")
    w = _window(traj, T)
    lead = list(analysis.partition.leaders)
    fol = list(analysis.partition.followers)
    x_f, dev, degenerate = _bipartite(traj.x[w][:, lead], traj.at(T)[lead], tol)
    excess = float(np.max(np.abs(traj.x[w][:, fol]) - x_f)) if fol else 0.0
    res = max(dev, excess)
    details = {"x_f": x_f, "leader_deviation": dev, "follower_excess": excess}
    if degenerate:
        details["degenerate"] = "stability instead"
    return Verdict("interval_bipartite", res <= tol and not degenerate, res, tol, T, details)


def check_bipartite_containment(traj: Trajectory, analysis: GraphAnalysis, T: float, tol: float) -> Verdict:
    _require(analysis, (Connectivity.WEAK,), "bipartite containment")
    w = _window(traj, T)
    X = traj.x[w]
    XT = traj.at(T)
    parts = []
    degenerate = []
    res = 0.0
    for k, nodes in enumerate(analysis.partition.cscs):
        nodes = list(nodes)
        if analysis.csc_balance[k].balanced:
            x_star, dev, deg = _bipartite(X[:, nodes], XT[nodes], tol)
            parts.append({"nodes": [v + 1 for v in nodes], "kind": "bipartite_consensus", "x_star": x_star, "residual": dev})
            if deg:
                # a balanced component may settle at level 0; the hull then collapses there
                degenerate.append(k + 1)
        else:
            dev = float(np.max(np.abs(X[:, nodes])))
            parts.append({"nodes": [v + 1 for v in nodes], "kind": "stability", "residual": dev})
        res = max(res, dev)
    lead = list(analysis.partition.leaders)
    fol = list(analysis.partition.followers)
    hull = np.max(np.abs(X[:, lead]), axis=1)
    excess = float(np.max(np.abs(X[:, fol]) - hull[:, None])) if fol else 0.0
    res = max(res, excess)
    details = {"components": parts, "follower_excess": excess}
    if degenerate:
        details["degenerate_components"] = degenerate
    return Verdict("bipartite_containment", res <= tol, res, tol, T, details)


def check_sliding_reach(traj: Trajectory, T_r: float, tol: float, boundary_layer: float) -> Verdict:
    if traj.sigma is None:
        raise ValueError("trajectory has no sliding-variable samples")
    w = _window(traj, T_r)
    res = float(np.max(np.abs(traj.sigma[w])))
    band = tol + boundary_layer
    return Verdict("sliding_reach", res <= band, res, band, T_r, {"boundary_layer": boundary_layer})


def check_envelope(t, V, a: float, b: float, sched: GainSchedule, slack: float, floor: float = 0.0) -> Verdict:
    """``V(t) <= phi^-b exp(-a t) V(0) (1 + slack) + floor`` before the clamp.

    The residual is the worst ``(V - floor) / (envelope * V(0)) - 1``, so the
    verdict passes iff it is at most ``slack``.  ``floor`` absorbs the terminal
    band left by a boundary layer or by sign chatter.
    """
    t = np.asarray(t, dtype=float)
    V = np.asarray(V, dtype=float)
    if not V[0] > 0:
        raise ValueError("envelope check needs V(0) > 0")
    worst = -1.0
    for ti, vi in zip(t, V):
        if ti >= sched.t_clamp:
            break
        bound = envelope(ti, a, b, sched) * V[0]
        excess = vi - floor
        if excess <= 0:
            continue
        r = excess / bound - 1.0 if bound > 0 else np.inf
        worst = max(worst, r)
    return Verdict("envelope", worst <= slack, worst, slack, float(sched.T), {"a": a, "b": b, "floor": floor})


# --------------------------------------------------------------------------
# standard suite


def structural_verdict(traj: Trajectory, analysis: GraphAnalysis, T: float, tol: float) -> Verdict | None:
    """The property the graph class promises at ``T`` (None if disconnected)."""
    conn = analysis.connectivity
    any_balanced = any(bv.balanced for bv in analysis.csc_balance)
    if conn == Connectivity.DISCONNECTED:
        return None
    if not any_balanced:
        return check_stability(traj, T, tol)
    if conn == Connectivity.STRONG:
        return check_bipartite_consensus(traj, T, tol)
    if conn == Connectivity.QUASI_STRONG:
        return check_interval_bipartite(traj, analysis, T, tol)
    return check_bipartite_containment(traj, analysis, T, tol)


def check_predicted(traj: Trajectory, pred: PredictedLimit, T: float, tol: float) -> Verdict:
    res = float(np.max(np.abs(traj.at(T) - pred.limit))) if traj.n else 0.0
    return Verdict("predicted_limit", res <= tol, res, tol, T, {"kind": pred.kind, "limit": pred.limit.tolist()})


def sliding_floor(scn: Scenario) -> float:
    """Terminal level of ``V = sigma^T sigma / 2`` left by the boundary layer or chatter."""
    p = scn.params
    band = p.boundary_layer if p.boundary_layer > 0 else (p.mu1 + p.delta) * scn.h
    return 0.5 * scn.graph.n_nodes * band**2


def default_suite(
    scn: Scenario,
    traj: Trajectory,
    tol: float | None = None,
    analysis: GraphAnalysis | None = None,
    envelope_slack: float = 1e-2,
) -> list[Verdict]:
    tol = tol if tol is not None else scn.tol if scn.tol is not None else default_tolerance(scn.x0)
    analysis = analysis or analyze_graph(scn.graph)
    p = scn.params
    T = p.settling_time
    out = []
    if p.sliding:
        out.append(check_sliding_reach(traj, p.Tr, tol, p.boundary_layer))
        reach = traj.t <= p.Tr
        sig = traj.sigma[reach]
        V = 0.5 * np.sum(sig**2, axis=1)
        if V[0] > 0:
            out.append(
                check_envelope(
                    traj.t[reach], V, 2 * p.mu2, 2 * p.mu3, p.reaching_schedule, envelope_slack, sliding_floor(scn)
                )
            )
    sv = structural_verdict(traj, analysis, T, tol)
    if sv is not None:
        out.append(sv)
    disturbed = scn.disturbance is not None and scn.disturbance.bound > 0
    if not disturbed and not p.sliding:
        out.append(check_predicted(traj, predicted_limits(analysis, scn.x0), T, tol))
    return out
