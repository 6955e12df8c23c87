"""Fixed-step RK4 integration of the closed loop, with grading near settling times."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import DisturbanceSpec, ProtocolParams, disturbance, neighborhood_error, sgn_bl
from .gain import gain_ratio
from .signed_graph import SignedDigraph

# explicit RK4 is stable on the negative real axis up to h * rate ~ 2.78
RK4_STABLE_STEP = 2.0
SHRINK = 20.0


class SimulationError(RuntimeError):
    def __init__(self, msg: str, t: float | None = None):
        super().__init__(msg)
        self.t = t


@dataclass(frozen=True)
class Scenario:
    """One closed-loop run.

    ``record_stride`` records every ``record_stride * h`` seconds; event
    times are always recorded.  ``protocol_enabled=False`` zeroes the
    control so that ``x' = d`` (integrator validation only).
    """

    graph: SignedDigraph
    params: ProtocolParams
    x0: np.ndarray
    t_end: float
    h: float = 1e-3
    disturbance: DisturbanceSpec | None = None
    sigma0: np.ndarray | None = None
    record_stride: int = 1
    protocol_enabled: bool = True
    name: str = ""
    tol: float | None = None

    def __post_init__(self):
        n = self.graph.n_nodes
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (n,):
            raise ValueError(f"x0 has {x0.size} entries, graph has {n} nodes")
        object.__setattr__(self, "x0", x0)
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.t_end < self.params.settling_time:
            raise ValueError(
                f"t_end before settling time ({self.t_end} < {self.params.settling_time})"
            )
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.params.sliding:
            if self.sigma0 is None:
                raise ValueError("sliding runs need sigma0")
            s0 = np.asarray(self.sigma0, dtype=float)
            if s0.shape != (n,):
                raise ValueError(f"sigma0 has {s0.size} entries, graph has {n} nodes")
            object.__setattr__(self, "sigma0", s0)
        if self.disturbance is not None and self.disturbance.bound > self.params.delta + 1e-15:
            raise ValueError(
                f"disturbance amplitude {self.disturbance.bound} exceeds declared delta {self.params.delta}"
            )

    @property
    def events(self) -> dict[str, float]:
        p = self.params
        if p.sliding:
            return {"Tr": p.Tr, "settling": p.settling_time}
        return {"settling": p.T1}


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    d: np.ndarray
    sigma: np.ndarray | None = None
    events: dict[str, float] = field(default_factory=dict)
    steps: int = 0

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def index_of(self, t: float) -> int:
        i = int(np.searchsorted(self.t, t - 1e-12 * max(1.0, abs(t))))
        if i >= len(self.t) or abs(self.t[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"t = {t} is not a grid point")
        return i

    def after(self, t: float) -> np.ndarray:
        """Mask of samples at or after ``t``."""
        return self.t >= t - 1e-12 * max(1.0, abs(t))

    def at(self, t: float) -> np.ndarray:
        return self.x[self.index_of(t)]

    def write_csv(self, path) -> None:
        n = self.n
        cols = ["t"] + [f"x_{i + 1}" for i in range(n)]
        blocks = [self.t[:, None], self.x]
        if self.sigma is not None:
            cols += [f"sigma_{i + 1}" for i in range(n)]
            blocks.append(self.sigma)
        cols += [f"u_{i + 1}" for i in range(n)]
        blocks.append(self.u)
        np.savetxt(path, np.hstack(blocks), fmt="%.17g", delimiter=",", header=",".join(cols), comments="")


class _Rhs:
    """Closed-loop vector field on ``y = [x, varsigma]`` (sliding) or ``y = x``."""

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.p = scn.params
        self.L = scn.graph.laplacian
        self.n = scn.graph.n_nodes
        self.nom = self.p.nominal_schedule
        self.reach = self.p.reaching_schedule if self.p.sliding else None
        self.Lnorm = float(np.abs(self.L).sum(axis=1).max()) if self.n else 0.0

    def controls(self, t, y):
        """``(U, varsigma_dot, d)``."""
        n = self.n
        x = y[:n]
        d = disturbance(t, self.scn.disturbance, n)
        if not self.scn.protocol_enabled:
            return np.zeros(n), (np.zeros(n) if self.p.sliding else None), d
        u_nom = (self.p.rho1 + self.p.rho2 * gain_ratio(t, self.nom)) * neighborhood_error(x, self.L)
        if not self.p.sliding:
            return u_nom, None, d
        sigma = x + y[n:]
        kr = self.p.mu2 + self.p.mu3 * gain_ratio(t, self.reach)
        u_dis = -self.p.mu1 * sgn_bl(sigma, self.p.boundary_layer) - kr * sigma
        return u_dis + u_nom, -u_nom, d

    def __call__(self, t, y):
        U, vs_dot, d = self.controls(t, y)
        xdot = U + d
        return xdot if vs_dot is None else np.concatenate([xdot, vs_dot])

    def stiffness(self, t) -> float:
        """Upper bound on the local decay rate (Gershgorin on the linear part)."""
        if not self.scn.protocol_enabled:
            return 0.0
        r = (self.p.rho1 + self.p.rho2 * gain_ratio(t, self.nom)) * self.Lnorm
        if self.p.sliding:
            r += self.p.mu2 + self.p.mu3 * gain_ratio(t, self.reach)
            if self.p.boundary_layer > 0:
                r += self.p.mu1 / self.p.boundary_layer
        return r


def _rk4(f, t, y, h):
    # the last stage is taken at the left limit of t + h so that a step ending
    # exactly at a settling time still sees the clamped gain, not the jump to 0
    t_end = np.nextafter(t + h, -math.inf)
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t_end, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_size(scn: Scenario, rhs: _Rhs, t: float, y: np.ndarray, next_event: float) -> float:
    h = scn.h
    for sched in (rhs.nom, rhs.reach):
        if sched is not None and t < sched.T:
            h = min(h, max(sched.T - t, sched.epsilon_T) / SHRINK)
    rate = rhs.stiffness(t)
    if rate > 0:
        h = min(h, RK4_STABLE_STEP / rate)
    if rhs.p.sliding and rhs.p.boundary_layer == 0 and scn.protocol_enabled:
        # heuristic: do not step far past a sign change of any sigma_k
        n = rhs.n
        sigma = y[:n] + y[n:]
        sdot = rhs(t, y)
        sdot = sdot[:n] + sdot[n:]
        moving = np.abs(sdot) > 0
        if moving.any():
            cross = np.min(np.abs(sigma[moving]) / np.abs(sdot[moving]))
            h = min(h, max(cross, scn.h / SHRINK))
    return min(h, next_event - t)


def simulate(scn: Scenario, max_steps: int = 50_000_000) -> Trajectory:
    rhs = _Rhs(scn)
    n = rhs.n
    y = scn.x0.copy()
    if scn.params.sliding:
        y = np.concatenate([y, scn.sigma0 - scn.x0])

    rec_dt = scn.h * scn.record_stride
    specials = sorted({v for v in scn.events.values()} | {scn.t_end})
    snap = 1e-12 * max(1.0, scn.t_end)

    ts, xs, us, ds, ss = [], [], [], [], []

    def record(t, y):
        U, _, d = rhs.controls(t, y)
        ts.append(t)
        xs.append(y[:n].copy())
        us.append(U)
        ds.append(d)
        if scn.params.sliding:
            ss.append(y[:n] + y[n:])

    t = 0.0
    k_rec = 1
    record(t, y)
    steps = 0
    while t < scn.t_end - snap:
        next_rec = k_rec * rec_dt
        next_special = next(s for s in specials if s > t + snap)
        target = min(next_rec, next_special)
        h = _step_size(scn, rhs, t, y, target)
        y = _rk4(rhs, t, y, h)
        steps += 1
        t_new = t + h
        if abs(t_new - target) <= snap:
            t_new = target
        t = t_new
        if not np.all(np.isfinite(y)):
            raise SimulationError(
                f"non-finite state at t = {t:.6g}; try a smaller h or a larger epsilon_T", t
            )
        hit = False
        while k_rec * rec_dt <= t + snap:
            hit = hit or abs(k_rec * rec_dt - t) <= snap
            k_rec += 1
        if hit or t in specials:
            record(t, y)
        if steps > max_steps:
            raise SimulationError(f"step budget exhausted at t = {t:.6g}", t)

    return Trajectory(
        t=np.array(ts),
        x=np.array(xs),
        u=np.array(us),
        d=np.array(ds),
        sigma=np.array(ss) if ss else None,
        events=scn.events,
        steps=steps,
    )


@dataclass
class RunResult:
    index: int
    name: str
    trajectory: Trajectory | None = None
    verdicts: list | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_one(args) -> RunResult:
    i, scn, evaluate = args
    name = getattr(scn, "name", f"#{i}")
    try:
        if not isinstance(scn, Scenario):
            scn = scn()
            name = scn.name
        traj = simulate(scn)
        verdicts = evaluate(scn, traj) if evaluate is not None else None
        return RunResult(i, scn.name, traj, verdicts)
    except (ValueError, SimulationError, ArithmeticError) as exc:
        return RunResult(i, name, error=f"{type(exc).__name__}: {exc}")


def batch(
    scenarios: Sequence[Scenario | Callable[[], Scenario]],
    jobs: int = 1,
    evaluate: Callable | None = None,
) -> list[RunResult]:
    """Run scenarios independently; results come back in input order.

    ``evaluate(scenario, trajectory)`` produces the verdict list; by default
    the standard suite from :mod:`cansim.verify`.  An entry may also be a
    zero-argument builder, so that construction errors are recorded per
    scenario like run failures instead of aborting the batch.
    """
    if evaluate is None:
        from .verify import default_suite as evaluate
    work = [(i, s, evaluate) for i, s in enumerate(scenarios)]
    if jobs <= 1 or len(work) <= 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, work))
