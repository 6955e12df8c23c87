"""Control laws: neighbourhood error, nominal protocol, disturbances, sliding mode."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gain import GainSchedule, gain_ratio
from .signed_graph import SignedDigraph


@dataclass(frozen=True)
class ProtocolParams:
    """Gains and settling times.

    Nominal runs set ``T1``.  Sliding runs set ``Tr`` (reaching time) and
    ``Ts`` (post-reach budget); the nominal part then settles at ``Tr + Ts``.
    ``epsilon_rel`` is the gain clamp width relative to each settling time.
    """

    rho1: float
    rho2: float
    kappa: float
    T1: float | None = None
    Tr: float | None = None
    Ts: float | None = None
    mu1: float = 0.0
    mu2: float = 0.0
    mu3: float = 0.0
    delta: float = 0.0
    boundary_layer: float = 1e-4
    epsilon_rel: float | None = None

    def __post_init__(self):
        if not (self.rho1 > 0 and self.rho2 > 0):
            raise ValueError("rho1 and rho2 must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.sliding:
            if self.T1 is not None:
                raise ValueError("give either T1 (nominal) or Tr/Ts (sliding), not both")
            if not (self.Tr > 0 and self.Ts is not None and self.Ts > 0):
                raise ValueError("Tr and Ts must both be positive")
            if not (self.mu2 > 0 and self.mu3 > 0):
                raise ValueError("mu2 and mu3 must be positive")
            if not self.mu1 > self.delta:
                raise ValueError(f"sliding mode needs mu1 > delta (mu1={self.mu1}, delta={self.delta})")
        elif self.T1 is None or not self.T1 > 0:
            raise ValueError("nominal protocol needs T1 > 0")
        if self.delta < 0 or self.boundary_layer < 0:
            raise ValueError("delta and boundary_layer must be non-negative")

    @property
    def sliding(self) -> bool:
        return self.Tr is not None or self.Ts is not None

    @property
    def settling_time(self) -> float:
        return self.Tr + self.Ts if self.sliding else self.T1

    def _sched(self, T: float) -> GainSchedule:
        eps = None if self.epsilon_rel is None else self.epsilon_rel * T
        return GainSchedule(T, self.kappa, eps)

    @property
    def nominal_schedule(self) -> GainSchedule:
        """Clock of ``u_nom``: ``T1``, or ``Tr + Ts`` in sliding runs."""
        return self._sched(self.settling_time)

    @property
    def reaching_schedule(self) -> GainSchedule:
        """Clock of ``u_dis``: ``Tr``."""
        if not self.sliding:
            raise AttributeError("nominal protocol has no reaching schedule")
        return self._sched(self.Tr)


WAVEFORMS = ("sin", "cos", "constant", "zero")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Per-agent ``amplitude * wave(freq_k * t + phase)``.

    ``freq_per_index`` makes agent ``k`` (1-based) use ``freq * k`` rad/s.
    """

    waveform: str = "zero"
    amplitude: float = 1.0
    freq: float = 0.0
    freq_per_index: bool = True
    phase: float = 0.0

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"unknown waveform {self.waveform!r}; choose from {WAVEFORMS}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")

    @property
    def bound(self) -> float:
        return 0.0 if self.waveform == "zero" else abs(self.amplitude)

    def omegas(self, n: int) -> np.ndarray:
        k = np.arange(1, n + 1, dtype=float)
        return self.freq * k if self.freq_per_index else np.full(n, float(self.freq))


def disturbance(t: float, spec: DisturbanceSpec | None, n: int) -> np.ndarray:
    if spec is None or spec.waveform == "zero":
        return np.zeros(n)
    if spec.waveform == "constant":
        return np.full(n, spec.amplitude)
    arg = spec.omegas(n) * t + spec.phase
    wave = np.sin(arg) if spec.waveform == "sin" else np.cos(arg)
    return spec.amplitude * wave


def disturbance_integral(t: float, spec: DisturbanceSpec | None, n: int) -> np.ndarray:
    """Closed-form ``int_0^t d(s) ds``; used to validate the integrator."""
    if spec is None or spec.waveform == "zero":
        return np.zeros(n)
    if spec.waveform == "constant":
        return np.full(n, spec.amplitude * t)
    w = spec.omegas(n)
    ph = spec.phase
    out = np.empty(n)
    for i, wi in enumerate(w):
        if wi == 0:
            base = np.sin(ph) if spec.waveform == "sin" else np.cos(ph)
            out[i] = base * t
        elif spec.waveform == "sin":
            out[i] = (np.cos(ph) - np.cos(wi * t + ph)) / wi
        else:
            out[i] = (np.sin(wi * t + ph) - np.sin(ph)) / wi
    return spec.amplitude * out


def neighborhood_error(X, g: SignedDigraph | np.ndarray) -> np.ndarray:
    """``e_k = sum_l w_kl (x_l - sign(w_kl) x_k)``, i.e. ``-L X``."""
    L = g.laplacian if isinstance(g, SignedDigraph) else np.asarray(g)
    X = np.asarray(X, dtype=float)
    if X.shape != (L.shape[0],):
        raise ValueError(f"state has shape {X.shape}, expected ({L.shape[0]},)")
    return -(L @ X)


def nominal_control(X, t: float, g, params: ProtocolParams, total_T: float | None = None) -> np.ndarray:
    sched = params.nominal_schedule
    if total_T is not None and total_T != sched.T:
        sched = GainSchedule(total_T, params.kappa, None if params.epsilon_rel is None else params.epsilon_rel * total_T)
    return (params.rho1 + params.rho2 * gain_ratio(t, sched)) * neighborhood_error(X, g)


def sgn_bl(sigma, width: float) -> np.ndarray:
    """Exact sign (with sign(0) = 0) or its saturated linear replacement."""
    sigma = np.asarray(sigma, dtype=float)
    if width == 0:
        return np.sign(sigma)
    return np.clip(sigma / width, -1.0, 1.0)


@dataclass
class SlidingState:
    """Auxiliary states ``varsigma``; ``sigma = x + varsigma``."""

    varsigma: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def from_sigma(cls, sigma0, x0) -> "SlidingState":
        return cls(np.asarray(sigma0, dtype=float) - np.asarray(x0, dtype=float))

    def sigma(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) + self.varsigma


def sliding_terms(X, varsigma, t: float, g, params: ProtocolParams) -> tuple[np.ndarray, np.ndarray]:
    """``(u_dis, u_nom)`` for the sliding protocol."""
    if not params.sliding:
        raise ValueError("params do not describe a sliding protocol")
    u_nom = nominal_control(X, t, g, params)
    sigma = np.asarray(X, dtype=float) + varsigma
    reach_gain = params.mu2 + params.mu3 * gain_ratio(t, params.reaching_schedule)
    u_dis = -params.mu1 * sgn_bl(sigma, params.boundary_layer) - reach_gain * sigma
    return u_dis, u_nom


def sliding_control(X, state: SlidingState, t: float, g, params: ProtocolParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(U, varsigma_dot)`` with ``U = u_dis + u_nom`` and ``varsigma_dot = -u_nom``."""
    u_dis, u_nom = sliding_terms(X, state.varsigma, t, g, params)
    return u_dis + u_nom, -u_nom
