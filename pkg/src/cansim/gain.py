"""Prescribed-time gain ``phi(t, T) = T^k / (T - t)^k`` with a singularity guard."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

log = logging.getLogger(__name__)

# relative clamp width; see GainSchedule.epsilon_T
DEFAULT_EPS_REL = 1e-10


@dataclass(frozen=True)
class GainSchedule:
    """Settling time ``T``, exponent ``kappa`` and clamp width ``epsilon_T``.

    On ``[T - epsilon_T, T)`` the gain is frozen at its value at
    ``T - epsilon_T``; from ``T`` on ``phi`` is 1 and its derivative 0.
    ``epsilon_T`` defaults to ``DEFAULT_EPS_REL * T``.
    """

    T: float
    kappa: float
    epsilon_T: float | None = None

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"settling time must be > 0, got {self.T}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.epsilon_T is None:
            object.__setattr__(self, "epsilon_T", DEFAULT_EPS_REL * self.T)
        if not 0 < self.epsilon_T < self.T:
            raise ValueError(f"need 0 < epsilon_T < T, got {self.epsilon_T}")
        if self.kappa <= 2:
            log.info("kappa=%g <= 2 accepted; the settling time is unchanged", self.kappa)

    @property
    def t_clamp(self) -> float:
        return self.T - self.epsilon_T


def phi(t: float, sched: GainSchedule) -> float:
    if t >= sched.T:
        return 1.0
    gap = max(sched.T - t, sched.epsilon_T)
    return (sched.T / gap) ** sched.kappa


def gain_ratio(t: float, sched: GainSchedule) -> float:
    """``phi_dot / phi``, evaluated as ``kappa / (T - t)`` to avoid overflow."""
    if t >= sched.T:
        return 0.0
    return sched.kappa / max(sched.T - t, sched.epsilon_T)


def phi_dot(t: float, sched: GainSchedule) -> float:
    """``(kappa / T) * phi^(1 + 1/kappa)`` on ``[0, T)``, 0 afterwards."""
    if t >= sched.T:
        return 0.0
    return sched.kappa / sched.T * phi(t, sched) ** (1.0 + 1.0 / sched.kappa)


def envelope(t: float, a: float, b: float, sched: GainSchedule) -> float:
    """Decay envelope ``phi^-b * exp(-a t)``, computed in log space."""
    if t >= sched.T:
        return 0.0
    gap = max(sched.T - t, sched.epsilon_T)
    return math.exp(b * sched.kappa * math.log(gap / sched.T) - a * t)
