"""Simulation and analysis of prescribed-time coordination on signed digraphs."""

from .dynamics import DisturbanceSpec, ProtocolParams
from .gain import GainSchedule, gain_ratio, phi
from .signed_graph import (
    Connectivity,
    SignedDigraph,
    classify_connectivity,
    laplacian_blocks,
    parse_graph,
    strong_components,
    structural_balance,
)
from .simulator import Scenario, Trajectory, simulate
from .spectral import GraphAnalysis, analyze_graph
from .verify import PredictedLimit, Verdict, default_suite, predicted_limits

__version__ = "0.1.0"
