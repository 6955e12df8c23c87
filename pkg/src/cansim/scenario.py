"""Scenario documents (JSON) and the packaged demo scenarios."""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import DisturbanceSpec, ProtocolParams
from .gain import DEFAULT_EPS_REL
from .signed_graph import GraphError, SignedDigraph, parse_graph
from .simulator import Scenario


class ScenarioError(ValueError):
    """Invalid scenario document; the message starts with the offending field."""


NOMINAL_KEYS = ("rho1", "rho2", "kappa", "T1", "epsilon_rel")
SLIDING_KEYS = ("rho1", "rho2", "kappa", "Tr", "Ts", "mu1", "mu2", "mu3", "delta", "boundary_layer", "epsilon_rel")
TOP_KEYS = {
    "name", "graph", "mode", "params", "disturbance", "x0", "sigma0",
    "t_end", "h", "record_stride", "seed", "tol",
}


def _num(doc: dict, key: str, where: str, default=None, positive=False, integer=False):
    if key not in doc or doc[key] is None:
        if default is None:
            raise ScenarioError(f"{where}{key}: required")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(f"{where}{key}: expected a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ScenarioError(f"{where}{key}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ScenarioError(f"{where}{key}: must be positive, got {v!r}")
    return int(v) if integer else float(v)


def load_json(path) -> dict:
    """Read JSON, reporting the parse location on failure."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_graph(spec, base_dir: Path | None = None) -> SignedDigraph:
    if isinstance(spec, str):
        path = Path(spec)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        spec = load_json(path)
    if not isinstance(spec, dict):
        raise ScenarioError("graph: expected an object or a file path")
    try:
        return parse_graph(spec)
    except GraphError as exc:
        raise ScenarioError(f"graph: {exc}") from None


def _vector(doc: dict, key: str, n: int, rng: np.random.Generator) -> list[float]:
    v = doc.get(key)
    if isinstance(v, dict):
        if set(v) != {"uniform"} or len(v["uniform"]) != 2:
            raise ScenarioError(f'{key}: random initial states use {{"uniform": [low, high]}}')
        lo, hi = (float(a) for a in v["uniform"])
        if not lo < hi:
            raise ScenarioError(f"{key}.uniform: need low < high")
        return rng.uniform(lo, hi, n).tolist()
    if not isinstance(v, list):
        raise ScenarioError(f"{key}: expected a list of {n} numbers")
    if len(v) != n:
        raise ScenarioError(f"{key}: has {len(v)} entries, graph has {n} nodes")
    for i, a in enumerate(v):
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not math.isfinite(a):
            raise ScenarioError(f"{key}[{i}]: expected a finite number, got {a!r}")
    return [float(a) for a in v]


def resolve(doc: dict, base_dir: Path | None = None, seed: int | None = None) -> dict:
    """Fill in defaults and return a self-contained document.

    The result has the graph inline, explicit initial states and every
    parameter spelled out, so it reproduces the run when fed back in.
    ``seed`` overrides the document's seed.
    """
    if not isinstance(doc, dict):
        raise ScenarioError("scenario: expected a JSON object")
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise ScenarioError(f"{sorted(unknown)[0]}: unknown field")
    if "graph" not in doc:
        raise ScenarioError("graph: required")
    g = load_graph(doc["graph"], base_dir)
    mode = doc.get("mode", "nominal")
    if mode not in ("nominal", "sliding"):
        raise ScenarioError(f"mode: expected 'nominal' or 'sliding', got {mode!r}")
    seed = int(doc.get("seed", 0)) if seed is None else int(seed)
    rng = np.random.default_rng(seed)

    pdoc = doc.get("params")
    if not isinstance(pdoc, dict):
        raise ScenarioError("params: required object")
    allowed = SLIDING_KEYS if mode == "sliding" else NOMINAL_KEYS
    extra = set(pdoc) - set(allowed)
    if extra:
        raise ScenarioError(f"params.{sorted(extra)[0]}: not used in {mode} mode")

    dist = doc.get("disturbance")
    ddoc = None
    if dist is not None:
        if not isinstance(dist, dict):
            raise ScenarioError("disturbance: expected an object")
        ddoc = {
            "waveform": dist.get("waveform", "zero"),
            "amplitude": _num(dist, "amplitude", "disturbance.", 1.0),
            "freq": _num(dist, "freq", "disturbance.", 0.0),
            "freq_per_index": bool(dist.get("freq_per_index", True)),
            "phase": _num(dist, "phase", "disturbance.", 0.0),
        }
        try:
            DisturbanceSpec(**ddoc)
        except ValueError as exc:
            raise ScenarioError(f"disturbance: {exc}") from None
    bound = 0.0 if ddoc is None or ddoc["waveform"] == "zero" else ddoc["amplitude"]

    w = "params."
    p = {
        "rho1": _num(pdoc, "rho1", w, positive=True),
        "rho2": _num(pdoc, "rho2", w, positive=True),
        "kappa": _num(pdoc, "kappa", w, positive=True),
        "epsilon_rel": _num(pdoc, "epsilon_rel", w, DEFAULT_EPS_REL, positive=True),
    }
    if mode == "nominal":
        p["T1"] = _num(pdoc, "T1", w, positive=True)
        settle = p["T1"]
    else:
        for key in ("Tr", "Ts", "mu1", "mu2", "mu3"):
            p[key] = _num(pdoc, key, w, positive=True)
        p["delta"] = _num(pdoc, "delta", w, bound)
        p["boundary_layer"] = _num(pdoc, "boundary_layer", w, 1e-4)
        if p["delta"] < bound:
            raise ScenarioError(f"params.delta: {p['delta']} is below the disturbance amplitude {bound}")
        if not p["mu1"] > p["delta"]:
            raise ScenarioError(f"params.mu1: must exceed delta ({p['mu1']} <= {p['delta']})")
        settle = p["Tr"] + p["Ts"]

    out = {"name": str(doc.get("name", "")), "graph": g.to_doc(), "mode": mode, "params": p, "disturbance": ddoc}
    out["x0"] = _vector(doc, "x0", g.n_nodes, rng)
    if mode == "sliding":
        if "sigma0" not in doc:
            raise ScenarioError("sigma0: required in sliding mode")
        out["sigma0"] = _vector(doc, "sigma0", g.n_nodes, rng)
    elif "sigma0" in doc:
        raise ScenarioError("sigma0: only used in sliding mode")
    out["t_end"] = _num(doc, "t_end", "", settle + 0.5, positive=True)
    if out["t_end"] < settle:
        raise ScenarioError(f"t_end: t_end before settling time ({out['t_end']} < {settle})")
    out["h"] = _num(doc, "h", "", 1e-3, positive=True)
    out["record_stride"] = _num(doc, "record_stride", "", 1, positive=True, integer=True)
    out["seed"] = seed
    out["tol"] = None if doc.get("tol") is None else _num(doc, "tol", "", positive=True)
    return out


def build(resolved: dict) -> Scenario:
    g = parse_graph(resolved["graph"])
    pp = dict(resolved["params"])
    try:
        params = ProtocolParams(**pp)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"params: {exc}") from None
    dist = DisturbanceSpec(**resolved["disturbance"]) if resolved.get("disturbance") else None
    return Scenario(
        graph=g,
        params=params,
        x0=np.array(resolved["x0"]),
        t_end=resolved["t_end"],
        h=resolved["h"],
        disturbance=dist,
        sigma0=None if resolved.get("sigma0") is None else np.array(resolved["sigma0"]),
        record_stride=resolved["record_stride"],
        name=resolved.get("name", ""),
        tol=resolved.get("tol"),
    )


def load_scenario(path, seed: int | None = None) -> tuple[Scenario, dict]:
    path = Path(path)
    resolved = resolve(load_json(path), path.parent, seed)
    return build(resolved), resolved


def build_from_doc(doc: dict, base_dir: str | None = None, seed: int | None = None) -> Scenario:
    """Module-level builder so batch workers can pickle it."""
    return build(resolve(doc, None if base_dir is None else Path(base_dir), seed))


# --------------------------------------------------------------------------
# demos

DEMO_GRAPHS = ("ex1a", "ex1b", "ex2a", "ex2b", "ex3a", "ex3b")

_X0_6A = [5, 2, -4, 3, -2, 1]
_X0_6B = [-4, 3, -1, 2, -2, 5]
_X0_16 = [-6, 4, 5, -7, 8, -5, -3, 7, -5, 6, 4, 2, -5, 3, -8, 1]
_X0_16_SLIDING = [2.6, -1.2, -1.2, -1, -0.2, 0.9, -2.9, 2, 0.3, 2.1, -1, -0.3, -2.7, -2, 1, -1]
_SIGMA0_16 = [2.9, -3, 0.5, 0, 0.75, -0.8, -1.5, 3.8, 2.3, 3.6, 0.2, -0.27, -4, -2.3, -0.5, -2.9]

# family -> (graph family, mode, params, disturbance, x0, sigma0)
_DEMO_FAMILIES = {
    "ex1": ("ex1", "nominal", {"rho1": 0.1, "rho2": 0.3, "kappa": 1, "T1": 0.6}, None, _X0_6A, None),
    "ex2": ("ex2", "nominal", {"rho1": 0.2, "rho2": 0.5, "kappa": 1, "T1": 0.6}, None, _X0_6B, None),
    "ex3": ("ex3", "nominal", {"rho1": 0.1, "rho2": 0.3, "kappa": 1, "T1": 0.2}, None, _X0_16, None),
    "ex4": (
        "ex1", "sliding",
        {"rho1": 0.1, "rho2": 0.3, "kappa": 2, "Tr": 0.5, "Ts": 1.0, "mu1": 1.2, "mu2": 0.6, "mu3": 0.9, "delta": 1.0},
        {"waveform": "sin", "amplitude": 1.0, "freq": 2.0, "phase": math.pi / 3},
        _X0_6B, [-9, 1, -5, 8, -4, 6],
    ),
    "ex5": (
        "ex2", "sliding",
        {"rho1": 0.25, "rho2": 0.3, "kappa": 3, "Tr": 1.0, "Ts": 0.5, "mu1": 2.0, "mu2": 0.4, "mu3": 0.5, "delta": 1.0},
        {"waveform": "sin", "amplitude": 1.0, "freq": 2.0, "phase": math.pi / 2},
        [-4, 4, 5, -7, 8, 1], [-10, 10, 9, -5, 5, 4],
    ),
    "ex6": (
        "ex3", "sliding",
        {"rho1": 0.2, "rho2": 0.1, "kappa": 3, "Tr": 0.4, "Ts": 0.6, "mu1": 2.0, "mu2": 0.1, "mu3": 0.5, "delta": 1.0},
        {"waveform": "cos", "amplitude": 1.0, "freq": 1.0, "phase": -math.pi / 3},
        _X0_16_SLIDING, _SIGMA0_16,
    ),
}

DEMO_NAMES = tuple(f"{fam}{v}" for fam in _DEMO_FAMILIES for v in "ab")

# what each demo variant is expected to show
DEMO_EXPECTED = {
    "ex1a": "stability", "ex1b": "bipartite_consensus",
    "ex2a": "interval_bipartite", "ex2b": "stability",
    "ex3a": "bipartite_containment", "ex3b": "stability",
    "ex4a": "stability", "ex4b": "bipartite_consensus",
    "ex5a": "interval_bipartite", "ex5b": "stability",
    "ex6a": "bipartite_containment", "ex6b": "stability",
}


def demo_graph_doc(name: str) -> dict:
    if name not in DEMO_GRAPHS:
        raise ScenarioError(f"unknown demo graph {name!r}")
    text = resources.files("cansim").joinpath("data", f"{name}.json").read_text()
    return json.loads(text)


def demo_document(name: str) -> dict:
    if name not in DEMO_NAMES:
        raise ScenarioError(f"unknown demo {name!r}; choose from {', '.join(DEMO_NAMES)}")
    fam, variant = name[:3], name[3]
    gfam, mode, params, dist, x0, sigma0 = _DEMO_FAMILIES[fam]
    doc = {
        "name": name,
        "graph": demo_graph_doc(gfam + variant),
        "mode": mode,
        "params": dict(params),
        "x0": list(x0),
    }
    if dist is not None:
        doc["disturbance"] = dict(dist)
    if sigma0 is not None:
        doc["sigma0"] = list(sigma0)
    return doc
