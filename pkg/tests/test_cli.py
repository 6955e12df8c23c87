import json

import numpy as np
import pytest

from cansim.cli import main
from cansim.scenario import DEMO_EXPECTED, DEMO_NAMES, ScenarioError, demo_document, resolve

TRIANGLE = {"n": 3, "edges": [{"from": 1, "to": 2, "w": 1}, {"from": 2, "to": 3, "w": 1}, {"from": 3, "to": 1, "w": 1}]}
SIGNED_CYCLE = {"n": 3, "edges": [{"from": 1, "to": 2, "w": 1}, {"from": 2, "to": 3, "w": 1}, {"from": 3, "to": 1, "w": -1}]}
NOMINAL = {
    "name": "tri",
    "graph": TRIANGLE,
    "mode": "nominal",
    "params": {"rho1": 0.1, "rho2": 0.3, "kappa": 1, "T1": 0.6},
    "x0": [1.0, -2.0, 4.0],
    "h": 2e-3,
}


def write(path, doc):
    path.write_text(json.dumps(doc))
    return path


# ---- analyze


def test_analyze_positive_triangle(tmp_path, capsys):
    assert main(["analyze", str(write(tmp_path / "g.json", TRIANGLE))]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "Strong, balanced, gauge (+,+,+)"


def test_analyze_signed_cycle(tmp_path, capsys):
    assert main(["analyze", str(write(tmp_path / "g.json", SIGNED_CYCLE))]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "Strong, unbalanced"


def test_analyze_json_report(tmp_path, capsys):
    assert main(["analyze", "--json", str(write(tmp_path / "g.json", TRIANGLE))]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["connectivity"] == "Strong"
    assert np.allclose(rep["cscs"][0]["p"], 1 / 3)
    assert rep["cscs"][0]["a_L"] == pytest.approx(1.5)


def test_analyze_malformed_json(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text('{"n": 2,\n "edges": [}')
    assert main(["analyze", str(path)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_analyze_names_bad_edge(tmp_path, capsys):
    doc = {"n": 2, "edges": [{"from": 1, "to": 1, "w": 1}]}
    assert main(["analyze", str(write(tmp_path / "g.json", doc))]) == 2
    assert "self-loop" in capsys.readouterr().err


def test_analyze_missing_file(tmp_path):
    assert main(["analyze", str(tmp_path / "nope.json")]) == 2


# ---- simulate


def test_simulate_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", str(write(tmp_path / "s.json", NOMINAL)), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"trajectory.csv", "verdicts.json", "params.json"}
    verdicts = json.loads((out / "verdicts.json").read_text())
    assert [v["property"] for v in verdicts] == ["bipartite_consensus", "predicted_limit"]
    assert all(v["pass"] for v in verdicts)
    assert "bipartite_consensus: pass at t = 0.6" in capsys.readouterr().out


def test_simulate_t_end_before_settling(tmp_path, capsys):
    doc = {**NOMINAL, "t_end": 0.3}
    assert main(["simulate", str(write(tmp_path / "s.json", doc)), "--out", str(tmp_path / "o")]) == 2
    assert "t_end before settling time" in capsys.readouterr().err


def test_simulate_is_deterministic_and_echo_round_trips(tmp_path):
    doc = {**NOMINAL, "x0": {"uniform": [-3, 3]}, "seed": 5}
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    scn = write(tmp_path / "s.json", doc)
    assert main(["simulate", str(scn), "--out", str(a)]) == 0
    assert main(["simulate", str(scn), "--out", str(b)]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    assert main(["simulate", str(a / "params.json"), "--out", str(c)]) == 0
    assert (a / "trajectory.csv").read_bytes() == (c / "trajectory.csv").read_bytes()
    assert (a / "params.json").read_bytes() == (c / "params.json").read_bytes()


def test_seed_environment_override(tmp_path, monkeypatch):
    doc = {**NOMINAL, "x0": {"uniform": [-3, 3]}, "seed": 5}
    scn = write(tmp_path / "s.json", doc)
    monkeypatch.setenv("CANSIM_SEED", "9")
    assert main(["simulate", str(scn), "--out", str(tmp_path / "a")]) == 0
    echoed = json.loads((tmp_path / "a" / "params.json").read_text())
    assert echoed["seed"] == 9
    assert echoed["x0"] == resolve(doc, seed=9)["x0"] != resolve(doc)["x0"]


def test_bad_seed_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CANSIM_SEED", "abc")
    assert main(["simulate", str(write(tmp_path / "s.json", NOMINAL)), "--out", str(tmp_path / "o")]) == 2
    assert "CANSIM_SEED" in capsys.readouterr().err


def test_verdict_failure_exit_code(tmp_path):
    doc = {**NOMINAL, "tol": 1e-14}
    assert main(["simulate", str(write(tmp_path / "s.json", doc)), "--out", str(tmp_path / "o")]) == 1


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"extra": 1}, "extra: unknown field"),
        ({"params": {"rho1": -0.1, "rho2": 0.3, "kappa": 1, "T1": 0.6}}, "params.rho1"),
        ({"params": {"rho1": 0.1, "rho2": 0.3, "kappa": 1}}, "params.T1: required"),
        ({"x0": [1.0, 2.0]}, "x0: has 2 entries"),
        ({"mode": "turbo"}, "mode"),
        ({"sigma0": [0, 0, 0]}, "sigma0: only used in sliding mode"),
    ],
)
def test_scenario_errors_name_the_field(patch, field):
    with pytest.raises(ScenarioError, match=field):
        resolve({**NOMINAL, **patch})


def test_sliding_needs_mu1_above_delta():
    doc = demo_document("ex4a")
    doc["params"]["mu1"] = 0.9
    with pytest.raises(ScenarioError, match="params.mu1"):
        resolve(doc)


def test_sliding_needs_sigma0():
    doc = demo_document("ex4a")
    del doc["sigma0"]
    with pytest.raises(ScenarioError, match="sigma0: required"):
        resolve(doc)


def test_delta_defaults_to_disturbance_bound():
    doc = demo_document("ex4a")
    del doc["params"]["delta"]
    assert resolve(doc)["params"]["delta"] == 1.0


# ---- demo


def test_unknown_demo_rejected():
    with pytest.raises(SystemExit) as info:
        main(["demo", "ex9z", "--out", "/tmp/never"])
    assert info.value.code == 2


@pytest.mark.parametrize("name", DEMO_NAMES)
def test_demo_passes_expected_verdict(name, tmp_path, capsys):
    assert main(["demo", name, "--out", str(tmp_path)]) == 0
    verdicts = json.loads((tmp_path / "verdicts.json").read_text())
    props = {v["property"]: v for v in verdicts}
    assert DEMO_EXPECTED[name] in props
    assert all(v["pass"] for v in verdicts)
    resolved = json.loads((tmp_path / "params.json").read_text())
    T = resolved["params"].get("T1") or resolved["params"]["Tr"] + resolved["params"]["Ts"]
    assert props[DEMO_EXPECTED[name]]["t_eval"] == pytest.approx(T)
    if name.startswith("ex4"):
        assert props["sliding_reach"]["t_eval"] == 0.5
        assert "sliding_reach: pass at t = 0.5" in capsys.readouterr().out


def test_demo_ex1b_prints_bipartite(tmp_path, capsys):
    assert main(["demo", "ex1b", "--out", str(tmp_path)]) == 0
    assert "bipartite_consensus: pass at t = 0.6" in capsys.readouterr().out


# ---- batch


def test_batch_collects_errors(tmp_path, capsys):
    write(tmp_path / "good.json", NOMINAL)
    manifest = write(tmp_path / "m.json", {"scenarios": ["good.json", {**NOMINAL, "name": "late", "t_end": 0.1}]})
    out = tmp_path / "out"
    assert main(["batch", str(manifest), "--out", str(out), "--jobs", "2"]) == 2
    summary = json.loads((out / "summary.json").read_text())
    assert [s["index"] for s in summary] == [0, 1]
    assert summary[0]["pass"] and summary[0]["error"] is None
    assert (out / summary[0]["dir"] / "trajectory.csv").exists()
    assert "t_end before settling time" in summary[1]["error"]


def test_batch_all_good(tmp_path):
    manifest = write(tmp_path / "m.json", {"scenarios": [NOMINAL, {**NOMINAL, "name": "two", "x0": [0, 1, 2]}]})
    assert main(["batch", str(manifest), "--out", str(tmp_path / "out")]) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert [s["dir"] for s in summary] == ["000_tri", "001_two"]
