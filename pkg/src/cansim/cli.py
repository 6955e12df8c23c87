"""Command-line entry point: ``cansim {analyze,simulate,demo,batch}``.

Exit codes: 0 success, 1 verdict failure, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from functools import partial
from pathlib import Path

from .scenario import (
    DEMO_NAMES,
    ScenarioError,
    build,
    build_from_doc,
    demo_document,
    load_graph,
    load_json,
    resolve,
)
from .simulator import SimulationError, Trajectory, batch, simulate
from .spectral import AnalysisError, analyze_graph
from .verify import default_suite

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("cansim")


def _seed_override() -> int | None:
    raw = os.environ.get("CANSIM_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ScenarioError(f"CANSIM_SEED: expected an integer, got {raw!r}") from None


def _signs(gauge) -> str:
    return "(" + ",".join("+" if g > 0 else "-" for g in gauge) + ")"


def summarize(report: dict) -> list[str]:
    head = report["connectivity"]
    if report["structurally_balanced"]:
        head += f", balanced, gauge {_signs(report['gauge'])}"
    else:
        head += ", unbalanced"
    lines = [head]
    for k, c in enumerate(report["cscs"], 1):
        state = f"balanced {_signs(c['gauge'])}" if c["balanced"] else "unbalanced"
        gap = "" if c["a_L"] is None else f", a(L) = {c['a_L']:.6g}"
        lines.append(f"  closed component {k}: nodes {c['nodes']}, {state}{gap}")
    if report["followers"]:
        lines.append(f"  followers: {report['followers']}")
    return lines


def cmd_analyze(args) -> int:
    g = load_graph(str(args.graph))
    report = analyze_graph(g).report()
    if args.json:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        print("\n".join(summarize(report)))
    return EXIT_OK


def _write_outputs(out: Path, resolved: dict, traj: Trajectory, verdicts) -> None:
    out.mkdir(parents=True, exist_ok=True)
    traj.write_csv(out / "trajectory.csv")
    (out / "verdicts.json").write_text(json.dumps([v.to_dict() for v in verdicts], indent=2) + "\n")
    (out / "params.json").write_text(json.dumps(resolved, indent=2) + "\n")


def _run_resolved(resolved: dict, out: Path) -> int:
    scn = build(resolved)
    traj = simulate(scn)
    verdicts = default_suite(scn, traj)
    _write_outputs(out, resolved, traj, verdicts)
    for v in verdicts:
        print(v.summary())
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_VERDICT


def cmd_simulate(args) -> int:
    path = Path(args.scenario)
    resolved = resolve(load_json(path), path.parent, _seed_override())
    return _run_resolved(resolved, Path(args.out))


def cmd_demo(args) -> int:
    resolved = resolve(demo_document(args.name), None, _seed_override())
    return _run_resolved(resolved, Path(args.out))


def cmd_batch(args) -> int:
    manifest = Path(args.manifest)
    doc = load_json(manifest)
    entries = doc.get("scenarios") if isinstance(doc, dict) else doc
    if not isinstance(entries, list):
        raise ScenarioError("scenarios: expected a list of scenario files or objects")
    seed = _seed_override()
    base = manifest.parent
    builders, docs, names = [], [], []
    for i, e in enumerate(entries):
        try:
            if isinstance(e, str):
                path = base / e
                d, d_base = load_json(path), path.parent
            elif isinstance(e, dict):
                d, d_base = e, base
            else:
                raise ScenarioError(f"scenarios[{i}]: expected a path or an object")
            resolved = resolve(d, d_base, seed)
        except (ScenarioError, OSError) as exc:
            builders.append(partial(_raise, f"{exc}"))
            docs.append(None)
            names.append(f"{i:03d}")
            continue
        builders.append(partial(build_from_doc, resolved))
        docs.append(resolved)
        names.append(f"{i:03d}_{resolved['name']}" if resolved["name"] else f"{i:03d}")

    results = batch(builders, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    code = EXIT_OK
    for r, resolved, name in zip(results, docs, names):
        entry = {"index": r.index, "dir": name, "error": r.error}
        if r.ok:
            _write_outputs(out / name, resolved, r.trajectory, r.verdicts)
            entry["verdicts"] = [v.to_dict() for v in r.verdicts]
            passed = all(v.passed for v in r.verdicts)
            entry["pass"] = passed
            if not passed:
                code = max(code, EXIT_VERDICT)
            print(f"[{name}] " + "; ".join(v.summary() for v in r.verdicts))
        else:
            entry["pass"] = False
            bad = EXIT_NUMERIC if r.error.startswith("SimulationError") else EXIT_INPUT
            code = max(code, bad)
            print(f"[{name}] error: {r.error}")
        summary.append(entry)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return code


def _raise(msg: str):
    raise ScenarioError(msg)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cansim", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structural and spectral report of a graph file")
    p.add_argument("graph", type=Path)
    p.add_argument("--json", action="store_true", help="print the full JSON report")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run a scenario file")
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demo", help="run a packaged demo scenario")
    p.add_argument("name", choices=DEMO_NAMES)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("batch", help="run every scenario listed in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_batch)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AnalysisError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
