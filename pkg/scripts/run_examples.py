"""Run every packaged demo and print its verdicts.

    python scripts/run_examples.py --out runs/
"""

import argparse
import json
import time
from pathlib import Path

from cansim.scenario import DEMO_EXPECTED, DEMO_NAMES, build, demo_document, resolve
from cansim.simulator import simulate
from cansim.verify import default_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, help="write trajectory.csv and verdicts.json per demo here")
    ap.add_argument("names", nargs="*", default=list(DEMO_NAMES))
    args = ap.parse_args()

    failed = []
    for name in args.names:
        resolved = resolve(demo_document(name))
        scn = build(resolved)
        t0 = time.perf_counter()
        traj = simulate(scn)
        verdicts = default_suite(scn, traj)
        dt = time.perf_counter() - t0
        ok = all(v.passed for v in verdicts)
        if not ok:
            failed.append(name)
        print(f"{name} (expect {DEMO_EXPECTED[name]}, {traj.steps} steps, {dt:.1f} s)")
        for v in verdicts:
            print("   ", v.summary())
        if args.out:
            d = args.out / name
            d.mkdir(parents=True, exist_ok=True)
            traj.write_csv(d / "trajectory.csv")
            (d / "verdicts.json").write_text(json.dumps([v.to_dict() for v in verdicts], indent=2) + "\n")
    print("all demos pass" if not failed else f"failed: {', '.join(failed)}")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
