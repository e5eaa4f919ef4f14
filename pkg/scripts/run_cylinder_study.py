#!/usr/bin/env python3
"""Run the full cylinder escalation study (finite data -> blow-up limit,
lengthening cylinders -> cross-section coincidence) from the command line."""
import argparse
import json
from pathlib import Path

from blowup_lab import ExperimentConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=None, help="default 3(p-1)")
    ap.add_argument("--ells", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    ap.add_argument("--nx", type=int, default=65)
    ap.add_argument("--out", type=Path, default=Path("out/cylinder"))
    args = ap.parse_args()

    q = args.q if args.q is not None else 3.0 * (args.p - 1.0)
    cfg = ExperimentConfig.from_dict({
        "kind": "cylinder",
        "force": {"kind": "power", "q": q},
        "operator": {"kind": "p-laplace", "p": args.p},
        "params": {"ells": list(args.ells), "nx": args.nx, "translation_y": 1.0},
    })
    report = run(cfg, args.out)
    print(json.dumps(report.to_dict()["checks"], indent=2))
    print(f"status: {report.status}; artifacts in {args.out}")
    raise SystemExit(0 if report.status == "pass" else 1)


if __name__ == "__main__":
    main()
