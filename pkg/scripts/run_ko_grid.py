#!/usr/bin/env python3
"""Sweep the growth-condition frontier: classify power forces against
p-laplace operators over a (p, q) grid and print/export the table."""
import argparse
import csv
from pathlib import Path

from blowup_lab import classify, make_force, make_operator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/ko_grid.csv"))
    ap.add_argument("--ps", type=float, nargs="+", default=[1.5, 2.0, 3.0, 4.0])
    ap.add_argument("--multipliers", type=float, nargs="+",
                    default=[0.5, 1.0, 1.5, 3.0], help="q = multiplier * (p-1)")
    args = ap.parse_args()

    rows = []
    for p in args.ps:
        op = make_operator(kind="p-laplace", p=p)
        for mult in args.multipliers:
            q = mult * (p - 1.0)
            rep = classify(op, make_force(kind="power", q=q))
            rows.append((p, q, rep.ko_holds, rep.osgood_holds, rep.a3_holds, rep.L))
            print(f"p={p:<4g} q={q:<6g} ko={str(rep.ko_holds):<5} "
                  f"osgood={str(rep.osgood_holds):<5} a3={str(rep.a3_holds):<5} "
                  f"L={rep.L if rep.L is not None else '-'}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "q", "ko_holds", "osgood_holds", "a3_holds", "L"])
        w.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
