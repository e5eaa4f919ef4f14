#!/usr/bin/env python3
"""Dead-core study: the critical length L, a profile with a flat zero core,
and the decay of v_ell(0) into the exact-zero regime."""
import argparse
from pathlib import Path

from blowup_lab import (dead_core_profile, decay_sweep, length_scale, make_force,
                        make_operator)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=0.5, help="growth exponent at 0")
    ap.add_argument("--b", type=float, default=3.0, help="growth exponent at infinity")
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--ell-offset", type=float, default=0.5)
    ap.add_argument("--out", type=Path, default=Path("out/dead_core"))
    args = ap.parse_args()

    op = make_operator(kind="p-laplace", p=args.p)
    force = make_force(kind="piecewise-power", a=args.a, b=args.b)
    L = length_scale(op, force)
    print(f"L = {L:.12g}")

    ell = L + args.ell_offset
    prof = dead_core_profile(op, force, ell)
    args.out.mkdir(parents=True, exist_ok=True)
    prof.to_csv(args.out / "dead_core_profile.csv")
    prof.to_json(args.out / "dead_core_profile.json")
    print(f"ell = {ell:.6g}, core half-width = {prof.dead_core[1]:.6g}")

    probe = 0.25 * L
    rows = decay_sweep(op, force, [0.5 * L, 0.9 * L, L + probe + 0.1, L + probe + 1.0],
                       probe)
    for r in rows:
        print(f"ell={r.ell:<10.6g} v0={r.v0:<12.6g} value(x={probe:.3g})={r.value:.6g}"
              + ("  [dead core]" if r.dead_core else ""))
    print(f"artifacts in {args.out}")


if __name__ == "__main__":
    main()
