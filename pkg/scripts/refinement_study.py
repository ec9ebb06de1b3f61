"""Grid refinement of the single-mode Carleman lhs against the quadrature oracle.

Halves the time step (M) and doubles N, printing the relative error of lhs
for each fd order.  Run from the repository root.
"""

import argparse
import sys
from pathlib import Path

from lpcarleman.carleman import CarlemanConfig, bump_mode_field, evaluate_carleman, identity_coefficients
from lpcarleman.modulus import power
from lpcarleman.weight import build_weight_table

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
import oracles  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--gamma", type=float, nargs="+", default=[1.0, 4.0, 16.0])
    args = ap.parse_args()
    wt = build_weight_table(power(1), max(args.gamma))
    refs = {g: oracles.single_mode_carleman(args.k, 0.5, 1.0, g, 7)[0] for g in args.gamma}
    print("N      M     fd  " + "  ".join(f"err(g={g:g})" for g in args.gamma))
    for N in (256, 512, 1024):
        for M in (129, 257, 513, 1025):
            for fd in (4, 8):
                v = bump_mode_field(N, M, 1.0, [(args.k, 1.0)])
                cfg = CarlemanConfig(0.5, power(1), wt, list(args.gamma), 1.0, v, fd_order=fd,
                                     check_resolved=False)
                rep = evaluate_carleman(cfg, identity_coefficients(N, M, 1.0))
                errs = [abs(e.lhs - refs[e.gamma]) / refs[e.gamma] for e in rep.entries]
                print(f"{N:<6d} {M:<5d} {fd:<3d} " + "  ".join(f"{x:10.2e}" for x in errs))


if __name__ == "__main__":
    main()
