"""Condition checks (Osgood, concavity, Dini, technical conditions) over a grid of moduli."""

import argparse

from lpcarleman.modulus import (check_concavity, check_dini, check_osgood, check_techcond1,
                                check_techcond2, derive_omega, log_lipschitz, power)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k-max", type=int, default=60)
    ap.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    args = ap.parse_args()
    mus = [power(a) for a in (0.25, 0.5, 0.75, 1.0)] + [log_lipschitz(a) for a in (0.5, 1.0, 2.0)]
    head = ["osgood", "concave", "dini", "tc1"] + [f"tc2(s={s:g})" for s in args.s]
    print(f"{'mu':<16}" + "".join(f"{h:>12}" for h in head))
    for mu in mus:
        om = derive_omega(mu)
        reps = [check_osgood(mu, args.k_max), check_concavity(mu), check_dini(om), check_techcond1(om)]
        reps += [check_techcond2(om, s) for s in args.s]
        print(f"{mu.label:<16}" + "".join(f"{r.verdict:>12}" for r in reps))


if __name__ == "__main__":
    main()
