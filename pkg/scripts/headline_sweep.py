"""Headline Carleman sweep: deterministic and random test functions, ratio table and plot."""

import argparse
import json
from pathlib import Path

from lpcarleman.carleman import evaluate_carleman
from lpcarleman.config import build_carleman, read_json
from lpcarleman.report import write_csv, write_svg

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", nargs="+", default=["headline.json", "headline_random.json"])
    ap.add_argument("--out", default="results/headline")
    ap.add_argument("--svg", action="store_true", help="also plot ratio vs gamma (needs matplotlib)")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series = []
    for name in args.configs:
        path = ROOT / "configs" / name
        cfg, coeffs, extras = build_carleman(read_json(path), path.parent)
        rep = evaluate_carleman(cfg, coeffs, extras["diagnostics_gamma"])
        stem = Path(name).stem
        write_csv(rep.rows(), out / f"{stem}.csv")
        (out / f"{stem}.json").write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
        print(f"{stem}: gamma0={rep.gamma0} C={rep.C} verdict={rep.verdict}")
        for s in rep.exponent_study:
            print(f"  grad^{s['grad_exponent']:g} l2^{s['l2_exponent']:g}: gamma0={s['gamma0']} C={s['C']}")
        series.append((stem, cfg.gammas, rep.ratios))
    if args.svg:
        write_svg(out / "ratios.svg", series, "gamma", "inequality ratio", hline=1e-3)


if __name__ == "__main__":
    main()
