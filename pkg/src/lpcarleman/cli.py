"""Command-line entry point: ``lpcarleman <group> <action> [options]``.

Exit codes: 0 when every verdict passes, 1 when any verdict is fail or
inconclusive, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import build_carleman, load_run_config, modulus_arg, read_json
from .errors import ConfigError, InternalError, LPCarlemanError
from .grid import get_threads, load_grid_function, random_field, save_grid_function, set_threads
from .report import ReportDocument, write_csv, write_svg

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, config: bool = False) -> None:
    p.add_argument("--seed", type=int, default=None, help="64-bit seed for all sampled data")
    p.add_argument("--out", default=None, help="JSON report path (default: stdout)")
    p.add_argument("--csv", default=None, help="CSV output path")
    p.add_argument("--svg", default=None, help="SVG plot path (needs matplotlib)")
    p.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    if config:
        p.add_argument("--config", default=None, help="JSON config validated against the shipped schema")


def _modulus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", default=None, help="power | loglip | sqrt_mu_square")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--mu", default=None, help="compact form, e.g. power:1, loglip:0.5, from-mu:loglip:1")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lpcarleman", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = ap.add_subparsers(dest="group", required=True, parser_class=_Parser)

    g = groups.add_parser("modulus", help="condition checks on a modulus of continuity")
    sub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = sub.add_parser("check")
    _modulus_args(p)
    p.add_argument("--k-max", "--kmax", dest="k_max", type=int, default=60)
    p.add_argument("--s", type=float, action="append", default=[],
                   help="also check the series condition for this s (repeatable)")
    _common(p)

    g = groups.add_parser("weight", help="tabulate the Carleman weight")
    sub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = sub.add_parser("build")
    _modulus_args(p)
    p.add_argument("--tau-max", type=float, required=True)
    p.add_argument("--h0", type=float, default=1.0 / 16.0)
    p.add_argument("--tol", type=float, default=1e-6, help="relative ODE residual tolerance")
    _common(p)

    g = groups.add_parser("lp", help="Littlewood-Paley blocks and dyadic norms")
    sub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("decompose", "norm"):
        p = sub.add_parser(name)
        p.add_argument("--input", default=None, help="grid function JSON; random field if omitted")
        p.add_argument("--n", type=int, default=1, choices=(1, 2))
        p.add_argument("--N", type=int, default=1024)
        p.add_argument("--k-band", type=float, default=48.0)
        if name == "norm":
            p.add_argument("--s", type=float, required=True)
            p.add_argument("--omega", default=None, help="weight modulus, compact form")
        _common(p)

    g = groups.add_parser("verify", help="measure constants of the analytic estimates")
    sub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("remainder", "bernstein", "commutator", "mollifier"):
        p = sub.add_parser(name)
        _common(p, config=True)
        if name == "remainder":
            p.add_argument("--s", type=float, default=None)
            p.add_argument("--omega", default=None, help="compact modulus form, e.g. loglip:1")
            p.add_argument("--trials", type=int, default=None, help="random (a, b) pairs per grid")

    g = groups.add_parser("carleman", help="evaluate both sides of the Carleman inequality")
    sub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = sub.add_parser("run")
    p.add_argument("--config", required=True)
    p.add_argument("--quiet", action="store_true")
    _common(p)
    return ap


# -- handlers ------------------------------------------------------------------

def _mu(args):
    try:
        return modulus_arg(args.mu, args.family, args.alpha)
    except KeyError as exc:
        raise ConfigError(f"modulus needs {exc}") from exc


def _modulus_check(args, doc: ReportDocument) -> None:
    from .modulus import (check_concavity, check_dini, check_osgood, check_techcond1,
                          check_techcond2, derive_omega)

    mu = _mu(args)
    omega = derive_omega(mu)
    doc.config["params"] = {"mu": mu.label, "omega": omega.label, "k_max": args.k_max, "s": args.s}
    with doc.stage("conditions"):
        reps = [check_osgood(mu, args.k_max), check_concavity(mu),
                check_dini(omega), check_techcond1(omega)]
        reps += [check_techcond2(omega, s) for s in args.s]
    for r in reps:
        doc.add("condition", r)
    if args.csv:
        write_csv([{"condition": r.condition, "verdict": r.verdict, "constant": r.constant,
                    "witness": r.witness} for r in reps], args.csv)


def _weight_build(args, doc: ReportDocument) -> None:
    from .weight import build_weight_table

    mu = _mu(args)
    doc.config["params"] = {"mu": mu.label, "tau_max": args.tau_max, "h0": args.h0, "tol": args.tol}
    with doc.stage("build"):
        wt = build_weight_table(mu, args.tau_max, h0=args.h0)
    with doc.stage("residual"):
        res = wt.residual()
        viol = wt.invariant_violations()
    worst = float(np.max(res))
    verdict = "pass" if worst <= args.tol and not viol else "fail"
    doc.add("weight_table", {
        "verdict": verdict, "mu": mu.label, "tau_max": wt.tau_max, "nodes": len(wt.tau),
        "max_relative_residual": worst, "invariant_violations": viol,
        "Phi_at_tau_max": float(wt.Phi_at(wt.tau_max)),
        "Phi_prime_at_tau_max": float(wt.Phi_prime_at(wt.tau_max)),
        "max_quadrature_error": float(np.max(wt.quadrature_error))})
    if args.csv:
        wt.to_csv(args.csv)
    if args.svg:
        write_svg(args.svg, [("Phi'", list(wt.tau), list(wt.Phi_prime)),
                             ("Phi''", list(wt.tau), list(wt.Phi_double_prime))],
                  "tau", "value", title=mu.label, logx=False)


def _lp_field(args, doc: ReportDocument):
    if args.input:
        return load_grid_function(args.input)
    seed = 0 if args.seed is None else args.seed
    doc.config["seed"] = seed
    return random_field(args.N, np.random.default_rng(seed), n=args.n, k_band=args.k_band)


def _lp_decompose(args, doc: ReportDocument) -> None:
    from .lp_core import decompose

    u = _lp_field(args, doc)
    doc.config["params"] = {"input": args.input, "n": u.n, "N": u.N, "L": u.L, "k_band": args.k_band}
    with doc.stage("decompose"):
        d = decompose(u)
        rec = float((d.reconstruct() - u).l2_norm()) / max(float(u.l2_norm()), 1e-300)
    leak = max(d.support_leak.values())
    rows = [{"q": q, "l2": float(b.l2_norm()), "support_leak": d.support_leak[q]} for q, b in d.blocks]
    verdict = "pass" if rec <= 1e-12 and leak <= 1e-12 else "fail"
    doc.add("lp_decomposition", {"verdict": verdict, "reconstruction_error": rec,
                                 "max_support_leak": leak, "blocks": rows})
    if args.csv:
        write_csv(rows, args.csv, ["q", "l2", "support_leak"])
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        for q, b in d.blocks:
            save_grid_function(b, Path(args.out_dir) / f"block_q{q}.json")


def _lp_norm(args, doc: ReportDocument) -> None:
    from .lp_core import SobolevSpec, dyadic_sobolev_norm, multiplier_sobolev_norm
    from .modulus import parse_modulus

    u = _lp_field(args, doc)
    omega = parse_modulus(args.omega) if args.omega else None
    doc.config["params"] = {"input": args.input, "n": u.n, "N": u.N, "s": args.s,
                            "omega": omega.label if omega else None, "k_band": args.k_band}
    with doc.stage("norm"):
        dyad = float(dyadic_sobolev_norm(u, SobolevSpec(args.s, omega)))
        mult = float(multiplier_sobolev_norm(u, args.s))
    ok = math.isfinite(dyad) and math.isfinite(mult)
    doc.add("sobolev_norm", {"verdict": "pass" if ok else "fail", "dyadic": dyad,
                             "multiplier": mult, "ratio": dyad / mult if mult else None})


def _variation(values) -> float:
    lo, hi = min(values), max(values)
    return math.inf if lo <= 0 else hi / lo


def _verify_bernstein(args, doc: ReportDocument) -> None:
    from .verifiers import bernstein_sweep

    rc = load_run_config("verify bernstein", "bernstein", args.config, args.seed,
                         {"n": 1, "N": 1024, "samples": 50, "k_band": 48.0, "tol": 1e-6})
    doc.config.update(rc.echo())
    p = rc.params
    rng = rc.rng()
    L = p.get("L", 2 * np.pi)
    with doc.stage("fields"):
        fields = [random_field(p["N"], rng, n=p["n"], L=L, k_band=p["k_band"]) for _ in range(p["samples"])]
    with doc.stage("bernstein"):
        reps = bernstein_sweep(fields, p["tol"])
    for r in reps.values():
        doc.add("estimate", r)
    if args.csv:
        write_csv([{"estimate": r.estimate, **s, "ratio": x}
                   for r in reps.values() for s, x in zip(r.samples, r.ratios)], args.csv)


def _verify_commutator(args, doc: ReportDocument) -> None:
    from .lp_core import q_max
    from .verifiers import commutator_lattice, commutator_lattice_points

    rc = load_run_config("verify commutator", "commutator", args.config, args.seed,
                         {"n": 1, "N_values": [512, 1024], "pairs": 20, "lattice_points": 40,
                          "near": 2, "k_band": 24.0, "max_variation": 2.0})
    doc.config.update(rc.echo())
    p = rc.params
    L = p.get("L", 2 * np.pi)
    Ns = p["N_values"]
    lattice = commutator_lattice_points(q_max(min(Ns), L), rc.rng(1), p["lattice_points"], p["near"])
    consts = {}
    for N in Ns:
        # same stream per N: identical continuous fields on every grid
        rng = rc.rng(0)
        pairs = [(random_field(N, rng, n=p["n"], L=L, k_band=p["k_band"]),
                  random_field(N, rng, n=p["n"], L=L, k_band=p["k_band"])) for _ in range(p["pairs"])]
        with doc.stage(f"N={N}"):
            rep = commutator_lattice(pairs, lattice)
        rep.details["N"] = N
        consts[N] = rep.max_ratio
        doc.add("estimate", rep)
    var = _variation(list(consts.values()))
    doc.add("grid_stability", {"estimate": "commutator", "constants": {str(k): v for k, v in consts.items()},
                               "variation": var, "max_variation": p["max_variation"],
                               "verdict": "pass" if var < p["max_variation"] else "fail"})
    if args.csv:
        write_csv([{"N": N, "constant": c} for N, c in consts.items()], args.csv)


def _verify_mollifier(args, doc: ReportDocument) -> None:
    from .modulus import power
    from .verifiers import holder_time_field, verify_mollifier

    rc = load_run_config("verify mollifier", "mollifier", args.config, args.seed,
                         {"N": 16, "M": 513, "T": 1.0, "alpha": 0.5,
                          "eps": [2.0 ** -k for k in range(2, 7)], "max_variation": 2.0})
    doc.config.update(rc.echo())
    p = rc.params
    a = holder_time_field(p["N"], p["M"], p["T"], p["alpha"])
    with doc.stage("mollifier"):
        rep = verify_mollifier(a, power(p["alpha"]), p["eps"])
    var = rep.variation
    for r in (rep.approx, rep.derivative, rep.derivative_fd):
        r.ceiling = r.min_ratio * p["max_variation"]
        r.details["variation"] = var[r.estimate]
        doc.add("estimate", r)
    doc.add("mollifier_summary", {**rep.to_dict(), "max_variation": p["max_variation"]})
    if args.csv:
        write_csv([{"eps": e, "approx": x, "derivative": y, "derivative_fd": z}
                   for e, x, y, z in zip(rep.eps, rep.approx.ratios, rep.derivative.ratios,
                                         rep.derivative_fd.ratios)], args.csv)
    if args.svg:
        write_svg(args.svg, [(r.estimate, rep.eps, r.ratios)
                             for r in (rep.approx, rep.derivative, rep.derivative_fd)],
                  "eps", "ratio")


def _verify_remainder(args, doc: ReportDocument) -> None:
    from .config import validate
    from .modulus import modulus_from_dict, parse_modulus
    from .paraproduct import verify_remainder_estimate

    rc = load_run_config("verify remainder", "remainder", args.config, args.seed,
                         {"s": 0.5, "omega": {"family": "power", "alpha": 1.0}, "n": 1,
                          "N_values": [256, 512, 1024], "k_band": 12.0, "trials": 1,
                          "max_variation": 2.0})
    p = rc.params
    p.setdefault("trials", 1)
    if args.s is not None:
        p["s"] = args.s
    if args.trials is not None:
        p["trials"] = args.trials
    omega = parse_modulus(args.omega) if args.omega else modulus_from_dict(p["omega"])
    p["omega"] = omega.to_dict()
    validate(p, "remainder")
    doc.config.update(rc.echo())
    L = p.get("L", 2 * np.pi)
    rows, consts = [], {}
    conds = None
    for N in p["N_values"]:
        best = [0.0, 0.0, 0.0]
        for trial in range(p["trials"]):
            # one stream per trial, shared across N: the same continuous a, b on every grid
            rng = rc.rng(trial)
            a = random_field(N, rng, n=p["n"], L=L, k_band=p["k_band"], omega=omega)
            b = random_field(N, rng, n=p["n"], L=L, k_band=p["k_band"], omega=omega)
            with doc.stage(f"N={N}"):
                m = verify_remainder_estimate(a, b, p["s"], omega, check_conditions=conds is None)
            if conds is None:
                conds = m.conditions
            best = [max(x, y) for x, y in zip(best, m.ratios)]
            rows.append({"N": N, "trial": trial, "ratio_1": m.ratios[0], "ratio_2": m.ratios[1],
                         "ratio_3": m.ratios[2], "max_residual": m.max_residual, "max_leak": m.max_leak})
        consts[N] = best
    for c in conds:
        doc.add("condition", c)
    for i in range(3):
        vals = [c[i] for c in consts.values()]
        var = _variation(vals)
        ok = all(math.isfinite(v) for v in vals) and var < p["max_variation"]
        doc.add("grid_stability", {"estimate": f"remainder_{i + 1}", "s": p["s"], "omega": omega.label,
                                   "constants": {str(N): v for N, v in zip(consts, vals)},
                                   "variation": var, "max_variation": p["max_variation"],
                                   "verdict": "pass" if ok else "fail"})
    doc.add("remainder_table", {"rows": rows})
    if args.csv:
        write_csv(rows, args.csv)


def _carleman_run(args, doc: ReportDocument) -> None:
    from .carleman import evaluate_carleman, require_nondegenerate

    raw = read_json(args.config)
    with doc.stage("setup"):
        cfg, coeffs, extras = build_carleman(raw, Path(args.config).parent, args.seed)
    doc.config.update({"params": raw, "seed": int(raw.get("seed", 0) if args.seed is None else args.seed)})
    say = None if args.quiet else (lambda m: print(m, file=sys.stderr))
    with doc.stage("sweep"):
        rep = evaluate_carleman(cfg, coeffs, extras["diagnostics_gamma"], say)
    require_nondegenerate(rep)
    doc.add("carleman", rep)
    if args.csv:
        write_csv(rep.rows(), args.csv, ["gamma", "lhs", "rhs_grad", "rhs_l2", "ratio"])
    if args.svg:
        series = [(f"grad^{s['grad_exponent']:g}, l2^{s['l2_exponent']:g}", cfg.gammas, s["ratios"])
                  for s in rep.exponent_study]
        write_svg(args.svg, series, "gamma", "inequality ratio", title=f"{rep.mu}, s={rep.s:g}",
                  hline=cfg.floor)


HANDLERS = {
    ("modulus", "check"): _modulus_check,
    ("weight", "build"): _weight_build,
    ("lp", "decompose"): _lp_decompose,
    ("lp", "norm"): _lp_norm,
    ("verify", "bernstein"): _verify_bernstein,
    ("verify", "commutator"): _verify_commutator,
    ("verify", "mollifier"): _verify_mollifier,
    ("verify", "remainder"): _verify_remainder,
    ("carleman", "run"): _carleman_run,
}


def _route_outputs(args) -> None:
    """--out x.csv means the CSV output; --out dir/ puts report.json (and block files) there."""
    args.out_dir = None
    out = args.out
    if out is None:
        return
    if out.endswith(".csv") and args.csv is None:
        args.csv, args.out = out, None
    elif out.endswith(("/", "\\")) or Path(out).is_dir():
        args.out_dir = out
        args.out = str(Path(out) / "report.json")


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:        # --help / --version
        return int(exc.code or 0)
    _route_outputs(args)
    prev = get_threads()
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            set_threads(args.threads)
        doc = ReportDocument(__version__, {"command": f"{args.group} {args.action}"})
        HANDLERS[(args.group, args.action)](args, doc)
    except InternalError as exc:
        print(f"internal consistency check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (LPCarlemanError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        set_threads(prev)
    if args.out:
        doc.write(args.out)
        if args.out_dir:
            print(f"wrote {args.out}", file=sys.stderr)
    else:
        print(doc.dumps())
    print(f"{args.group} {args.action}: {doc.verdict}", file=sys.stderr)
    return EXIT_PASS if doc.verdict == "pass" else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
