"""The twelve acceptance criteria, one test each.  Every test prints a PASS/FAIL line."""

import json
import math
import time

import numpy as np
import pytest

import oracles
from lpcarleman.carleman import (CarlemanConfig, bump_mode_field, conjugation_defect,
                                 evaluate_carleman, identity_coefficients, sinusoidal_coefficients)
from lpcarleman.cli import run
from lpcarleman.grid import random_field
from lpcarleman.lp_core import DEFAULT_CUTOFFS, decompose, multiplier, q_max
from lpcarleman.modulus import check_osgood, log_lipschitz, power
from lpcarleman.paraproduct import decompose_product, margin_level
from lpcarleman.weight import build_weight_table

# frozen from tests/oracles.single_mode_carleman(8, 0.5, 1.0, gamma, 7): (lhs, rhs_grad, rhs_l2)
SINGLE_MODE = {1.0: (458.36107303040666, 7.480479020558457, 0.9082756026904242),
               4.0: (243.06839625239033, 7.480479020558457, 0.9082756026904242),
               16.0: (12217167999.711164, 7.480479020558457, 0.9082756026904242)}


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _payloads(path):
    return json.loads(path.read_text())["payloads"]


def test_c01_partition_of_unity(capsys):
    t0 = time.perf_counter()
    r = np.random.default_rng(1).uniform(0, 2.0 ** 12, 10_000)
    r[:4] = [0.0, 0.75, 4 / 3, 8 / 3]
    total = DEFAULT_CUTOFFS.chi(r)
    for q in range(0, 15):
        total = total + DEFAULT_CUTOFFS.phi_cut(r * 2.0 ** -q)
    err = float(np.max(np.abs(total - 1)))
    dt = time.perf_counter() - t0
    report(capsys, 1, err <= 1e-12 and dt < 1, f"max error {err:.2e}, {dt:.3f} s")


def test_c02_almost_orthogonality(capsys, rng):
    worst = 0.0
    for n, N in ((1, 1024), (2, 256)):
        u = random_field(N, rng, n=n, k_band=4)
        Q = q_max(N)
        for p in range(-1, Q + 1):
            for q in range(p + 2, Q + 1):
                m = multiplier("delta", p, u) * multiplier("delta", q, u)
                worst = max(worst, float(np.max(np.abs(m))))
    rec = 0.0
    for i in range(50):
        n, N, kb = (1, 1024, 48) if i < 45 else (2, 256, 10)
        u = random_field(N, rng, n=n, k_band=kb)
        d = decompose(u)
        rec = max(rec, float((d.reconstruct() - u).l2_norm() / u.l2_norm()))
    report(capsys, 2, worst <= 1e-14 and rec <= 1e-12,
           f"max product {worst:.2e}, max reconstruction {rec:.2e}")


def test_c03_weight_ode(capsys):
    t0 = time.perf_counter()
    worst, viol = 0.0, []
    for mu in (power(1), log_lipschitz(1), log_lipschitz(0.5)):
        wt = build_weight_table(mu, 4.0)
        worst = max(worst, float(np.max(wt.residual())))
        viol += wt.invariant_violations()
        if mu.label == power(1).label:
            tau = np.linspace(0, 4, 101)
            closed = float(np.max(np.abs(wt.Phi_at(tau) - np.expm1(tau)) / np.maximum(np.expm1(tau), 1e-300)))
    dt = time.perf_counter() - t0
    report(capsys, 3, worst <= 1e-6 and closed <= 1e-9 and not viol and dt < 5,
           f"max residual {worst:.2e}, closed form {closed:.2e}, {dt:.2f} s")


def test_c04_osgood(capsys):
    got = {f"power({a:g})": check_osgood(power(a), 60).passed for a in (0.25, 0.5, 0.75, 1.0)}
    got.update({f"loglip({a:g})": check_osgood(log_lipschitz(a), 60).passed for a in (0.5, 1.0, 2.0)})
    want = {"power(0.25)": False, "power(0.5)": False, "power(0.75)": False, "power(1)": True,
            "loglip(0.5)": True, "loglip(1)": True, "loglip(2)": False}
    report(capsys, 4, got == want, str(got))


def test_c05_bernstein(capsys, tmp_path, configs_dir):
    out = tmp_path / "b.json"
    code = run(["verify", "bernstein", "--config", str(configs_dir / "bernstein.json"), "--out", str(out)])
    ps = {p["estimate"]: p for p in _payloads(out)}
    blk = ps["bernstein_block"]
    ok = code == 0 and blk["min_ratio"] >= 0.75 - 1e-6 and blk["max_ratio"] <= 8 / 3 + 1e-6
    report(capsys, 5, ok, f"block ratios in [{blk['min_ratio']:.4f}, {blk['max_ratio']:.4f}]")


def test_c06_commutator(capsys, tmp_path, configs_dir):
    out = tmp_path / "c.json"
    code = run(["verify", "commutator", "--config", str(configs_dir / "commutator.json"), "--out", str(out)])
    gs = [p for p in _payloads(out) if p["kind"] == "grid_stability"][0]
    report(capsys, 6, code == 0 and gs["variation"] < 2,
           f"constants {gs['constants']}, variation {gs['variation']:.3f}")


def test_c07_product_decomposition(capsys, rng):
    N = 1024
    qm = margin_level(N)
    resid, leak = 0.0, 0.0
    for _ in range(50):
        a, b = random_field(N, rng, k_band=48), random_field(N, rng, k_band=48)
        d = decompose_product(a, b, int(rng.integers(-1, qm + 1)))
        resid, leak = max(resid, d.residual), max(leak, d.support_leak)
    b = random_field(N, rng, k_band=48)
    a = b * 0.0 + 2.5
    const = 0.0
    for q in range(3, qm + 1):
        d = decompose_product(a, b, q)
        const = max(const, *(float(r.l2_norm() / b.l2_norm()) for r in (d.r1, d.r2, d.r3)))
    report(capsys, 7, resid <= 1e-10 and leak <= 1e-12 and const <= 1e-12,
           f"residual {resid:.2e}, leak {leak:.2e}, constant-a pieces {const:.2e}")


@pytest.mark.parametrize("name", ["remainder_power1", "remainder_loglip", "remainder_power34"])
def test_c08_remainder(capsys, tmp_path, configs_dir, name):
    out = tmp_path / "r.json"
    run(["verify", "remainder", "--config", str(configs_dir / f"{name}.json"), "--out", str(out)])
    gs = [p for p in _payloads(out) if p["kind"] == "grid_stability"]
    ok = len(gs) == 3 and all(math.isfinite(v) for g in gs for v in g["constants"].values())
    ok = ok and all(g["variation"] < 2 for g in gs)
    report(capsys, 8, ok, f"{name}: variations " + ", ".join(f"{g['variation']:.3f}" for g in gs))


def test_c09_mollifier(capsys, tmp_path, configs_dir):
    out = tmp_path / "m.json"
    run(["verify", "mollifier", "--config", str(configs_dir / "mollifier.json"), "--out", str(out)])
    summ = [p for p in _payloads(out) if p["kind"] == "mollifier_summary"][0]
    var = summ["variation"]
    ok = all(math.isfinite(v) and v < 2 for v in var.values())
    report(capsys, 9, ok, "variations " + ", ".join(f"{k} {v:.3f}" for k, v in var.items()))


def test_c10_single_mode_oracle(capsys):
    t0 = time.perf_counter()
    N, M, T = 1024, 513, 1.0
    v = bump_mode_field(N, M, T, [(8, 1.0)])
    cfg = CarlemanConfig(0.5, power(1), build_weight_table(power(1), 16.0), list(SINGLE_MODE), T, v, fd_order=8)
    rep = evaluate_carleman(cfg, identity_coefficients(N, M, T))
    err = 0.0
    for e in rep.entries:
        ref = SINGLE_MODE[e.gamma]
        err = max(err, *(abs(x - y) / y for x, y in zip((e.lhs, e.rhs_grad, e.rhs_l2), ref)))
    dt = time.perf_counter() - t0
    assert SINGLE_MODE[4.0][0] == pytest.approx(oracles.single_mode_carleman(8, 0.5, T, 4.0, 7)[0], rel=1e-10)
    report(capsys, 10, err <= 1e-6 and dt < 30, f"max relative error {err:.2e}, {dt:.2f} s")


def test_c11_headline(capsys, tmp_path, configs_dir):
    out, csv = tmp_path / "h.json", tmp_path / "h.csv"
    t0 = time.perf_counter()
    code = run(["carleman", "run", "--config", str(configs_dir / "headline.json"), "--quiet",
                "--out", str(out), "--csv", str(csv)])
    dt = time.perf_counter() - t0
    rep = [p for p in _payloads(out) if p["kind"] == "carleman"][0]
    g0 = rep["gamma0"]
    tail = [r["ratio"] for r in rep["sweep"] if g0 is not None and r["gamma"] >= g0]
    ok = (code == 0 and g0 is not None and all(r >= 1e-3 for r in tail)
          and all(b >= a for a, b in zip(tail, tail[1:])) and csv.is_file() and dt < 600)
    report(capsys, 11, ok, f"gamma0 {g0}, C {rep['C']}, {dt:.1f} s")


def test_c12_conjugation(capsys):
    N, M, T = 1024, 513, 1.0
    wt = build_weight_table(power(1), 4.0)
    v = bump_mode_field(N, M, T, [(3, 1.0), (5, 0.5)], real=True)
    worst = 0.0
    for co in (identity_coefficients(N, M, T), sinusoidal_coefficients(N, M, T, power(1))):
        for g in (1.0, 2.0, 4.0):
            worst = max(worst, conjugation_defect(co, wt, v, g, fd_order=8))
    report(capsys, 12, worst <= 1e-8, f"max relative defect {worst:.2e}")
