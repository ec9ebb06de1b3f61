import math

import numpy as np
import pytest

import oracles
from lpcarleman.carleman import (CarlemanConfig, CoefficientField, block_diagnostics,
                                 bump_mode_field, bump_random_field, conjugation_defect,
                                 constant_coefficients, empirical_constants, evaluate_carleman,
                                 identity_coefficients, require_nondegenerate,
                                 sinusoidal_coefficients, time_bump, time_bump_prime)
from lpcarleman.errors import ConfigError, DegenerateInputError, TableRangeError
from lpcarleman.grid import GridFunction
from lpcarleman.modulus import log_lipschitz, power
from lpcarleman.weight import build_weight_table

N, M, T = 1024, 513, 1.0

# frozen from tests/oracles.single_mode_carleman(k, 0.5, 1.0, gamma, 7)
SINGLE_MODE = {1.0: 458.36107303040666, 4.0: 243.06839625239033, 16.0: 12217167999.711164}
SINGLE_RHS = (7.480479020558457, 0.9082756026904242)
CONST_X = {1.0: 176.072678910752, 4.0: 1117.6180900958316}


@pytest.fixture(scope="module")
def wt_power1():
    return build_weight_table(power(1), 16.0)


def _cfg(v, wt, gammas, **kw):
    return CarlemanConfig(0.5, power(1), wt, list(gammas), T, v, **kw)


def test_bump_shape():
    t = np.linspace(0, 1, 2001)
    g = time_bump(t, 1.0)
    assert g.max() == pytest.approx(1.0, abs=1e-12) and np.all(g[t >= 0.5] == 0)
    fd = np.gradient(g, t)
    assert np.max(np.abs(fd - time_bump_prime(t, 1.0))) < 1e-3 * np.max(np.abs(fd))


def test_single_mode_oracle(wt_power1):
    v = bump_mode_field(N, M, T, [(8, 1.0)])
    rep = evaluate_carleman(_cfg(v, wt_power1, SINGLE_MODE, fd_order=8), identity_coefficients(N, M, T))
    for e in rep.entries:
        assert e.lhs == pytest.approx(SINGLE_MODE[e.gamma], rel=1e-6)
        assert e.rhs_grad == pytest.approx(SINGLE_RHS[0], rel=1e-10)
        assert e.rhs_l2 == pytest.approx(SINGLE_RHS[1], rel=1e-10)


def test_frozen_values_match_oracle():
    assert oracles.single_mode_carleman(8, 0.5, 1.0, 4.0, 7)[0] == pytest.approx(SINGLE_MODE[4.0], rel=1e-10)


def test_constant_in_x(wt_power1):
    v = bump_mode_field(N, M, T, [(0, 1.0)])
    rep = evaluate_carleman(_cfg(v, wt_power1, CONST_X, fd_order=8), identity_coefficients(N, M, T))
    for e in rep.entries:
        assert e.rhs_grad == 0.0
        assert e.lhs == pytest.approx(CONST_X[e.gamma], rel=1e-6)


def test_zero_v_degenerate(wt_power1):
    v = GridFunction(np.zeros((M, N)), T=T)
    rep = evaluate_carleman(_cfg(v, wt_power1, [1.0]), identity_coefficients(N, M, T))
    assert rep.degenerate and rep.verdict == "inconclusive"
    with pytest.raises(DegenerateInputError):
        require_nondegenerate(rep)


def test_late_support_rejected(wt_power1):
    vals = np.ones((M, N))
    with pytest.raises(ConfigError):
        _cfg(GridFunction(vals, T=T), wt_power1, [1.0])


def test_config_checks(wt_power1):
    v = bump_mode_field(64, M, T, [(2, 1.0)])
    with pytest.raises(ConfigError):
        CarlemanConfig(1.5, power(1), wt_power1, [1.0], T, v)
    with pytest.raises(ConfigError):
        _cfg(v, wt_power1, [])
    with pytest.raises(TableRangeError):
        _cfg(v, wt_power1, [64.0])
    with pytest.raises(ConfigError):
        CarlemanConfig(0.5, log_lipschitz(1), wt_power1, [1.0], T, v)


def test_coefficient_validation():
    with pytest.raises(ConfigError):
        constant_coefficients([[1.0, 0.5], [0.4, 1.0]], 16, 5, 1.0)
    with pytest.raises(ConfigError):
        constant_coefficients([[1.0, 0.0], [0.0, -1.0]], 16, 5, 1.0, a0=0.5)
    with pytest.raises(ConfigError):
        sinusoidal_coefficients(16, 5, 1.0, power(1), amplitude=1.0)
    c = sinusoidal_coefficients(64, 9, 1.0, power(1), amplitude=0.5)
    assert c.a0 == 0.5 and c.min_eigenvalue() >= 0.5
    bad = GridFunction(np.full((5, 16), 0.2), T=1.0)
    with pytest.raises(ConfigError):
        CoefficientField([[bad]], 0.5)


def test_empirical_constants():
    g0, C = empirical_constants([1, 2, 4, 8], [0.5, 1e-4, 2.0, 3.0], 1e-3)
    assert g0 == 4 and C == 2.0
    assert empirical_constants([1, 2], [2.0, 1e-4], 1e-3) == (None, None)
    assert empirical_constants([1, 2], [2.0, 1.0], 1e-3) == (2, 1.0)


def test_diagnostics_constant_coefficients(wt_power1):
    v = bump_mode_field(N, M, T, [(8, 1.0)])
    d = block_diagnostics(_cfg(v, wt_power1, [4.0]), identity_coefficients(N, M, T), 4.0)
    assert all(p == 0 for p in d.penalty)
    assert d.C3 == 0 and d.C4 == pytest.approx(1.0, rel=1e-12)


def test_gamma_phi2_scales(wt_power1):
    v = bump_mode_field(N, M, T, [(8, 1.0)])
    cfg = _cfg(v, wt_power1, [2.0, 8.0])
    co = identity_coefficients(N, M, T)
    a = sum(block_diagnostics(cfg, co, 2.0).gamma_phi2)
    b = sum(block_diagnostics(cfg, co, 8.0).gamma_phi2)
    assert b >= 4 * a


@pytest.mark.parametrize("kind", ["identity", "sinusoidal"])
def test_conjugation_defect(wt_power1, kind):
    co = (identity_coefficients(N, M, T) if kind == "identity"
          else sinusoidal_coefficients(N, M, T, power(1)))
    v = bump_mode_field(N, M, T, [(3, 1.0), (5, 0.5)], real=True)
    for g in (1.0, 2.0, 4.0):
        assert conjugation_defect(co, wt_power1, v, g, fd_order=8) <= 1e-8


def test_lhs_continuous_in_gamma(wt_power1):
    rng = np.random.default_rng(3)
    v = bump_random_field(512, M, T, rng, k_band=8)
    gam = [1.0 + 0.25 * i for i in range(21)]
    rep = evaluate_carleman(_cfg(v, wt_power1, gam), sinusoidal_coefficients(512, M, T, power(1)))
    lhs = [e.lhs for e in rep.entries]
    for a, b in zip(lhs, lhs[1:]):
        assert 0.1 < b / a < 10


def test_report_serializes(wt_power1):
    v = bump_mode_field(256, M, T, [(4, 1.0)])
    rep = evaluate_carleman(_cfg(v, wt_power1, [1.0, 2.0]), identity_coefficients(256, M, T),
                            diagnostics_for=[2.0])
    d = rep.to_dict()
    assert d["verdict"] in ("pass", "fail") and len(d["sweep"]) == 2 and "2.0" in d["diagnostics"]
    assert [r["grad_exponent"] for r in d["exponent_study"]][0] == 0.25
    assert math.isfinite(d["time_fd_defect"])
