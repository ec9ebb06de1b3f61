import csv
import math

import numpy as np
import pytest

import oracles
from lpcarleman.errors import DomainError, NonOsgoodRangeError, TableRangeError
from lpcarleman.modulus import log_lipschitz, power
from lpcarleman.weight import build_phi, build_weight_table

MUS = [power(1), log_lipschitz(1), log_lipschitz(0.5)]


def test_phi_closed_forms():
    pt = build_phi(power(1), t_max=10.0)
    assert float(pt.phi_w(0.0)) == 0.0
    assert float(pt.phi_w(1.0)) == pytest.approx(1.0, rel=1e-14)      # phi(e) = log e
    pl = build_phi(log_lipschitz(1), t_max=10.0)
    assert float(pl.phi_w(1.0)) == pytest.approx(math.log(2.0), rel=1e-14)
    assert float(pl.phi_w(math.log(7.0))) == pytest.approx(oracles.phi_loglip1(7.0), rel=1e-13)
    with pytest.raises(DomainError):
        build_phi(power(1), t_max=0.5)


def test_phi_increasing():
    pt = build_phi(log_lipschitz(0.5), t_max=1e6)
    assert np.all(np.diff(pt.phi) > 0)


def test_Phi_power_one_closed_form():
    wt = build_weight_table(power(1), 3.0)
    tau = np.linspace(0, 3, 31)
    assert np.allclose(wt.Phi_at(tau), np.expm1(tau), rtol=1e-12, atol=1e-14)
    assert np.allclose(wt.Phi_prime_at(tau), np.exp(tau), rtol=1e-13)
    assert float(wt.Phi_at(1.0)) == pytest.approx(math.e - 1, rel=1e-12)
    assert float(wt.Phi_double_prime_at(1.0)) == pytest.approx(math.e, rel=1e-13)
    assert wt.Phi_nodes[0] == 0.0


@pytest.mark.parametrize("mu", MUS, ids=lambda m: m.label)
def test_ode_residual_and_invariants(mu):
    wt = build_weight_table(mu, 4.0)
    assert np.max(wt.residual()) <= 1e-6
    assert wt.invariant_violations() == []


@pytest.mark.parametrize("mu", MUS, ids=lambda m: m.label)
def test_fd_agrees_on_fine_grid(mu):
    wt = build_weight_table(mu, 2.0)
    tau = np.arange(0.0, 2.0 + 1e-12, 1e-3)
    assert np.max(wt.residual(tau, h=1e-3)) <= 1e-5


@pytest.mark.parametrize("mu", MUS, ids=lambda m: m.label)
def test_round_trip(mu, rng):
    pt = build_phi(mu, t_max=1e4)
    s = rng.uniform(0, float(pt.phi_w(math.log(1e4))), 100)
    back = pt.phi_w(pt.inverse(s))
    assert np.max(np.abs(back - s)) <= 1e-10


@pytest.mark.parametrize("mu,tau", [(power(1), 8.0), (log_lipschitz(1), 3.0),
                                    (log_lipschitz(0.5), 5.0)], ids=["power1", "loglip1", "loglip.5"])
def test_growth_of_Phi_prime(mu, tau):
    wt = build_weight_table(mu, tau)
    assert float(wt.Phi_prime_at(tau)) >= 1e3
    assert float(wt.Phi_double_prime_at(tau)) >= 1e3


def test_non_osgood_range_error():
    with pytest.raises(NonOsgoodRangeError):
        build_weight_table(power(0.5), 3.0)   # sup phi = 2


def test_overflow_range_error():
    with pytest.raises(TableRangeError):
        build_weight_table(power(1), 800.0)
    wt = build_weight_table(power(1), 1.0)
    with pytest.raises(TableRangeError):
        wt.Phi_at(1.5)
    with pytest.raises(DomainError):
        wt.Phi_at(-0.1)


def test_to_csv(tmp_path):
    wt = build_weight_table(power(1), 1.0)
    p = tmp_path / "w.csv"
    wt.to_csv(p)
    rows = list(csv.DictReader(p.open()))
    assert list(rows[0]) == ["tau", "Phi", "Phi_prime", "Phi_double_prime", "residual"]
    last = rows[-1]
    assert float(last["tau"]) == 1.0
    assert float(last["Phi"]) == pytest.approx(math.e - 1, rel=1e-12)


def test_table_deterministic():
    a = build_weight_table(log_lipschitz(1), 3.0)
    b = build_weight_table(log_lipschitz(1), 3.0)
    assert np.array_equal(a.tau, b.tau) and np.array_equal(a.Phi_nodes, b.Phi_nodes)
