import math

import numpy as np
import pytest

import oracles
from lpcarleman.errors import DomainError, ResolutionError, SupportError
from lpcarleman.grid import GridFunction, mode, random_field
from lpcarleman.lp_core import (DEFAULT_CUTOFFS, SobolevSpec, block_energies, build_cutoffs,
                                decompose, delta_q, dyadic_sobolev_norm, holder_block_norm,
                                multiplier, multiplier_sobolev_norm, q_max, require_resolved,
                                s_q, synthesis_norm_bound)
from lpcarleman.modulus import modulus_seminorm, power

C = DEFAULT_CUTOFFS


def _l2(u):
    return float(u.l2_norm())


def test_cutoff_values():
    assert C.chi(0.0) == 1.0
    assert C.phi_cut(0.7) == 0.0 and C.phi_cut(2.7) == 0.0
    assert C.chi(0.75) == 1.0 and C.chi(4 / 3) == 0.0
    r = np.linspace(0, 3, 3001)
    assert np.all((C.phi_cut(r) >= 0) & (C.phi_cut(r) <= 1))


def test_cutoff_matches_quad_oracle(rng):
    r = rng.uniform(0, 3, 40)
    ours = C.chi(r)
    ref = np.array([oracles.chi(x) for x in r])
    assert np.max(np.abs(ours - ref)) <= 1e-13


def test_build_cutoffs_bounds():
    cp = build_cutoffs(0.8, 1.2)
    assert cp.chi(0.8) == 1.0 and cp.chi(1.2) == 0.0
    with pytest.raises(DomainError):
        build_cutoffs(0.5, 1.2)


def test_partition_random_radii(rng):
    r = rng.uniform(0, 100, 200)
    total = C.chi(r) + sum(C.phi_cut(r * 2.0 ** -q) for q in range(0, 12))
    assert np.max(np.abs(total - 1)) <= 1e-12


def test_q_max_values():
    assert [q_max(N) for N in (256, 512, 1024)] == [5, 6, 7]


def test_delta_single_mode():
    # |k| = 12 sits where phi_cut(2^-4 |k|) = 1 (12/16 = 3/4... use 24 for q = 4)
    u = mode(1024, 24)
    assert C.phi_cut(24 / 16) == 1.0
    assert _l2(delta_q(u, 4) - u) <= 1e-13 * _l2(u)
    for p in (-1, 0, 1, 2, 6, 7):
        assert _l2(delta_q(u, p)) <= 1e-13 * _l2(u)


def test_delta_constant():
    u = GridFunction(np.full(64, 2.5))
    assert _l2(delta_q(u, -1) - u) <= 1e-14
    for q in range(0, q_max(64) + 1):
        assert _l2(delta_q(u, q)) <= 1e-14
    assert _l2(delta_q(u, -2)) == 0.0


def test_reconstruction_random(rng):
    for n, N, kb in ((1, 1024, 48), (2, 128, 5)):
        u = random_field(N, rng, n=n, k_band=kb)
        d = decompose(u)
        assert _l2(d.reconstruct() - u) <= 1e-12 * _l2(u)
        assert max(d.support_leak.values()) <= 1e-12


def test_s_q_identities(rng):
    u = random_field(512, rng, k_band=24)
    for q in range(0, q_max(512) + 1):
        tele = sum((delta_q(u, p) for p in range(-1, q)), start=u * 0.0)
        assert _l2(s_q(u, q) - tele) <= 1e-12 * _l2(u)
    low = mode(256, 3)            # 3 <= 3/4 * 2^q for q = 2
    assert _l2(s_q(low, 2) - low) <= 1e-14 * _l2(low)
    high = mode(256, 6)           # 6 >= 4/3 * 2^2
    assert _l2(s_q(high, 2)) <= 1e-14 * _l2(high)


def test_unresolved_and_out_of_range():
    u = mode(256, 100)
    with pytest.raises(ResolutionError):
        require_resolved(u)
    with pytest.raises(ResolutionError):
        delta_q(mode(256, 3), 6)


def test_almost_orthogonality():
    for N in (256, 1024):
        for q in range(-1, q_max(N) + 1):
            for p in range(-1, q_max(N) + 1):
                if abs(p - q) >= 2:
                    mq = multiplier("delta", q, mode(N, 0))
                    mp = multiplier("delta", p, mode(N, 0))
                    assert np.max(np.abs(mq * mp)) <= 1e-14


def test_parseval_block_sum(rng):
    lo, hi = math.inf, 0.0
    for _ in range(50):
        u = random_field(512, rng, k_band=24)
        r = float(np.sum(block_energies(u))) / _l2(u) ** 2
        lo, hi = min(lo, r), max(hi, r)
    assert lo >= 1 / 3 and hi <= 3


def test_sobolev_single_block():
    u = mode(1024, 24)                    # only block q = 4
    val = float(dyadic_sobolev_norm(u, SobolevSpec(-0.5)))
    assert val == pytest.approx(2.0 ** -2 * _l2(u), rel=1e-14)
    assert float(dyadic_sobolev_norm(u * 0.0, SobolevSpec(-0.5))) == 0.0


def test_sobolev_power_one_weight_is_identity(rng):
    u = random_field(512, rng, k_band=24)
    a = dyadic_sobolev_norm(u, SobolevSpec(0.3))
    b = dyadic_sobolev_norm(u, SobolevSpec(0.3, power(1)))
    assert float(a) == float(b)


def test_sobolev_time_axis(rng):
    f = random_field(256, rng, k_band=8)
    u = GridFunction(np.stack([f.samples, 2 * f.samples]), T=1.0)
    vals = np.asarray(dyadic_sobolev_norm(u, SobolevSpec(-0.5)))
    assert vals.shape == (2,) and vals[1] == pytest.approx(2 * vals[0], rel=1e-14)


def test_dyadic_vs_multiplier_norm(rng):
    for s in (-0.5, 0.5):
        u = random_field(512, rng, k_band=24)
        r = float(dyadic_sobolev_norm(u, SobolevSpec(s))) / float(multiplier_sobolev_norm(u, s))
        assert 0.25 < r < 4


def test_synthesis_self_consistency(rng):
    u = random_field(1024, rng, k_band=48)
    res = synthesis_norm_bound(decompose(u).blocks, 0.5)
    assert res.verdict == "pass" and 1 / 3 <= res.ratio <= 3


def test_synthesis_single_block_and_ball():
    b = delta_q(mode(1024, 24), 4)
    assert synthesis_norm_bound([(4, b)], 0.0).ratio == pytest.approx(1.0, rel=1e-14)
    blocks = [(2, mode(1024, 3)), (4, mode(1024, 10))]
    assert synthesis_norm_bound(blocks, 0.5, ball=True).verdict == "pass"
    with pytest.raises(DomainError):
        synthesis_norm_bound(blocks, -0.5, ball=True)
    with pytest.raises(SupportError):
        synthesis_norm_bound([(1, mode(1024, 30))], 0.5)


def test_holder_block_norm():
    x = np.arange(1024) * (2 * np.pi / 1024)
    assert holder_block_norm(GridFunction(np.ones(1024)), power(1)) == 0.0
    vals = []
    for N in (256, 1024):
        u = GridFunction(np.sin(np.arange(N) * 2 * np.pi / N))
        vals.append(holder_block_norm(u, power(1)))
    assert 0 < vals[0] <= 2 and abs(vals[0] / vals[1] - 1) < 1e-12


def test_holder_block_equivalence(rng):
    rs = []
    for _ in range(20):
        u = random_field(512, rng, k_band=24)
        rs.append(holder_block_norm(u, power(1)) / modulus_seminorm(u, power(1)))
    assert max(rs) / min(rs) < 4 and min(rs) > 0.25
