import numpy as np
import pytest

from lpcarleman.errors import DegenerateInputError, DomainError, GridMismatchError
from lpcarleman.grid import GridFunction, mode, random_field
from lpcarleman.lp_core import SobolevSpec, delta_q, dyadic_sobolev_norm, s_q
from lpcarleman.modulus import derive_omega, log_lipschitz, power
from lpcarleman.paraproduct import (decompose_product, margin_level, multiply, paraproduct,
                                    remainder, support_rule_defect, tilde_remainder,
                                    verify_remainder_estimate)


def _l2(u):
    return float(u.l2_norm())


def _pair(rng, N=512, kb=24):
    return random_field(N, rng, k_band=kb), random_field(N, rng, k_band=kb)


def test_multiply_exact_for_low_modes():
    a, b = mode(256, 5), mode(256, 9)
    assert _l2(multiply(a, b) - mode(256, 14)) <= 1e-13 * _l2(mode(256, 14))


def test_multiply_drops_unrepresentable_modes():
    a, b = mode(64, 20), mode(64, 20)      # product mode 40 > Nyquist 32
    assert _l2(multiply(a, b)) <= 1e-13


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        paraproduct(mode(64, 1), mode(128, 1))


def test_bony_identities(rng):
    for _ in range(5):
        a, b = _pair(rng)
        ab = multiply(a, b)
        one = paraproduct(a, b) + paraproduct(b, a) + remainder(a, b)
        two = paraproduct(a, b) + tilde_remainder(a, b)
        assert _l2(one - ab) <= 1e-10 * _l2(ab)
        assert _l2(two - ab) <= 1e-10 * _l2(ab)
        assert _l2(tilde_remainder(a, b) - paraproduct(b, a) - remainder(a, b)) <= 1e-10 * _l2(ab)


def test_constant_cases(rng):
    a, b = _pair(rng)
    c = GridFunction(np.full(512, 1.7))
    const_b = GridFunction(np.full(512, -0.4))
    assert _l2(paraproduct(a, const_b)) <= 1e-13
    one = GridFunction(np.ones(512))
    expect = b - delta_q(b, -1) - delta_q(b, 0)
    assert _l2(paraproduct(one, b) - expect) <= 1e-12 * _l2(b)
    assert _l2(remainder(c, b) - 1.7 * (delta_q(b, -1) + delta_q(b, 0))) <= 1e-12 * _l2(b)
    assert _l2(tilde_remainder(c, b) - 1.7 * s_q(b, 1)) <= 1e-12 * _l2(b)
    zero = b * 0.0
    assert _l2(remainder(a, zero)) == 0.0 and _l2(tilde_remainder(a, zero)) == 0.0


def test_bilinearity(rng):
    a1, b = _pair(rng)
    a2 = random_field(512, rng, k_band=24)
    for op in (paraproduct, remainder, tilde_remainder):
        lhs = op(2.0 * a1 - 3.0 * a2, b)
        rhs = 2.0 * op(a1, b) - 3.0 * op(a2, b)
        assert _l2(lhs - rhs) <= 1e-12 * _l2(rhs)
    for q in (1, 3):
        d = decompose_product(2.0 * a1 - 3.0 * a2, b, q)
        d1, d2 = decompose_product(a1, b, q), decompose_product(a2, b, q)
        for name in ("r1", "r2", "r3"):
            ref = 2.0 * getattr(d1, name) - 3.0 * getattr(d2, name)
            assert _l2(getattr(d, name) - ref) <= 1e-12 * max(_l2(ref), _l2(d.target))


def test_decomposition_random(rng):
    qm = margin_level(512)
    for _ in range(10):
        a, b = _pair(rng)
        for q in range(-1, qm + 1):
            d = decompose_product(a, b, q)
            assert d.residual <= 1e-10
            assert d.support_leak <= 1e-12


def test_decomposition_sums_to_product(rng):
    a, b = random_field(512, rng, k_band=10), random_field(512, rng, k_band=10)
    total = sum((decompose_product(a, b, q).reconstruct() for q in range(-1, margin_level(512) + 1)),
                start=a * 0.0)
    ab = multiply(a, b)
    assert _l2(total - ab) <= 1e-10 * _l2(ab)


def test_decomposition_constant_a(rng):
    b = random_field(512, rng, k_band=24)
    a = GridFunction(np.full(512, 0.6))
    for q in range(3, margin_level(512) + 1):
        d = decompose_product(a, b, q)
        for r in (d.r1, d.r2, d.r3):
            assert _l2(r) <= 1e-12 * _l2(b)
        assert _l2(d.main - 0.6 * delta_q(b, q)) <= 1e-12 * _l2(b)


def test_margin():
    assert margin_level(512) == 6
    with pytest.raises(DomainError):
        decompose_product(mode(512, 1), mode(512, 2), 7)
    with pytest.raises(DomainError):
        decompose_product(mode(512, 1), mode(512, 2), -2)


def test_support_rules(rng):
    a, b = _pair(rng, N=1024, kb=48)
    scale = _l2(a) * _l2(b)
    for q in range(0, 6):
        for qp in range(-1, 8):
            if abs(qp - q) >= 5:
                assert support_rule_defect(a, b, q, qp, "low") <= 1e-12 * scale
            if qp <= q - 4:
                assert support_rule_defect(a, b, q, qp, "high") <= 1e-12 * scale


def test_paraproduct_continuity(rng):
    for s in (-0.5, 0.0, 0.5):
        cs = []
        for _ in range(20):
            a, b = _pair(rng, N=256, kb=6)
            num = float(dyadic_sobolev_norm(paraproduct(a, b), SobolevSpec(s)))
            den = float(np.max(np.abs(a.samples))) * float(dyadic_sobolev_norm(b, SobolevSpec(s)))
            cs.append(num / den)
        assert np.all(np.isfinite(cs)) and max(cs) < 10


def test_remainder_estimate_constant_a(rng):
    b = random_field(512, rng, k_band=12, omega=power(1))
    a = GridFunction(np.full(512, 2.0))
    m = verify_remainder_estimate(a, b, 0.5, power(1), q_min=3)
    assert m.ratios == (0.0, 0.0, 0.0) or max(m.ratios) <= 1e-12


def test_remainder_estimate_scaling(rng):
    om = derive_omega(log_lipschitz(1))
    a = random_field(256, rng, k_band=12, omega=om)
    b = random_field(256, rng, k_band=12, omega=om)
    m1 = verify_remainder_estimate(a, b, 0.5, om, check_conditions=False)
    m2 = verify_remainder_estimate(2.0 * a, b, 0.5, om, check_conditions=False)
    for i in range(3):
        assert m2.numerators[i] == pytest.approx(2 * m1.numerators[i], rel=1e-10)
        assert m2.ratios[i] == pytest.approx(m1.ratios[i], rel=1e-10)
    assert m2.a_norm == pytest.approx(2 * m1.a_norm, rel=1e-12)


def test_remainder_estimate_errors(rng):
    b = random_field(256, rng, k_band=12)
    with pytest.raises(DegenerateInputError):
        verify_remainder_estimate(b * 0.0, b, 0.5, power(1))
    with pytest.raises(DomainError):
        verify_remainder_estimate(b, b, 1.0, power(1))


def test_remainder_estimate_conditions_attached(rng):
    a, b = random_field(256, rng, k_band=12), random_field(256, rng, k_band=12)
    m = verify_remainder_estimate(a, b, 0.25, power(0.75))
    assert [c.condition for c in m.conditions] == ["dini", "techcond1", "techcond2"]
    assert not m.conditions_hold
