"""Paraproducts, remainders and the block-wise product decomposition.

All sums over block indices run from -1 up to ``top_level(u)``, the first
level at which S_{q+1} equals one on every grid wavenumber.  With that range
the identities ab = T_a b + T_b a + R(a, b) hold exactly on the grid, so no
tail has to be estimated.  Products are computed with 2x zero padding
(``multiply``) and projected back onto the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, DomainError, InternalError
from .grid import GridFunction, fft_space, ifft_space, nyquist, radial_wavenumber
from .lp_core import (R_INNER, SobolevSpec, _delta, _s, dyadic_sobolev_norm,
                      q_max, spectral_leak)
from .modulus import (ConditionReport, ModulusSpec, check_dini, check_techcond1,
                      check_techcond2, modulus_norm)

RECON_TOL = 1e-10


# -- padded products ----------------------------------------------------------

def _pad_axis(spec: np.ndarray, axis: int) -> np.ndarray:
    N = spec.shape[axis]
    h = N // 2
    shape = list(spec.shape)
    shape[axis] = 2 * N
    out = np.zeros(shape, dtype=np.complex128)
    take = lambda a, sl: np.take(a, sl, axis=axis)
    idx = [slice(None)] * spec.ndim

    def put(sl, vals):
        idx[axis] = sl
        out[tuple(idx)] = vals

    put(slice(0, h), take(spec, range(0, h)))
    put(slice(2 * N - h + 1, 2 * N), take(spec, range(h + 1, N)))
    nyq = take(spec, [h]) * 0.5
    put(slice(h, h + 1), nyq)
    put(slice(2 * N - h, 2 * N - h + 1), nyq)
    return out


def _truncate_axis(spec: np.ndarray, axis: int) -> np.ndarray:
    N = spec.shape[axis] // 2
    h = N // 2
    take = lambda sl: np.take(spec, sl, axis=axis)
    nyq = take([h]) + take([2 * N - h])
    return np.concatenate([take(range(0, h)), nyq, take(range(2 * N - h + 1, 2 * N))], axis=axis)


def multiply(a: GridFunction, b: GridFunction) -> GridFunction:
    """Pointwise product computed on a 2x padded grid, projected back to the grid.

    For inputs whose spectra lie below half the Nyquist wavenumber this equals
    the exact product; otherwise it is the exact product with its
    unrepresentable modes removed (no aliasing either way).
    """
    a.require_same_grid(b)
    n = a.n
    sa, sb = a.spectrum(), b.spectrum()
    for ax in range(-n, 0):
        sa = _pad_axis(sa, ax)
        sb = _pad_axis(sb, ax)
    scale = 2.0 ** n
    pa = ifft_space(sa, n) * scale
    pb = ifft_space(sb, n) * scale
    prod = fft_space(pa * pb, n) / scale
    for ax in range(-n, 0):
        prod = _truncate_axis(prod, ax)
    vals = ifft_space(prod, n)
    real = a.is_real and b.is_real
    return a.with_samples(vals.real if real else vals)


# -- block bookkeeping ------------------------------------------------------------

def top_level(u: GridFunction) -> int:
    """Smallest Q with S_{Q+1} = 1 on all grid wavenumbers (chi = 1 for r <= 3/4)."""
    kmax = float(np.max(radial_wavenumber(u.N, u.L, u.n)))
    return max(q_max(u.N, u.L), int(math.ceil(math.log2(max(kmax / R_INNER, 1.0)))) - 1)


class _Blocks:
    """Lazily cached Delta_q and S_q of one grid function."""

    def __init__(self, u: GridFunction):
        self.u = u
        self.top = top_level(u)
        self._d: dict[int, GridFunction] = {}
        self._s: dict[int, GridFunction] = {}

    def delta(self, q: int) -> GridFunction:
        if q < -1 or q > self.top:
            return self.u * 0.0
        if q not in self._d:
            self._d[q] = _delta(self.u, q)
        return self._d[q]

    def low(self, q: int) -> GridFunction:
        if q < 0:
            return self.u * 0.0
        if q > self.top + 1:
            q = self.top + 1
        if q not in self._s:
            self._s[q] = _s(self.u, q)
        return self._s[q]


def _zeros_like(u: GridFunction) -> GridFunction:
    dtype = np.float64 if u.is_real else np.complex128
    return u.with_samples(np.zeros(u.samples.shape, dtype=dtype))


def _sum(terms, like: GridFunction) -> GridFunction:
    acc = _zeros_like(like)
    for t in terms:
        acc = acc + t
    return acc


# -- paraproduct and remainders -------------------------------------------------------

def paraproduct(a: GridFunction, b: GridFunction) -> GridFunction:
    """T_a b = sum_{q >= 1} S_{q-1}a * Delta_q b."""
    a.require_same_grid(b)
    A, B = _Blocks(a), _Blocks(b)
    return _sum((multiply(A.low(q - 1), B.delta(q)) for q in range(1, B.top + 1)), a)


def remainder(a: GridFunction, b: GridFunction) -> GridFunction:
    """R(a, b) = sum_q Delta_q a * (Delta_{q-1} + Delta_q + Delta_{q+1}) b."""
    a.require_same_grid(b)
    A, B = _Blocks(a), _Blocks(b)
    terms = []
    for q in range(-1, A.top + 1):
        near = B.delta(q - 1) + B.delta(q) + B.delta(q + 1)
        terms.append(multiply(A.delta(q), near))
    return _sum(terms, a)


def tilde_remainder(a: GridFunction, b: GridFunction) -> GridFunction:
    """R~(a, b) = sum_{q' >= -1} S_{q'+2}b * Delta_{q'}a  (= T_b a + R(a, b))."""
    a.require_same_grid(b)
    A, B = _Blocks(a), _Blocks(b)
    return _sum((multiply(B.low(q + 2), A.delta(q)) for q in range(-1, A.top + 1)), a)


# -- product decomposition ---------------------------------------------------------

def margin_level(N: int, L: float = 2 * np.pi) -> int:
    """Largest q with 10/3 * 2^q <= pi*N/L."""
    return int(math.floor(math.log2(nyquist(N, L) * 3.0 / 10.0)))


@dataclass
class ProductDecomposition:
    q: int
    main: GridFunction
    r1: GridFunction
    r2: GridFunction
    r3: GridFunction
    target: GridFunction
    residual: float
    support_leak: float

    @property
    def remainder(self) -> GridFunction:
        return self.r1 + self.r2 + self.r3

    def reconstruct(self) -> GridFunction:
        return self.main + self.r1 + self.r2 + self.r3


def _l2(u: GridFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(u.samples) ** 2)))


def _rel_l2(diff: GridFunction, *refs: GridFunction) -> float:
    # relative to the largest piece (the full product included), so round-off in a
    # vanishing block is not amplified
    den = max(_l2(r) for r in refs)
    num = _l2(diff)
    return num if den == 0.0 else num / den


def _decompose(A: _Blocks, B: _Blocks, q: int, tol: float) -> ProductDecomposition:
    a, b = A.u, B.u
    Sq1a = A.low(q - 1)
    dqb = B.delta(q)
    main = multiply(Sq1a, dqb)
    r1_terms, r2_terms, r3_terms = [], [], []
    for qp in range(q - 4, q + 5):
        if qp < -1 or qp > B.top:
            continue
        low = A.low(qp - 1)
        dqp = B.delta(qp)
        # [Delta_q, S a] w = Delta_q(S a * w) - S a * Delta_q w
        r1_terms.append(_delta(multiply(low, dqp), q) - multiply(low, _delta(dqp, q)))
        r2_terms.append(multiply(low - Sq1a, _delta(dqp, q)))
    for qp in range(max(q - 3, -1), A.top + 1):
        r3_terms.append(_delta(multiply(B.low(qp + 2), A.delta(qp)), q))
    r1, r2, r3 = _sum(r1_terms, a), _sum(r2_terms, a), _sum(r3_terms, a)
    ab = multiply(a, b)
    target = _delta(ab, q)
    rem = r1 + r2 + r3
    resid = _rel_l2(main + rem - target, ab, target, main, r1, r2, r3)
    if resid > tol:
        raise InternalError(f"product decomposition residual {resid:.3e} exceeds {tol:.1e} at q={q}")
    ball = radial_wavenumber(a.N, a.L, a.n) <= 10.0 / 3.0 * 2.0 ** q * (1 + 1e-12)
    leak = spectral_leak(rem, ball)
    return ProductDecomposition(q, main, r1, r2, r3, target, resid, leak)


def decompose_product(a: GridFunction, b: GridFunction, q: int,
                      tol: float = RECON_TOL) -> ProductDecomposition:
    """Delta_q(ab) = S_{q-1}a Delta_q b + R_q^(1) + R_q^(2) + R_q^(3)."""
    a.require_same_grid(b)
    if q < -1:
        raise DomainError("q must be >= -1")
    qm = margin_level(a.N, a.L)
    if q > qm:
        raise DomainError(f"q={q}: the ball of radius 10/3*2^q exceeds the Nyquist wavenumber "
                          f"(largest admissible q is {qm})")
    return _decompose(_Blocks(a), _Blocks(b), q, tol)


def support_rule_defect(a: GridFunction, b: GridFunction, q: int, q_prime: int,
                        rule: str = "low") -> float:
    """L2 norm of Delta_q(S_{q'-1}a Delta_{q'}b) ("low") or Delta_q(S_{q'+2}a Delta_{q'}b) ("high")."""
    A, B = _Blocks(a), _Blocks(b)
    shift = -1 if rule == "low" else 2
    w = _delta(multiply(A.low(q_prime + shift), B.delta(q_prime)), q)
    return float(np.sqrt(np.sum(np.abs(w.samples) ** 2) * w.dx ** w.n))


# -- remainder estimate ------------------------------------------------------------

@dataclass
class RemainderMeasurement:
    ratios: tuple[float, float, float]
    numerators: tuple[float, float, float]
    a_norm: float
    b_norm: float
    levels: list[int]
    max_residual: float
    max_leak: float
    conditions: list[ConditionReport] = field(default_factory=list)

    @property
    def conditions_hold(self) -> bool:
        return all(c.passed for c in self.conditions)


def _condition_checks(omega: ModulusSpec, s: float) -> list[ConditionReport]:
    return [check_dini(omega), check_techcond1(omega), check_techcond2(omega, s)]


def verify_remainder_estimate(a: GridFunction, b: GridFunction, s: float, omega: ModulusSpec,
                              q_min: int = -1, check_conditions: bool = True) -> RemainderMeasurement:
    """Measured constants of the remainder bound for i = 1, 2, 3.

    Ratio_i = (sum_q 2^{2(1-s)q} ||R_q^(i)||^2)^{1/2} / (||a||_{C^omega} ||b||_{H^{-s}_Omega}),
    with q running over q_min..margin_level.  The conditions on omega are
    checked and attached; a failed condition does not stop the measurement.
    """
    if not 0 < s < 1:
        raise DomainError("s must lie in (0, 1)")
    a.require_same_grid(b)
    a_norm = modulus_norm(a, omega)
    b_norm = float(dyadic_sobolev_norm(b, SobolevSpec(-s, omega)))
    if a_norm == 0.0 or b_norm == 0.0:
        raise DegenerateInputError("||a||_{C^omega} or ||b||_{H^{-s}_Omega} vanishes")
    A, B = _Blocks(a), _Blocks(b)
    levels = list(range(q_min, margin_level(a.N, a.L) + 1))
    sums = np.zeros(3)
    resid, leak = 0.0, 0.0
    for q in levels:
        d = _decompose(A, B, q, RECON_TOL)
        w = 2.0 ** (2 * (1 - s) * q)
        for i, r in enumerate((d.r1, d.r2, d.r3)):
            sums[i] += w * float(r.l2_norm()) ** 2
        resid, leak = max(resid, d.residual), max(leak, d.support_leak)
    nums = tuple(float(x) for x in np.sqrt(sums))
    ratios = tuple(x / (a_norm * b_norm) for x in nums)
    conds = _condition_checks(omega, s) if check_conditions else []
    return RemainderMeasurement(ratios, nums, a_norm, b_norm, levels, resid, leak, conds)
