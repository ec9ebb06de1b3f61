"""Dyadic cutoffs, Littlewood-Paley blocks and dyadic (weighted) Sobolev norms.

Blocks are discrete Fourier multipliers on the periodic grid: the profile is
evaluated at every grid wavenumber |k| (integer multiples of 2*pi/L).  Block
index q runs over -1..q_max(N, L), where q_max is the largest q whose annulus
{3/4 2^q <= |k| <= 8/3 2^q} fits below the Nyquist wavenumber pi*N/L.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResolutionError, SupportError
from .grid import (GridFunction, fft_space, grad_linf, ifft_space, nyquist,
                   radial_wavenumber, wavenumbers)
from .modulus import ModulusSpec, check_dini

R_INNER = 3.0 / 4.0
R_OUTER = 4.0 / 3.0
RESOLVED_TOL = 1e-8


# -- cutoffs --------------------------------------------------------------------

def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (xi * (1.0 - xi)))
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)
# normalization of the bump, int_0^1 exp(-1/(x(1-x))) dx, split at 1/2 for accuracy
_BUMP_MASS = float(2 * 0.25 * np.sum(_GL_W * _bump(0.25 * (_GL_X + 1))))


def _smooth_step(x):
    """H(x) = int_0^x bump / int_0^1 bump, with H = 0 for x <= 0 and 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    lo = np.minimum(x, 1.0 - x)
    # Gauss-Legendre on [0, lo]; symmetry H(x) = 1 - H(1 - x) keeps lo <= 1/2
    half = 0.5 * lo[..., None]
    part = np.sum(_GL_W * _bump(half * (_GL_X + 1.0)), axis=-1) * half[..., 0] / _BUMP_MASS
    return np.where(x <= 0.5, part, 1.0 - part)


@dataclass(frozen=True)
class CutoffPair:
    """Radial profiles chi (ball) and phi_cut(r) = chi(r/2) - chi(r) (annulus)."""

    r_inner: float = R_INNER
    r_outer: float = R_OUTER

    def chi(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        return 1.0 - _smooth_step((r - self.r_inner) / (self.r_outer - self.r_inner))

    def phi_cut(self, r):
        return self.chi(np.asarray(r, dtype=float) / 2.0) - self.chi(r)

    def annulus(self) -> tuple[float, float]:
        return self.r_inner, 2 * self.r_outer


def build_cutoffs(r_inner: float = R_INNER, r_outer: float = R_OUTER) -> CutoffPair:
    """Build the cutoff pair; the transition of chi runs over [r_inner, r_outer].

    The support bounds require 3/4 <= r_inner < r_outer <= 4/3 so that the
    annulus support stays inside [3/4, 8/3] and no three blocks overlap.
    """
    if not (R_INNER <= r_inner < r_outer <= R_OUTER):
        raise DomainError("transition must satisfy 3/4 <= r_inner < r_outer <= 4/3")
    return CutoffPair(r_inner, r_outer)


DEFAULT_CUTOFFS = CutoffPair()


# -- multipliers ------------------------------------------------------------------

def q_max(N: int, L: float = 2 * np.pi) -> int:
    """Largest q with 8/3 * 2^q <= pi*N/L."""
    return int(math.floor(math.log2(nyquist(N, L) * 3.0 / 8.0)))


@lru_cache(maxsize=512)
def _multiplier(kind: str, q: int, N: int, L: float, n: int) -> np.ndarray:
    r = radial_wavenumber(N, L, n)
    cp = DEFAULT_CUTOFFS
    if kind == "delta":
        if q <= -2:
            m = np.zeros_like(r)
        elif q == -1:
            m = cp.chi(r)
        else:
            m = cp.phi_cut(r * 2.0 ** -q)
    elif kind == "s":
        m = np.zeros_like(r) if q < 0 else cp.chi(r * 2.0 ** -q)
    else:
        raise ValueError(kind)
    m.setflags(write=False)
    return m


def multiplier(kind: str, q: int, u: GridFunction) -> np.ndarray:
    return _multiplier(kind, int(q), u.N, u.L, u.n)


def apply_multiplier(u: GridFunction, m: np.ndarray) -> GridFunction:
    vals = ifft_space(u.spectrum() * m, u.n)
    return u.with_samples(vals.real if u.is_real else vals)


def _check_q(u: GridFunction, q: int) -> None:
    qm = q_max(u.N, u.L)
    if q > qm:
        raise ResolutionError(
            f"block q={q} exceeds q_max={qm} for N={u.N}, L={u.L:g}: its annulus "
            f"extends past the Nyquist wavenumber; refine the grid to resolve it")


def delta_q(u: GridFunction, q: int) -> GridFunction:
    """Dyadic block Delta_q u (zero for q <= -2)."""
    _check_q(u, q)
    return apply_multiplier(u, multiplier("delta", q, u))


def s_q(u: GridFunction, q: int) -> GridFunction:
    """Low-pass block S_q u = chi(2^-q D) u = sum_{p <= q-1} Delta_p u."""
    if q < 0:
        raise DomainError("s_q needs q >= 0")
    _check_q(u, q - 1)
    return apply_multiplier(u, multiplier("s", q, u))


def _delta(u, q):
    # unchecked variant for internal sums that run one level past q_max
    return apply_multiplier(u, multiplier("delta", q, u))


def _s(u, q):
    return apply_multiplier(u, multiplier("s", q, u))


def block_range(u: GridFunction) -> range:
    return range(-1, q_max(u.N, u.L) + 1)


# -- resolvedness and decomposition ------------------------------------------------

def block_energies(u: GridFunction) -> np.ndarray:
    """||Delta_q u||_{L^2}^2 for q = -1..q_max (summed over time if present)."""
    uh2 = np.abs(u.spectrum()) ** 2
    scale = u.dx ** u.n / u.N ** u.n
    axes = tuple(range(uh2.ndim))
    return np.array([np.sum(uh2 * multiplier("delta", q, u) ** 2, axis=axes) * scale
                     for q in block_range(u)])


def resolvedness(u: GridFunction) -> float:
    """Fraction of spectral energy in the top two dyadic blocks (plus beyond)."""
    uh2 = np.abs(u.spectrum()) ** 2
    total = float(np.sum(uh2))
    if total == 0.0:
        return 0.0
    qm = q_max(u.N, u.L)
    low = multiplier("s", qm - 1, u)
    top = 1.0 - low ** 2
    return float(np.sum(uh2 * top)) / total


def require_resolved(u: GridFunction, tol: float = RESOLVED_TOL) -> None:
    r = resolvedness(u)
    if r > tol:
        raise ResolutionError(
            f"grid function is not resolved: top-two-block energy fraction {r:.3e} > {tol:.1e}")


@dataclass(frozen=True)
class DyadicDecomposition:
    parent: GridFunction
    blocks: list[tuple[int, GridFunction]]
    support_leak: dict[int, float]

    def reconstruct(self) -> GridFunction:
        acc = np.zeros_like(self.parent.samples)
        for _, b in self.blocks:
            acc = acc + b.samples
        return self.parent.with_samples(acc)


def spectral_leak(u: GridFunction, allowed: np.ndarray) -> float:
    """Relative spectral mass of u outside the boolean mask ``allowed``."""
    uh2 = np.abs(u.spectrum()) ** 2
    total = float(np.sum(uh2))
    if total == 0.0:
        return 0.0
    return float(np.sum(uh2 * ~allowed)) / total


def annulus_mask(u: GridFunction, q: int) -> np.ndarray:
    r = radial_wavenumber(u.N, u.L, u.n)
    tol = 1e-12
    if q == -1:
        return r <= R_OUTER + tol
    return (r >= R_INNER * 2 ** q - tol) & (r <= 2 * R_OUTER * 2 ** q + tol)


def decompose(u: GridFunction, check: bool = True) -> DyadicDecomposition:
    if check:
        require_resolved(u)
    blocks = [(q, delta_q(u, q)) for q in block_range(u)]
    leak = {q: spectral_leak(b, annulus_mask(u, q)) for q, b in blocks}
    return DyadicDecomposition(u, blocks, leak)


# -- Sobolev norms ----------------------------------------------------------------

@dataclass(frozen=True)
class SobolevSpec:
    """Exponent s with optional weight Omega(q) = 2^q omega(2^-q)."""

    s: float
    omega: ModulusSpec | None = None

    def weight(self, q: int) -> float:
        """Omega(q); Omega(-1) is taken equal to Omega(0) = omega(1) = 1."""
        if self.omega is None:
            return 1.0
        qq = max(q, 0)
        return float(2.0 ** qq * self.omega(2.0 ** -qq))

    def block_factor(self, q: int) -> float:
        return 2.0 ** (2 * self.s * q) * self.weight(q) ** 2


@lru_cache(maxsize=128)
def _dyadic_weight(N: int, L: float, n: int, s: float, omega) -> np.ndarray:
    spec = SobolevSpec(s, omega)
    w = np.zeros((N,) * n)
    for q in range(-1, q_max(N, L) + 1):
        w += spec.block_factor(q) * _multiplier("delta", q, N, L, n) ** 2
    w.setflags(write=False)
    return w


def dyadic_weight(u: GridFunction, spec: SobolevSpec) -> np.ndarray:
    """Per-wavenumber weight W(k) = sum_q 2^{2sq} Omega(q)^2 m_q(k)^2."""
    return _dyadic_weight(u.N, u.L, u.n, float(spec.s), spec.omega)


def dyadic_sobolev_norm_sq(u: GridFunction, spec: SobolevSpec):
    """Squared dyadic norm; an array over time when u has a time axis."""
    uh2 = np.abs(u.spectrum()) ** 2
    axes = tuple(range(-u.n, 0))
    return np.sum(uh2 * dyadic_weight(u, spec), axis=axes) * (u.dx ** u.n / u.N ** u.n)


def dyadic_sobolev_norm(u: GridFunction, spec: SobolevSpec):
    """(sum_q 2^{2sq} Omega(q)^2 ||Delta_q u||^2)^{1/2} via Parseval."""
    return np.sqrt(dyadic_sobolev_norm_sq(u, spec))


def multiplier_sobolev_norm(u: GridFunction, s: float):
    """Classical norm with multiplier (1 + |xi|^2)^{s/2}, as a cross-check."""
    r = radial_wavenumber(u.N, u.L, u.n)
    uh2 = np.abs(u.spectrum()) ** 2
    axes = tuple(range(-u.n, 0))
    return np.sqrt(np.sum(uh2 * (1 + r ** 2) ** s, axis=axes) * (u.dx ** u.n / u.N ** u.n))


@dataclass
class SynthesisResult:
    ratio: float
    norm_of_sum: float
    sequence_norm: float
    verdict: str
    constant: float


def synthesis_norm_bound(blocks, s: float, R: float = 2.0, ball: bool = False,
                         C_s: float = 3.0, leak_tol: float = 1e-12) -> SynthesisResult:
    """Synthesize u = sum u_q and compare its dyadic H^s norm with the block sequence.

    Each block must have spectrum in {R^-1 2^q <= |xi| <= 2R 2^q} (q >= 0) or
    {|xi| <= R} (q = -1); with ``ball=True`` (only for s > 0) the relaxed
    condition {|xi| <= R 2^q} is used.  Returns ratio ||u||_{H^s} / ||(2^{qs}||u_q||)||.
    """
    if R <= 1:
        raise DomainError("R must exceed 1")
    if ball and s <= 0:
        raise DomainError("the ball support condition is only valid for s > 0")
    blocks = list(blocks)
    if not blocks:
        raise DomainError("no blocks given")
    first = blocks[0][1]
    r = radial_wavenumber(first.N, first.L, first.n)
    tol = 1e-12
    acc = np.zeros_like(first.samples, dtype=np.result_type(*[b.samples for _, b in blocks]))
    seq = 0.0
    for q, b in blocks:
        first.require_same_grid(b)
        if ball or q == -1:
            allowed = r <= R * 2.0 ** max(q, 0) + tol
        else:
            allowed = (r >= 2.0 ** q / R - tol) & (r <= 2 * R * 2.0 ** q + tol)
        leak = spectral_leak(b, allowed)
        if leak > leak_tol:
            raise SupportError(f"block q={q} has spectral mass fraction {leak:.3e} outside its support")
        acc = acc + b.samples
        seq += 2.0 ** (2 * q * s) * float(b.l2_norm()) ** 2
    u = first.with_samples(acc)
    norm = float(dyadic_sobolev_norm(u, SobolevSpec(s)))
    seq = math.sqrt(seq)
    if seq == 0.0:
        raise DomainError("all blocks vanish")
    ratio = norm / seq
    verdict = "pass" if 1.0 / C_s <= ratio <= C_s else "fail"
    return SynthesisResult(ratio, norm, seq, verdict, C_s)


_DINI_CACHE: dict[str, bool] = {}


def holder_block_norm(u: GridFunction, omega: ModulusSpec) -> float:
    """sup_{q >= 0} ||grad S_q u||_{L^inf} / (2^q omega(2^-q))."""
    key = omega.label
    if key not in _DINI_CACHE:
        _DINI_CACHE[key] = check_dini(omega, 30).passed
    if not _DINI_CACHE[key]:
        warnings.warn(f"{key} fails the Dini check; the block characterization of C^omega "
                      "is not guaranteed", RuntimeWarning, stacklevel=2)
    best = 0.0
    for q in range(0, q_max(u.N, u.L) + 2):
        g = float(np.max(grad_linf(_s(u, q))))
        best = max(best, g / (2.0 ** q * float(omega(2.0 ** -q))))
    return best

