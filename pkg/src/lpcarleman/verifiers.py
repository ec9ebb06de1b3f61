"""Measured constants for the Bernstein, commutator and time-mollifier estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate
from scipy.ndimage import correlate1d

from .errors import DomainError, ResolutionError
from .grid import GridFunction, grad_linf, gradient, time_derivative
from .lp_core import R_INNER, R_OUTER, _check_q, _delta, _s, delta_q, q_max, s_q
from .modulus import ModulusSpec, _jsonable, modulus_seminorm
from .paraproduct import multiply

BLOCK_LOW = R_INNER          # 3/4
BLOCK_HIGH = 2 * R_OUTER     # 8/3
BERNSTEIN_TOL = 1e-6


@dataclass
class EstimateReport:
    """Per-sample ratios of one estimate; ``max_ratio`` is the measured constant."""

    estimate: str
    ratios: list[float]
    samples: list[dict]
    ceiling: float | None = None
    floor: float | None = None
    skipped: list[dict] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    @property
    def min_ratio(self) -> float:
        return min(self.ratios) if self.ratios else 0.0

    @property
    def verdict(self) -> str:
        if not self.ratios:
            return "inconclusive"
        if self.ceiling is not None and self.max_ratio > self.ceiling:
            return "fail"
        if self.floor is not None and self.min_ratio < self.floor:
            return "fail"
        return "pass"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def merge(self, other: "EstimateReport") -> "EstimateReport":
        return EstimateReport(self.estimate, self.ratios + other.ratios, self.samples + other.samples,
                              self.ceiling, self.floor, self.skipped + other.skipped,
                              {**self.details, **other.details})

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "verdict": self.verdict,
                "max_ratio": _jsonable(self.max_ratio), "min_ratio": _jsonable(self.min_ratio),
                "ceiling": _jsonable(self.ceiling), "floor": _jsonable(self.floor),
                "ratios": [_jsonable(r) for r in self.ratios],
                "samples": _jsonable(self.samples), "skipped": _jsonable(self.skipped),
                "details": _jsonable(self.details)}


def _l2(u: GridFunction) -> float:
    return float(u.l2_norm())


def _grad_l2(u: GridFunction) -> float:
    return math.sqrt(sum(_l2(c) ** 2 for c in gradient(u)))


# -- Bernstein -------------------------------------------------------------------

def verify_bernstein(u: GridFunction, q: int, tol: float = BERNSTEIN_TOL) -> list[EstimateReport]:
    """Bernstein ratios at level q.

    Returns three reports: ``bernstein_block`` (2^-q ||grad Delta_q u||_2 / ||Delta_q u||_2,
    two-sided within [3/4, 8/3]; for q = -1 it is ``bernstein_block_low``, the
    unscaled upper ratio, at most 4/3),
    ``bernstein_lowpass_l2`` (||grad S_q u||_2 / (2^q ||u||_2), at most 4/3) and
    ``bernstein_lowpass_linf`` (same in L^inf; informational, no ceiling).
    """
    if q < -1:
        raise DomainError("q must be >= -1")
    _check_q(u, q)
    desc = {"q": q}
    block = delta_q(u, q)
    nb = _l2(block)
    if q == -1:
        rep = EstimateReport("bernstein_block_low", [], [], ceiling=R_OUTER + tol)
    else:
        rep = EstimateReport("bernstein_block", [], [], ceiling=BLOCK_HIGH + tol, floor=BLOCK_LOW - tol)
    if nb == 0.0 or nb < 1e-13 * max(_l2(u), 1e-300):
        rep.skipped.append({**desc, "reason": "block vanishes"})
    else:
        scale = 1.0 if q == -1 else 2.0 ** -q
        rep.ratios.append(scale * _grad_l2(block) / nb)
        rep.samples.append(desc)

    low2 = EstimateReport("bernstein_lowpass_l2", [], [], ceiling=R_OUTER + tol)
    lowinf = EstimateReport("bernstein_lowpass_linf", [], [])
    nu2, nuinf = _l2(u), float(np.max(np.abs(u.samples)))
    if q >= 0 and nu2 > 0:
        low = s_q(u, q)
        low2.ratios.append(_grad_l2(low) / (2.0 ** q * nu2))
        low2.samples.append(desc)
        lowinf.ratios.append(float(np.max(grad_linf(low))) / (2.0 ** q * nuinf))
        lowinf.samples.append(desc)
    else:
        low2.skipped.append({**desc, "reason": "q = -1 or u = 0"})
        lowinf.skipped.append({**desc, "reason": "q = -1 or u = 0"})
    return [rep, low2, lowinf]


def bernstein_sweep(fields, tol: float = BERNSTEIN_TOL) -> dict[str, EstimateReport]:
    """Bernstein reports merged over several fields and all levels -1..q_max."""
    out: dict[str, EstimateReport] = {}
    for i, u in enumerate(fields):
        for q in range(-1, q_max(u.N, u.L) + 1):
            for rep in verify_bernstein(u, q, tol):
                for s in rep.samples:
                    s["field"] = i
                out[rep.estimate] = out[rep.estimate].merge(rep) if rep.estimate in out else rep
    return out


# -- commutator ------------------------------------------------------------------

def commutator(a: GridFunction, u: GridFunction, q: int, q_prime: int, p: int) -> GridFunction:
    """[S_{q'}a, Delta_q] Delta_p u = S_{q'}a * Delta_q Delta_p u - Delta_q(S_{q'}a * Delta_p u)."""
    sa = _s(a, q_prime)
    dpu = _delta(u, p)
    return multiply(sa, _delta(dpu, q)) - _delta(multiply(sa, dpu), q)


def verify_commutator(a: GridFunction, u: GridFunction, q: int, q_prime: int, p: int,
                      ceiling: float | None = None) -> EstimateReport:
    """||[S_{q'}a, Delta_q] Delta_p u||_2 / (2^-p ||grad S_{q'}a||_inf ||Delta_p u||_2)."""
    if q_prime < 0 or q < -1 or p < -1:
        raise DomainError("need q' >= 0 and q, p >= -1")
    a.require_same_grid(u)
    for lvl in (q, p, q_prime - 1):
        _check_q(a, lvl)
    rep = EstimateReport("commutator", [], [], ceiling=ceiling)
    desc = {"q": q, "q_prime": q_prime, "p": p}
    dpu_norm = _l2(_delta(u, p))
    if dpu_norm == 0.0:
        rep.skipped.append({**desc, "reason": "Delta_p u vanishes"})
        return rep
    num = _l2(commutator(a, u, q, q_prime, p))
    g = float(np.max(grad_linf(_s(a, q_prime))))
    if g == 0.0:
        # constant S_{q'}a commutes with Delta_q
        ratio = 0.0
    else:
        ratio = num / (2.0 ** -p * g * dpu_norm)
    rep.ratios.append(ratio)
    rep.samples.append(desc)
    return rep


def commutator_lattice(pairs, lattice, ceiling: float | None = None) -> EstimateReport:
    """Merge commutator ratios over (a, u) pairs and (q, q', p) lattice points."""
    rep = EstimateReport("commutator", [], [], ceiling=ceiling)
    for i, (a, u) in enumerate(pairs):
        for (q, qp, p) in lattice:
            r = verify_commutator(a, u, q, qp, p, ceiling)
            for s in r.samples + r.skipped:
                s["pair"] = i
            rep = rep.merge(r)
    return rep


def commutator_lattice_points(qm: int, rng: np.random.Generator, count: int | None = None,
                              near: int | None = 2) -> list[tuple[int, int, int]]:
    """Lattice q, p in 0..qm, q' in 0..qm; optionally |q - p| <= near and a seeded subsample."""
    pts = [(q, qp, p) for q in range(qm + 1) for qp in range(qm + 1) for p in range(qm + 1)
           if near is None or abs(q - p) <= near]
    if count is not None and count < len(pts):
        idx = np.sort(rng.choice(len(pts), size=count, replace=False))
        pts = [pts[i] for i in idx]
    return pts


# -- time mollifier -------------------------------------------------------------------

def _rho_raw(tau):
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    m = np.abs(tau) < 0.5
    out[m] = np.exp(-1.0 / (1.0 - 4.0 * tau[m] ** 2))
    return out


def _rho_raw_prime(tau):
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    m = np.abs(tau) < 0.5
    t = tau[m]
    d = 1.0 - 4.0 * t ** 2
    out[m] = np.exp(-1.0 / d) * (-8.0 * t / d ** 2)
    return out


RHO_MASS = float(integrate.quad(_rho_raw, -0.5, 0.5, epsabs=0.0, epsrel=1e-13)[0])


def rho(tau):
    """Even unit-mass bump c*exp(-1/(1 - 4 tau^2)) supported in [-1/2, 1/2]."""
    return _rho_raw(tau) / RHO_MASS


def rho_prime(tau):
    return _rho_raw_prime(tau) / RHO_MASS


def mollify_time(a: GridFunction, eps: float, derivative: bool = False) -> GridFunction:
    """a^eps(t) = (1/eps) int a(s) rho((t - s)/eps) ds on the time grid (or d/dt of it).

    Outside [0, T] the field is continued by its end values.  The discrete
    kernel is renormalized to unit discrete mass, so constants are reproduced
    exactly; with ``derivative=True`` the analytic rho' is used,
    (1/eps^2) int a(s) rho'((t - s)/eps) ds, normalized so that linear
    functions are differentiated exactly.
    """
    if not a.has_time:
        raise DomainError("mollify_time needs a time axis")
    if not 0 < eps < a.T / 2:
        raise DomainError("eps must lie in (0, T/2)")
    h = a.dt
    if h > eps / 8 * (1 + 1e-12):
        raise ResolutionError(f"time step {h:.3g} exceeds eps/8 = {eps / 8:.3g}; use more time samples")
    J = int(math.floor(0.5 * eps / h))
    offs = np.arange(-J, J + 1) * h / eps          # (t_i - t_j)/eps for j = i - k
    if derivative:
        kern = rho_prime(offs)
        # sum_k kern_k * (t_i - eps*offs_k) must equal 1
        kern = kern / (-eps * float(np.sum(kern * offs)))
    else:
        kern = rho(offs)
        kern = kern / float(np.sum(kern))
    # correlate1d: out[i] = sum_k w[k] in[i + k - J]; here t_i - t_j = (J - k) h
    w = kern[::-1]
    x = a.samples
    if np.iscomplexobj(x):
        out = (correlate1d(x.real, w, axis=0, mode="nearest")
               + 1j * correlate1d(x.imag, w, axis=0, mode="nearest"))
    else:
        out = correlate1d(x, w, axis=0, mode="nearest")
    return a.with_samples(out)


def time_derivative_fd(a: GridFunction) -> np.ndarray:
    """d/dt by centered 4th-order differences (one-sided 4th order at the ends)."""
    return time_derivative(a.samples, a.dt, 4)


@dataclass
class MollifierReport:
    eps: list[float]
    approx: EstimateReport       # sup|a^eps - a| / mu(eps)
    derivative: EstimateReport   # sup|d/dt a^eps| eps / mu(eps), analytic rho'
    derivative_fd: EstimateReport
    time_norm: float             # measured C^mu time seminorm of a

    @property
    def variation(self) -> dict[str, float]:
        out = {}
        for rep in (self.approx, self.derivative, self.derivative_fd):
            lo = rep.min_ratio
            out[rep.estimate] = math.inf if lo == 0 else rep.max_ratio / lo
        return out

    def to_dict(self) -> dict:
        return {"eps": self.eps, "time_seminorm": self.time_norm,
                "variation": _jsonable(self.variation),
                "reports": [r.to_dict() for r in (self.approx, self.derivative, self.derivative_fd)]}


def verify_mollifier(a: GridFunction, mu: ModulusSpec, eps_values) -> MollifierReport:
    """Sweep eps and measure the two mollifier bounds against mu(eps) and mu(eps)/eps."""
    eps_values = [float(e) for e in eps_values]
    approx = EstimateReport("mollifier_approx", [], [])
    deriv = EstimateReport("mollifier_derivative", [], [])
    deriv_fd = EstimateReport("mollifier_derivative_fd", [], [])
    for eps in eps_values:
        m = float(mu(eps))
        ae = mollify_time(a, eps)
        dae = mollify_time(a, eps, derivative=True)
        desc = {"eps": eps}
        approx.ratios.append(float(np.max(np.abs(ae.samples - a.samples))) / m)
        deriv.ratios.append(float(np.max(np.abs(dae.samples))) * eps / m)
        deriv_fd.ratios.append(float(np.max(np.abs(time_derivative_fd(ae)))) * eps / m)
        for r in (approx, deriv, deriv_fd):
            r.samples.append(dict(desc))
    return MollifierReport(eps_values, approx, deriv, deriv_fd, modulus_seminorm(a, mu, axis="time"))


def holder_time_field(N: int, M: int, T: float = 1.0, alpha: float = 0.5, t0: float | None = None,
                      n: int = 1, L: float = 2 * np.pi) -> GridFunction:
    """a(t, x) = |t - t0|^alpha (1 + sin(x_1)/2): exactly C^{power(alpha)} in time.

    t0 defaults to the grid node nearest T/3, so the singular point is sampled.
    """
    times = np.linspace(0.0, T, M)
    if t0 is None:
        t0 = times[int(round((M - 1) / 3))]
    x = np.arange(N) * (L / N)
    prof = 1.0 + 0.5 * np.sin(x)
    tpart = np.abs(times - t0) ** alpha
    if n == 1:
        vals = tpart[:, None] * prof[None, :]
    else:
        vals = tpart[:, None, None] * prof[None, :, None] * np.ones((1, 1, N))
    return GridFunction(vals, n=n, L=L, T=T)
