"""The weight function Phi built from an Osgood modulus mu.

With t = exp(w) and s = exp(-w):

    phi(t)   = int_0^w exp(-v - log mu(e^-v)) dv        (increasing, phi(1) = 0)
    Phi'(tau) = phi^{-1}(tau) = exp(W),   phi(W) = tau
    Phi''     = (Phi')^2 mu(1/Phi') = exp(2W + log mu(e^-W))
    Phi(tau)  = int_0^tau Phi' = int_0^W dv / mu(e^-v)   (substitute tau' = phi(v))

Both integrals are accumulated on a uniform grid in w with adaptive
Gauss-Legendre; values between nodes are completed with one more
Gauss-Legendre pass, so every quantity is available at arbitrary tau without
interpolation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, InternalError, NonOsgoodRangeError, TableRangeError
from .modulus import ModulusSpec, check_osgood

DW = 1.0 / 32.0          # node spacing in w = log t
CHUNK = 1024             # nodes added per extension step
LOG_CAP = 700.0          # keep exp(W) and Phi'' finite
QUAD_RTOL = 1e-13
NEWTON_TOL = 1e-14

_X20, _W20 = np.polynomial.legendre.leggauss(20)
_X10, _W10 = np.polynomial.legendre.leggauss(10)


def _gl(f, a, b, x, wts):
    """Vectorized Gauss-Legendre of f over [a, b] (arrays of equal shape)."""
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    pts = a + half * (x + 1.0)
    return np.sum(wts * f(pts) * half, axis=-1)


def _adaptive(f, a: float, b: float, depth: int = 0) -> tuple[float, float]:
    hi = float(_gl(f, a, b, _X20, _W20))
    lo = float(_gl(f, a, b, _X10, _W10))
    err = abs(hi - lo)
    if err <= QUAD_RTOL * abs(hi) or depth > 30:
        return hi, err
    m = 0.5 * (a + b)
    v1, e1 = _adaptive(f, a, m, depth + 1)
    v2, e2 = _adaptive(f, m, b, depth + 1)
    return v1 + v2, e1 + e2


def _interval_integrals(f, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hi = _gl(f, a, b, _X20, _W20)
    lo = _gl(f, a, b, _X10, _W10)
    err = np.abs(hi - lo)
    bad = np.nonzero(err > QUAD_RTOL * np.abs(hi))[0]
    for i in bad:
        hi[i], err[i] = _adaptive(f, float(a[i]), float(b[i]))
    return hi, err


def _w_cap(mu: ModulusSpec) -> float:
    """Largest w (<= LOG_CAP) with 2w + log mu(e^-w) <= LOG_CAP."""
    f = lambda w: 2.0 * w + float(mu.log_at(w)) - LOG_CAP
    if f(LOG_CAP) <= 0:
        return LOG_CAP
    lo, hi = 0.0, LOG_CAP
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if f(mid) <= 0 else (lo, mid)
    return lo


class PhiTable:
    """Cumulative tables of phi and Phi in the variable w = log t.

    The table grows on demand (``ensure``); the stored values never change,
    so lookups are deterministic regardless of growth history.
    """

    def __init__(self, mu: ModulusSpec):
        self.mu = mu
        self.w_cap = _w_cap(mu)
        self.w = np.zeros(1)
        self.phi = np.zeros(1)
        self.Psi = np.zeros(1)
        self.err = np.zeros(1)
        self._osgood = None

    # integrands
    def g(self, w):
        """phi'(w) in the w variable: exp(-w - log mu(e^-w))."""
        return np.exp(-w - self.mu.log_at(w))

    def h(self, w):
        """Integrand of Phi in the w variable: 1/mu(e^-w)."""
        return np.exp(-self.mu.log_at(w))

    @property
    def w_max(self) -> float:
        return float(self.w[-1])

    @property
    def phi_max(self) -> float:
        return float(self.phi[-1])

    def _grow(self) -> None:
        start = self.w_max
        stop = min(start + CHUNK * DW, self.w_cap)
        if stop <= start:
            raise TableRangeError("weight table reached the floating point limit")
        k = max(1, int(math.ceil((stop - start) / DW - 1e-9)))
        nodes = np.linspace(start, stop, k + 1)
        dphi, e1 = _interval_integrals(self.g, nodes[:-1], nodes[1:])
        dPsi, e2 = _interval_integrals(self.h, nodes[:-1], nodes[1:])
        self.w = np.concatenate([self.w, nodes[1:]])
        self.phi = np.concatenate([self.phi, self.phi[-1] + np.cumsum(dphi)])
        self.Psi = np.concatenate([self.Psi, self.Psi[-1] + np.cumsum(dPsi)])
        self.err = np.concatenate([self.err, self.err[-1] + np.cumsum(e1)])

    def _range_error(self, what: str, value: float):
        if self._osgood is None:
            self._osgood = check_osgood(self.mu)
        if self._osgood.verdict == "fail":
            return NonOsgoodRangeError(
                f"{what}={value:g} is beyond sup phi ~ {self.phi_max:.6g}: {self.mu.label} fails "
                "the Osgood condition, so the weight function is only defined on a bounded range")
        return TableRangeError(
            f"{what}={value:g} needs Phi' beyond exp({self.w_cap:.0f}); reduce tau_max")

    def ensure_w(self, w_target: float) -> None:
        if w_target > self.w_cap:
            raise TableRangeError(f"w={w_target:g} exceeds the floating point cap {self.w_cap:.1f}")
        while self.w_max < w_target:
            self._grow()

    def ensure_tau(self, tau: float) -> None:
        while self.phi_max <= tau:
            if self.w_max >= self.w_cap:
                raise self._range_error("tau", tau)
            self._grow()

    def _partial(self, f, cum, w):
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            raise DomainError("w must be >= 0 (t >= 1)")
        self.ensure_w(float(np.max(w)) if w.size else 0.0)
        i = np.clip(np.floor(w / DW).astype(int), 0, len(self.w) - 1)
        # the last chunk may be shorter than DW; step back if the node lies beyond w
        i = np.where(self.w[i] > w, i - 1, i)
        return cum[i] + _gl(f, self.w[i], w, _X20, _W20)

    def phi_w(self, w):
        """phi at t = exp(w)."""
        return self._partial(self.g, self.phi, w)

    def Psi_w(self, w):
        """Phi at tau = phi(exp(w))."""
        return self._partial(self.h, self.Psi, w)

    def inverse(self, tau) -> np.ndarray:
        """W = log phi^{-1}(tau) by safeguarded Newton inside the table bracket."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if np.any(tau < 0):
            raise DomainError("tau must be >= 0")
        if tau.size:
            self.ensure_tau(float(np.max(tau)))
        j = np.searchsorted(self.phi, tau, side="right") - 1
        j = np.clip(j, 0, len(self.phi) - 2)
        lo, hi = self.w[j].copy(), self.w[j + 1].copy()
        if np.any(self.phi[j] > tau) or np.any(self.phi[j + 1] < tau):
            raise InternalError("phi table does not bracket the requested values")
        # linear start inside the bracket
        frac = (tau - self.phi[j]) / (self.phi[j + 1] - self.phi[j])
        W = lo + frac * (hi - lo)
        for _ in range(60):
            F = self.phi_w(W) - tau
            lo = np.where(F < 0, W, lo)
            hi = np.where(F > 0, W, hi)
            step = F / self.g(W)
            Wn = W - step
            outside = (Wn < lo) | (Wn > hi)
            Wn = np.where(outside, 0.5 * (lo + hi), Wn)
            done = np.abs(Wn - W) <= NEWTON_TOL * np.maximum(1.0, np.abs(W))
            W = Wn
            if np.all(done):
                break
        else:
            raise InternalError("root finding for phi^{-1} did not converge")
        return W


def build_phi(mu: ModulusSpec, t_max: float | None = None, *, w_max: float | None = None) -> PhiTable:
    """Tabulate phi(t) = int_{1/t}^1 ds/mu(s) on [1, t_max] (or up to w_max = log t_max)."""
    if w_max is None:
        if t_max is None or t_max < 1:
            raise DomainError("t_max must be >= 1")
        w_max = math.log(t_max)
    table = PhiTable(mu)
    table.ensure_w(float(w_max))
    return table


@dataclass
class WeightTable:
    """Phi, Phi' and Phi'' on [0, tau_max], with exact evaluation between nodes."""

    mu: ModulusSpec
    tau_max: float
    phi_table: PhiTable = field(repr=False)
    tau: np.ndarray = field(repr=False)
    log_Phi_prime_nodes: np.ndarray = field(repr=False)
    Phi_nodes: np.ndarray = field(repr=False)

    # -- exact evaluation ---------------------------------------------------
    def _check(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < 0):
            raise DomainError("tau must be >= 0")
        if np.any(tau > self.tau_max * (1 + 1e-12)):
            raise TableRangeError(f"tau={float(np.max(tau)):g} is beyond the table range "
                                  f"{self.tau_max:g}; rebuild with a larger tau_max")
        return tau

    def log_Phi_prime(self, tau):
        tau = self._check(tau)
        return self.phi_table.inverse(tau).reshape(tau.shape)

    def Phi_prime_at(self, tau):
        return np.exp(self.log_Phi_prime(tau))

    def Phi_double_prime_at(self, tau):
        W = self.log_Phi_prime(tau)
        return np.exp(2.0 * W + self.mu.log_at(W))

    def Phi_at(self, tau):
        W = self.log_Phi_prime(tau)
        return self.phi_table.Psi_w(W.ravel()).reshape(W.shape)

    def phi_inv(self, tau):
        return self.Phi_prime_at(tau)

    # -- node values ---------------------------------------------------------
    @property
    def Phi_prime(self) -> np.ndarray:
        return np.exp(self.log_Phi_prime_nodes)

    @property
    def Phi_double_prime(self) -> np.ndarray:
        W = self.log_Phi_prime_nodes
        return np.exp(2.0 * W + self.mu.log_at(W))

    @property
    def Phi(self) -> np.ndarray:
        return self.Phi_nodes

    @property
    def quadrature_error(self) -> np.ndarray:
        pt = self.phi_table
        i = np.clip(np.searchsorted(pt.w, self.log_Phi_prime_nodes), 0, len(pt.w) - 1)
        return pt.err[i]

    def fd_second_derivative(self, tau, h: float | None = None) -> np.ndarray:
        """Phi'' by 4th-order differences of the exact Phi' (one-sided near tau = 0).

        Default step: 0.01 / max(1, Phi''/Phi'), i.e. a fixed fraction of the
        local scale on which Phi' varies.
        """
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if h is None:
            W = self.log_Phi_prime(tau)
            rate = np.exp(W + self.mu.log_at(W))
            h = 0.01 / np.maximum(1.0, rate)
        h = np.broadcast_to(np.asarray(h, dtype=float), tau.shape)
        central = (tau - 2 * h >= 0) & (tau + 2 * h <= self.tau_max)
        out = np.empty_like(tau)
        f = self._unchecked_prime
        c = central
        if np.any(c):
            t, hh = tau[c], h[c]
            out[c] = (f(t - 2 * hh) - 8 * f(t - hh) + 8 * f(t + hh) - f(t + 2 * hh)) / (12 * hh)
        fw = ~c & (tau - 2 * h < 0)
        if np.any(fw):
            t, hh = tau[fw], h[fw]
            out[fw] = (-25 * f(t) + 48 * f(t + hh) - 36 * f(t + 2 * hh) + 16 * f(t + 3 * hh)
                       - 3 * f(t + 4 * hh)) / (12 * hh)
        bw = ~c & ~fw
        if np.any(bw):
            t, hh = tau[bw], h[bw]
            out[bw] = (25 * f(t) - 48 * f(t - hh) + 36 * f(t - 2 * hh) - 16 * f(t - 3 * hh)
                       + 3 * f(t - 4 * hh)) / (12 * hh)
        return out

    def _unchecked_prime(self, tau):
        return np.exp(self.phi_table.inverse(tau))

    def residual(self, tau=None, h: float | None = None) -> np.ndarray:
        """|FD Phi'' - (Phi')^2 mu(1/Phi')| / Phi'' at the given points (default: nodes)."""
        tau = self.tau if tau is None else np.atleast_1d(np.asarray(tau, dtype=float))
        exact = self.Phi_double_prime_at(tau)
        return np.abs(self.fd_second_derivative(tau, h) - exact) / exact

    def invariant_violations(self) -> list[str]:
        out = []
        if self.Phi_nodes[0] != 0.0:
            out.append("Phi(0) != 0")
        if np.any(self.Phi_prime < 1.0 - 1e-15):
            out.append("Phi' < 1")
        if np.any(np.diff(self.Phi_prime) < 0):
            out.append("Phi' decreasing")
        if np.any(np.diff(self.Phi_double_prime) < 0):
            out.append("Phi'' decreasing")
        if np.any(np.diff(self.Phi_nodes) <= 0):
            out.append("Phi not increasing")
        return out

    def to_csv(self, path: str | Path) -> None:
        res = self.residual()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "Phi", "Phi_prime", "Phi_double_prime", "residual"])
            for row in zip(self.tau, self.Phi, self.Phi_prime, self.Phi_double_prime, res):
                w.writerow([repr(float(x)) for x in row])


def _tau_nodes(pt: PhiTable, tau_max: float, h0: float, refine: float) -> np.ndarray:
    # uniform nodes, merged with the images phi(w_i) of the w grid: between those
    # Phi''/Phi' * dtau = dw, so they refine exactly where Phi'' is large
    k = int(math.ceil(tau_max / h0))
    uniform = np.linspace(0.0, tau_max, k + 1)
    stride = max(1, int(math.floor(refine / DW)))
    images = pt.phi[::stride]
    images = images[(images > 0) & (images < tau_max)]
    nodes = np.union1d(uniform, images)
    # drop near-duplicates
    keep = np.concatenate([[True], np.diff(nodes) > 1e-12 * max(1.0, tau_max)])
    return nodes[keep]


def build_weight_table(mu: ModulusSpec, tau_max: float, h0: float = 1.0 / 16.0,
                       refine: float = 0.05) -> WeightTable:
    """Tabulate Phi, Phi' = phi^{-1} and Phi'' = (Phi')^2 mu(1/Phi') on [0, tau_max].

    Raises NonOsgoodRangeError when tau_max >= sup phi (mu not Osgood) and
    TableRangeError when Phi' would overflow.
    """
    if not tau_max > 0:
        raise DomainError("tau_max must be positive")
    pt = PhiTable(mu)
    pt.ensure_tau(float(tau_max))
    tau = _tau_nodes(pt, float(tau_max), min(h0, tau_max / 16.0), refine)
    W = pt.inverse(tau)
    Phi = pt.Psi_w(W)
    Phi[0] = 0.0
    return WeightTable(mu, float(tau_max), pt, tau, W, Phi)
