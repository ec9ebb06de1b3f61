"""Moduli of continuity, the derived space modulus, and hypothesis checks.

Moduli are evaluated through ``log_at(w) = log mu(exp(-w))`` whenever the
argument is tiny; all integrals towards ``s = 0`` are taken in the variable
``w = -log s`` where the integrands stay bounded and smooth.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import DomainError
from .grid import GridFunction

FAMILIES = ("power", "loglip", "sqrt_mu_square", "tabulated")
_ALIASES = {"log-lipschitz": "loglip", "loglipschitz": "loglip", "log_lipschitz": "loglip",
            "sqrt-of-mu-of-square": "sqrt_mu_square"}


@dataclass(frozen=True, eq=False)
class ModulusSpec:
    """An evaluable modulus of continuity on [0, 1], normalized to mu(1) = 1.

    ``family`` is one of ``power`` (s**alpha), ``loglip``
    (s*(1+|log s|)**alpha), ``sqrt_mu_square`` (sqrt(base(s**2))) or
    ``tabulated`` (monotone cubic through a sample table).
    """

    family: str
    alpha: float | None = None
    base: "ModulusSpec | None" = None
    table: tuple[np.ndarray, np.ndarray] | None = None
    normalization: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        fam = _ALIASES.get(self.family, self.family)
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise DomainError(f"unknown modulus family {self.family!r}")
        if fam == "power" and not (self.alpha is not None and 0 < self.alpha <= 1):
            raise DomainError("power modulus needs alpha in (0, 1]")
        if fam == "loglip" and not (self.alpha is not None and self.alpha > 0):
            raise DomainError("log-Lipschitz modulus needs alpha > 0")
        if fam == "sqrt_mu_square" and self.base is None:
            raise DomainError("sqrt_mu_square needs a base modulus")
        if fam == "tabulated":
            self._init_table()

    def _init_table(self):
        if self.table is None:
            raise DomainError("tabulated modulus needs a sample table")
        s, v = (np.asarray(a, dtype=float) for a in self.table)
        if s.ndim != 1 or s.shape != v.shape or len(s) < 3:
            raise DomainError("table must be two equal-length 1-d arrays with >= 3 samples")
        if s[0] != 0.0 or v[0] != 0.0 or s[-1] != 1.0:
            raise DomainError("table must start at (0, 0) and end at s = 1")
        if np.any(np.diff(s) <= 0) or np.any(np.diff(v) <= 0):
            raise DomainError("table must be strictly increasing in s and in mu")
        v = v / v[-1]
        object.__setattr__(self, "table", (s, v))
        self._cache["pchip"] = PchipInterpolator(s, v, extrapolate=False)

    # -- evaluation -------------------------------------------------------
    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        out = np.zeros_like(s_arr)
        pos = s_arr > 0
        if np.any(pos):
            sp = s_arr[pos]
            if self.family == "power":
                val = sp ** self.alpha
            elif self.family == "loglip":
                val = sp * (1.0 - np.log(sp)) ** self.alpha
            elif self.family == "tabulated":
                val = self._tab_eval(sp)
            else:
                val = np.exp(self.log_at(-np.log(sp)))
            out[pos] = val * self.normalization
        return out if out.ndim else float(out)

    def _tab_eval(self, sp):
        s, v = self.table
        s1, v1 = s[1], v[1]
        res = np.where(sp >= s1, 0.0, v1 * sp / s1)
        big = sp >= s1
        if np.any(big):
            res[big] = self._cache["pchip"](np.minimum(sp[big], 1.0))
        return res

    def log_at(self, w):
        """log mu(exp(-w)) for w >= 0, stable for arbitrarily large w."""
        w = np.asarray(w, dtype=float)
        c = math.log(self.normalization)
        if self.family == "power":
            return -self.alpha * w + c
        if self.family == "loglip":
            return -w + self.alpha * np.log1p(w) + c
        if self.family == "sqrt_mu_square":
            return 0.5 * self.base.log_at(2.0 * w) + c
        s, v = self.table
        w1 = -math.log(s[1])
        small = w >= w1
        with np.errstate(over="ignore"):
            sp = np.exp(-np.minimum(w, w1))
        val = np.log(np.maximum(self._tab_eval(np.atleast_1d(sp)), 1e-300)).reshape(np.shape(w))
        lin = math.log(v[1]) - (w - w1)
        return np.where(small, lin, val) + c

    # -- description --------------------------------------------------------
    @property
    def label(self) -> str:
        if self.family in ("power", "loglip"):
            return f"{self.family}:{self.alpha:g}"
        if self.family == "sqrt_mu_square":
            return f"from-mu:{self.base.label}"
        return f"tabulated[{len(self.table[0])}]"

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"family": self.family}
        if self.alpha is not None:
            d["alpha"] = self.alpha
        if self.base is not None:
            d["base"] = self.base.to_dict()
        if self.table is not None:
            d["table"] = [self.table[0].tolist(), self.table[1].tolist()]
        return d

    def __repr__(self):
        return f"ModulusSpec({self.label})"


def power(alpha: float) -> ModulusSpec:
    return ModulusSpec("power", alpha=float(alpha))


def log_lipschitz(alpha: float) -> ModulusSpec:
    return ModulusSpec("loglip", alpha=float(alpha))


def tabulated(s, values) -> ModulusSpec:
    return ModulusSpec("tabulated", table=(np.asarray(s, float), np.asarray(values, float)))


def derive_omega(mu: ModulusSpec) -> ModulusSpec:
    """The space modulus omega(s) = sqrt(mu(s**2))."""
    return ModulusSpec("sqrt_mu_square", base=mu)


def parse_modulus(text: str) -> ModulusSpec:
    """Parse ``power:0.5``, ``loglip:1`` or ``from-mu:loglip:1``."""
    parts = text.strip().split(":")
    if parts[0] in ("from-mu", "omega-of", "sqrt"):
        return derive_omega(parse_modulus(":".join(parts[1:])))
    if len(parts) != 2:
        raise DomainError(f"cannot parse modulus {text!r}; expected family:alpha")
    fam = _ALIASES.get(parts[0], parts[0])
    try:
        alpha = float(parts[1])
    except ValueError as exc:
        raise DomainError(f"bad exponent in {text!r}") from exc
    return ModulusSpec(fam, alpha=alpha)


def modulus_from_dict(d: dict) -> ModulusSpec:
    fam = _ALIASES.get(d["family"], d["family"])
    if fam == "sqrt_mu_square":
        return derive_omega(modulus_from_dict(d["base"]))
    if fam == "tabulated":
        return tabulated(*d["table"])
    return ModulusSpec(fam, alpha=float(d["alpha"]))


def eval_modulus(m: ModulusSpec, s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s_arr)) or np.any(s_arr < 0) or np.any(s_arr > 1):
        raise DomainError("modulus argument must lie in [0, 1]")
    return m(s)


# -- condition reports -----------------------------------------------------------

@dataclass
class ConditionReport:
    condition: str
    verdict: str          # pass | fail | inconclusive
    constant: float
    witness: Any
    params: dict
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {"condition": self.condition, "verdict": self.verdict,
                "constant": _jsonable(self.constant), "witness": _jsonable(self.witness),
                "params": _jsonable(self.params), "details": _jsonable(self.details)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    return x


# Divergence heuristic thresholds for check_osgood.
OSGOOD_BIG = 50.0
OSGOOD_DIVERGE_EXPONENT = 1.05
OSGOOD_CONVERGE_EXPONENT = 1.25
OSGOOD_WINDOW = 10


def _osgood_integrand(mu: ModulusSpec):
    # ds/mu(s) with s = exp(-w): exp(-w - log mu(exp(-w))) dw
    return lambda w: float(np.exp(-w - mu.log_at(w)))


def check_osgood(mu: ModulusSpec, k_max: int = 60) -> ConditionReport:
    """Classify divergence of int_0^1 ds/mu(s) from partial integrals.

    Computes I_k = int_{2^-k}^1 ds/mu(s), k = 1..k_max.  The integrand in
    w = -log s is g(w) = exp(-w)/mu(exp(-w)); its local decay exponent is
    estimated from the slope of 1/(-d log g/dw) over the last ``OSGOOD_WINDOW``
    dyadic levels (for g ~ c*(w + w0)^-p that slope is exactly 1/p).  The
    integral is declared divergent (pass) when I_kmax > 50, when g stops
    decaying, or when p <= 1.05; convergent (fail) when p >= 1.25; otherwise
    inconclusive.
    """
    if k_max < 8:
        raise DomainError("k_max must be >= 8")
    g = _osgood_integrand(mu)
    ln2 = math.log(2.0)
    partial = []
    total = 0.0
    quad_failed = None
    for k in range(1, k_max + 1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            val, err, *rest = integrate.quad(g, (k - 1) * ln2, k * ln2, epsabs=0.0,
                                             epsrel=1e-12, limit=200, full_output=1)
        if not math.isfinite(val) or (len(rest) >= 2 and err > 1e-6 * max(abs(val), 1e-300)):
            quad_failed = k
            break
        total += val
        partial.append(total)
    params = {"k_max": k_max, "family": mu.label}
    if quad_failed is not None:
        return ConditionReport("osgood", "inconclusive", float("nan"), quad_failed, params,
                               {"partial_integrals": partial,
                                "diagnostic": f"quadrature failed on dyadic level {quad_failed}"})

    w_end = k_max * ln2
    ws = w_end - ln2 * np.arange(OSGOOD_WINDOW, -1, -1)
    dw = 1e-3

    def neg_log_g(w):
        return w + mu.log_at(w)

    lam = (neg_log_g(ws + dw) - neg_log_g(ws - dw)) / (2 * dw)
    g_end = g(w_end)
    details = {"partial_integrals": partial, "decay_rate_end": float(lam[-1])}
    if partial[-1] > OSGOOD_BIG:
        verdict, exponent = "pass", 0.0
    elif lam[-1] <= 1e-12:
        verdict, exponent = "pass", 0.0
    else:
        h = 1.0 / np.maximum(lam, 1e-300)
        slope = np.polyfit(ws, h, 1)[0]
        exponent = math.inf if slope <= 1e-9 * max(1.0, abs(h[-1])) else 1.0 / slope
        if exponent <= OSGOOD_DIVERGE_EXPONENT:
            verdict = "pass"
        elif exponent >= OSGOOD_CONVERGE_EXPONENT:
            verdict = "fail"
            hb = 1.0 / lam[-1]
            tail = g_end * hb if math.isinf(exponent) else g_end * exponent * hb / (exponent - 1.0)
            details["tail_estimate"] = tail
            details["limit_estimate"] = partial[-1] + tail
        else:
            verdict = "inconclusive"
    details["decay_exponent"] = exponent
    return ConditionReport("osgood", verdict, partial[-1], k_max, params, details)


def _dini_ratio(omega: ModulusSpec, j: int) -> tuple[float, bool]:
    # int_0^h omega(t)/t dt with t = exp(-w), h = 2^-j
    w0 = j * math.log(2.0)
    f = lambda w: float(np.exp(omega.log_at(w)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err, info, *msg = integrate.quad(f, w0, np.inf, epsabs=0.0, epsrel=1e-10,
                                              limit=400, full_output=1)
    ok = math.isfinite(val) and not msg and err <= 1e-6 * max(val, 1e-300)
    return val / float(np.exp(omega.log_at(w0))), ok


def check_dini(omega: ModulusSpec, q_max: int = 60) -> ConditionReport:
    ratios, ok_all = [], True
    for j in range(0, q_max + 1):
        r, ok = _dini_ratio(omega, j)
        ok_all &= ok
        ratios.append(r if ok else math.inf)
    ratios = np.asarray(ratios)
    worst = int(np.argmax(ratios))
    sup = float(ratios[worst])
    verdict = "pass" if ok_all and math.isfinite(sup) else "fail"
    return ConditionReport("dini", verdict, sup, {"h": 2.0 ** -worst},
                           {"q_max": q_max, "family": omega.label},
                           {"ratios": ratios})


def check_techcond1(omega: ModulusSpec, q_max: int = 60) -> ConditionReport:
    ln2 = math.log(2.0)

    def sup_upto(qm):
        best, arg = 0.0, None
        for q in range(2, qm + 1):
            p = np.arange(1, q)
            lr = omega.log_at(q * ln2) - omega.log_at(p * ln2) - omega.log_at((q - p) * ln2)
            i = int(np.argmax(lr))
            if lr[i] > best or arg is None:
                best, arg = float(lr[i]), (int(p[i]), q)
        return math.exp(best), arg

    sup, arg = sup_upto(q_max)
    sup_half, _ = sup_upto(max(2, q_max // 2))
    growth = sup / sup_half
    verdict = "pass" if math.isfinite(sup) and growth <= 1.25 else "fail"
    return ConditionReport("techcond1", verdict, sup, {"p": arg[0], "q": arg[1]},
                           {"q_max": q_max, "family": omega.label},
                           {"sup_at_half_range": sup_half, "growth": growth})


def check_techcond2(omega: ModulusSpec, s: float, q_max: int = 60) -> ConditionReport:
    """Ratio test for sum_k 2^{(1-s)k} omega(2^-k), limit ratio by Richardson."""
    if not 0 < s < 1:
        raise DomainError("s must lie in (0, 1)")
    k = np.arange(0, q_max + 1)
    lt = (1 - s) * k * math.log(2.0) + omega.log_at(k * math.log(2.0))
    terms = np.exp(lt)
    sums = np.cumsum(terms)
    lr = np.diff(lt)
    r_end = math.exp(lr[-1])
    r_mid = math.exp(lr[(len(lr) - 1) // 2])
    r_lim = 2 * r_end - r_mid
    params = {"s": s, "q_max": q_max, "family": omega.label}
    details = {"partial_sums": sums, "ratio_end": r_end, "ratio_limit": r_lim}
    if r_lim < 1 - 1e-3 and r_end < 1:
        tail = terms[-1] * r_end / (1 - r_end)
        details["tail_bound"] = tail
        return ConditionReport("techcond2", "pass", float(sums[-1] + tail), q_max, params, details)
    if r_lim > 1 + 1e-3 or terms[-1] >= terms[len(terms) // 2] * (1 - 1e-6):
        # terms do not decay: the series diverges
        return ConditionReport("techcond2", "fail", float(sums[-1]), q_max, params, details)
    return ConditionReport("techcond2", "inconclusive", float(sums[-1]), q_max, params, details)


def check_omega_conditions(omega: ModulusSpec, s_values=(0.25, 0.5, 0.75),
                           q_max: int = 60) -> list[ConditionReport]:
    if q_max < 10:
        raise DomainError("q_max must be >= 10")
    reports = [check_dini(omega, q_max), check_techcond1(omega, q_max)]
    reports += [check_techcond2(omega, float(s), q_max) for s in s_values]
    return reports


def _sample_points(k_max: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = np.concatenate([2.0 ** -np.arange(0, k_max + 1), rng.uniform(0, 1, 32)])
    return np.unique(pts)


def check_concavity(m: ModulusSpec, k_max: int = 40, seed: int = 0, rtol: float = 1e-10) -> ConditionReport:
    """Monotonicity, midpoint concavity and the concavity consequences on samples."""
    s = _sample_points(k_max, seed)
    v = m(s)
    viol = {}
    viol["monotone"] = float(np.max(np.maximum(0.0, v[:-1] - v[1:]) / v[1:]))
    S, Tm = np.meshgrid(s, s, indexing="ij")
    mid = m(0.5 * (S + Tm))
    avg = 0.5 * (m(S) + m(Tm))
    viol["midpoint"] = float(np.max(np.maximum(0.0, avg - mid) / np.maximum(avg, 1e-300)))
    ratio = v / s
    viol["mu_over_s"] = float(np.max(np.maximum(0.0, ratio[1:] - ratio[:-1]) / ratio[:-1]))
    viol["lower_linear"] = float(np.max(np.maximum(0.0, m(1.0) * s - v) / s))
    worst = max(viol, key=viol.get)
    verdict = "pass" if viol[worst] <= rtol else "fail"
    return ConditionReport("concavity", verdict, viol[worst], worst,
                           {"k_max": k_max, "seed": seed, "rtol": rtol, "family": m.label},
                           {"violations": viol})


def check_duplication(m: ModulusSpec, k_max: int = 40) -> ConditionReport:
    """sup mu(2s)/mu(s) over dyadic s = 2^-k, k = 1..k_max."""
    k = np.arange(1, k_max + 1)
    lr = m.log_at((k - 1) * math.log(2.0)) - m.log_at(k * math.log(2.0))
    i = int(np.argmax(lr))
    c = math.exp(lr[i])
    verdict = "pass" if math.isfinite(c) else "fail"
    return ConditionReport("duplication", verdict, c, {"s": 2.0 ** -int(k[i])},
                           {"k_max": k_max, "family": m.label})


# -- seminorms on grid functions ------------------------------------------------

def modulus_seminorm(u: GridFunction, omega: ModulusSpec, axis: str = "space") -> float:
    """sup over sample pairs with 0 < |x - y| < 1 of |u(x) - u(y)| / omega(|x - y|).

    ``axis="space"`` uses the periodic spatial grid (pairs at every real
    separation are realized by cyclic shifts); ``axis="time"`` uses the
    non-periodic time axis and takes the L^inf norm over space inside.
    """
    if axis == "space":
        h = u.dx
        if h >= 1:
            raise DomainError("grid spacing must be < 1")
        J = int(math.ceil(1.0 / h)) - 1
        best = 0.0
        axes = tuple(range(u.samples.ndim - u.n, u.samples.ndim))
        if u.n == 1:
            shifts = [(j,) for j in range(1, J + 1)]
        else:
            shifts = [(a, b) for a in range(-J, J + 1) for b in range(0, J + 1)
                      if (b > 0 or a > 0) and (a * a + b * b) * h * h < 1.0]
        for sh in shifts:
            d = h * math.sqrt(sum(c * c for c in sh))
            if d >= 1.0:
                continue
            diff = np.max(np.abs(np.roll(u.samples, sh, axis=axes) - u.samples))
            best = max(best, float(diff) / float(omega(d)))
        return best
    if axis == "time":
        if not u.has_time:
            raise DomainError("time seminorm needs a time axis")
        h = u.dt
        if h >= 1:
            raise DomainError("time spacing must be < 1")
        axes = tuple(range(1, u.samples.ndim))
        best = 0.0
        J = min(u.M - 1, int(math.ceil(1.0 / h)) - 1)
        for j in range(1, J + 1):
            d = j * h
            if d >= 1.0:
                break
            diff = np.max(np.abs(u.samples[j:] - u.samples[:-j]))
            best = max(best, float(diff) / float(omega(d)))
        return best
    raise DomainError(f"unknown axis {axis!r}")


def modulus_norm(u: GridFunction, omega: ModulusSpec, axis: str = "space") -> float:
    """L^inf norm plus :func:`modulus_seminorm`."""
    return float(np.max(np.abs(u.samples))) + modulus_seminorm(u, omega, axis)
