"""Both sides of the conjugated Carleman inequality on concrete data.

For a test function v(t, x) supported in t <= T/2 and a weight table for mu,

    L_gamma v = d_t v + sum_jk d_j(a_jk d_k v) + Phi'(gamma (T - t)) v

    lhs       = int_0^{T/2} ||L_gamma v||^2_{H^-s} dt
    rhs_grad  = int_0^{T/2} ||grad v||^2_{H^-s_Omega} dt
    rhs_l2    = int_0^{T/2} ||v||^2_{L^2} dt
    ratio     = lhs / (gamma^{1/4} (rhs_grad + gamma^{3/4} rhs_l2))

Spatial derivatives are spectral, products use padded multiplication,
d_t uses centered finite differences and time integrals composite Simpson.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigError, DegenerateInputError, DomainError, TableRangeError
from .grid import (GridFunction, gradient, ifft_space, radial_wavenumber, random_field,
                   time_derivative)
from .lp_core import SobolevSpec, _delta, _s, dyadic_sobolev_norm_sq, q_max, require_resolved
from .modulus import ModulusSpec, _jsonable, derive_omega, modulus_seminorm
from .paraproduct import multiply
from .weight import WeightTable

RATIO_FLOOR = 1e-3
# (gradient exponent, L2 exponent) pairs: the proved one first, then stronger variants
EXPONENTS = ((0.25, 1.0), (0.5, 1.0), (1.0, 1.0), (0.25, 1.5))


# -- data -------------------------------------------------------------------------

def time_bump(t, T: float):
    """exp(4 - 1/(sigma (1 - sigma))) with sigma = 2t/T on (0, T/2), zero elsewhere; max 1."""
    t = np.asarray(t, dtype=float)
    sig = 2.0 * t / T
    out = np.zeros_like(sig)
    m = (sig > 0) & (sig < 1)
    sm = sig[m]
    out[m] = np.exp(4.0 - 1.0 / (sm * (1.0 - sm)))
    return out


def time_bump_prime(t, T: float):
    t = np.asarray(t, dtype=float)
    sig = 2.0 * t / T
    out = np.zeros_like(sig)
    m = (sig > 0) & (sig < 1)
    sm = sig[m]
    p = sm * (1.0 - sm)
    out[m] = np.exp(4.0 - 1.0 / p) * (1.0 - 2.0 * sm) / p ** 2 * (2.0 / T)
    return out


def bump_mode_field(N: int, M: int, T: float, modes, *, n: int = 1, L: float = 2 * np.pi,
                    real: bool = False) -> GridFunction:
    """v(t, x) = bump(t) sum_j c_j exp(i k_j.x); ``modes`` is a list of (k, c) with k in integer units."""
    t = np.linspace(0.0, T, M)
    g = time_bump(t, T)
    x = np.arange(N) * (L / N)
    unit = 2 * np.pi / L
    if n == 1:
        sp = sum(complex(c) * np.exp(1j * unit * np.atleast_1d(k)[0] * x) for k, c in modes)
    else:
        X, Y = np.meshgrid(x, x, indexing="ij")
        sp = sum(complex(c) * np.exp(1j * unit * (k[0] * X + k[1] * Y)) for k, c in modes)
    sp = np.asarray(sp, dtype=np.complex128)
    if real:
        sp = sp.real
    vals = g.reshape((M,) + (1,) * n) * sp[None]
    return GridFunction(vals, n=n, L=L, T=T)


def bump_random_field(N: int, M: int, T: float, rng: np.random.Generator, *, n: int = 1,
                      L: float = 2 * np.pi, k_band: float = 8.0, omega=None) -> GridFunction:
    """v(t, x) = bump(t) f(x) with f a seeded real band-limited field."""
    f = random_field(N, rng, n=n, L=L, k_band=k_band, omega=omega)
    g = time_bump(np.linspace(0.0, T, M), T)
    return GridFunction(g.reshape((M,) + (1,) * n) * f.samples[None], n=n, L=L, T=T)


@dataclass(eq=False)
class CoefficientField:
    """Symmetric, real, uniformly elliptic a_jk(t, x), each a grid function with time axis."""

    a: list[list[GridFunction]]
    a0: float
    constant_identity: bool = False
    _norms: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = len(self.a)
        if n not in (1, 2) or any(len(row) != n for row in self.a):
            raise ConfigError("coefficient matrix must be n x n with n in {1, 2}")
        ref = self.a[0][0]
        if not ref.has_time or ref.n != n:
            raise ConfigError("coefficients need a time axis and spatial dimension n")
        for row in self.a:
            for c in row:
                ref.require_same_grid(c)
                if not c.is_real:
                    raise ConfigError("coefficients must be real")
        for j in range(n):
            for k in range(j + 1, n):
                if not np.array_equal(self.a[j][k].samples, self.a[k][j].samples):
                    raise ConfigError("coefficient matrix must be symmetric")
        if not 0 < self.a0 <= 1:
            raise ConfigError("ellipticity constant a0 must lie in (0, 1]")
        lam = self.min_eigenvalue()
        if lam < self.a0 * (1 - 1e-12):
            raise ConfigError(f"ellipticity fails: smallest eigenvalue {lam:.6g} < a0 = {self.a0:g}")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def grid(self) -> GridFunction:
        return self.a[0][0]

    def min_eigenvalue(self) -> float:
        if self.n == 1:
            return float(np.min(self.a[0][0].samples))
        a, b, d = self.a[0][0].samples, self.a[0][1].samples, self.a[1][1].samples
        tr, det = a + d, a * d - b * b
        return float(np.min(0.5 * tr - np.sqrt(np.maximum(0.25 * tr ** 2 - det, 0.0))))

    def time_seminorm(self, mu: ModulusSpec) -> float:
        key = ("time", mu.label)
        if key not in self._norms:
            self._norms[key] = max(modulus_seminorm(c, mu, "time") for row in self.a for c in row)
        return self._norms[key]

    def space_norm(self, omega: ModulusSpec) -> float:
        key = ("space", omega.label)
        if key not in self._norms:
            self._norms[key] = max(float(np.max(np.abs(c.samples))) + modulus_seminorm(c, omega, "space")
                                   for row in self.a for c in row)
        return self._norms[key]

    def slice_time(self, stop: int) -> "CoefficientField":
        T = self.grid.T * (stop - 1) / (self.grid.M - 1)
        a = [[c.with_samples(c.samples[:stop], T=T) for c in row] for row in self.a]
        return CoefficientField(a, self.a0, self.constant_identity)


def identity_coefficients(N: int, M: int, T: float, *, n: int = 1, L: float = 2 * np.pi) -> CoefficientField:
    one = GridFunction(np.ones((M,) + (N,) * n), n=n, L=L, T=T)
    zero = one * 0.0
    a = [[one if j == k else zero for k in range(n)] for j in range(n)]
    return CoefficientField(a, 1.0, constant_identity=True)


def constant_coefficients(matrix, N: int, M: int, T: float, *, L: float = 2 * np.pi,
                          a0: float | None = None) -> CoefficientField:
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = A.shape[0]
    if n == 1 and A[0, 0] == 1.0:
        return identity_coefficients(N, M, T, n=1, L=L)
    shape = (M,) + (N,) * n
    a = [[GridFunction(np.full(shape, A[j, k]), n=n, L=L, T=T) for k in range(n)] for j in range(n)]
    lam = float(np.min(np.linalg.eigvalsh(0.5 * (A + A.T))))
    return CoefficientField(a, min(1.0, lam) if a0 is None else a0)


def sinusoidal_coefficients(N: int, M: int, T: float, profile: ModulusSpec, *, n: int = 1,
                            L: float = 2 * np.pi, amplitude: float = 0.5,
                            t0: float = 0.25) -> CoefficientField:
    """a_11 = 1 + amplitude sin(x_1) w(t), w(t) = profile(|t - t0 T| / T); other entries identity.

    w has exactly the regularity of ``profile`` at t = t0 T, and |w| <= 1, so
    a0 = 1 - amplitude.
    """
    if not 0 <= amplitude < 1:
        raise ConfigError("amplitude must lie in [0, 1)")
    t = np.linspace(0.0, T, M)
    w = profile(np.minimum(np.abs(t - t0 * T) / T, 1.0))
    x = np.arange(N) * (L / N)
    shape = (M,) + (N,) * n
    if n == 1:
        a11 = 1.0 + amplitude * np.sin(x)[None, :] * w[:, None]
    else:
        a11 = (1.0 + amplitude * np.sin(x)[None, :, None] * w[:, None, None]) * np.ones(shape)
    a11 = GridFunction(a11, n=n, L=L, T=T)
    if n == 1:
        return CoefficientField([[a11]], 1.0 - amplitude)
    one = GridFunction(np.ones(shape), n=n, L=L, T=T)
    zero = one * 0.0
    return CoefficientField([[a11, zero], [zero, one]], 1.0 - amplitude)


@dataclass(eq=False)
class CarlemanConfig:
    s: float
    mu: ModulusSpec
    weight: WeightTable
    gammas: list[float]
    T: float
    v: GridFunction
    omega: ModulusSpec | None = None
    floor: float = RATIO_FLOOR
    fd_order: int = 4
    zero_order: GridFunction | None = None   # exploratory c*v term, outside the verified estimate
    check_resolved: bool = True

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ConfigError("s must lie in (0, 1)")
        if self.omega is None:
            self.omega = derive_omega(self.mu)
        elif self.omega.label != derive_omega(self.mu).label:
            raise ConfigError("omega must be derived from mu as sqrt(mu(s^2))")
        if self.weight.mu.label != self.mu.label:
            raise ConfigError("weight table was built for a different modulus")
        v = self.v
        if not v.has_time or abs(v.T - self.T) > 1e-12 * self.T:
            raise ConfigError("v needs a time axis on [0, T]")
        if (v.M - 1) % 2:
            raise ConfigError("M must be odd so that T/2 is a time sample")
        t = v.times
        late = t > self.T / 2 * (1 + 1e-12)
        if np.any(v.samples[late] != 0):
            raise ConfigError("v must vanish identically for t > T/2")
        if not self.gammas or any(g <= 0 for g in self.gammas):
            raise ConfigError("gamma sweep must be a non-empty list of positive values")
        need = max(self.gammas) * self.T
        if need > self.weight.tau_max * (1 + 1e-12):
            raise TableRangeError(f"gamma*T = {need:g} exceeds the weight table range "
                                  f"{self.weight.tau_max:g}")
        if self.check_resolved and np.any(v.samples != 0):
            require_resolved(v)

    @property
    def half(self) -> int:
        """Number of time samples in [0, T/2]."""
        return (self.v.M - 1) // 2 + 1


# -- operator -----------------------------------------------------------------------

def elliptic_part(coeffs: CoefficientField, v: GridFunction) -> GridFunction:
    """sum_jk d_j(a_jk d_k v)."""
    if coeffs.constant_identity:
        k2 = radial_wavenumber(v.N, v.L, v.n) ** 2
        vals = ifft_space(-k2 * v.spectrum(), v.n)
        return v.with_samples(vals.real if v.is_real else vals)
    dv = gradient(v)
    out = None
    for j in range(coeffs.n):
        flux = None
        for k in range(coeffs.n):
            a = coeffs.a[j][k]
            if not np.any(a.samples):
                continue
            term = multiply(a, dv[k])
            flux = term if flux is None else flux + term
        if flux is None:
            continue
        dj = gradient(flux)[j]
        out = dj if out is None else out + dj
    return v * 0.0 if out is None else out


def _weight_values(wt: WeightTable, gamma: float, t: np.ndarray, T: float) -> np.ndarray:
    return wt.Phi_prime_at(np.maximum(gamma * (T - t), 0.0))


def _bcast(w: np.ndarray, v: GridFunction) -> np.ndarray:
    return w.reshape((-1,) + (1,) * v.n)


def apply_conjugated_operator(coeffs: CoefficientField, wt: WeightTable, v: GridFunction,
                              gamma: float, t_index: int | None = None, *, stop: int | None = None,
                              fd_order: int = 4, zero_order: GridFunction | None = None) -> GridFunction:
    """L_gamma v on the time samples [0, stop) (all by default), or at one sample ``t_index``.

    d_t v is taken on the full time grid, so ``stop`` only limits the spatial work.
    """
    if not v.has_time:
        raise DomainError("v needs a time axis")
    coeffs.grid.require_same_grid(v)
    M = v.M
    stop = M if stop is None else stop
    dvdt = time_derivative(v.samples, v.dt, fd_order)[:stop]
    Th = v.T * (stop - 1) / (M - 1)
    vh = v.with_samples(v.samples[:stop], T=Th)
    cf = coeffs if stop == M else coeffs.slice_time(stop)
    ell = elliptic_part(cf, vh)
    w = _weight_values(wt, gamma, vh.times, v.T)
    vals = dvdt + ell.samples + _bcast(w, vh) * vh.samples
    if zero_order is not None:
        vals = vals + multiply(zero_order.with_samples(zero_order.samples[:stop], T=Th), vh).samples
    out = vh.with_samples(vals)
    if t_index is not None:
        return out.at_time(t_index)
    return out


# -- report -------------------------------------------------------------------------

@dataclass
class SweepEntry:
    gamma: float
    lhs: float
    rhs_grad: float
    rhs_l2: float

    def ratio(self, a: float = 0.25, b: float = 1.0) -> float:
        den = self.gamma ** a * self.rhs_grad + self.gamma ** b * self.rhs_l2
        return math.nan if den == 0 else self.lhs / den


def empirical_constants(gammas, ratios, floor: float) -> tuple[float | None, float | None]:
    """Smallest sweep gamma from which ratio >= floor and ratios are non-decreasing; min ratio after."""
    r = np.asarray(ratios, dtype=float)
    for i in range(len(r)):
        tail = r[i:]
        if np.all(np.isfinite(tail)) and np.all(tail >= floor) and np.all(np.diff(tail) >= 0):
            return float(gammas[i]), float(np.min(tail))
    return None, None


@dataclass
class CarlemanReport:
    entries: list[SweepEntry]
    s: float
    mu: str
    omega: str
    T: float
    floor: float
    gamma0: float | None
    C: float | None
    degenerate: bool
    exponent_study: list[dict]
    time_fd_defect: float
    coefficient_norms: dict
    diagnostics: dict[float, dict] = field(default_factory=dict)
    outside_verified_estimate: bool = False

    @property
    def ratios(self) -> list[float]:
        return [e.ratio() for e in self.entries]

    @property
    def verdict(self) -> str:
        if self.degenerate:
            return "inconclusive"
        return "pass" if self.gamma0 is not None else "fail"

    def rows(self) -> list[dict]:
        return [{"gamma": e.gamma, "lhs": e.lhs, "rhs_grad": e.rhs_grad, "rhs_l2": e.rhs_l2,
                 "ratio": e.ratio()} for e in self.entries]

    def to_dict(self) -> dict:
        return _jsonable({
            "s": self.s, "mu": self.mu, "omega": self.omega, "T": self.T, "floor": self.floor,
            "verdict": self.verdict, "gamma0": self.gamma0, "C": self.C,
            "degenerate": self.degenerate, "sweep": self.rows(),
            "exponent_study": self.exponent_study, "time_fd_defect": self.time_fd_defect,
            "coefficient_norms": self.coefficient_norms,
            "diagnostics": {str(g): d for g, d in self.diagnostics.items()},
            "outside_verified_estimate": self.outside_verified_estimate})


def _simpson(y: np.ndarray, dt: float) -> float:
    return float(simpson(y, dx=dt))


def rhs_terms(config: CarlemanConfig) -> tuple[float, float]:
    v = config.v
    vh = v.with_samples(v.samples[:config.half], T=v.T / 2)
    spec_o = SobolevSpec(-config.s, config.omega)
    g2 = sum(dyadic_sobolev_norm_sq(d, spec_o) for d in gradient(vh))
    l2 = vh.l2_norm() ** 2
    return _simpson(np.asarray(g2), v.dt), _simpson(np.asarray(l2), v.dt)


def lhs_term(config: CarlemanConfig, coeffs: CoefficientField, gamma: float) -> float:
    Lv = apply_conjugated_operator(coeffs, config.weight, config.v, gamma, stop=config.half,
                                   fd_order=config.fd_order, zero_order=config.zero_order)
    y = dyadic_sobolev_norm_sq(Lv, SobolevSpec(-config.s))
    return _simpson(np.asarray(y), config.v.dt)


def time_fd_defect(v: GridFunction, order: int) -> float:
    """Relative difference between d_t v at ``order`` and ``order + 2``: a resolution indicator."""
    a = time_derivative(v.samples, v.dt, order)
    b = time_derivative(v.samples, v.dt, order + 2)
    den = float(np.max(np.abs(b)))
    return 0.0 if den == 0 else float(np.max(np.abs(a - b))) / den


def evaluate_carleman(config: CarlemanConfig, coeffs: CoefficientField,
                      diagnostics_for: list[float] | None = None,
                      progress: Callable[[str], None] | None = None) -> CarlemanReport:
    coeffs.grid.require_same_grid(config.v)
    rg, rl = rhs_terms(config)
    entries = []
    for g in config.gammas:
        lhs = lhs_term(config, coeffs, g)
        entries.append(SweepEntry(float(g), lhs, rg, rl))
        if progress:
            progress(f"gamma={g:g} lhs={lhs:.6e}")
    degenerate = rg == 0 and rl == 0
    study = []
    for (a, b) in EXPONENTS:
        rs = [e.ratio(a, b) for e in entries]
        g0, C = (None, None) if degenerate else empirical_constants(config.gammas, rs, config.floor)
        study.append({"grad_exponent": a, "l2_exponent": b, "ratios": rs, "gamma0": g0, "C": C,
                      "holds_on_sweep_tail": g0 is not None})
    g0, C = study[0]["gamma0"], study[0]["C"]
    norms = {"time_C_mu_seminorm": coeffs.time_seminorm(config.mu),
             "space_C_omega_norm": coeffs.space_norm(config.omega), "a0": coeffs.a0}
    rep = CarlemanReport(entries, config.s, config.mu.label, config.omega.label, config.T, config.floor,
                         g0, C, degenerate, study, time_fd_defect(config.v, config.fd_order), norms,
                         outside_verified_estimate=config.zero_order is not None)
    for g in diagnostics_for or []:
        rep.diagnostics[float(g)] = block_diagnostics(config, coeffs, g).to_dict()
    return rep


def require_nondegenerate(report: CarlemanReport) -> None:
    if report.degenerate:
        raise DegenerateInputError("v vanishes: the inequality ratio is undefined")


# -- per-block diagnostics -----------------------------------------------------------

@dataclass
class BlockDiagnostics:
    gamma: float
    q: list[int]
    lhs_block: list[float]          # int ||Delta_q(L v)||^2
    lhs_micro: list[float]          # int ||d_t v_q + sum d_j(S_{q-1}a d_k v_q) + Phi' v_q||^2
    elliptic_weight: list[float]    # int ||sum d_j(S_{q-1}a d_k v_q) + Phi' v_q||^2
    gamma_phi2: list[float]         # gamma int Phi'' ||v_q||^2
    penalty: list[float]            # C3 (mu(eps)/eps 2^{2q} + 2^{4q} mu(eps)) int ||v_q||^2
    block_l2: list[float]           # int ||v_q||^2
    final1_bound: list[float]
    finalissima_ratio: list[float]  # 2^{-2sq} lhs_block / (2^{-2sq} int (gamma/2 + gamma^{1/4} Omega^2 2^{2q})||v_q||^2)
    high_fraction: list[float]      # fraction of time samples (with v_q != 0) in the high regime
    C3: float
    C4: float
    q0: int

    def to_dict(self) -> dict:
        return _jsonable(self.__dict__)


def _block_inner(x: GridFunction, y: GridFunction) -> np.ndarray:
    axes = tuple(range(-x.n, 0))
    return np.real(np.sum(x.samples * np.conj(y.samples), axis=axes)) * x.dx ** x.n


def measure_C4(coeffs: CoefficientField, v: GridFunction, q0: int = 1) -> float:
    """min over q >= q0 and t of |<sum d_j(S_{q-1}a d_k v_q), v_q>| / (a0 2^{2q} ||v_q||^2)."""
    best = math.inf
    for q in range(q0, q_max(v.N, v.L) + 1):
        vq = _delta(v, q)
        nq = np.asarray(vq.l2_norm()) ** 2
        mask = nq > 1e-12 * max(float(np.max(nq)), 1e-300)
        if not np.any(mask):
            continue
        low = _low_coeffs(coeffs, q - 1)
        form = np.abs(_block_inner(elliptic_part(low, vq), vq))
        best = min(best, float(np.min(form[mask] / (coeffs.a0 * 4.0 ** q * nq[mask]))))
    return 0.0 if not math.isfinite(best) else best


def _low_coeffs(coeffs: CoefficientField, q: int) -> CoefficientField:
    a = [[_s(c, q) if q >= 0 else c * 0.0 for c in row] for row in coeffs.a]
    # S_q a need not be elliptic, so skip the constructor checks
    out = CoefficientField.__new__(CoefficientField)
    out.a, out.a0, out.constant_identity, out._norms = a, coeffs.a0, False, {}
    return out


def block_diagnostics(config: CarlemanConfig, coeffs: CoefficientField, gamma: float,
                      q0: int = 1) -> BlockDiagnostics:
    v = config.v
    half = config.half
    dt = v.dt
    vh = v.with_samples(v.samples[:half], T=v.T / 2)
    ch = coeffs.slice_time(half)
    t = vh.times
    wt = config.weight
    tau = np.maximum(gamma * (v.T - t), 0.0)
    Pp = wt.Phi_prime_at(tau)
    Ppp = wt.Phi_double_prime_at(tau)
    C3 = coeffs.time_seminorm(config.mu)
    C4 = measure_C4(ch, vh, q0)
    Lv = apply_conjugated_operator(coeffs, wt, v, gamma, stop=half, fd_order=config.fd_order)
    dvdt = time_derivative(v.samples, dt, config.fd_order)[:half]
    spec_o = SobolevSpec(-config.s, config.omega)
    out = BlockDiagnostics(float(gamma), [], [], [], [], [], [], [], [], [], [], C3, C4, q0)
    for q in range(-1, q_max(v.N, v.L) + 1):
        vq = _delta(vh, q)
        nq = np.asarray(vq.l2_norm()) ** 2
        ell = elliptic_part(_low_coeffs(ch, q - 1), vq)
        ew = ell.samples + _bcast(Pp, vq) * vq.samples
        micro = _delta(vh.with_samples(dvdt), q).samples + ew
        axes = tuple(range(-v.n, 0))
        sq = lambda a: np.sum(np.abs(a) ** 2, axis=axes) * vh.dx ** v.n
        eps = min(2.0 ** (-2 * q), 1.0)
        mu_e = float(config.mu(eps))
        pen = C3 * (mu_e / eps * 4.0 ** q + 16.0 ** q * mu_e)
        l2 = _simpson(nq, dt)
        lhs_b = _simpson(sq(_delta(Lv, q).samples), dt)
        e_w = _simpson(sq(ew), dt)
        gp = gamma * _simpson(Ppp * nq, dt)
        Om2 = spec_o.weight(q) ** 2
        den = _simpson((gamma / 2 + gamma ** 0.25 * Om2 * 4.0 ** q) * nq, dt)
        high = Pp <= 0.5 * C4 * coeffs.a0 * 4.0 ** q
        live = nq > 1e-12 * max(float(np.max(nq)), 1e-300)
        out.q.append(q)
        out.lhs_block.append(lhs_b)
        out.lhs_micro.append(_simpson(sq(micro), dt))
        out.elliptic_weight.append(e_w)
        out.gamma_phi2.append(gp)
        out.penalty.append(pen * l2)
        out.block_l2.append(l2)
        out.final1_bound.append(e_w + gp - pen * l2)
        out.finalissima_ratio.append(math.nan if den == 0 else lhs_b / den)
        out.high_fraction.append(float(np.mean(high[live])) if np.any(live) else math.nan)
    # blocks carrying only round-off have no meaningful ratio
    top = max(out.block_l2)
    out.finalissima_ratio = [r if b > 1e-14 * top else math.nan
                             for r, b in zip(out.finalissima_ratio, out.block_l2)]
    return out


# -- conjugation identity -------------------------------------------------------------

def conjugation_defect(coeffs: CoefficientField, wt: WeightTable, v: GridFunction, gamma: float,
                       fd_order: int = 4) -> float:
    """Relative space-time L2 difference between P u and e^{-Phi/gamma} L_gamma v, u = e^{-Phi/gamma} v.

    P u = d_t u + sum d_j(a_jk d_k u), both sides evaluated with the same discrete
    operators on t in [0, T/2].
    """
    half = (v.M - 1) // 2 + 1
    t = v.times
    damp = np.exp(-wt.Phi_at(np.maximum(gamma * (v.T - t), 0.0)) / gamma)
    u = v.with_samples(_bcast(damp, v) * v.samples)
    dudt = time_derivative(u.samples, u.dt, fd_order)[:half]
    uh = u.with_samples(u.samples[:half], T=v.T / 2)
    Pu = dudt + elliptic_part(coeffs.slice_time(half), uh).samples
    Lv = apply_conjugated_operator(coeffs, wt, v, gamma, stop=half, fd_order=fd_order)
    rhs = _bcast(damp[:half], uh) * Lv.samples
    den = float(np.sqrt(np.sum(np.abs(rhs) ** 2)))
    if den == 0:
        raise DegenerateInputError("conjugated operator vanishes")
    return float(np.sqrt(np.sum(np.abs(Pu - rhs) ** 2))) / den
