"""Periodic grid functions, FFT helpers and the grid-function file format.

A :class:`GridFunction` holds samples of a function on the torus
``[0, L)^n`` (n = 1 or 2) on a uniform ``N`` (or ``N x N``) grid, optionally
with a leading time axis of ``M`` uniform samples on ``[0, T]`` (endpoints
included).  All spectral operations act on the trailing spatial axes, so a
time-dependent field is processed for every time sample at once.
"""

from __future__ import annotations

import base64
import io
import json
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.fft

from .errors import DomainError, GridMismatchError

_WORKERS = int(os.environ.get("LPCARLEMAN_THREADS", "1") or 1)


def set_threads(n: int) -> None:
    """Set the worker count used by the FFT backend."""
    global _WORKERS
    _WORKERS = max(1, int(n))


def get_threads() -> int:
    return _WORKERS


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class GridFunction:
    samples: np.ndarray
    n: int = 1
    L: float = 2 * np.pi
    T: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if self.n not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {self.n}")
        expected_ndim = self.n + (1 if self.T is not None else 0)
        if arr.ndim != expected_ndim:
            raise DomainError(
                f"samples have {arr.ndim} axes, expected {expected_ndim} "
                f"(n={self.n}, time axis={'yes' if self.T is not None else 'no'})"
            )
        space = arr.shape[-self.n:]
        if len(set(space)) != 1 or not _is_pow2(space[0]):
            raise DomainError(f"spatial grid must be N^n with N a power of two, got {space}")
        if self.T is not None:
            if self.T <= 0 or arr.shape[0] < 2:
                raise DomainError("time axis needs T > 0 and at least two samples")
        if self.L <= 0:
            raise DomainError("period L must be positive")
        if np.iscomplexobj(arr):
            arr = arr.astype(np.complex128, copy=True)
        else:
            arr = arr.astype(np.float64, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "L", float(self.L))
        if self.T is not None:
            object.__setattr__(self, "T", float(self.T))

    # -- metadata -------------------------------------------------------
    @property
    def N(self) -> int:
        return self.samples.shape[-1]

    @property
    def has_time(self) -> bool:
        return self.T is not None

    @property
    def M(self) -> int | None:
        return self.samples.shape[0] if self.has_time else None

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.samples)

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dt(self) -> float | None:
        return None if not self.has_time else self.T / (self.M - 1)

    @cached_property
    def times(self) -> np.ndarray | None:
        if not self.has_time:
            return None
        return np.linspace(0.0, self.T, self.M)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.N) * self.dx
        if self.n == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def same_grid(self, other: "GridFunction") -> bool:
        return (self.n == other.n and self.N == other.N and self.L == other.L)

    def require_same_grid(self, other: "GridFunction") -> None:
        if not self.same_grid(other):
            raise GridMismatchError(
                f"grid mismatch: (n={self.n}, N={self.N}, L={self.L}) vs "
                f"(n={other.n}, N={other.N}, L={other.L})"
            )
        if self.has_time and other.has_time and (self.M != other.M or self.T != other.T):
            raise GridMismatchError("time axes differ")

    # -- construction helpers ------------------------------------------
    def with_samples(self, samples: np.ndarray, T: float | None | str = "same") -> "GridFunction":
        return GridFunction(samples, n=self.n, L=self.L, T=self.T if T == "same" else T)

    def at_time(self, i: int) -> "GridFunction":
        if not self.has_time:
            raise DomainError("grid function has no time axis")
        return GridFunction(self.samples[i], n=self.n, L=self.L)

    def real_part(self) -> "GridFunction":
        return self.with_samples(self.samples.real)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self.require_same_grid(other)
            T = self.T if self.has_time else other.T
            return GridFunction(self.samples + other.samples, n=self.n, L=self.L, T=T)
        return self.with_samples(self.samples + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return self + (-1.0) * other
        return self.with_samples(self.samples - other)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            raise TypeError("use lp_core.multiply for products of grid functions")
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_samples(-self.samples)

    # -- norms ------------------------------------------------------------
    def spectrum(self) -> np.ndarray:
        return fft_space(self.samples, self.n)

    def l2_norm(self):
        """L^2(torus) norm; an array over time when a time axis is present."""
        axes = tuple(range(-self.n, 0))
        sq = np.sum(np.abs(self.samples) ** 2, axis=axes) * self.dx ** self.n
        return np.sqrt(sq)

    def linf_norm(self):
        axes = tuple(range(-self.n, 0))
        return np.max(np.abs(self.samples), axis=axes)


def fft_space(arr: np.ndarray, n: int) -> np.ndarray:
    return scipy.fft.fftn(arr, axes=tuple(range(-n, 0)), workers=_WORKERS)


def ifft_space(arr: np.ndarray, n: int) -> np.ndarray:
    return scipy.fft.ifftn(arr, axes=tuple(range(-n, 0)), workers=_WORKERS)


@lru_cache(maxsize=64)
def wavenumbers(N: int, L: float, n: int) -> tuple[np.ndarray, ...]:
    """Angular wavenumbers 2*pi*m/L on the FFT grid, broadcastable per axis."""
    k = np.fft.fftfreq(N, d=1.0 / N) * (2 * np.pi / L)
    k.setflags(write=False)
    if n == 1:
        return (k,)
    kx = k[:, None].copy()
    ky = k[None, :].copy()
    kx.setflags(write=False)
    ky.setflags(write=False)
    return (kx, ky)


@lru_cache(maxsize=64)
def radial_wavenumber(N: int, L: float, n: int) -> np.ndarray:
    ks = wavenumbers(N, L, n)
    r = np.sqrt(sum(k ** 2 for k in ks)) * np.ones((N,) * n)
    r.setflags(write=False)
    return r


def nyquist(N: int, L: float) -> float:
    """Largest resolved angular wavenumber, pi*N/L."""
    return np.pi * N / L


def gradient(u: GridFunction) -> list[GridFunction]:
    """Spectral gradient (multiplier i*xi), one grid function per axis."""
    uh = u.spectrum()
    out = []
    for k in wavenumbers(u.N, u.L, u.n):
        d = ifft_space(1j * k * uh, u.n)
        out.append(u.with_samples(d.real if u.is_real else d))
    return out


def grad_linf(u: GridFunction):
    """sup_x |grad u(x)| (Euclidean length of the gradient vector)."""
    g = gradient(u)
    mag2 = sum(np.abs(c.samples) ** 2 for c in g)
    axes = tuple(range(-u.n, 0))
    return np.sqrt(np.max(mag2, axis=axes))


# -- finite differences in time ------------------------------------------------

@lru_cache(maxsize=64)
def fd_weights(offsets: tuple[int, ...]) -> np.ndarray:
    """First-derivative weights on integer offsets (unit spacing), exact for polynomials."""
    off = np.asarray(offsets, dtype=float)
    k = len(off)
    V = np.vander(off, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[1] = 1.0
    w = np.linalg.solve(V, rhs)
    w.setflags(write=False)
    return w


def time_derivative(x: np.ndarray, dt: float, order: int = 4) -> np.ndarray:
    """d/dt along axis 0 with centered differences of the given (even) order.

    The first and last order/2 samples use one-sided stencils of the same order.
    """
    if order % 2 or order < 2:
        raise DomainError("order must be an even integer >= 2")
    M = x.shape[0]
    r = order // 2
    if M < order + 1:
        raise DomainError(f"need at least {order + 1} time samples")
    out = np.empty(x.shape, dtype=np.result_type(x.dtype, np.float64))
    wc = fd_weights(tuple(range(-r, r + 1)))
    acc = np.zeros_like(out[r:M - r])
    for j, wj in zip(range(-r, r + 1), wc):
        if wj != 0.0:
            acc += wj * x[r + j:M - r + j]
    out[r:M - r] = acc
    for i in range(r):
        wf = fd_weights(tuple(range(-i, order + 1 - i)))
        out[i] = np.tensordot(wf, x[0:order + 1], axes=(0, 0))
        wb = fd_weights(tuple(range(i - order, i + 1)))
        out[M - 1 - i] = np.tensordot(wb, x[M - order - 1:M], axes=(0, 0))
    return out / dt


# -- random band-limited fields ---------------------------------------------

def random_field(N: int, rng: np.random.Generator, *, n: int = 1, L: float = 2 * np.pi,
                 k_band: float = 8.0, omega=None, real: bool = True) -> GridFunction:
    """Random band-limited field with modes |k| <= k_band (angular wavenumber).

    Coefficients are drawn for integer mode indices in a fixed order that does
    not depend on N, so the same generator state yields the same continuous
    function on every grid that resolves the band.  The amplitude of mode k is
    omega(1/(1+|k|)) * (1+|k|)^(-n/2) (omega = identity when not given), which
    keeps the C^omega and H^{-s}_Omega norms finite.
    """
    unit = 2 * np.pi / L
    m = int(np.floor(k_band / unit))
    if 2 * m >= N // 2:
        raise DomainError(f"band |k| <= {k_band} is not resolved on N={N}")
    idx = np.arange(-m, m + 1)
    if n == 1:
        modes = idx[:, None]
    else:
        mx, my = np.meshgrid(idx, idx, indexing="ij")
        modes = np.stack([mx.ravel(), my.ravel()], axis=1)
    kmag = np.sqrt(np.sum((modes * unit) ** 2, axis=1))
    keep = kmag <= k_band + 1e-12
    modes, kmag = modes[keep], kmag[keep]
    z = rng.standard_normal(len(modes)) + 1j * rng.standard_normal(len(modes))
    decay = 1.0 / (1.0 + kmag)
    amp = decay if omega is None else omega(decay)
    coeff = z * amp * (1.0 + kmag) ** (-n / 2)
    spec = np.zeros((N,) * n, dtype=np.complex128)
    for (c, md) in zip(coeff, modes):
        spec[tuple(int(x) % N for x in md)] += c
    if real:
        flipped = spec
        for ax in range(n):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        spec = 0.5 * (spec + np.conj(flipped))
    vals = ifft_space(spec, n) * N ** n
    return GridFunction(vals.real if real else vals, n=n, L=L)


def mode(N: int, k, *, n: int = 1, L: float = 2 * np.pi, amplitude: complex = 1.0) -> GridFunction:
    """Single Fourier mode amplitude*exp(i k.x), k given in integer mode units."""
    ks = np.atleast_1d(k)
    x = np.arange(N) * (L / N)
    unit = 2 * np.pi / L
    if n == 1:
        vals = amplitude * np.exp(1j * unit * ks[0] * x)
    else:
        X, Y = np.meshgrid(x, x, indexing="ij")
        vals = amplitude * np.exp(1j * unit * (ks[0] * X + ks[1] * Y))
    return GridFunction(vals, n=n, L=L)


# -- file format --------------------------------------------------------------

def save_grid_function(u: GridFunction, path: str | Path, payload: str = "base64") -> None:
    """Write ``u`` as JSON: {"header": {n, N, L, T, M, dtype}, "encoding", "payload"}."""
    header = {
        "n": u.n, "N": u.N, "L": u.L, "T": u.T, "M": u.M,
        "dtype": "complex128" if not u.is_real else "float64",
    }
    data = np.ascontiguousarray(u.samples)
    if payload == "base64":
        body = base64.b64encode(data.astype("<" + data.dtype.str[1:]).tobytes()).decode("ascii")
    elif payload == "csv":
        flat = data.reshape(-1)
        buf = io.StringIO()
        if u.is_real:
            np.savetxt(buf, flat, fmt="%.17g")
        else:
            np.savetxt(buf, np.column_stack([flat.real, flat.imag]), fmt="%.17g", delimiter=",")
        body = buf.getvalue()
    else:
        raise DomainError(f"unknown payload encoding {payload!r}")
    Path(path).write_text(json.dumps({"header": header, "encoding": payload, "payload": body}))


def load_grid_function(path: str | Path) -> GridFunction:
    doc = json.loads(Path(path).read_text())
    h = doc["header"]
    shape = ((h["M"],) if h.get("T") is not None else ()) + (h["N"],) * h["n"]
    dtype = np.dtype(h["dtype"]).newbyteorder("<")
    if doc["encoding"] == "base64":
        arr = np.frombuffer(base64.b64decode(doc["payload"]), dtype=dtype).reshape(shape)
    elif doc["encoding"] == "csv":
        raw = np.loadtxt(io.StringIO(doc["payload"]), delimiter="," if dtype.kind == "c" else None,
                         ndmin=2 if dtype.kind == "c" else 1)
        arr = (raw[:, 0] + 1j * raw[:, 1] if dtype.kind == "c" else raw).reshape(shape)
    else:
        raise DomainError(f"unknown payload encoding {doc['encoding']!r}")
    return GridFunction(np.array(arr), n=h["n"], L=h["L"], T=h.get("T"))
