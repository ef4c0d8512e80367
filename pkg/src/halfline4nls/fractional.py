"""Riemann-Liouville fractional integrals of causal time signals.

Positive orders use the product-trapezoidal rule: the integrand is replaced
by its piecewise-linear interpolant and the weakly singular kernel
``(t - s)**(alpha - 1)`` is integrated exactly on every subinterval.
Non-positive orders are realised as "integrate up, then differentiate".
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .special import gamma

__all__ = [
    "TimeSignal",
    "frac_integral",
    "frac_derivative",
    "frac_order",
    "cutoff_psi",
    "product_trapezoid_weights",
]


@dataclass(frozen=True)
class TimeSignal:
    """Uniformly sampled complex signal ``samples[n] = f(t0 + n*dt)``.

    Causal signals start at ``t0 = 0`` and are understood to vanish for t < 0.
    """

    samples: np.ndarray
    dt: float
    t0: float = 0.0
    causal: bool = True
    times: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=complex)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("TimeSignal needs a nonempty 1-D sample array")
        if not self.dt > 0:
            raise ValueError("TimeSignal.dt must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TimeSignal samples must be finite")
        if self.causal and self.t0 != 0.0:
            raise ValueError("causal signals are sampled from t0 = 0")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "times", self.t0 + self.dt * np.arange(arr.size))

    def __len__(self):
        return self.samples.size

    @classmethod
    def from_function(cls, func, T: float, n: int) -> "TimeSignal":
        t = np.linspace(0.0, T, n)
        return cls(np.asarray(func(t), dtype=complex), dt=t[1] - t[0])

    def with_samples(self, samples) -> "TimeSignal":
        return TimeSignal(samples, self.dt, self.t0, self.causal)

    def __add__(self, other: "TimeSignal") -> "TimeSignal":
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "TimeSignal") -> "TimeSignal":
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c) -> "TimeSignal":
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__


def product_trapezoid_weights(alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights for ``I_alpha f(t_m) ~ dt**alpha/Gamma(alpha+2) * sum_j a[m, j] f_j``.

    Returns ``(c, a0)``: the Toeplitz part ``c[k]`` multiplying ``f_{m-k}``
    for ``1 <= m-k`` and the start weights ``a0[m]`` multiplying ``f_0``.
    """
    k = np.arange(n, dtype=float)
    p = alpha + 1.0
    c = np.empty(n)
    c[0] = 1.0
    if n > 1:
        c[1:] = (k[1:] + 1) ** p - 2 * k[1:] ** p + (k[1:] - 1) ** p
    a0 = np.zeros(n)
    if n > 1:
        m = k[1:]
        a0[1:] = (m - 1) ** p - (m - alpha - 1) * m**alpha
    return c, a0


def _frac_integral_trapezoid(f: np.ndarray, alpha: float, dt: float) -> np.ndarray:
    """Product-trapezoid I_alpha along axis 0 of ``f`` (1-D or 2-D)."""
    n = f.shape[0]
    c, a0 = product_trapezoid_weights(alpha, n)
    scale = dt**alpha / gamma(alpha + 2.0).real
    shape = (n,) + (1,) * (f.ndim - 1)
    # f_0 enters only through a0; the Toeplitz part covers j >= 1
    tail = f.copy()
    tail[0] = 0.0
    conv = fftconvolve(tail, c.reshape(shape), axes=0)[:n]
    out = conv + a0.reshape(shape) * f[0]
    out[0] = 0.0
    return scale * out


def _lagrange(nodes, v) -> np.ndarray:
    """Lagrange basis of ``nodes`` evaluated at points ``v``; shape (len(nodes), len(v))."""
    nodes = np.asarray(nodes, dtype=float)
    out = np.ones((nodes.size, np.size(v)))
    for q, xq in enumerate(nodes):
        for r, xr in enumerate(nodes):
            if r != q:
                out[q] *= (v - xr) / (xq - xr)
    return out


@lru_cache(maxsize=64)
def _cubic_weights(alpha: float, n: int):
    """Moments int_0^1 (d - v)^{alpha-1} l_q(v) dv of cubic Lagrange bases.

    Returns (interior[d, q] for nodes -1..2, first[d, q] for nodes 0..3,
    last[q] for nodes -2..1 at d = 1).
    """
    from scipy.special import roots_jacobi, roots_legendre

    zg, wg = roots_legendre(12)
    vg, wg = (zg + 1) / 2, wg / 2
    d = np.arange(2, n + 1, dtype=float)
    kern = (d[:, None] - vg[None, :]) ** (alpha - 1) * wg[None, :]
    interior = np.zeros((n + 1, 4))
    first = np.zeros((n + 1, 4))
    interior[2:] = kern @ _lagrange([-1, 0, 1, 2], vg).T
    first[2:] = kern @ _lagrange([0, 1, 2, 3], vg).T
    # d = 1: weight (1 - v)^{alpha - 1}, exact Gauss-Jacobi
    zj, wj = roots_jacobi(8, alpha - 1.0, 0.0)
    vj, wj = (zj + 1) / 2, wj / 2**alpha
    last = _lagrange([-2, -1, 0, 1], vj) @ wj
    first[1] = _lagrange([0, 1, 2, 3], vj) @ wj
    for arr in (interior, first, last):
        arr.setflags(write=False)
    return interior, first, last


def _frac_integral_cubic(f: np.ndarray, alpha: float, dt: float) -> np.ndarray:
    """Product integration with local cubic interpolation (fourth order for smooth f).

    Every panel [t_i, t_{i+1}] uses the cubic through t_{i-1}..t_{i+2},
    shifted inward at the ends so only samples up to t_m enter I(t_m).
    """
    n = f.shape[0]
    if n < 5:
        return _frac_integral_trapezoid(f, alpha, dt)
    interior, first, last = _cubic_weights(float(alpha), n)
    shape = (n,) + (1,) * (f.ndim - 1)
    out = np.zeros(f.shape, dtype=complex)
    # m = 1, 2: exact integral of the causal interpolant through f_0..f_m
    from scipy.special import roots_jacobi

    for mm in (1, 2):
        zj, wj = roots_jacobi(4, alpha - 1.0, 0.0)
        v = (zj + 1) * mm / 2
        w = wj * (mm / 2) ** alpha
        basis = _lagrange(np.arange(mm + 1), v) @ w
        out[mm] = np.tensordot(basis, f[: mm + 1], axes=(0, 0))
    m = np.arange(3, n)
    # first panel, nodes 0..3
    for q in range(4):
        out[3:] += first[m, q].reshape((-1,) + shape[1:]) * f[q]
    # last panel, nodes m-3..m
    for q in range(4):
        out[3:] += last[q] * f[m - 3 + q]
    # interior panels i = 1..m-2 with nodes i-1..i+2: sum_i T[m - i, q] f_{i-1+q}
    for q in range(4):
        g = np.zeros_like(out)
        g[1:] = f[q : n - 1 + q] if q == 0 else np.concatenate([f[q:], np.zeros((q - 1,) + f.shape[1:])])[: n - 1]
        kern = np.zeros(n)
        kern[2:] = interior[2:n, q]
        conv = fftconvolve(g, kern.reshape(shape), axes=0)[:n]
        out[3:] += conv[3:]
    return out * dt**alpha / gamma(alpha).real


def _frac_integral_array(f: np.ndarray, alpha: float, dt: float, order: int = 4) -> np.ndarray:
    """I_alpha along axis 0 of ``f`` (1-D or 2-D) by product integration of the given order (2 or 4)."""
    f = np.asarray(f, dtype=complex)
    if order == 2:
        return _frac_integral_trapezoid(f, alpha, dt)
    if order == 4:
        return _frac_integral_cubic(f, alpha, dt)
    raise ValueError("product integration order must be 2 or 4")


def frac_integral(f: TimeSignal, alpha: float) -> TimeSignal:
    """Riemann-Liouville integral of order ``alpha > 0`` of a causal signal."""
    if not f.causal:
        raise ValueError("frac_integral requires a causal signal")
    if not alpha > 0:
        raise ValueError("frac_integral needs alpha > 0; use frac_derivative for alpha <= 0")
    return f.with_samples(_frac_integral_array(f.samples, float(alpha), f.dt))


_CENTRAL = {
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12, 2),
    2: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12, 2),
    3: (np.array([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]) / 8, 3),
    4: (np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]) / 6, 3),
}


def _derivative_causal(F: np.ndarray, k: int, dt: float) -> np.ndarray:
    """k-th derivative of a causal array by fourth-order central differences.

    The left edge is padded with zeros (causality); the right edge is padded
    by degree-6 polynomial extrapolation.
    """
    stencil, half = _CENTRAL[k]
    n = F.shape[0]
    left = np.zeros((half,) + F.shape[1:], dtype=F.dtype)
    deg = min(6, n - 1)
    xs = np.arange(n - deg - 1, n)
    ext_x = np.arange(n, n + half)
    coeffs = _lagrange(xs, ext_x).T
    right = np.tensordot(coeffs, F[xs], axes=(1, 0))
    G = np.concatenate([left, F, right], axis=0)
    out = np.zeros_like(F)
    for j, w in enumerate(stencil):
        if w != 0.0:
            out = out + w * G[j : j + n]
    return out / dt**k


def default_lift(alpha: float) -> int:
    """Smallest k with alpha + k in (1/2, 3/2]."""
    return max(0, math.floor(0.5 - alpha) + 1)


def frac_derivative(f: TimeSignal, alpha: float, k: int | None = None) -> TimeSignal:
    """``I_alpha f`` for ``alpha <= 0``, computed as ``d^k/dt^k I_{alpha+k} f``.

    ``alpha = 0`` returns ``f`` unchanged.
    """
    if not f.causal:
        raise ValueError("frac_derivative requires a causal signal")
    alpha = float(alpha)
    if alpha > 0:
        raise ValueError("frac_derivative takes alpha <= 0; use frac_integral")
    if alpha == 0.0:
        return f
    if k is None:
        k = default_lift(alpha)
    if k < 1 or alpha + k <= 0 or k > 4:
        raise ValueError(f"lift k={k} does not make alpha + k positive (k <= 4)")
    return f.with_samples(_frac_derivative_array(f.samples, alpha, f.dt, k))


def _frac_derivative_array(f: np.ndarray, alpha: float, dt: float, k: int | None = None):
    if alpha == 0.0:
        return f.copy()
    if k is None:
        k = default_lift(alpha)
    _warn_if_underresolved(f, k)
    lifted = _frac_integral_array(f, alpha + k, dt)
    return _derivative_causal(lifted, k, dt)


def _warn_if_underresolved(f: np.ndarray, k: int):
    # second differences comparable to the signal itself mean omega*dt ~ 1
    if f.shape[0] < 3:
        return
    scale = np.max(np.abs(f))
    if scale == 0:
        return
    d2 = np.max(np.abs(f[2:] - 2 * f[1:-1] + f[:-2]))
    if d2 > 0.25 * scale:
        warnings.warn(
            f"signal varies on the scale of dt (|D2 f|/|f| = {d2 / scale:.2f}); "
            f"{k}-fold differencing will amplify the error",
            RuntimeWarning,
            stacklevel=3,
        )


def frac_order(f: TimeSignal, alpha: float) -> TimeSignal:
    """Dispatch on the sign of ``alpha``: integral for alpha > 0, else derivative."""
    if alpha > 0:
        return frac_integral(f, alpha)
    return frac_derivative(f, alpha)


def _smooth_step(x):
    # 0 for x <= 0, 1 for x >= 1, C-infinity in between
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def cutoff_psi(t):
    """Smooth cutoff: 1 on [0, 1], 0 for |t| >= 2, monotone ramps in between."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 0, _smooth_step(2.0 - t), _smooth_step((t + 2.0) / 2.0))
    return out if out.ndim else float(out)
