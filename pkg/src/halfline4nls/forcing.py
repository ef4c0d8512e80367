"""Duhamel boundary forcing operators L^0 and L^lambda.

``L^0 f`` is the whole-line solution of

    (i d_t - d_x^4) v = i M delta_0(x) h(t),    v(0, x) = 0,    h = I_{-3/4} f,

whose trace at x = 0 is f.  In Fourier variables every mode obeys a scalar
linear ODE with the same forcing, integrated exactly by the exponential
integrator of :mod:`propagator`.  The |x|^3 kink at the origin is split off
as ``-i M h(t) G_a(x)`` with ``G_a`` the Green's function of
``d_x^4 + a^4``; the smooth remainder is then resolved spectrally, so grid
samples on both sides of x = 0 are accurate enough for one-sided
differentiation.

``L^lambda g`` is the right-sided Riemann-Liouville integral (in x) of order
lambda of ``L^0(I_{-lambda/4} g)``.  For lambda < 0 the operator is rewritten
through its Fourier multiplier (-i k)^{-lambda}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

from .fractional import TimeSignal, _frac_derivative_array, _frac_integral_array
from .oscillatory import kernel_B_array
from .propagator import Field, GridSpec, causal_mode_integral, fd_weights, from_spectral
from .special import PoleError, constant_M, gamma

__all__ = [
    "ForcingOrder",
    "trace_value",
    "forcing_L0",
    "forcing_L0_source",
    "forcing_Llambda",
    "forcing_L0_kernel",
    "third_derivative_jump",
    "greens_quartic",
]

_KINK_SCALE = 4.0


def _kink_scale(grid: GridSpec) -> float:
    # G_a decays like exp(-a|x|/sqrt 2): keep its periodic images below
    # round-off while keeping the a^4/k^8 remainder tail small
    return max(1.0, 50.0 / grid.L)


def _near_integer(v: float, tol: float = 1e-12) -> bool:
    return abs(v - round(v)) < tol


@dataclass(frozen=True)
class ForcingOrder:
    """Order lambda of the forcing class; lambda > -4 and off 1 - 4Z, 2 - 4Z."""

    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not lam > -4:
            raise ValueError(f"forcing order must exceed -4, got {lam}")
        if _near_integer((1 - lam) / 4) or _near_integer((2 - lam) / 4):
            raise PoleError(f"forcing order {lam} lies in 1 - 4Z or 2 - 4Z")
        object.__setattr__(self, "lam", lam)


def _as_lambda(lam) -> float:
    return lam.lam if isinstance(lam, ForcingOrder) else float(lam)


def trace_value(lam) -> complex:
    """Constant a(lambda) with (L^lambda g)(t, 0) = a(lambda) g(t)."""
    lam = _as_lambda(lam)
    if not lam > -4:
        raise ValueError("trace_value needs lambda > -4")
    if _near_integer((1 - lam) / 4):
        raise PoleError(f"trace value has a pole at lambda = {lam}")
    num = np.exp(-1j * np.pi * (1 + 3 * lam) / 8) + np.exp(-1j * np.pi * (1 - 5 * lam) / 8)
    return complex(constant_M() / 8 * num / np.sin((1 - lam) * np.pi / 4))


def greens_quartic(x, a: float = _KINK_SCALE, j: int = 0) -> np.ndarray:
    """j-th derivative of the Green's function of d_x^4 + a^4 (transform 1/(k^4 + a^4)).

    For x > 0, G = Re[(1 - i) exp(-beta x)] / (2 sqrt(2) a^3) with
    beta = (1 - i) a / sqrt(2); G is even.  At x = 0 the right limit is returned.
    """
    x = np.asarray(x, dtype=float)
    beta = (1 - 1j) * a / math.sqrt(2)
    ax = np.abs(x)
    val = np.real((1 - 1j) * (-beta) ** j * np.exp(-beta * ax)) / (2 * math.sqrt(2) * a**3)
    sign = np.where(x < 0, (-1.0) ** j, 1.0)
    return sign * val


def _check_signal(f: TimeSignal, grid: GridSpec):
    if not f.causal:
        raise ValueError("boundary signals must be causal")
    if len(f) != grid.nt or not math.isclose(f.dt, grid.dt, rel_tol=1e-9):
        raise ValueError("boundary signal must be sampled on the grid's time levels")


def _frac_any(arr: np.ndarray, alpha: float, dt: float) -> np.ndarray:
    if alpha > 0:
        return _frac_integral_array(arr, alpha, dt)
    return _frac_derivative_array(arr, alpha, dt)


def _l0_parts(h: np.ndarray, grid: GridSpec):
    """Spectral remainder (continuous-FT coefficients) and kink amplitude of L^0."""
    a = _kink_scale(grid)
    M = constant_M()
    nk = grid.nx
    vhat = M * causal_mode_integral(np.broadcast_to(h[:, None], (grid.nt, nk)), grid.omega, grid.dt)
    # continuous transform of -i M h G_a is -i M h / (k^4 + a^4)
    rhat = vhat + 1j * M * h[:, None] / (grid.k**4 + a**4)[None, :]
    rhat[:, nk // 2] = 0.0
    kink = -1j * M * h
    return rhat, kink


def _ik(grid: GridSpec, j: int) -> np.ndarray:
    mult = (1j * grid.k) ** j
    mult[grid.nx // 2] = 0.0
    return mult


def _with_derivatives(parts: list[np.ndarray], grid: GridSpec) -> Field:
    return Field(parts[0], grid, meta={"dx": tuple(parts[1:])} if len(parts) > 1 else {})


def forcing_L0_source(h: np.ndarray, grid: GridSpec, derivatives: bool = False) -> Field:
    """Whole-line solution of (i d_t - d_x^4) v = i M delta_0 h with v(0) = 0.

    With ``derivatives`` the x-derivatives of orders 1..3 are attached as
    ``meta["dx"]``; at x = 0 they hold right limits.
    """
    h = np.asarray(h, dtype=complex)
    rhat, kink = _l0_parts(h, grid)
    parts = [from_spectral(rhat * _ik(grid, j)[None, :], grid)
             + kink[:, None] * greens_quartic(grid.x, _kink_scale(grid), j)[None, :]
             for j in range(4 if derivatives else 1)]
    return _with_derivatives(parts, grid)


def forcing_L0(f: TimeSignal, grid: GridSpec, derivatives: bool = False) -> Field:
    """L^0 f sampled on the grid; its trace at x = 0 reproduces f."""
    _check_signal(f, grid)
    h = _frac_any(f.samples, -0.75, grid.dt)
    return forcing_L0_source(h, grid, derivatives)


# right-sided Riemann-Liouville integral in x --------------------------------

def _rl_cumulative(mu: float, k: np.ndarray, dx: float, n: int, order: int = 16) -> np.ndarray:
    """F[m, k] = (1/Gamma(mu)) int_0^{m dx} z^{mu-1} exp(i k z) dz for m = 0..n."""
    out = np.zeros((n + 1, k.size), dtype=complex)
    zj, wj = roots_jacobi(order, 0.0, mu - 1.0)
    z0 = (zj + 1) * dx / 2
    w0 = wj * (dx / 2) ** mu
    first = np.exp(1j * np.outer(k, z0)) @ w0
    zg, wg = roots_legendre(order)
    m = np.arange(1, n)
    panels = np.zeros((n - 1, k.size), dtype=complex)
    for zq, wq in zip(zg, wg):
        z = (m + (zq + 1) / 2) * dx
        panels += (wq * dx / 2 * z ** (mu - 1))[:, None] * np.exp(1j * np.outer(z, k))
    out[1] = first
    out[2:] = first[None, :] + np.cumsum(panels, axis=0)
    return out / gamma(mu).real


@lru_cache(maxsize=16)
def _rl_matrix(L: float, nx: int, mu: float) -> np.ndarray:
    """Matrix R with (RL_mu v)(x_i) = sum_k vhat_k R[i, k] for band-limited v on [-L, L)."""
    grid = GridSpec(L, nx, 1.0, 2)
    F = _rl_cumulative(mu, grid.k, grid.dx, nx)
    steps = nx - np.arange(nx)  # L - x_i in units of dx
    R = np.exp(1j * np.outer(grid.x, grid.k)) * F[steps] / (2 * L)
    R[:, nx // 2] = 0.0
    R.setflags(write=False)
    return R


@lru_cache(maxsize=64)
def _rl_greens(L: float, nx: int, mu: float, j: int = 0, a: float = _KINK_SCALE) -> np.ndarray:
    """Right-sided RL integral of order mu of the j-th derivative of greens_quartic.

    At x = 0 the value is the right limit.
    """
    grid = GridSpec(L, nx, 1.0, 2)
    reach = 40.0 / a
    out = np.zeros(nx)
    func = lambda y: greens_quartic(y, a, j)  # noqa: E731
    # tolerances sit at round-off, where quad only reports that it cannot do better
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        _rl_greens_fill(out, grid.x, L, reach, func, mu)
    out /= gamma(mu).real
    out.setflags(write=False)
    return out


def _rl_greens_fill(out, xs, L, reach, func, mu):
    for i, x in enumerate(xs):
        upper = min(L - x, max(reach - x, 0.0))
        if upper <= 0:
            continue
        if 0 < -x < upper:
            out[i] = _split_alg(lambda z: func(x + z), upper, -x, mu)
        else:
            # quadrature nodes are interior, so x = 0 sees only the right branch
            out[i] = integrate.quad(lambda z: func(x + z), 0, upper, weight="alg",
                                    wvar=(mu - 1, 0), limit=400, epsabs=1e-14, epsrel=1e-12)[0]


def _split_alg(func, upper, brk, mu) -> float:
    v1 = integrate.quad(func, 0, brk, weight="alg", wvar=(mu - 1, 0), limit=400,
                        epsabs=1e-14, epsrel=1e-12)[0]
    v2 = integrate.quad(lambda z: func(z) * z ** (mu - 1), brk, upper, limit=400,
                        epsabs=1e-14, epsrel=1e-12)[0]
    return v1 + v2


def _kernel_minus(x: np.ndarray, mu: float) -> np.ndarray:
    """(-x)_+^{mu-1} / Gamma(mu), zero for x >= 0 (and identically zero when mu is a non-positive integer)."""
    if mu <= 0 and _near_integer(mu):
        return np.zeros_like(x)
    with np.errstate(divide="ignore"):
        vals = np.where(x < 0, np.abs(x) ** (mu - 1), 0.0)
    return vals / gamma(mu).real


def forcing_Llambda(g: TimeSignal, lam, grid: GridSpec, derivatives: bool = False) -> Field:
    """L^lambda g on the grid for any lambda > -4; lambda = 0 gives forcing_L0.

    The operator itself has no poles; the exclusions carried by
    :class:`ForcingOrder` concern only the boundary-matching constants.
    With ``derivatives`` the x-derivatives of orders 1..3 are attached as
    ``meta["dx"]`` (right limits at x = 0).
    """
    lam = _as_lambda(lam)
    if not lam > -4:
        raise ValueError(f"forcing order must exceed -4, got {lam}")
    _check_signal(g, grid)
    if lam == 0:
        return forcing_L0(g, grid, derivatives)
    orders = range(4 if derivatives else 1)
    h = _frac_any(g.samples, -0.75 - lam / 4, grid.dt)
    rhat, kink = _l0_parts(h, grid)
    parts = []
    if lam > 0:
        R = _rl_matrix(grid.L, grid.nx, lam)
        for j in orders:
            smooth = (rhat * _ik(grid, j)[None, :]) @ R.T
            parts.append(smooth + kink[:, None] * _rl_greens(grid.L, grid.nx, lam, j, _kink_scale(grid))[None, :])
        return _with_derivatives(parts, grid)
    # x_-^{lam-1}/Gamma(lam) has Fourier transform (-i k)^{-lam}; on the kink
    # part use d_x^4 G_a = delta - a^4 G_a to stay with integrable kernels
    mu = lam + 4
    k = grid.k
    mult = np.zeros(k.size, dtype=complex)
    nz = k != 0
    mult[nz] = (-1j * k[nz]) ** (-lam)
    for j in orders:
        smooth = from_spectral(rhat * (mult * _ik(grid, j))[None, :], grid)
        profile = (-1) ** j * _kernel_minus(grid.x, mu - j) \
            - _kink_scale(grid) ** 4 * _rl_greens(grid.L, grid.nx, mu, j, _kink_scale(grid))
        parts.append(smooth + kink[:, None] * profile[None, :])
    return _with_derivatives(parts, grid)


def forcing_L0_kernel(h, t: float, x: float, tol: float = 1e-9) -> complex:
    """Independent evaluation of L^0 through its self-similar kernel.

    Computes ``M int_0^t B(x/(t-s)^{1/4}) (t-s)^{-1/4} h(s) ds`` for a callable
    source ``h = I_{-3/4} f``; the substitution s = t - sigma^4 removes the
    endpoint singularity.
    """
    M = constant_M()
    top = t**0.25
    # below sigma = |x|/ymax the integrand is O(sigma^{7/3}) and oscillates
    # quickly; dropping it costs O((|x|/ymax)^{10/3})
    ymax = 1000.0
    low = min(abs(x) / ymax, top)
    nodes, weights = roots_legendre(24)
    edges = low + (top - low) * np.linspace(0, 1, 257) ** 2
    total = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        sig = lo + (nodes + 1) * (hi - lo) / 2
        vals = 4 * sig**2 * kernel_B_array(x / sig) * h(t - sig**4)
        total += np.sum(weights * vals) * (hi - lo) / 2
    return complex(M * total)


def third_derivative_jump(f: TimeSignal, t: float, grid: GridSpec, order: int = 8):
    """One-sided limits (left, right) of d_x^3 L^0 f at x = 0 and time t."""
    if not 0 < t < grid.T:
        raise ValueError("third_derivative_jump needs 0 < t < T")
    u = forcing_L0(f, grid)
    n = int(round(t / grid.dt))
    i0 = grid.i0
    idx_r = i0 + np.arange(order + 1)
    idx_l = i0 - np.arange(order + 1)
    right = u.samples[n, idx_r] @ fd_weights(grid.x[idx_r], 0.0, 3)
    left = u.samples[n, idx_l] @ fd_weights(grid.x[idx_l], 0.0, 3)
    return complex(left), complex(right)
