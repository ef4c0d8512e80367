"""Crank-Nicolson finite differences for the half-line problem, used as an
independent cross-check of the forcing-operator construction.

On [0, xmax] with nodes x_j = j h the fourth derivative is the centred
five-point stencil.  The boundary conditions u(t, 0) = f and u_x(t, 0) = g
fix u_0 and, through a centred difference, the ghost value
u_{-1} = u_1 - 2 h g; the far end is clamped (u = u_x = 0).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu

from .ibvp import BoundaryData, mass_balance_arrays

__all__ = ["FDGrid", "HalfLineField", "cn_solve", "InnerIterationError"]

log = logging.getLogger(__name__)


class InnerIterationError(RuntimeError):
    """Fixed-point iteration for the cubic term diverged within a time step."""


@dataclass(frozen=True)
class FDGrid:
    """Uniform grid on [0, xmax] x [0, T]; ``nx`` intervals and ``nt`` time levels."""

    xmax: float
    nx: int
    T: float
    nt: int

    def __post_init__(self):
        if not (self.xmax > 0 and self.T > 0):
            raise ValueError("FDGrid needs xmax > 0 and T > 0")
        if self.nx - 1 < 5:
            raise ValueError("FDGrid needs at least 5 interior points")
        if self.nt < 2:
            raise ValueError("FDGrid needs nt >= 2")

    @property
    def h(self) -> float:
        return self.xmax / self.nx

    @property
    def dt(self) -> float:
        return self.T / (self.nt - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.xmax, self.nx + 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt)


@dataclass(frozen=True)
class HalfLineField:
    """Samples ``samples[n, j] = u(t_n, x_j)`` on an :class:`FDGrid`."""

    samples: np.ndarray
    grid: FDGrid
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def mass_balance(self) -> float:
        return mass_balance_arrays(self.samples, self.grid.x, self.grid.t, 0)


def _resample_time(sig: np.ndarray, t_src: np.ndarray, t_dst: np.ndarray) -> np.ndarray:
    if t_src.size == t_dst.size and np.allclose(t_src, t_dst):
        return sig
    return CubicSpline(t_src, sig)(t_dst)


def _initial_on_grid(data: BoundaryData, x: np.ndarray) -> np.ndarray:
    sg = data.grid
    keep = sg.x >= 0
    xs, vals = sg.x[keep], data.u0.samples[keep]
    out = np.zeros(x.size, dtype=complex)
    inside = x <= xs[-1]
    out[inside] = CubicSpline(xs, vals)(x[inside])
    return out


def _operator(n_int: int, h: float) -> sparse.csc_matrix:
    """Five-point d_x^4 on interior nodes 1..N-1 with the ghost closures folded in."""
    main = np.full(n_int, 6.0)
    main[0] = 7.0   # u_{-1} = u_1 - 2 h g
    main[-1] = 7.0  # u_{N+1} = u_{N-1}, u_N = 0
    off1 = np.full(n_int - 1, -4.0)
    off2 = np.ones(n_int - 2)
    A = sparse.diags([off2, off1, main, off1, off2], [-2, -1, 0, 1, 2], format="csc")
    return A / h**4


def cn_solve(data: BoundaryData, lam_nl: float, grid: FDGrid, inner_iters: int = 2,
             inner_tol: float = 1e-12) -> HalfLineField:
    """Crank-Nicolson for i u_t - u_xxxx + lam_nl |u|^2 u = 0 on [0, xmax]."""
    h, dt = grid.h, grid.dt
    x, t = grid.x, grid.t
    log.info("cn_solve: dt/h^4 = %.3e", dt / h**4)
    f = _resample_time(data.f.samples, data.f.times, t)
    g = _resample_time(data.g.samples, data.g.times, t)
    n_int = grid.nx - 1
    A = _operator(n_int, h)
    eye = sparse.identity(n_int, format="csc")
    lhs = splu((1j / dt) * eye - 0.5 * A)
    rhs_op = (1j / dt) * eye + 0.5 * A

    def boundary(n):
        b = np.zeros(n_int, dtype=complex)
        b[0] = (-4 * f[n] - 2 * h * g[n]) / h**4
        b[1] = f[n] / h**4
        return b

    out = np.zeros((grid.nt, grid.nx + 1), dtype=complex)
    out[0] = _initial_on_grid(data, x)
    out[0, 0] = f[0]
    out[0, -1] = 0.0
    u = out[0, 1:-1].copy()
    b_old = boundary(0)
    for n in range(grid.nt - 1):
        b_new = boundary(n + 1)
        base = rhs_op @ u + 0.5 * (b_old + b_new)
        u_new = lhs.solve(base)
        if lam_nl != 0:
            prev_change = np.inf
            for _ in range(inner_iters):
                mid = 0.5 * (u + u_new)
                cand = lhs.solve(base - lam_nl * np.abs(mid) ** 2 * mid)
                change = np.max(np.abs(cand - u_new))
                u_new = cand
                if not np.isfinite(change) or change > 10 * prev_change:
                    raise InnerIterationError(f"cubic fixed point diverged at step {n + 1}")
                prev_change = change
                if change < inner_tol:
                    break
        u = u_new
        b_old = b_new
        out[n + 1, 1:-1] = u
        out[n + 1, 0] = f[n + 1]
    edge = np.max(np.abs(out[:, -6:-1]))
    if edge > 1e-8 * max(np.max(np.abs(out)), 1e-300):
        warnings.warn(f"solution reaches the clamped end (|u| = {edge:.2e}); enlarge xmax",
                      RuntimeWarning, stacklevel=2)
    return HalfLineField(out, grid, {"dt_over_h4": dt / h**4})
