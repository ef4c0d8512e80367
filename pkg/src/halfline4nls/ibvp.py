"""Half-line initial-boundary value problem

    i u_t - u_xxxx + lam_nl |u|^2 u = 0,   x > 0,
    u(0, x) = u0(x),  u(t, 0) = f(t),  u_x(t, 0) = g(t),

solved by a whole-line fixed point: the initial data is zero-extended, the
free and Duhamel parts are computed on the whole line, and two boundary
forcing terms L^{lam1} gamma1 + L^{lam2} gamma2 restore the boundary traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .forcing import ForcingOrder, forcing_Llambda, trace_value
from .fractional import TimeSignal, _frac_integral_array, _smooth_step, cutoff_psi, frac_integral
from .norms import hs_norm, zsb_norm
from .propagator import Field, GridSpec, SpaceSignal, duhamel_D, fd_weights, group_field, trace_time
from .special import PoleError, constant_M

__all__ = [
    "SingularMatrixError",
    "WindowError",
    "ContractionError",
    "NormInflationError",
    "ForcingConfig",
    "SolveParams",
    "BoundaryData",
    "PicardDiagnostics",
    "entries",
    "determinant",
    "check_window",
    "build_forcing_config",
    "extend_initial",
    "solve_gammas",
    "apply_Lambda",
    "picard_solve",
    "mass_balance",
    "mass_balance_arrays",
    "rescale_data",
]


class SingularMatrixError(ValueError):
    """The boundary-matching matrix is (numerically) singular."""


class WindowError(ValueError):
    """A forcing order lies outside the admissible window for (s, b)."""


class ContractionError(RuntimeError):
    """Picard iteration failed to contract."""


class NormInflationError(ValueError):
    """Zero extension inflated the H^s norm beyond the allowed factor."""


def _neumann_value(lam: float) -> complex:
    # d_x L^lam g (t, 0) = -a(lam - 1) I_{-1/4} g(t)
    if abs((2 - lam) / 4 - round((2 - lam) / 4)) < 1e-12:
        raise PoleError(f"Neumann constant has a pole at lambda = {lam}")
    num = np.exp(-1j * np.pi * (-2 + 3 * lam) / 8) + np.exp(-1j * np.pi * (6 - 5 * lam) / 8)
    return complex(-constant_M() / 8 * num / np.sin((2 - lam) * np.pi / 4))


def entries(lam) -> tuple[complex, complex]:
    """Trace constants (a, b) of L^lam.

    ``L^lam g(t, 0) = a g(t)`` and ``d_x L^lam g(t, 0) = b I_{-1/4} g(t)``.
    """
    lam = lam.lam if isinstance(lam, ForcingOrder) else ForcingOrder(float(lam)).lam
    return trace_value(lam), _neumann_value(lam)


def determinant(lam1: float, lam2: float) -> complex:
    a1, b1 = entries(lam1)
    a2, b2 = entries(lam2)
    return a1 * b2 - a2 * b1


def check_window(lam: float, s: float, b: float):
    lo = max(-3.0, s + 4 * b - 2)
    hi = min(0.5, s + 0.5)
    if not lo < lam < hi:
        raise WindowError(f"lambda = {lam} outside the admissible window ({lo:g}, {hi:g}) for s={s}, b={b}")


@dataclass(frozen=True)
class ForcingConfig:
    lam1: float
    lam2: float
    a1: complex
    a2: complex
    b1: complex
    b2: complex
    detA: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a1, self.a2], [self.b1, self.b2]])

    def solve(self, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g1 = (self.b2 * r1 - self.a2 * r2) / self.detA
        g2 = (-self.b1 * r1 + self.a1 * r2) / self.detA
        return g1, g2


def build_forcing_config(lam1: float = 0.0, lam2: float = 1 / 3, s: float = 0.0, b: float = 0.45,
                         det_floor: float = 1e-6) -> ForcingConfig:
    for lam in (lam1, lam2):
        ForcingOrder(lam)
        check_window(lam, s, b)
    a1, b1 = entries(lam1)
    a2, b2 = entries(lam2)
    det = a1 * b2 - a2 * b1
    if not abs(det) > det_floor:
        raise SingularMatrixError(f"|det A({lam1}, {lam2})| = {abs(det):.3e} is below the floor {det_floor:g}")
    return ForcingConfig(float(lam1), float(lam2), a1, a2, b1, b2, det)


@dataclass(frozen=True)
class SolveParams:
    s: float = 0.0
    b: float = 0.45
    lam_nl: float = 0.0
    gamma_disp: float = -1.0
    max_iters: int = 30
    tol: float = 1e-10
    delta_target: float | None = None

    def __post_init__(self):
        if not 0 <= self.s < 0.5:
            raise ValueError("regularity s must lie in [0, 1/2)")
        if not self.b < 0.5:
            raise ValueError("Bourgain exponent b must be < 1/2")
        if self.gamma_disp != -1.0:
            raise ValueError("the boundary forcing construction is implemented for gamma_disp = -1 only")
        if self.max_iters < 1 or not self.tol > 0:
            raise ValueError("max_iters >= 1 and tol > 0 required")


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet trace f, Neumann trace g and initial data u0 (only x >= 0 is used)."""

    f: TimeSignal
    g: TimeSignal
    u0: SpaceSignal

    def __post_init__(self):
        if not (self.f.causal and self.g.causal):
            raise ValueError("boundary traces must be causal")
        grid = self.u0.grid
        for sig in (self.f, self.g):
            if len(sig) != grid.nt or not math.isclose(sig.dt, grid.dt, rel_tol=1e-9):
                raise ValueError("boundary traces must be sampled on the grid's time levels")

    @property
    def grid(self) -> GridSpec:
        return self.u0.grid

    @classmethod
    def zeros(cls, grid: GridSpec) -> "BoundaryData":
        z = TimeSignal(np.zeros(grid.nt), grid.dt)
        return cls(z, z, SpaceSignal(np.zeros(grid.nx), grid))


def extend_initial(u0: SpaceSignal, s: float, factor: float = 2.0) -> SpaceSignal:
    """Zero extension of u0 from x >= 0 to the line.

    The H^s norm of the extension is compared with that of the even
    extension, a competing admissible extension; a ratio above ``factor``
    raises :class:`NormInflationError`.
    """
    if not s < 0.5:
        raise ValueError("zero extension is only admissible for s < 1/2")
    grid = u0.grid
    x = grid.x
    ext = SpaceSignal(np.where(x >= 0, u0.samples, 0.0), grid)
    n_ext = hs_norm(ext, s)
    if n_ext == 0:
        return ext
    # even reflection about x = 0 on the lattice (x_{i0 - m} <- x_{i0 + m})
    even = ext.samples.copy()
    m = np.arange(1, grid.i0 + 1)
    even[grid.i0 - m] = ext.samples[(grid.i0 + m) % grid.nx]
    n_even = hs_norm(SpaceSignal(even, grid), s)
    if n_ext > factor * n_even:
        raise NormInflationError(f"zero extension inflates the H^{s} norm by {n_ext / n_even:.2f}")
    return ext


def _edge_window(grid: GridSpec) -> np.ndarray:
    r = np.abs(grid.x) / grid.L
    return _smooth_step((0.8 - r) / 0.3)


def solve_gammas(data: BoundaryData, F: Field, cfg: ForcingConfig) -> tuple[TimeSignal, TimeSignal]:
    """Forcing densities matching the boundary traces of F + L^{lam1} gamma1 + L^{lam2} gamma2 to (f, g)."""
    grid = F.grid
    F0 = trace_time(F, 0.0, 0).samples
    F1 = trace_time(F, 0.0, 1).samples
    r1 = data.f.samples - F0
    r2 = _frac_integral_array(data.g.samples - F1, 0.25, grid.dt)
    g1, g2 = cfg.solve(r1, r2)
    return TimeSignal(g1, grid.dt), TimeSignal(g2, grid.dt)


class _LinearCache:
    def __init__(self, data: BoundaryData, p: SolveParams):
        self.ext = extend_initial(data.u0, p.s)
        self.free = group_field(self.ext)
        self.window = _edge_window(data.grid)
        # psi_T(t) = psi(t/T) equals one on the whole computed window [0, T]
        self.psi = cutoff_psi(data.grid.t / data.grid.T)


def apply_Lambda(u_current: Field, data: BoundaryData, cfg: ForcingConfig, p: SolveParams,
                 _cache: _LinearCache | None = None) -> Field:
    """One application of the solution operator.

    Lambda u = psi(t) [L^{lam1} gamma1 + L^{lam2} gamma2 + F],
    F = e^{it d_x^4} u0_ext - lam_nl D(|u|^2 u), with gamma1, gamma2 from F.
    """
    grid = data.grid
    if u_current.grid != grid:
        raise ValueError("field and boundary data live on different grids")
    cache = _cache or _LinearCache(data, p)
    F = cache.free
    if p.lam_nl != 0:
        u = u_current.samples
        w = Field(np.abs(u) ** 2 * u * cache.window[None, :], grid)
        F = F - p.lam_nl * duhamel_D(w)
    g1, g2 = solve_gammas(data, F, cfg)
    total = (forcing_Llambda(g1, cfg.lam1, grid, derivatives=True)
             + forcing_Llambda(g2, cfg.lam2, grid, derivatives=True)
             + F.with_spectral_derivatives())
    return total * cache.psi[:, None]


@dataclass
class PicardDiagnostics:
    iterations: int = 0
    differences: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    converged: bool = False
    z_norm: float = 0.0
    data_scale: float = 1.0

    def as_dict(self) -> dict:
        return {"iterations": self.iterations, "differences": list(self.differences),
                "ratios": list(self.ratios), "converged": self.converged, "z_norm": self.z_norm,
                "data_scale": self.data_scale}


def picard_solve(data: BoundaryData, cfg: ForcingConfig, p: SolveParams) -> tuple[Field, PicardDiagnostics]:
    """Fixed-point iteration u_{n+1} = Lambda u_n started from the linear solution.

    Stops when the Z^{s,b} proxy of u_{n+1} - u_n drops below ``p.tol`` times
    that of u_{n+1}.  Three consecutive contraction ratios above one raise
    :class:`ContractionError`.  With ``p.delta_target`` set, the data are
    first multiplied by a constant so that the Z^{s,b} proxy of the linear
    solution does not exceed it; the factor is reported as ``data_scale``.
    """
    grid = data.grid
    if grid.nt < 8 or grid.nx < 64:
        raise ValueError("picard_solve needs nt >= 8 and nx >= 64")
    cache = _LinearCache(data, p)
    idx = (p.s, p.b)
    diag = PicardDiagnostics()
    u = apply_Lambda(Field.zeros(grid), data, cfg, SolveParams(p.s, p.b, 0.0, p.gamma_disp, p.max_iters, p.tol),
                     cache)
    norm_u = zsb_norm(u, idx)
    if p.delta_target is not None and norm_u > p.delta_target:
        c = p.delta_target / norm_u
        data = BoundaryData(data.f * c, data.g * c, SpaceSignal(data.u0.samples * c, grid))
        cache = _LinearCache(data, p)
        u = u * c
        norm_u = p.delta_target
        diag.data_scale = c
    if norm_u == 0 or p.lam_nl == 0:
        diag.iterations = 1
        diag.differences.append(0.0)
        diag.converged = True
        diag.z_norm = norm_u
        return u, diag
    prev = None
    above = 0
    for it in range(1, p.max_iters + 1):
        u_next = apply_Lambda(u, data, cfg, p, cache)
        diff = zsb_norm(u_next - u, idx)
        norm_u = zsb_norm(u_next, idx)
        diag.iterations = it
        diag.differences.append(diff)
        if prev:
            ratio = diff / prev
            diag.ratios.append(ratio)
            above = above + 1 if ratio > 1 else 0
            if above >= 3:
                diag.z_norm = norm_u
                raise ContractionError(
                    f"contraction lost: ratios {diag.ratios[-3:]} exceed 1; shrink T or the data amplitude")
        if not np.isfinite(diff):
            raise ContractionError("iteration overflowed; data too large for the contraction regime")
        u = u_next
        prev = diff
        if diff <= p.tol * norm_u:
            diag.converged = True
            break
    diag.z_norm = norm_u
    if not diag.converged:
        raise ContractionError(f"no convergence in {p.max_iters} iterations (last ratio {diag.ratios[-1:]})")
    return u, diag


def _onesided_derivs(samples: np.ndarray, x: np.ndarray, i0: int, order: int = 8) -> list[np.ndarray]:
    idx = i0 + np.arange(order + 1)
    return [samples[:, idx] @ fd_weights(x[idx], x[i0], j) for j in range(4)]


def mass_balance_arrays(samples: np.ndarray, x: np.ndarray, t: np.ndarray, i0: int = 0,
                        x_max: float | None = None, order: int = 8, traces=None) -> float:
    """Residual of the half-line mass identity

        int |u(T)|^2 - int |u(0)|^2 = 2 int_0^T [Im(u_xx conj(u_x)) - Im(u_xxx conj(u))](t, 0) dt

    for samples u[n, j] = u(t_n, x_j), with x[i0] = 0.
    """
    xs = x[i0:]
    us = samples[:, i0:]
    if x_max is not None:
        keep = xs <= x_max
        xs, us = xs[keep], us[:, keep]
    mass = np.trapezoid(np.abs(us) ** 2, xs, axis=1)
    u, ux, uxx, uxxx = traces if traces is not None else _onesided_derivs(samples, x, i0, order)
    flux = 2 * (np.imag(uxx * np.conj(ux)) - np.imag(uxxx * np.conj(u)))
    return float(abs(mass[-1] - mass[0] - np.trapezoid(flux, t)))


def mass_balance(u: Field, T: float | None = None, x_max: float | None = None) -> float:
    """Mass-identity residual of a whole-line field restricted to x >= 0 over [0, T].

    The mass is integrated over [0, x_max] (default: the whole right half of
    the box).  Boundary traces come from attached derivative samples when present,
    otherwise from one-sided differences.
    """
    grid = u.grid
    n = grid.nt if T is None else int(round(T / grid.dt)) + 1
    traces = None
    if u.derivatives:
        traces = [trace_time(u, 0.0, j, side="right").samples[:n] for j in range(4)]
    return mass_balance_arrays(u.samples[:n], grid.x, grid.t[:n], grid.i0, x_max, traces=traces)


def rescale_data(data: BoundaryData, mu: float) -> BoundaryData:
    """Data of u_mu(t, x) = mu^2 u(mu^4 t, mu x) on the correspondingly scaled grid."""
    if not 0 < mu <= 1:
        raise ValueError("rescaling factor must lie in (0, 1]")
    g = data.grid
    grid = GridSpec(g.L / mu, g.nx, g.T / mu**4, g.nt, g.dispersion)
    f = TimeSignal(mu**2 * data.f.samples, grid.dt)
    gg = TimeSignal(mu**3 * data.g.samples, grid.dt)
    return BoundaryData(f, gg, SpaceSignal(mu**2 * data.u0.samples, grid))
