"""Complex Gamma function, the distributional power (tau - i0)^(-alpha),
and the two constants that normalise the boundary forcing operator.

The Gamma function uses a fixed-coefficient Lanczos approximation
(g = 7, nine terms) on Re z >= 1/2 and the reflection formula elsewhere.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

__all__ = [
    "PoleError",
    "gamma",
    "rgamma",
    "power_tau_minus_i0",
    "constant_B0",
    "constant_M",
]


class PoleError(ValueError):
    """Raised when a formula is evaluated at one of its poles."""


_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def _gamma_lanczos(z: complex) -> complex:
    # valid for Re z >= 1/2
    z = z - 1.0
    acc = _LANCZOS_COEF[0]
    for k, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _SQRT_2PI * cmath.exp((z + 0.5) * cmath.log(t) - t) * acc


def gamma(z) -> complex:
    """Gamma function of a real or complex argument.

    Raises :class:`PoleError` at z = 0, -1, -2, ...
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"gamma: non-finite argument {z!r}")
    if _is_nonpositive_integer(z):
        raise PoleError(f"gamma has a pole at z = {z.real:g}")
    if z.real < 0.5:
        # reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        return math.pi / (cmath.sin(math.pi * z) * _gamma_lanczos(1.0 - z))
    return _gamma_lanczos(z)


def rgamma(z) -> complex:
    """1/Gamma(z); zero at the poles of Gamma instead of raising."""
    z = complex(z)
    if _is_nonpositive_integer(z):
        return 0j
    return 1.0 / gamma(z)


def power_tau_minus_i0(tau: float, alpha) -> complex:
    """Boundary value (tau - i0)^(-alpha) on the real axis.

    Equals |tau|^(-alpha) for tau > 0 and exp(i pi alpha) |tau|^(-alpha)
    for tau < 0.
    """
    tau = float(tau)
    alpha = complex(alpha)
    if tau == 0.0:
        raise ValueError("(tau - i0)^(-alpha) is not a function value at tau = 0")
    mag = cmath.exp(-alpha * math.log(abs(tau)))
    if tau > 0:
        return mag
    return cmath.exp(1j * math.pi * alpha) * mag


def constant_B0() -> complex:
    """B(0) = -(i^(7/4)/pi) Gamma(5/4), with i^(7/4) = exp(7 i pi / 8)."""
    return -cmath.exp(7j * math.pi / 8) / math.pi * gamma(1.25)


def constant_M() -> complex:
    """Normalisation M = 1 / (B(0) Gamma(3/4)); equals 2 sqrt(2) exp(i pi/8)."""
    return 1.0 / (constant_B0() * gamma(0.75))


def gamma_array(z) -> np.ndarray:
    """Vectorised :func:`gamma` over an array of arguments."""
    return np.vectorize(gamma, otypes=[complex])(np.asarray(z))
