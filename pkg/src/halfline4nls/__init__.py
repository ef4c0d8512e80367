"""Fourth-order nonlinear Schroedinger equation on the half-line via boundary forcing operators."""

import os as _os

# HALFLINE4NLS_THREADS caps BLAS/FFT threads; it must act before numpy loads.
_threads = _os.environ.get("HALFLINE4NLS_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .special import PoleError, constant_B0, constant_M, gamma  # noqa: E402
from .fractional import TimeSignal, cutoff_psi, frac_derivative, frac_integral, frac_order  # noqa: E402
from .oscillatory import KernelTable, b0_quadrature, build_kernel_table, kernel_B, mellin_check  # noqa: E402
from .propagator import (Field, GridSpec, SpaceSignal, duhamel_D, group_evolve, group_field,  # noqa: E402
                         trace_time)
from .forcing import (ForcingOrder, forcing_L0, forcing_L0_kernel, forcing_Llambda,  # noqa: E402
                      third_derivative_jump, trace_value)
from .norms import (RATIO_KINDS, SobolevIndex, estimate_ratio_suite, hs_halfline_norm, hs_norm,  # noqa: E402
                    xsb_norm, zsb_norm)
from .ibvp import (BoundaryData, ContractionError, ForcingConfig, PicardDiagnostics, SingularMatrixError,  # noqa: E402
                   SolveParams, WindowError, apply_Lambda, build_forcing_config, determinant, entries,
                   mass_balance, picard_solve, rescale_data)
from .reference import FDGrid, HalfLineField, cn_solve  # noqa: E402

__version__ = "0.1.0"
