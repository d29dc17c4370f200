"""Integer-valued spectral shift: projection indices, spectral flow and lattice scattering.

Hot loops live in :mod:`bkflow.kernels` and are compiled with numba when it is
installed; set ``BKFLOW_NUMBA=0`` to run the pure-numpy versions instead.
"""
__version__ = "0.1.0"

from ._jit import HAS_NUMBA, USE_NUMBA
from .exceptions import (
    AmbiguousCountError,
    BandError,
    BKFlowError,
    NonFredholmError,
    NotHermitianError,
    NotProjectionError,
    NotUnitaryError,
    OnSpectrumError,
    RefinementError,
    SingularSystemError,
    SupportError,
)
from .linalg import count_below, eig_unitary, eigh, eigvalsh, spectral_projection
from .projections import fredholm_index, pair_spectrum, trace_identity_check, xi_finite
from .ssf import counting, ssf_finite, trace_formula_residual
from .lattice import (
    LatticePotential,
    bound_states,
    s_matrix,
    s_matrix_stationary,
    smooth_kernel_Z,
    transfer_matrix,
)
from .specflow import UnitaryFamilySample, counting_between, find_gap_angle, spectral_flow
from .experiments import (
    exact_gap_index,
    ssf_smoothed,
    truncated_projection_difference,
    verify_bk,
    verify_e1,
    verify_thm0,
    xi_truncated,
)

__all__ = [
    "HAS_NUMBA",
    "USE_NUMBA",
    "AmbiguousCountError",
    "BandError",
    "BKFlowError",
    "NonFredholmError",
    "NotHermitianError",
    "NotProjectionError",
    "NotUnitaryError",
    "OnSpectrumError",
    "RefinementError",
    "SingularSystemError",
    "SupportError",
    "count_below",
    "eig_unitary",
    "eigh",
    "eigvalsh",
    "spectral_projection",
    "fredholm_index",
    "pair_spectrum",
    "trace_identity_check",
    "xi_finite",
    "counting",
    "ssf_finite",
    "trace_formula_residual",
    "LatticePotential",
    "bound_states",
    "s_matrix",
    "s_matrix_stationary",
    "smooth_kernel_Z",
    "transfer_matrix",
    "UnitaryFamilySample",
    "counting_between",
    "find_gap_angle",
    "spectral_flow",
    "exact_gap_index",
    "ssf_smoothed",
    "truncated_projection_difference",
    "verify_bk",
    "verify_e1",
    "verify_thm0",
    "xi_truncated",
]
