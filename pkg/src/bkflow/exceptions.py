"""Exception hierarchy.

Every numerical rejection raised by the package derives from
:class:`BKFlowError`, so batch drivers can surface them verbatim.
"""


class BKFlowError(ValueError):
    """Base class for inputs rejected by a numerical contract."""


class NotHermitianError(BKFlowError):
    pass


class NotUnitaryError(BKFlowError):
    pass


class NotProjectionError(BKFlowError):
    pass


class OnSpectrumError(BKFlowError):
    """A spectral parameter sits on (or within tolerance of) the spectrum."""


class NonFredholmError(BKFlowError):
    """No clean separation band around +-1 in the spectrum of P - Q."""


class BandError(BKFlowError):
    """Energy outside the admissible part of the band (-2, 2)."""


class SingularSystemError(BKFlowError):
    pass


class AmbiguousCountError(BKFlowError):
    """An eigenphase sits within tolerance of a counting-arc endpoint."""


class RefinementError(BKFlowError):
    """Grid refinement hit its node budget."""


class SupportError(BKFlowError):
    """Test-function window does not cover the relevant spectra."""
