from ._tempfit import (
    ParseError,
    __version__,
    compute_csg,
    default_coefficients,
    estimate,
    fit,
)

__all__ = [
    "ParseError",
    "__version__",
    "compute_csg",
    "default_coefficients",
    "estimate",
    "fit",
]
