"""p-adic and adelic models of price dynamics."""

__version__ = "0.1.0"

from .errors import DataError, DomainError, NumericalError  # noqa: E402
from .padic import (  # noqa: E402
    PAdicNumber,
    Place,
    expand,
    padic_add,
    padic_mul,
    padic_norm,
    product_formula,
    valuation,
)
from .series import PriceSeries  # noqa: E402
from .waves import MapKind, WaveCurve, WaveSpec, real_map, wave_generate  # noqa: E402

__all__ = [
    "DataError",
    "DomainError",
    "MapKind",
    "NumericalError",
    "PAdicNumber",
    "Place",
    "PriceSeries",
    "WaveCurve",
    "WaveSpec",
    "expand",
    "padic_add",
    "padic_mul",
    "padic_norm",
    "product_formula",
    "real_map",
    "valuation",
    "wave_generate",
]
