"""Error exponents for channels whose noise is described to the encoder by a rate-limited helper."""

from .awgn import achievable_exponent, capacity_awgn, wsp_awgn
from .mac import classify_rate_point, optimal_help_split, wsp_mac
from .modulo import helper_failure_exponent, overflow_exponent, r_of_theta, wsp_modulo
from .prob import Pmf
from .values import ExponentValue

__version__ = "0.1.0"

__all__ = [
    "ExponentValue",
    "Pmf",
    "achievable_exponent",
    "capacity_awgn",
    "classify_rate_point",
    "helper_failure_exponent",
    "optimal_help_split",
    "overflow_exponent",
    "r_of_theta",
    "wsp_awgn",
    "wsp_mac",
    "wsp_modulo",
]
