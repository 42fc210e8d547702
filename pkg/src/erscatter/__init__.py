"""Legacy and reciprocal Effective Roughness diffuse-scattering models."""
from .exceptions import DomainError
from .geometry import Direction, ScatterGeometry, cos_psi_i, cos_psi_r
from .models import (
    ErParameters,
    SourceParameters,
    e_s_squared_double,
    e_s_squared_legacy,
    e_s_squared_rer,
    f_alpha_closed,
    k_alpha,
    k_alpha_exact,
    k_alpha_interp,
    pattern_legacy,
    pattern_rer,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "Direction",
    "ScatterGeometry",
    "cos_psi_i",
    "cos_psi_r",
    "ErParameters",
    "SourceParameters",
    "e_s_squared_double",
    "e_s_squared_legacy",
    "e_s_squared_rer",
    "f_alpha_closed",
    "k_alpha",
    "k_alpha_exact",
    "k_alpha_interp",
    "pattern_legacy",
    "pattern_rer",
]
