"""Effective Roughness scattering patterns and scattered-field intensities.

Three models are provided:

* the legacy single-lobe ER model, whose hemispherical normalization
  ``F(theta_i)`` has a closed-form double sum (:func:`f_alpha_closed`);
* the reciprocal single-lobe RER model, normalized with ``k(alpha)`` times
  ``sqrt(cos theta_i)``;
* the reciprocal double-lobe RER model, adding a lobe steered back towards
  the source.

Field functions return ``|E_S|^2`` in V^2/m^2 and accept array-valued
directions inside :class:`~erscatter.geometry.ScatterGeometry`.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import specfun
from .exceptions import DomainError
from .geometry import HALF_PI, Direction, ScatterGeometry, cos_elevation, cos_psi_i, cos_psi_r

U_MODES = ("reflected", "incident")


def _is_integral(x) -> bool:
    return float(x).is_integer()


def _require_integer_exponent(alpha, name="alpha_r") -> int:
    if isinstance(alpha, bool) or not _is_integral(alpha) or alpha < 0:
        raise DomainError(f"{name} must be a nonnegative integer here, got {alpha!r}")
    return int(alpha)


def _require_unit_interval(value, name):
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class ErParameters:
    """Scattering parameters shared by the three models.

    ``lam`` is the share of scattered power in the forward (specular) lobe of
    the double-lobe model. ``u_mode`` selects whether the scattered power is a
    fraction of the reflected power (``"reflected"``, U = Gamma) or of the
    incident power (``"incident"``, U = 1).
    """

    s: float
    alpha_r: float = 0.0
    alpha_i: float = 0.0
    lam: float = 1.0
    gamma: float = 1.0
    u_mode: str = "reflected"

    def __post_init__(self):
        _require_unit_interval(self.s, "s")
        _require_unit_interval(self.lam, "lambda")
        _require_unit_interval(self.gamma, "gamma")
        for name in ("alpha_r", "alpha_i"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
        if self.u_mode not in U_MODES:
            raise DomainError(f"u_mode must be one of {U_MODES}, got {self.u_mode!r}")

    @property
    def reflection_reduction(self) -> float:
        """Attenuation sqrt(1 - S^2) applied to the specular reflection."""
        return math.sqrt(1.0 - self.s * self.s)

    @property
    def power_factor(self) -> float:
        """U^2 in the scattered-power balance."""
        return self.gamma**2 if self.u_mode == "reflected" else 1.0


@dataclass(frozen=True)
class SourceParameters:
    """Source amplitude constant ``k_i`` (V), i.e. ``|E_i| r_i``."""

    k_i: float

    def __post_init__(self):
        if not (self.k_i >= 0 and math.isfinite(self.k_i)):
            raise DomainError(f"k_i must be finite and >= 0, got {self.k_i!r}")

    @classmethod
    def from_power(cls, p_t: float, g_t: float) -> SourceParameters:
        """Build from transmit power (W) and gain towards the surface."""
        if not p_t > 0:
            raise DomainError(f"p_t must be positive, got {p_t!r}")
        if not g_t >= 0:
            raise DomainError(f"g_t must be >= 0, got {g_t!r}")
        return cls(math.sqrt(60.0 * p_t * g_t))


# ---------------------------------------------------------------------------
# Legacy ER model
# ---------------------------------------------------------------------------


def pattern_legacy(inc: Direction, obs: Direction, alpha_r):
    """Legacy single-lobe pattern ((1 + cos psi_R) / 2)^alpha_r."""
    alpha = _require_integer_exponent(alpha_r)
    return np.power(0.5 * (1.0 + cos_psi_r(inc, obs)), alpha)


@functools.lru_cache(maxsize=None)
def _closed_form_coefficients(alpha: int):
    """(j - 2l, 2l, coefficient) triples of the closed-form double sum.

    The 2 pi factor is folded into the coefficient. Exponents up to
    EXACT_FACTORIAL_MAX use exact rationals; larger ones go through logs and
    store the natural log of the coefficient instead.
    """
    exact = alpha <= specfun.EXACT_FACTORIAL_MAX
    log2 = math.log(2.0)
    terms = []
    for j in range(alpha + 1):
        outer = specfun.factorial(alpha) / (specfun.factorial(alpha - j) * specfun.double_factorial(j + 1))
        for l in range(j // 2 + 1):
            inner = specfun.factorial(l) * specfun.double_factorial(j - 2 * l)
            if exact:
                denominator = (
                    math.factorial(alpha - j)
                    * specfun.double_factorial(j + 1).exact
                    * 2 ** (alpha + l)
                    * inner.exact
                )
                coeff = 2.0 * math.pi * float(Fraction(math.factorial(alpha), denominator))
            else:
                coeff = outer.log_magnitude - inner.log_magnitude - (alpha + l) * log2 + math.log(2.0 * math.pi)
            terms.append((j - 2 * l, 2 * l, coeff))
    return exact, tuple(terms)


def f_alpha_closed(theta_i: float, alpha_r) -> float:
    """Closed-form hemispherical integral of the legacy pattern.

    Valid on ``0 <= theta_i < pi/2``; ``0**0`` is taken as 1 so the formula
    also holds at normal incidence.
    """
    alpha = _require_integer_exponent(alpha_r)
    theta_i = float(theta_i)
    if not (0.0 <= theta_i < HALF_PI):
        raise DomainError(f"theta_i must lie in [0, pi/2), got {theta_i!r}")
    c, s = math.cos(theta_i), math.sin(theta_i)
    exact, terms = _closed_form_coefficients(alpha)
    if exact:
        return math.fsum(coeff * _pow(c, p) * _pow(s, q) for p, q, coeff in terms)
    logs = []
    for p, q, log_coeff in terms:
        if (p and c == 0.0) or (q and s == 0.0):
            continue
        logs.append(log_coeff + (p * math.log(c) if p else 0.0) + (q * math.log(s) if q else 0.0))
    peak = max(logs)
    return math.exp(peak) * math.fsum(math.exp(x - peak) for x in logs)


def _pow(base: float, exponent: int) -> float:
    # explicit 0**0 = 1
    return 1.0 if exponent == 0 else base**exponent


def e_s_squared_legacy(geom: ScatterGeometry, src: SourceParameters, par: ErParameters):
    """Scattered |E_S|^2 of the legacy (non-reciprocal) ER model.

    Returns 0 at grazing incidence, where no power is intercepted.
    """
    alpha = _require_integer_exponent(par.alpha_r)
    inc, obs = geom.incidence, geom.observation
    amplitude = (src.k_i * par.s / (geom.r_i * geom.r_s)) ** 2 * par.power_factor * geom.dS
    pattern = pattern_legacy(inc, obs, alpha)

    def normalization(theta):
        if theta == HALF_PI:
            return 0.0
        return math.cos(theta) / f_alpha_closed(theta, alpha)

    if np.ndim(inc.theta) == 0:
        weight = normalization(inc.theta)
    else:
        weight = np.vectorize(normalization, otypes=[float])(inc.theta)
    return amplitude * weight * pattern


# ---------------------------------------------------------------------------
# Reciprocal ER model
# ---------------------------------------------------------------------------


def pattern_rer(inc: Direction, obs: Direction, alpha_r):
    """Reciprocal single-lobe pattern sqrt(cos theta_S) ((1 + cos psi_R) / 2)^alpha_r."""
    if not alpha_r >= 0:
        raise DomainError(f"alpha_r must be >= 0, got {alpha_r!r}")
    return np.sqrt(cos_elevation(obs.theta)) * np.power(0.5 * (1.0 + cos_psi_r(inc, obs)), alpha_r)


@functools.lru_cache(maxsize=None)
def _k_alpha_exact(alpha: int) -> float:
    if alpha <= specfun.EXACT_BINOMIAL_MAX:
        total = math.fsum(math.comb(alpha, j) / (2 * j + 3) for j in range(alpha + 1))
        return 4.0 * math.pi * total / 2.0**alpha
    logs = [
        specfun.binomial(alpha, j).log_magnitude - math.log(2 * j + 3) - alpha * math.log(2.0)
        for j in range(alpha + 1)
    ]
    peak = max(logs)
    return 4.0 * math.pi * math.exp(peak) * math.fsum(math.exp(x - peak) for x in logs)


def k_alpha_exact(alpha_r) -> float:
    """Normal-incidence integral of the RER pattern for an integer exponent."""
    return _k_alpha_exact(_require_integer_exponent(alpha_r))


def k_alpha_interp(alpha_r: float) -> float:
    """Published rational fit of k(alpha) for real exponents.

    The two branches do not meet at alpha = 4; the quadratic branch owns the
    boundary.
    """
    alpha = float(alpha_r)
    if not alpha >= 0:
        raise DomainError(f"alpha_r must be >= 0, got {alpha_r!r}")
    if alpha > 4.0:
        return 1.0 / (0.07937 * alpha + 0.1745)
    return 1.0 / (0.003128 * alpha**2 + 0.05675 * alpha + 0.2387)


K_MODES = ("auto", "exact", "interp")


def k_alpha(alpha_r, mode: str = "auto") -> float:
    """k(alpha): exact sum for integer exponents, the fit otherwise.

    ``mode="interp"`` forces the fit even for integers (used while fitting,
    where the exponent is treated as continuous).
    """
    if mode not in K_MODES:
        raise DomainError(f"k mode must be one of {K_MODES}, got {mode!r}")
    if mode == "interp":
        return k_alpha_interp(alpha_r)
    if mode == "exact" or _is_integral(alpha_r):
        return k_alpha_exact(alpha_r)
    return k_alpha_interp(alpha_r)


def _reciprocal_prefactor(geom: ScatterGeometry, src: SourceParameters, par: ErParameters):
    amplitude = (src.k_i * par.s / (geom.r_i * geom.r_s)) ** 2 * par.power_factor * geom.dS
    projection = np.sqrt(cos_elevation(geom.incidence.theta) * cos_elevation(geom.observation.theta))
    return amplitude * projection


def _lobe(cos_psi, alpha):
    return np.power(0.5 * (1.0 + cos_psi), alpha)


def e_s_squared_rer(geom: ScatterGeometry, src: SourceParameters, par: ErParameters, k_mode: str = "auto"):
    """Scattered |E_S|^2 of the reciprocal single-lobe model.

    Invariant under exchange of incidence and observation directions and zero
    when either direction is grazing.
    """
    k = k_alpha(par.alpha_r, k_mode)
    lobe = _lobe(cos_psi_r(geom.incidence, geom.observation), par.alpha_r)
    return _reciprocal_prefactor(geom, src, par) * (lobe / k)


def e_s_squared_double(geom: ScatterGeometry, src: SourceParameters, par: ErParameters, k_mode: str = "auto"):
    """Scattered |E_S|^2 of the reciprocal double-lobe model.

    Each lobe is normalized with its own k(alpha); ``par.lam`` weights the
    specular lobe and ``1 - par.lam`` the backscatter lobe.
    """
    inc, obs = geom.incidence, geom.observation
    forward = _lobe(cos_psi_r(inc, obs), par.alpha_r) / k_alpha(par.alpha_r, k_mode)
    backward = _lobe(cos_psi_i(inc, obs), par.alpha_i) / k_alpha(par.alpha_i, k_mode)
    return _reciprocal_prefactor(geom, src, par) * (par.lam * forward + (1.0 - par.lam) * backward)
