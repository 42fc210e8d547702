"""Numerical checks on the scattering models.

Everything here is computed by brute-force hemispherical quadrature and is
independent of the closed-form sums in :mod:`erscatter.models`:

* :func:`integrate_pattern` integrates any pattern over the backscattering
  hemisphere with the ``sin(theta_S)`` Jacobian;
* :func:`power_balance_anomaly` measures how much scattered power the
  ``sqrt(cos theta_i)`` normalization gains or loses;
* :func:`legacy_reciprocity_defect`, :func:`double_lobe_sign_check` and
  :func:`pattern_peak` support the reciprocity and pattern-shape studies.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import DomainError
from .geometry import HALF_PI, Direction, cos_elevation, cos_psi_i, cos_psi_r
from .models import f_alpha_closed, pattern_legacy, pattern_rer

Pattern = Callable[[Direction, Direction], "np.ndarray | float"]

MAX_THETA_NODES = 2048
MAX_PHI_NODES = 4096


@dataclass(frozen=True)
class QuadratureSpec:
    """Starting node counts and the relative stopping tolerance.

    Node counts are doubled until two successive estimates agree to
    ``target_rel_tol`` or the caps are reached.
    """

    n_theta: int = 32
    n_phi: int = 64
    target_rel_tol: float = 1e-9
    max_theta: int = MAX_THETA_NODES
    max_phi: int = MAX_PHI_NODES

    def __post_init__(self):
        if self.n_theta < 8:
            raise DomainError(f"n_theta must be >= 8, got {self.n_theta}")
        if self.n_phi < 16:
            raise DomainError(f"n_phi must be >= 16, got {self.n_phi}")
        if not self.target_rel_tol > 0:
            raise DomainError(f"target_rel_tol must be positive, got {self.target_rel_tol}")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    converged: bool
    n_theta: int
    n_phi: int
    rel_change: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class AnomalyReport:
    """Power-balance anomaly at one incidence angle (radians)."""

    theta_i: float
    delta_rel: float
    gamma_used: float
    f_quadrature: float
    f_approx: float


@functools.lru_cache(maxsize=32)
def _elevation_rule(n: int):
    # theta = pi/2 (1 - w^2) with Gauss-Legendre in w on [0, 1]. The map
    # makes sqrt(cos theta) analytic in w at grazing, so convergence stays
    # spectral for the reciprocal patterns.
    x, wts = np.polynomial.legendre.leggauss(n)
    w = 0.5 * (x + 1.0)
    theta = HALF_PI * (1.0 - w * w)
    weights = 0.5 * wts * math.pi * w * np.sin(theta)
    theta.setflags(write=False)
    weights.setflags(write=False)
    return theta, weights


def _estimate(pattern: Pattern, inc: Direction, n_theta: int, n_phi: int) -> float:
    theta, weights = _elevation_rule(n_theta)
    # periodic trapezoid in azimuth, anchored on the incidence azimuth
    phi = inc.phi + (2.0 * math.pi / n_phi) * np.arange(n_phi)
    obs = Direction(theta[:, None], phi[None, :])
    values = np.broadcast_to(np.asarray(pattern(inc, obs), dtype=float), (n_theta, n_phi))
    ring = values.sum(axis=1) * (2.0 * math.pi / n_phi)
    return float(math.fsum(ring * weights))


def integrate_pattern(pattern: Pattern, inc: Direction, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Integrate ``pattern(inc, obs) sin(theta_S)`` over the hemisphere."""
    spec = spec or QuadratureSpec()
    n_theta = min(spec.n_theta, spec.max_theta)
    n_phi = min(spec.n_phi, spec.max_phi)
    previous = _estimate(pattern, inc, n_theta, n_phi)
    while True:
        if n_theta >= spec.max_theta and n_phi >= spec.max_phi:
            return QuadratureResult(previous, False, n_theta, n_phi, math.nan)
        n_theta = min(2 * n_theta, spec.max_theta)
        n_phi = min(2 * n_phi, spec.max_phi)
        current = _estimate(pattern, inc, n_theta, n_phi)
        change = abs(current - previous)
        scale = abs(current)
        rel_change = change / scale if scale > 0 else change
        if rel_change <= spec.target_rel_tol:
            return QuadratureResult(current, True, n_theta, n_phi, rel_change)
        previous = current


def _check_incidence_grid(theta_grid) -> list[float]:
    grid = [float(t) for t in theta_grid]
    for t in grid:
        if not (0.0 <= t < HALF_PI):
            raise DomainError(f"incidence angles must lie in [0, pi/2), got {t!r}")
    return grid


def rer_normalization(alpha_r, theta_i: float, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Quadrature of the RER pattern over the hemisphere at incidence ``theta_i``."""
    inc = Direction(theta_i, 0.0)
    return integrate_pattern(lambda i, o: pattern_rer(i, o, alpha_r), inc, spec)


def legacy_normalization(alpha_r, theta_i: float, spec: QuadratureSpec | None = None) -> QuadratureResult:
    inc = Direction(theta_i, 0.0)
    return integrate_pattern(lambda i, o: pattern_legacy(i, o, alpha_r), inc, spec)


def f_ratio_curve(alpha_r, theta_grid: Sequence[float], spec: QuadratureSpec | None = None):
    """Rows ``(theta_i, F(theta_i) / F(0), sqrt(cos theta_i))`` for the RER pattern."""
    grid = _check_incidence_grid(theta_grid)
    f0 = rer_normalization(alpha_r, 0.0, spec).value
    return [(t, rer_normalization(alpha_r, t, spec).value / f0, math.sqrt(math.cos(t))) for t in grid]


POLARIZATIONS = ("TE", "TM")


def fresnel_gamma(theta_i: float, eps_r: float, polarization: str = "TE") -> float:
    """|Gamma| for a lossless dielectric half-space of relative permittivity ``eps_r``."""
    if not eps_r >= 1.0:
        raise DomainError(f"eps_r must be >= 1, got {eps_r!r}")
    if not (0.0 <= theta_i <= HALF_PI):
        raise DomainError(f"theta_i must lie in [0, pi/2], got {theta_i!r}")
    pol = polarization.upper()
    if pol not in POLARIZATIONS:
        raise DomainError(f"polarization must be TE or TM, got {polarization!r}")
    if theta_i == HALF_PI:
        return 1.0
    c = math.cos(theta_i)
    root = math.sqrt(eps_r - math.sin(theta_i) ** 2)
    if pol == "TE":
        return abs(c - root) / (c + root)
    return abs(eps_r * c - root) / (eps_r * c + root)


def power_balance_anomaly(
    alpha_r,
    s: float,
    eps_r: float,
    polarization: str,
    theta_grid: Sequence[float],
    spec: QuadratureSpec | None = None,
) -> list[AnomalyReport]:
    """Excess scattered power, as a fraction of incident power, per incidence angle.

    ``k(alpha)`` is taken as the quadrature at normal incidence, which is its
    definition; for integer exponents it matches :func:`k_alpha_exact` to the
    quadrature tolerance, and it makes the anomaly vanish identically at
    ``theta_i = 0``.
    """
    if not (0.0 <= s <= 1.0):
        raise DomainError(f"s must lie in [0, 1], got {s!r}")
    grid = _check_incidence_grid(theta_grid)
    k = rer_normalization(alpha_r, 0.0, spec).value
    reports = []
    for t in grid:
        gamma = fresnel_gamma(t, eps_r, polarization)
        f_quad = rer_normalization(alpha_r, t, spec).value if t != 0.0 else k
        f_approx = k * math.sqrt(math.cos(t))
        delta = s * s * gamma * gamma * (f_quad / f_approx - 1.0)
        reports.append(AnomalyReport(t, delta, gamma, f_quad, f_approx))
    return reports


def legacy_reciprocity_defect(alpha_r, theta_grid: Sequence[float]):
    """Rows ``(theta_i, cos(theta_i) / F(theta_i))`` of the legacy model.

    A constant curve would make the legacy model reciprocal.
    """
    grid = _check_incidence_grid(theta_grid)
    return [(t, math.cos(t) / f_alpha_closed(t, alpha_r)) for t in grid]


def _sqrt_cos_lobe(kernel, alpha):
    def pattern(inc, obs):
        return np.sqrt(cos_elevation(obs.theta)) * np.power(0.5 * (1.0 + kernel(inc, obs)), alpha)

    return pattern


def sign_check_curve(alpha, theta_grid: Sequence[float], spec: QuadratureSpec | None = None):
    """Rows ``(theta_i, F_specular, F_backscatter, relative difference)``.

    The two integrals use the specular and the incidence-direction kernel
    respectively and should coincide for equal exponents.
    """
    grid = _check_incidence_grid(theta_grid)
    rows = []
    for t in grid:
        inc = Direction(t, 0.0)
        f_r = integrate_pattern(_sqrt_cos_lobe(cos_psi_r, alpha), inc, spec).value
        f_i = integrate_pattern(_sqrt_cos_lobe(cos_psi_i, alpha), inc, spec).value
        rows.append((t, f_r, f_i, abs(f_r - f_i) / abs(f_r)))
    return rows


def double_lobe_sign_check(alpha, theta_grid: Sequence[float], spec: QuadratureSpec | None = None) -> float:
    return max(row[3] for row in sign_check_curve(alpha, theta_grid, spec))


PEAK_GRID_STEP_DEG = 0.01


def pattern_peak(model: str, alpha_r, theta_i: float) -> float:
    """In-plane elevation (radians) of the pattern maximum.

    Searches the specular half-plane (``phi_S = phi_i + pi``) on a 0.01 degree
    grid, then refines around the best node. Ties resolve to the smaller
    elevation.
    """
    if model == "legacy":
        def pattern(inc, obs):
            return pattern_legacy(inc, obs, alpha_r)
    elif model == "rer":
        def pattern(inc, obs):
            return pattern_rer(inc, obs, alpha_r)
    else:
        raise DomainError(f"model must be 'legacy' or 'rer', got {model!r}")
    inc = Direction(theta_i, 0.0)
    n = int(round(90.0 / PEAK_GRID_STEP_DEG))
    grid = np.minimum(np.deg2rad(np.arange(n + 1) * PEAK_GRID_STEP_DEG), HALF_PI)
    values = pattern(inc, Direction(grid, math.pi))
    best = int(np.argmax(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, n)]
    if hi <= lo:
        return float(grid[best])
    res = minimize_scalar(
        lambda t: -float(pattern(inc, Direction(t, math.pi))),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if res.success and -res.fun > values[best]:
        return float(res.x)
    return float(grid[best])
