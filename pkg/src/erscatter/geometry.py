"""Angles on the backscattering hemisphere and the two angular kernels.

Elevations are measured from the surface normal, so ``theta = 0`` is normal
incidence and ``theta = pi/2`` is grazing. All angles are in radians.

:class:`Direction` accepts scalars or numpy arrays, which lets the quadrature
code evaluate a pattern on a whole node grid in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi


def _as_value(x):
    if np.ndim(x) == 0:
        return float(x)
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Direction:
    """Elevation ``theta`` in [0, pi/2] and azimuth ``phi`` in [0, 2 pi)."""

    theta: float | np.ndarray
    phi: float | np.ndarray = 0.0

    def __post_init__(self):
        theta = _as_value(self.theta)
        phi = _as_value(self.phi)
        if np.any(~np.isfinite(theta)) or np.any(~np.isfinite(phi)):
            raise DomainError("direction angles must be finite")
        if np.any(theta < 0.0) or np.any(theta > HALF_PI):
            raise DomainError(f"theta must lie in [0, pi/2], got {self.theta!r}")
        phi = np.mod(phi, TWO_PI)
        if np.ndim(phi) == 0:
            phi = float(phi)
            # mod can round up to exactly 2 pi for tiny negative inputs
            if phi >= TWO_PI:
                phi = 0.0
        else:
            phi[phi >= TWO_PI] = 0.0
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg=0.0) -> Direction:
        return cls(np.deg2rad(theta_deg), np.deg2rad(phi_deg))

    def mirrored(self) -> Direction:
        """Same elevation, azimuth rotated by pi."""
        return Direction(self.theta, self.phi + math.pi)


@dataclass(frozen=True)
class ScatterGeometry:
    """Incidence/observation pair plus link distances and element area."""

    incidence: Direction
    observation: Direction
    r_i: float = 1.0
    r_s: float = 1.0
    dS: float = 1.0

    def __post_init__(self):
        for name in ("r_i", "r_s", "dS"):
            value = getattr(self, name)
            arr = np.asarray(value, dtype=float)
            if not np.all((arr > 0) & np.isfinite(arr)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    def exchanged(self) -> ScatterGeometry:
        """Geometry with transmitter and receiver swapped."""
        return ScatterGeometry(self.observation, self.incidence, self.r_s, self.r_i, self.dS)


def _clip(x):
    if np.ndim(x) == 0:
        return min(1.0, max(-1.0, float(x)))
    return np.clip(x, -1.0, 1.0)


def _azimuthal_term(inc: Direction, obs: Direction):
    return np.sin(inc.theta) * np.sin(obs.theta) * np.cos(obs.phi - inc.phi)


def cos_psi_r(inc: Direction, obs: Direction):
    """Cosine of the angle between the observation and specular directions."""
    return _clip(np.cos(inc.theta) * np.cos(obs.theta) - _azimuthal_term(inc, obs))


def cos_psi_i(inc: Direction, obs: Direction):
    """Cosine of the angle between the observation and incidence directions."""
    return _clip(np.cos(inc.theta) * np.cos(obs.theta) + _azimuthal_term(inc, obs))


def cos_elevation(theta):
    """cos(theta) with an exact zero at grazing (cos(pi/2) rounds to 6e-17)."""
    if np.ndim(theta) == 0:
        return 0.0 if theta == HALF_PI else math.cos(theta)
    return np.where(theta == HALF_PI, 0.0, np.cos(theta))
