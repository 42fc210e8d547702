"""Scenario files: ``key = value`` lines describing one scattering setup.

Blank lines and ``#`` comments are ignored. Recognised keys::

    model          legacy | rer | double
    s              scattering coefficient S in [0, 1]
    alpha_r        forward-lobe exponent
    alpha_i        backscatter-lobe exponent (double model)
    lambda         forward-lobe power share (double model)
    gamma          |reflection coefficient|; computed from eps_r if absent
    eps_r          relative permittivity of the wall (lossless)
    polarization   TE | TM
    u_mode         reflected | incident
    k_i            source amplitude constant in V, or instead:
    p_t, g_t       transmit power in W and gain towards the surface
    theta_i_deg, phi_i_deg
    r_i_m, r_s_m, dS_m2
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .exceptions import DomainError
from .geometry import Direction, ScatterGeometry
from .models import ErParameters, SourceParameters, U_MODES
from .oracle import fresnel_gamma

MODELS = ("legacy", "rer", "double")


class ScenarioError(DomainError):
    pass


@dataclass(frozen=True)
class Scenario:
    model: str = "rer"
    s: float = 0.4
    alpha_r: float = 2.0
    alpha_i: float = 2.0
    lam: float = 1.0
    gamma: float | None = None
    eps_r: float = 5.0
    polarization: str = "TE"
    u_mode: str = "reflected"
    k_i: float | None = None
    p_t: float | None = None
    g_t: float | None = None
    theta_i_deg: float = 30.0
    phi_i_deg: float = 0.0
    r_i_m: float = 1.0
    r_s_m: float = 1.0
    dS_m2: float = 1.0

    def validate(self) -> Scenario:
        if self.model not in MODELS:
            raise ScenarioError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.polarization not in ("TE", "TM"):
            raise ScenarioError(f"polarization must be TE or TM, got {self.polarization!r}")
        if self.u_mode not in U_MODES:
            raise ScenarioError(f"u_mode must be one of {U_MODES}, got {self.u_mode!r}")
        if self.k_i is not None and (self.p_t is not None or self.g_t is not None):
            raise ScenarioError("give either k_i or p_t/g_t, not both")
        if (self.p_t is None) != (self.g_t is None):
            raise ScenarioError("p_t and g_t must be given together")
        if not self.eps_r >= 1.0:
            raise ScenarioError(f"eps_r must be >= 1, got {self.eps_r!r}")
        if self.model == "legacy" and not float(self.alpha_r).is_integer():
            raise ScenarioError(f"the legacy model needs an integer alpha_r, got {self.alpha_r!r}")
        # building the derived objects runs the remaining range checks
        self.parameters()
        self.source()
        self.geometry(self.incidence())
        return self

    def incidence(self) -> Direction:
        return Direction.from_degrees(self.theta_i_deg, self.phi_i_deg)

    def reflection_gamma(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return fresnel_gamma(math.radians(self.theta_i_deg), self.eps_r, self.polarization)

    def parameters(self) -> ErParameters:
        return ErParameters(
            s=self.s,
            alpha_r=self.alpha_r,
            alpha_i=self.alpha_i,
            lam=self.lam,
            gamma=self.reflection_gamma(),
            u_mode=self.u_mode,
        )

    def source(self) -> SourceParameters:
        if self.p_t is not None:
            return SourceParameters.from_power(self.p_t, self.g_t)
        return SourceParameters(1.0 if self.k_i is None else self.k_i)

    def geometry(self, observation: Direction) -> ScatterGeometry:
        return ScatterGeometry(self.incidence(), observation, self.r_i_m, self.r_s_m, self.dS_m2)

    def with_overrides(self, **overrides) -> Scenario:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


_KEY_ALIASES = {"lambda": "lam", "pol": "polarization"}
_STRING_KEYS = {"model", "polarization", "u_mode"}


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    known = {f.name for f in fields(Scenario)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _KEY_ALIASES.get(key, key)
        if key not in known:
            raise ScenarioError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ScenarioError(f"{source}:{lineno}: duplicate key {key!r}")
        if key in _STRING_KEYS:
            values[key] = value.upper() if key == "polarization" else value.lower()
            continue
        try:
            number = float(value)
        except ValueError:
            raise ScenarioError(f"{source}:{lineno}: {key} must be a number, got {value!r}") from None
        if not math.isfinite(number):
            raise ScenarioError(f"{source}:{lineno}: {key} must be finite, got {value!r}")
        values[key] = number
    return Scenario(**values)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))
