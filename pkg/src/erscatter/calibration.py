"""Fit RER parameters to angular scattering-pattern samples.

The objective is the RMS difference in dB between ``10 log10 |E_S|^2`` and
the measured power. It is minimised with a multi-start, box-constrained
Nelder-Mead search. Lobe exponents are continuous during the search, so
``k(alpha)`` comes from the rational fit. With ``round_alpha=True`` the
exponents are then rounded, the remaining parameters are re-optimised with
the exact ``k(alpha)``, and the result is re-scored.

The source constant ``k_i`` stays fixed: S and k_i enter the field only as
(k_i S)^2, so fitting both is degenerate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .exceptions import DomainError
from .geometry import HALF_PI, Direction, ScatterGeometry
from .models import ErParameters, SourceParameters, e_s_squared_double, e_s_squared_rer


@dataclass(frozen=True)
class PatternSample:
    """One observation direction and the power (dB) seen there.

    ``-inf`` dB stands for zero received power.
    """

    observation: Direction
    power_db: float

    def __post_init__(self):
        if math.isnan(self.power_db) or self.power_db == math.inf:
            raise DomainError(f"power_db must be finite or -inf, got {self.power_db!r}")


@dataclass
class FitOptions:
    n_starts: int = 8
    seed: int = 0
    alpha_max: float = 100.0
    round_alpha: bool = False
    max_iter: int = 4000
    xatol: float = 1e-7
    fatol: float = 1e-10
    k_mode: str = "interp"
    fit_k_i: bool = False

    def __post_init__(self):
        if self.fit_k_i:
            raise DomainError("k_i cannot be fitted: it is degenerate with S through (k_i S)^2; fix it from the source")
        if self.n_starts < 1:
            raise DomainError(f"n_starts must be >= 1, got {self.n_starts}")


@dataclass
class FitResult:
    """Best parameters found, with diagnostics.

    ``rmse_db`` is scored with the same k(alpha) evaluation the search used
    (the rational fit, or the exact sum after ``round_alpha``). ``history``
    holds the best objective seen after each Nelder-Mead iteration, across
    all restarts in order.
    """

    s: float
    alpha_r: float
    rmse_db: float
    iterations: int
    converged: bool
    alpha_i: float | None = None
    lam: float | None = None
    history: list[float] = field(default_factory=list, repr=False)
    restarts: list[dict] = field(default_factory=list, repr=False)
    restart_spread: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "alpha_r": self.alpha_r,
            "alpha_i": self.alpha_i,
            "lambda": self.lam,
            "rmse_db": self.rmse_db,
            "iterations": self.iterations,
            "converged": self.converged,
            "restart_spread": dict(sorted(self.restart_spread.items())),
        }


def rmse_db(predicted: Sequence[float], measured: Sequence[float]) -> float:
    """Root-mean-square dB difference; matching -inf entries count as zero error."""
    p = np.asarray(predicted, dtype=float)
    m = np.asarray(measured, dtype=float)
    if p.size == 0 or p.shape != m.shape:
        raise DomainError(f"rmse_db needs two equal-length non-empty sequences, got {p.shape} and {m.shape}")
    with np.errstate(invalid="ignore"):
        diff = np.where((p == m) & np.isinf(p), 0.0, p - m)
    return float(np.sqrt(np.mean(diff * diff)))


def _sample_geometry(samples: Sequence[PatternSample], template: ScatterGeometry) -> ScatterGeometry:
    thetas = np.array([s.observation.theta for s in samples], dtype=float)
    phis = np.array([s.observation.phi for s in samples], dtype=float)
    return ScatterGeometry(template.incidence, Direction(thetas, phis), template.r_i, template.r_s, template.dS)


def predicted_db(model: str, geom: ScatterGeometry, src: SourceParameters, par: ErParameters, k_mode="auto"):
    field_fn = e_s_squared_rer if model == "rer" else e_s_squared_double
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(field_fn(geom, src, par, k_mode=k_mode))


def _validate(samples, template, minimum):
    if len(samples) < minimum:
        raise DomainError(f"need at least {minimum} samples, got {len(samples)}")
    if np.ndim(template.incidence.theta) != 0:
        raise DomainError("the geometry template needs a single incidence direction")
    if template.incidence.theta == HALF_PI:
        raise DomainError("grazing incidence scatters no power; nothing to fit")
    for smp in samples:
        if smp.observation.theta == HALF_PI:
            raise DomainError("samples at grazing observation carry no information (model power is 0)")
    powers = np.array([s.power_db for s in samples])
    silent = np.isneginf(powers)
    if silent.any() and not silent.all():
        raise DomainError("samples mix zero power (-inf dB) with finite power")
    return powers, bool(silent.all())


class _Problem:
    """Box-constrained objective over a subset of (s, alpha_r, alpha_i, lam)."""

    def __init__(self, model, names, base, geom, src, measured, k_mode, bounds):
        self.model = model
        self.names = names
        self.base = base
        self.geom = geom
        self.src = src
        self.measured = measured
        self.k_mode = k_mode
        self.bounds = bounds
        self.best = math.inf
        self.history: list[float] = []

    def params(self, x) -> ErParameters:
        clipped = {n: float(np.clip(v, lo, hi)) for n, v, (lo, hi) in zip(self.names, x, self.bounds)}
        return replace(self.base, **clipped)

    def score(self, par: ErParameters, k_mode=None) -> float:
        pred = predicted_db(self.model, self.geom, self.src, par, k_mode or self.k_mode)
        return rmse_db(pred, self.measured)

    def __call__(self, x) -> float:
        value = self.score(self.params(x))
        if not math.isfinite(value):
            value = 1e6
        self.best = min(self.best, value)
        return value

    def record(self, _xk=None):
        self.history.append(self.best)


def _run(problem: _Problem, starts, opts: FitOptions):
    runs = []
    iterations = 0
    for x0 in starts:
        res = minimize(
            problem,
            x0,
            method="Nelder-Mead",
            bounds=problem.bounds,
            callback=problem.record,
            options={"maxiter": opts.max_iter, "xatol": opts.xatol, "fatol": opts.fatol, "adaptive": len(x0) > 2},
        )
        iterations += int(res.nit)
        runs.append((float(res.fun), problem.params(res.x), bool(res.success)))
    runs.sort(key=lambda r: r[0])
    return runs, iterations


def _starts(rng, bounds, n, anchors):
    starts = [np.array(a, dtype=float) for a in anchors][:n]
    while len(starts) < n:
        starts.append(np.array([rng.uniform(lo, hi) for lo, hi in bounds]))
    return starts


def _spread(runs, names, tol_db=0.01):
    best = runs[0][0]
    near = [par for fun, par, _ in runs if fun <= best + tol_db]
    return {n: max(getattr(p, n) for p in near) - min(getattr(p, n) for p in near) for n in names}


def _fit(model, names, samples, template, src, base, bounds, anchors, opts: FitOptions, minimum):
    measured, silent = _validate(samples, template, minimum)
    if silent:
        # every sample is zero power: only S = 0 reproduces that
        par = replace(base, s=0.0)
        return FitResult(0.0, par.alpha_r, 0.0, 0, True,
                         alpha_i=par.alpha_i if model == "double" else None,
                         lam=par.lam if model == "double" else None)
    geom = _sample_geometry(samples, template)
    problem = _Problem(model, names, base, geom, src, measured, opts.k_mode, bounds)
    rng = np.random.default_rng(opts.seed)
    runs, iterations = _run(problem, _starts(rng, bounds, opts.n_starts, anchors), opts)
    best_fun, best_par, converged = runs[0]
    spread = _spread(runs, names)

    if opts.round_alpha:
        rounded = {n: float(round(getattr(best_par, n))) for n in names if n.startswith("alpha")}
        base_r = replace(best_par, **rounded)
        free = [n for n in names if not n.startswith("alpha")]
        fixed = _Problem(model, free, base_r, geom, src, measured, "exact",
                         [b for n, b in zip(names, bounds) if n in free])
        x0 = [getattr(base_r, n) for n in free]
        res = minimize(fixed, x0, method="Nelder-Mead", bounds=fixed.bounds,
                       callback=fixed.record,
                       options={"maxiter": opts.max_iter, "xatol": opts.xatol, "fatol": opts.fatol})
        iterations += int(res.nit)
        best_par = fixed.params(res.x)
        best_fun = fixed.score(best_par)
        converged = converged and bool(res.success)
    else:
        best_fun = problem.score(best_par)

    return FitResult(
        s=best_par.s,
        alpha_r=best_par.alpha_r,
        rmse_db=best_fun,
        iterations=iterations,
        converged=converged,
        alpha_i=best_par.alpha_i if model == "double" else None,
        lam=best_par.lam if model == "double" else None,
        history=problem.history,
        restarts=[{"rmse_db": f, **{n: getattr(p, n) for n in names}} for f, p, _ in runs],
        restart_spread=spread,
    )


def fit_single_lobe(
    samples: Sequence[PatternSample],
    geom_template: ScatterGeometry,
    src: SourceParameters,
    opts: FitOptions | None = None,
    gamma: float = 1.0,
    u_mode: str = "reflected",
) -> FitResult:
    """Fit (S, alpha_r) of the single-lobe RER model."""
    opts = opts or FitOptions()
    base = ErParameters(s=0.5, alpha_r=1.0, gamma=gamma, u_mode=u_mode)
    bounds = [(0.0, 1.0), (0.0, opts.alpha_max)]
    anchors = [(0.5, 1.0), (0.3, 4.0), (0.7, 10.0)]
    return _fit("rer", ["s", "alpha_r"], samples, geom_template, src, base, bounds, anchors, opts, 3)


def fit_double_lobe(
    samples: Sequence[PatternSample],
    geom_template: ScatterGeometry,
    src: SourceParameters,
    opts: FitOptions | None = None,
    gamma: float = 1.0,
    u_mode: str = "reflected",
) -> FitResult:
    """Fit (S, alpha_r, alpha_i, lambda) of the double-lobe RER model.

    ``restart_spread`` reports how far apart the near-optimal restarts ended
    up; a wide spread flags a parameter the samples do not pin down.
    """
    opts = opts or FitOptions()
    base = ErParameters(s=0.5, alpha_r=1.0, alpha_i=1.0, lam=0.5, gamma=gamma, u_mode=u_mode)
    bounds = [(0.0, 1.0), (0.0, opts.alpha_max), (0.0, opts.alpha_max), (0.0, 1.0)]
    anchors = [(0.5, 2.0, 2.0, 0.5), (0.5, 4.0, 1.0, 0.8), (0.3, 8.0, 4.0, 0.6)]
    return _fit("double", ["s", "alpha_r", "alpha_i", "lam"], samples, geom_template, src, base, bounds, anchors, opts, 5)
