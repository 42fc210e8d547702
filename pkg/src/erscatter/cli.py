"""Batch command-line interface.

Subcommands::

    erscatter pattern         tabulate a scattering pattern or |E_S|^2 to CSV
    erscatter normalization   closed form vs quadrature vs sqrt(cos) approximant
    erscatter verify KIND     reciprocity | power-balance | sign-check
    erscatter fit             fit S and lobe exponents to a pattern CSV

Angles are given and reported in degrees. Exit codes: 0 pass, 1 a checked
bound failed (or a fit did not converge), 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import oracle
from .calibration import FitOptions, PatternSample, fit_double_lobe, fit_single_lobe
from .exceptions import DomainError
from .geometry import HALF_PI, Direction, ScatterGeometry, cos_elevation, cos_psi_i, cos_psi_r
from .models import (
    e_s_squared_double,
    e_s_squared_legacy,
    e_s_squared_rer,
    f_alpha_closed,
    k_alpha,
    pattern_legacy,
    pattern_rer,
)
from .scenario import Scenario, load_scenario

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2

RECIPROCITY_BOUND = 1e-12
ANOMALY_BOUND = 0.01
SIGN_CHECK_BOUND = 1e-8

PATTERN_HEADER = ("theta_s_deg", "phi_s_deg", "value")
FIT_HEADER = ("theta_s_deg", "phi_s_deg", "power_db")


class InputError(Exception):
    pass


def fmt(x) -> str:
    return format(float(x), ".15g")


def _write_atomic(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".erscatter-")
    except OSError as exc:
        raise InputError(f"cannot write {target}: {exc.strerror}") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except OSError as exc:
        os.unlink(tmp)
        raise InputError(f"cannot write {target}: {exc.strerror}") from None


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


# ---------------------------------------------------------------------------
# scenario handling
# ---------------------------------------------------------------------------


def _add_scenario_args(p: argparse.ArgumentParser, model=True):
    p.add_argument("--scenario", help="key = value scenario file")
    if model:
        p.add_argument("--model", choices=("legacy", "rer", "double"))
    p.add_argument("--alpha-r", type=float)
    p.add_argument("--alpha-i", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--eps-r", type=float)
    p.add_argument("--pol", choices=("TE", "TM"))
    p.add_argument("--theta-i", type=float, help="incidence elevation, degrees")
    p.add_argument("--phi-i", type=float, help="incidence azimuth, degrees")


def _scenario(args) -> Scenario:
    base = load_scenario(args.scenario) if args.scenario else Scenario()
    return base.with_overrides(
        model=getattr(args, "model", None),
        alpha_r=args.alpha_r,
        alpha_i=args.alpha_i,
        lam=args.lam,
        s=args.s,
        eps_r=args.eps_r,
        polarization=args.pol,
        theta_i_deg=args.theta_i,
        phi_i_deg=args.phi_i,
    ).validate()


def _field_function(model: str):
    return {"legacy": e_s_squared_legacy, "rer": e_s_squared_rer, "double": e_s_squared_double}[model]


def _normalized_pattern(sc: Scenario, inc: Direction, obs: Direction):
    if sc.model == "legacy":
        return pattern_legacy(inc, obs, sc.alpha_r)
    if sc.model == "rer":
        return pattern_rer(inc, obs, sc.alpha_r)
    forward = np.power(0.5 * (1.0 + cos_psi_r(inc, obs)), sc.alpha_r)
    backward = np.power(0.5 * (1.0 + cos_psi_i(inc, obs)), sc.alpha_i)
    return np.sqrt(cos_elevation(obs.theta)) * (sc.lam * forward + (1.0 - sc.lam) * backward)


# ---------------------------------------------------------------------------
# pattern
# ---------------------------------------------------------------------------


def _pattern_grid(args, sc: Scenario):
    if args.in_plane:
        if not 0 < args.step <= 90:
            raise InputError("--step must lie in (0, 90]")
        n = int(round(90.0 / args.step))
        if not math.isclose(n * args.step, 90.0):
            raise InputError("--step must divide 90 degrees")
        thetas = np.linspace(0.0, 90.0, n + 1)
        rows = []
        back = sc.phi_i_deg % 360.0
        spec = (sc.phi_i_deg + 180.0) % 360.0
        for t in thetas:
            azimuths = [spec] if t == 0.0 else sorted((back, spec))
            rows.extend((t, p) for p in azimuths)
        return rows
    try:
        n_theta, n_phi = (int(x) for x in args.grid.split(","))
    except ValueError:
        raise InputError(f"--grid must be 'N_THETA,N_PHI', got {args.grid!r}") from None
    if n_theta < 2 or n_phi < 1:
        raise InputError("--grid needs N_THETA >= 2 and N_PHI >= 1")
    thetas = np.linspace(0.0, 90.0, n_theta)
    phis = sorted({(sc.phi_i_deg + 360.0 * k / n_phi) % 360.0 for k in range(n_phi)})
    return [(t, p) for t in thetas for p in phis]


def cmd_pattern(args) -> int:
    sc = _scenario(args)
    if args.noise < 0:
        raise InputError("--noise must be >= 0")
    if args.noise and args.value != "power-db":
        raise InputError("--noise only applies to --value power-db")
    rows = _pattern_grid(args, sc)
    theta_deg = np.array([r[0] for r in rows])
    phi_deg = np.array([r[1] for r in rows])
    obs = Direction(np.deg2rad(theta_deg), np.deg2rad(phi_deg))
    inc = sc.incidence()
    if args.value == "pattern":
        values = np.broadcast_to(_normalized_pattern(sc, inc, obs), theta_deg.shape)
        header = PATTERN_HEADER
    else:
        values = _field_function(sc.model)(sc.geometry(obs), sc.source(), sc.parameters())
        values = np.broadcast_to(values, theta_deg.shape)
        header = PATTERN_HEADER
        if args.value == "power-db":
            with np.errstate(divide="ignore"):
                values = 10.0 * np.log10(values)
            if args.noise:
                values = values + np.random.default_rng(args.seed).normal(0.0, args.noise, values.shape)
            header = FIT_HEADER
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for t, p, v in zip(theta_deg, phi_deg, values):
        buf.write(f"{fmt(t)},{fmt(p)},{fmt(v)}\n")
    _write_atomic(args.out, buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


def _rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a - b)


def cmd_normalization(args) -> int:
    if not float(args.alpha_r).is_integer() or args.alpha_r < 0:
        raise InputError(f"--alpha-r must be a nonnegative integer, got {args.alpha_r}")
    if not 0.0 <= args.theta_i < 90.0:
        raise InputError(f"--theta-i must lie in [0, 90), got {args.theta_i}")
    alpha = int(args.alpha_r)
    theta = math.radians(args.theta_i)
    spec = oracle.QuadratureSpec(target_rel_tol=args.tol)
    closed = f_alpha_closed(theta, alpha)
    quad = oracle.legacy_normalization(alpha, theta, spec)
    rer_quad = oracle.rer_normalization(alpha, theta, spec)
    k = k_alpha(alpha)
    approx = k * math.sqrt(math.cos(theta))
    report = {
        "alpha_r": alpha,
        "theta_i_deg": args.theta_i,
        "closed_form": closed,
        "quadrature": quad.value,
        "quadrature_converged": quad.converged,
        "rel_diff_closed_vs_quadrature": _rel(closed, quad.value),
        "k_alpha": k,
        "rer_quadrature": rer_quad.value,
        "rer_quadrature_converged": rer_quad.converged,
        "approximant": approx,
        "rel_diff_approximant_vs_rer_quadrature": _rel(approx, rer_quad.value),
    }
    if args.format == "json":
        text = _dump_json(report)
    else:
        text = "".join(
            f"{key}: {fmt(v) if isinstance(v, float) else v}\n" for key, v in report.items()
        )
    _write_atomic(args.out, text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _angle_grid(theta_max: float, step: float):
    if not 0.0 <= theta_max < 90.0:
        raise InputError(f"--theta-max must lie in [0, 90), got {theta_max}")
    if not step > 0:
        raise InputError(f"--step must be positive, got {step}")
    n = int(math.floor(theta_max / step + 1e-9))
    degrees = [i * step for i in range(n + 1)]
    if not math.isclose(degrees[-1], theta_max):
        degrees.append(theta_max)
    return degrees


def _verify_reciprocity(args, sc: Scenario):
    if args.samples < 1:
        raise InputError("--samples must be >= 1")
    rng = np.random.default_rng(args.seed)
    n = args.samples
    theta_i = rng.uniform(0.0, 0.5 * math.pi, n)
    phi_i = rng.uniform(0.0, 2.0 * math.pi, n)
    theta_s = rng.uniform(0.0, 0.5 * math.pi, n)
    phi_s = rng.uniform(0.0, 2.0 * math.pi, n)
    fn = _field_function(sc.model)
    par = sc.parameters()
    src = sc.source()
    forward = fn(ScatterGeometry(Direction(theta_i, phi_i), Direction(theta_s, phi_s)), src, par)
    reverse = fn(ScatterGeometry(Direction(theta_s, phi_s), Direction(theta_i, phi_i)), src, par)
    scale = np.maximum(np.abs(forward), np.abs(reverse))
    with np.errstate(invalid="ignore", divide="ignore"):
        defect = np.where(scale > 0, np.abs(forward - reverse) / scale, 0.0)
    points = [
        {
            "theta_i_deg": math.degrees(ti),
            "phi_i_deg": math.degrees(pi),
            "theta_s_deg": math.degrees(ts),
            "phi_s_deg": math.degrees(ps),
            "forward": float(f),
            "reverse": float(r),
            "rel_defect": float(d),
        }
        for ti, pi, ts, ps, f, r, d in zip(theta_i, phi_i, theta_s, phi_s, forward, reverse, defect)
    ]
    return RECIPROCITY_BOUND, "rel_defect", points, {"model": sc.model, "samples": n, "seed": args.seed}


def _verify_power_balance(args, sc: Scenario):
    if not float(sc.alpha_r).is_integer():
        raise InputError("power-balance needs an integer --alpha-r")
    grid = [math.radians(d) for d in _angle_grid(args.theta_max, args.step)]
    spec = oracle.QuadratureSpec(target_rel_tol=args.tol)
    reports = oracle.power_balance_anomaly(int(sc.alpha_r), sc.s, sc.eps_r, sc.polarization, grid, spec)
    points = [
        {
            "theta_i": r.theta_i,
            "delta_rel": r.delta_rel,
            "gamma_used": r.gamma_used,
            "f_quadrature": r.f_quadrature,
            "f_approx": r.f_approx,
        }
        for r in reports
    ]
    meta = {"alpha_r": int(sc.alpha_r), "s": sc.s, "eps_r": sc.eps_r, "polarization": sc.polarization}
    return ANOMALY_BOUND, "delta_rel", points, meta


def _verify_sign_check(args, sc: Scenario):
    if not float(sc.alpha_r).is_integer():
        raise InputError("sign-check needs an integer --alpha-r")
    grid = [math.radians(d) for d in _angle_grid(args.theta_max, args.step)]
    spec = oracle.QuadratureSpec(target_rel_tol=args.tol)
    rows = oracle.sign_check_curve(int(sc.alpha_r), grid, spec)
    points = [
        {"theta_i_deg": math.degrees(t), "f_specular_kernel": fr, "f_incidence_kernel": fi, "rel_diff": d}
        for t, fr, fi, d in rows
    ]
    return SIGN_CHECK_BOUND, "rel_diff", points, {"alpha": int(sc.alpha_r)}


def cmd_verify(args) -> int:
    sc = _scenario(args)
    runner = {
        "reciprocity": _verify_reciprocity,
        "power-balance": _verify_power_balance,
        "sign-check": _verify_sign_check,
    }[args.kind]
    bound, key, points, meta = runner(args, sc)
    magnitudes = [abs(p[key]) for p in points]
    worst = max(magnitudes)
    failures = [p for p, m in zip(points, magnitudes) if not m <= bound]
    report = {
        "kind": args.kind,
        **meta,
        "bound": bound,
        "max_abs": worst,
        "passed": not failures,
        "first_failure": failures[0] if failures else None,
        "points": points,
    }
    _write_atomic(args.out, _dump_json(report))
    if failures:
        first = failures[0]
        where = ", ".join(f"{k}={fmt(v)}" for k, v in first.items())
        if "theta_i" in first:
            where += f" (theta_i = {fmt(math.degrees(first['theta_i']))} deg)"
        print(f"verify {args.kind}: FAIL, {key} bound {bound:g} exceeded (max {worst:.6g}); first offending point: {where}",
              file=sys.stderr)
        return EXIT_FAIL
    print(f"verify {args.kind}: PASS (max {key} {worst:.6g} <= {bound:g})", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def read_samples(path: str | Path) -> list[PatternSample]:
    """Parse a ``theta_s_deg,phi_s_deg,power_db`` CSV file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise InputError(f"{path}: empty file, expected header {','.join(FIT_HEADER)}")
    reader = csv.reader(lines)
    header = tuple(h.strip() for h in next(reader))
    if header != FIT_HEADER:
        raise InputError(f"{path}:1: expected header {','.join(FIT_HEADER)}, got {','.join(header)}")
    samples = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        try:
            theta, phi, power = (float(c) for c in row)
            samples.append(PatternSample(Direction.from_degrees(theta, phi), power))
        except (ValueError, DomainError) as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    return samples


def cmd_fit(args) -> int:
    sc = load_scenario(args.scenario) if args.scenario else Scenario()
    model = args.model or sc.model
    if model == "legacy":
        raise InputError("fitting supports the reciprocal models only (rer, double)")
    sc = sc.with_overrides(model=model).validate()
    samples = read_samples(args.input)
    # reciprocal models predict exactly zero at grazing observation, so -inf rows there carry no information
    grazing = [smp for smp in samples if smp.observation.theta == HALF_PI]
    if any(smp.power_db != -math.inf for smp in grazing):
        raise InputError(f"{args.input}: finite power at theta_s = 90 deg contradicts the {model} model (zero at grazing)")
    samples = [smp for smp in samples if smp.observation.theta != HALF_PI]
    minimum = 3 if model == "rer" else 5
    if len(samples) < minimum:
        raise InputError(f"{args.input}: need at least {minimum} samples for model {model}, got {len(samples)}")
    opts = FitOptions(n_starts=args.starts, seed=args.seed, alpha_max=args.alpha_max, round_alpha=args.round_alpha)
    template = sc.geometry(sc.incidence())
    fit = fit_single_lobe if model == "rer" else fit_double_lobe
    result = fit(samples, template, sc.source(), opts, gamma=sc.reflection_gamma(), u_mode=sc.u_mode)
    payload = {"model": model, "samples": len(samples), "dropped_grazing": len(grazing), **result.as_dict()}
    _write_atomic(args.out, _dump_json(payload))
    return EXIT_OK if result.converged else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erscatter", description="Effective Roughness diffuse-scattering models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="tabulate a scattering pattern to CSV")
    _add_scenario_args(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--grid", default="91,72", help="N_THETA,N_PHI hemisphere grid (default 91,72)")
    group.add_argument("--in-plane", action="store_true", help="plane of incidence only, both half-planes")
    p.add_argument("--step", type=float, default=1.0, help="in-plane elevation step, degrees")
    p.add_argument("--value", choices=("pattern", "field", "power-db"), default="pattern")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma in dB (power-db only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("normalization", help="normalization integral report")
    p.add_argument("--alpha-r", type=float, required=True)
    p.add_argument("--theta-i", type=float, default=0.0, help="degrees")
    p.add_argument("--tol", type=float, default=1e-9, help="quadrature relative tolerance")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_normalization)

    p = sub.add_parser("verify", help="check reciprocity, power balance or lobe sign symmetry")
    p.add_argument("kind", choices=("reciprocity", "power-balance", "sign-check"))
    _add_scenario_args(p)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta-max", type=float, default=85.0, help="degrees")
    p.add_argument("--step", type=float, default=5.0, help="degrees")
    p.add_argument("--tol", type=float, default=1e-9, help="quadrature relative tolerance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit", help="fit model parameters to a pattern CSV")
    p.add_argument("--input", required=True, help="CSV with theta_s_deg,phi_s_deg,power_db")
    p.add_argument("--scenario", help="scenario template (incidence, source, gamma/eps_r)")
    p.add_argument("--model", choices=("rer", "double"))
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha-max", type=float, default=100.0)
    p.add_argument("--round-alpha", action="store_true", help="round exponents and refit with exact k(alpha)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DomainError) as exc:
        print(f"erscatter: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
