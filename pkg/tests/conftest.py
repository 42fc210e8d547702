import math

import numpy as np
import pytest

from erscatter.calibration import PatternSample
from erscatter.geometry import Direction, ScatterGeometry
from erscatter.models import ErParameters, SourceParameters, e_s_squared_double, e_s_squared_rer


def semicircle(n):
    """n in-plane observation directions spanning both half-planes, avoiding grazing."""
    edges = np.linspace(-90.0, 90.0, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return [Direction.from_degrees(abs(d), 180.0 if d >= 0 else 0.0) for d in mids]


def synth_samples(par: ErParameters, n=36, theta_i_deg=30.0, noise_db=0.0, seed=0, model="rer", k_mode="exact",
                  observations=None):
    observations = observations or semicircle(n)
    inc = Direction.from_degrees(theta_i_deg, 0.0)
    fn = e_s_squared_rer if model == "rer" else e_s_squared_double
    rng = np.random.default_rng(seed)
    samples = []
    for obs in observations:
        power = 10 * math.log10(fn(ScatterGeometry(inc, obs), SourceParameters(1.0), par, k_mode=k_mode))
        samples.append(PatternSample(obs, power + (rng.normal(0, noise_db) if noise_db else 0.0)))
    return samples, ScatterGeometry(inc, inc)


@pytest.fixture
def unit_source():
    return SourceParameters(1.0)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
