import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from erscatter.exceptions import DomainError
from erscatter.geometry import Direction, ScatterGeometry, cos_elevation, cos_psi_i, cos_psi_r

elevations = st.floats(min_value=0.0, max_value=math.pi / 2)
azimuths = st.floats(min_value=-10.0, max_value=10.0)


def deg(theta, phi=0.0):
    return Direction.from_degrees(theta, phi)


class TestDirection:
    def test_phi_normalized(self):
        d = Direction(0.3, -math.pi / 2)
        assert d.phi == pytest.approx(1.5 * math.pi)
        assert 0 <= Direction(0.3, 7.0).phi < 2 * math.pi

    @pytest.mark.parametrize("theta", [-1e-9, math.pi / 2 + 1e-9, math.nan])
    def test_out_of_hemisphere_rejected(self, theta):
        with pytest.raises(DomainError):
            Direction(theta, 0.0)

    def test_grazing_allowed(self):
        assert Direction.from_degrees(90.0).theta == math.pi / 2

    def test_arrays(self):
        d = Direction(np.array([0.0, 0.5]), np.array([-1.0, 7.0]))
        assert d.phi.shape == (2,)
        assert np.all((d.phi >= 0) & (d.phi < 2 * math.pi))


class TestScatterGeometry:
    @pytest.mark.parametrize("field", ["r_i", "r_s", "dS"])
    def test_positive_required(self, field):
        kwargs = {"r_i": 1.0, "r_s": 1.0, "dS": 1.0, field: 0.0}
        with pytest.raises(DomainError):
            ScatterGeometry(deg(10), deg(20), **kwargs)

    def test_exchange(self):
        g = ScatterGeometry(deg(10, 5), deg(20, 50), 2.0, 3.0, 0.5).exchanged()
        assert g.incidence == deg(20, 50)
        assert (g.r_i, g.r_s, g.dS) == (3.0, 2.0, 0.5)


class TestCosPsiR:
    def test_specular_direction(self):
        assert cos_psi_r(deg(45, 0), deg(45, 180)) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("theta_s", [0, 20, 55, 90])
    def test_normal_incidence(self, theta_s):
        for phi in (0, 77, 300):
            assert cos_psi_r(deg(0, phi), deg(theta_s, 123)) == pytest.approx(math.cos(math.radians(theta_s)), abs=1e-15)

    def test_in_plane_reduces_to_elevation_difference(self):
        assert cos_psi_r(deg(60, 0), deg(30, 180)) == pytest.approx(math.cos(math.radians(30)), abs=1e-15)
        assert cos_psi_r(deg(60, 0), deg(30, 180)) == pytest.approx(0.8660254037844387)


class TestCosPsiI:
    def test_backscatter_direction(self):
        assert cos_psi_i(deg(35, 20), deg(35, 20)) == pytest.approx(1.0, abs=1e-15)

    def test_normal_incidence(self):
        assert cos_psi_i(deg(0), deg(40, 10)) == pytest.approx(math.cos(math.radians(40)), abs=1e-15)

    @given(elevations, azimuths, elevations, azimuths)
    def test_mirror_relation(self, ti, pi, ts, ps):
        inc, obs = Direction(ti, pi), Direction(ts, ps)
        assert cos_psi_i(inc, obs) == pytest.approx(cos_psi_r(inc, obs.mirrored()), abs=1e-12)


@given(elevations, azimuths, elevations, azimuths)
def test_kernels_exchange_symmetric(ti, pi, ts, ps):
    a, b = Direction(ti, pi), Direction(ts, ps)
    assert cos_psi_r(a, b) == cos_psi_r(b, a)
    assert cos_psi_i(a, b) == cos_psi_i(b, a)


def test_kernels_bounded_on_random_pairs():
    rng = np.random.default_rng(1)
    n = 100_000
    inc = Direction(rng.uniform(0, math.pi / 2, n), rng.uniform(0, 2 * math.pi, n))
    obs = Direction(rng.uniform(0, math.pi / 2, n), rng.uniform(0, 2 * math.pi, n))
    assert np.all(np.abs(cos_psi_r(inc, obs)) <= 1.0)
    assert np.all(np.abs(cos_psi_i(inc, obs)) <= 1.0)


def test_cos_elevation_exact_zero_at_grazing():
    assert cos_elevation(math.pi / 2) == 0.0
    assert np.all(cos_elevation(np.array([math.pi / 2, 0.0])) == np.array([0.0, 1.0]))
