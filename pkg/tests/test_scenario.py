import math

import pytest

from erscatter.oracle import fresnel_gamma
from erscatter.scenario import Scenario, ScenarioError, load_scenario, parse_scenario


def test_defaults_validate():
    sc = Scenario().validate()
    assert sc.model == "rer"
    assert sc.reflection_gamma() == pytest.approx(fresnel_gamma(math.radians(30), 5.0, "TE"))


def test_parse_full():
    text = """
    # office wall
    model = double
    s = 0.5
    alpha_r = 4
    alpha_i = 2
    lambda = 0.7      # forward share
    pol = tm
    eps_r = 4.5
    p_t = 1
    g_t = 2
    theta_i_deg = 45
    """
    sc = parse_scenario(text).validate()
    assert (sc.model, sc.lam, sc.polarization, sc.eps_r) == ("double", 0.7, "TM", 4.5)
    assert sc.source().k_i == pytest.approx(math.sqrt(120))


def test_explicit_gamma_wins():
    assert parse_scenario("gamma = 0.3\neps_r = 9").reflection_gamma() == 0.3


@pytest.mark.parametrize(
    "text,needle",
    [
        ("s 0.4", ":1: expected"),
        ("s = 0.4\nbogus = 1", ":2: unknown key"),
        ("s = 0.4\ns = 0.5", ":2: duplicate"),
        ("s = abc", "must be a number"),
        ("s = nan", "must be finite"),
    ],
)
def test_parse_errors_name_line(text, needle):
    with pytest.raises(ScenarioError, match=needle):
        parse_scenario(text)


@pytest.mark.parametrize(
    "text",
    ["model = foo", "k_i = 1\np_t = 1\ng_t = 1", "p_t = 1", "eps_r = 0.5", "model = legacy\nalpha_r = 2.5",
     "s = 1.5", "theta_i_deg = 95"],
)
def test_validation_errors(text):
    with pytest.raises(ScenarioError.__mro__[1]):
        parse_scenario(text).validate()


def test_load_missing(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "nope.txt")


def test_overrides_skip_none():
    sc = Scenario().with_overrides(s=0.9, alpha_r=None)
    assert sc.s == 0.9 and sc.alpha_r == 2.0
