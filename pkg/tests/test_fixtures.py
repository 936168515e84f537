"""Built-in fixture regressions."""

from fractions import Fraction

from packmech.fixtures import builtin_fixtures
from packmech.properties import fixture_regressions


def test_builtin_fixture_names():
    fx = builtin_fixtures()
    assert set(fx) == {
        "lowerbound-matching",
        "lowerbound-matroid",
        "figA-maxmatching",
        "figB-greedy",
        "c2-gap",
    }
    assert fx["c2-gap"].n_agents == 4
    assert len(fx["c2-gap"].items) == 8


def test_epsilon_parameterization():
    fx = builtin_fixtures(epsilon=Fraction(1, 100))
    high = fx["lowerbound-matching"].item_by_id["t1u1"].value
    assert high == Fraction(101, 100)


def test_all_fixture_regressions_pass():
    for name, result in fixture_regressions():
        assert result.ok, f"{name}: {result.detail}"
