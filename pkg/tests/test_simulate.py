import math

import pytest

from iimaid import maid
from iimaid.fixtures import always_low_match_rules, truthful_match_rules
from iimaid.simulate import simulate


def test_constant_payoff_game_has_zero_stderr(honesty):
    report = simulate(honesty, truthful_match_rules(), rollouts=500, seed=3)
    assert report.means == pytest.approx({"A": 1.0, "H": 1.0})
    assert report.stderrs == pytest.approx({"A": 0.0, "H": 0.0})


def test_means_track_exact_values(honesty):
    rules = always_low_match_rules()
    exact = maid.expected_utilities(honesty, rules)
    report = simulate(honesty, rules, rollouts=20_000, seed=11)
    for agent in honesty.agents:
        se = report.stderrs[agent]
        assert se > 0
        assert abs(report.means[agent] - exact[agent]) < 4 * se


def test_stderr_scale(honesty):
    # A's payoff under always-low reporting is a +-1 coin with p(high)=0.1
    rules = always_low_match_rules()
    report = simulate(honesty, rules, rollouts=40_000, seed=5)
    expected_se = math.sqrt(0.36) / math.sqrt(40_000)
    assert report.stderrs["A"] == pytest.approx(expected_se, rel=0.15)


def test_seed_determinism(honesty):
    rules = always_low_match_rules()
    a = simulate(honesty, rules, rollouts=2_000, seed=42)
    b = simulate(honesty, rules, rollouts=2_000, seed=42)
    c = simulate(honesty, rules, rollouts=2_000, seed=43)
    assert a == b
    assert a.means != c.means


def test_report_metadata(honesty):
    report = simulate(honesty, truthful_match_rules(), rollouts=10, seed=0)
    assert report.agents == ("A", "H")
    assert report.rollouts == 10
    assert report.seed == 0
