"""Randomized invariants over small two-agent games."""
from itertools import product

import pytest
from hypothesis import assume, given, settings, strategies as st

from iimaid import bn, efg, gamedoc, maid
from iimaid.bn import Cpd


@st.composite
def small_maid(draw):
    n_chance = draw(st.integers(min_value=0, max_value=2))
    chance_names = [f"X{i}" for i in range(n_chance)]
    variables = [bn.chance(x, ("a", "b")) for x in chance_names]
    edges = []
    cpds = []
    for x in chance_names:
        p = draw(st.integers(min_value=1, max_value=9)) / 10
        cpds.append(Cpd(x, (), {(): {"a": p, "b": 1.0 - p}}))
    d1_pa = tuple(x for x in chance_names if draw(st.booleans()))
    observed = draw(st.booleans())
    d2_pa = tuple(sorted((["D1"] if observed else [])
                         + [x for x in chance_names if draw(st.booleans())]))
    variables.append(bn.decision("D1", "P1", ("l", "r")))
    variables.append(bn.decision("D2", "P2", ("l", "r")))
    edges += [(p, "D1") for p in d1_pa] + [(p, "D2") for p in d2_pa]
    u_pa = ("D1", "D2") + (("X0",) if chance_names else ())
    labels = tuple(f"v{i}" for i in range(2 ** len(u_pa)))
    for name, owner in (("U1", "P1"), ("U2", "P2")):
        values = {}
        rows = {}
        for i, ctx in enumerate(product(*(["l", "r"], ["l", "r"], ["a", "b"])[:len(u_pa)])):
            values[labels[i]] = draw(st.integers(min_value=-4, max_value=4)) * 0.5
            rows[ctx] = bn.point_row(labels, labels[i])
        variables.append(bn.utility(name, owner, values))
        edges += [(p, name) for p in u_pa]
        cpds.append(Cpd(name, u_pa, rows))
    return maid.Maid.build(("P1", "P2"), variables, edges, cpds)


@st.composite
def maid_with_profile(draw):
    m = draw(small_maid())
    rules = {}
    for d in m.decisions():
        dom = m.variables[d].domain
        rows = {ctx: bn.point_row(dom, dom[draw(st.integers(0, 1))])
                for ctx in product(*(m.variables[p].domain for p in m.parents[d]))}
        rules[d] = Cpd(d, m.parents[d], rows)
    return m, rules


@settings(max_examples=30, deadline=None, derandomize=True)
@given(small_maid())
def test_document_round_trip_is_stable(m):
    text = gamedoc.serialize_document(m)
    reparsed = gamedoc.parse_document(text)
    assert gamedoc.serialize_document(reparsed.value) == text


@settings(max_examples=30, deadline=None, derandomize=True)
@given(maid_with_profile())
def test_tree_conversion_preserves_utilities(mp):
    m, rules = mp
    g, _ = efg.maid2efg(m)
    sigma = efg.strategy_from_policy(m, g, rules)
    for agent in m.agents:
        assert efg.efg_expected_utility(g, sigma, agent) == pytest.approx(
            maid.expected_utility(m, rules, agent), abs=1e-9)


@settings(max_examples=20, deadline=None, derandomize=True)
@given(maid_with_profile())
def test_best_response_dominates_every_pure_alternative(mp):
    m, rules = mp
    agent = "P1"
    others = {d: r for d, r in rules.items() if m.variables[d].owner != agent}
    mine = [d for d in m.decisions() if m.variables[d].owner == agent]
    _, value = maid.best_response(m, others, agent)
    for alt in maid.iter_pure_rules(m, mine):
        alt_value = maid.expected_utility(m, {**others, **alt}, agent)
        assert value >= alt_value - 1e-9


@settings(max_examples=15, deadline=None, derandomize=True)
@given(small_maid())
def test_pure_nash_results_are_sound(m):
    assume(maid.count_pure_policies(m, m.decisions()) <= 64)
    for eq in maid.find_pure_nash(m):
        ok, regrets = maid.is_nash(m, eq)
        assert ok, regrets


@settings(max_examples=20, deadline=None, derandomize=True)
@given(maid_with_profile(), st.integers(min_value=1, max_value=5),
       st.integers(min_value=-3, max_value=3))
def test_nash_verdict_invariant_under_affine_payoffs(mp, scale, shift):
    m, rules = mp
    variables = []
    for v in m.variables.values():
        if v.kind == "utility":
            variables.append(bn.utility(
                v.name, v.owner,
                {k: scale * val + shift for k, val in v.values.items()}))
        else:
            variables.append(v)
    edges = [(u, w) for w in m.variables for u in m.parents[w]]
    m2 = maid.Maid.build(m.agents, variables, edges, m.cpds.values())
    assert maid.is_nash(m, rules)[0] == maid.is_nash(m2, rules)[0]
