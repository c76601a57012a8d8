import pytest

from iimaid import bn, depth as dp, maid
from iimaid.bn import Cpd
from iimaid.depth import DepthStack
from iimaid.errors import CycleError, ValidationError
from iimaid.fixtures import (
    always_low_match_rules, capability_evaluation, honesty_evaluation,
    truthful_match_rules,
)
from iimaid.incomplete import InformationSet, SubjectiveMaid
from tests.test_incomplete import iset_cap, iset_full, iset_report


def single_agent_chain():
    """One agent takes two sequential decisions; (r, r) pays best."""
    variables = [
        bn.decision("D1", "P", ("l", "r")),
        bn.decision("D2", "P", ("l", "r")),
        bn.utility("U", "P", {"v0": 0.0, "v1": 1.0, "v2": 2.0}),
    ]
    edges = [("D1", "D2"), ("D1", "U"), ("D2", "U")]
    pay = {("l", "l"): "v1", ("l", "r"): "v0", ("r", "l"): "v0", ("r", "r"): "v2"}
    cpds = [Cpd("U", ("D1", "D2"),
                {c: bn.point_row(("v0", "v1", "v2"), v) for c, v in pay.items()})]
    return maid.Maid.build(("P", "Q"), variables, edges, cpds)


def chain_stack():
    chain = single_agent_chain()
    return DepthStack(("P", "Q"), "root", {
        "root": SubjectiveMaid("root", chain, {"P": {"inner": 1.0}}),
        "inner": SubjectiveMaid("inner", chain, {}),
    })


# ------------------------------------------------------------ classification


def test_classify_depth_fixture(depth3):
    depths, k = dp.classify_depth(depth3)
    assert depths == {"h_solo": 0, "a_view": 1, "h_view": 2, "objective": 3}
    assert k == 3


def test_fully_committed_node_is_depth_zero(honesty):
    full = maid.PostPolicyMaid(honesty, dict(truthful_match_rules()))
    st = DepthStack(("A", "H"), "only",
                    {"only": SubjectiveMaid("only", full, {})})
    assert dp.classify_depth(st) == ({"only": 0}, 0)


def test_beliefless_node_with_two_free_agents_rejected(honesty):
    st = DepthStack(("A", "H"), "only",
                    {"only": SubjectiveMaid("only", honesty, {})})
    with pytest.raises(ValidationError) as e:
        dp.classify_depth(st)
    assert any("depth-contract-violation" in i for i in e.value.issues)


def test_cyclic_beliefs_rejected(honesty):
    tm = truthful_match_rules()
    st = DepthStack(("A", "H"), "a", {
        "a": SubjectiveMaid("a", maid.PostPolicyMaid(honesty, {"D_H": tm["D_H"]}),
                            {"A": {"b": 1.0}}),
        "b": SubjectiveMaid("b", maid.PostPolicyMaid(honesty, {"D_A": tm["D_A"]}),
                            {"H": {"a": 1.0}}),
    })
    with pytest.raises(CycleError):
        dp.classify_depth(st)


def test_zero_mass_reference_still_breaks_the_contract(honesty):
    tm = truthful_match_rules()
    leaf = SubjectiveMaid("leaf", maid.PostPolicyMaid(honesty, dict(tm)), {})
    st = DepthStack(("A", "H"), "top", {
        "leaf": leaf,
        "top": SubjectiveMaid("top", maid.PostPolicyMaid(honesty, {"D_A": tm["D_A"]}),
                              {"H": {"leaf": 1.0, "top": 0.0}}),
    })
    with pytest.raises(ValidationError) as e:
        dp.classify_depth(st)
    assert e.value.issues == [
        "depth-contract-violation: top (depth 1) references top (depth 1)"]


# ---------------------------------------------------------------- validation


def test_validate_stack_clean(depth3):
    assert dp.validate_stack(depth3) == []


def test_committed_agent_with_beliefs_flagged(honesty):
    tm = truthful_match_rules()
    st = DepthStack(("A", "H"), "c", {
        "c": SubjectiveMaid("c", maid.PostPolicyMaid(honesty, dict(tm)),
                            {"A": {"d": 1.0}}),
        "d": SubjectiveMaid("d", maid.PostPolicyMaid(honesty, {"D_H": tm["D_H"]}), {}),
    })
    assert dp.validate_stack(st) == ["committed-agent-with-beliefs: A in c"]


def test_believed_node_for_wrong_agent_flagged(honesty):
    tm = truthful_match_rules()
    st = DepthStack(("A", "H"), "w", {
        "w": SubjectiveMaid("w", honesty, {"A": {"t": 1.0}, "H": {"t": 1.0}}),
        "t": SubjectiveMaid("t", maid.PostPolicyMaid(honesty, {"D_A": tm["D_A"]}), {}),
    })
    issues = dp.validate_stack(st)
    assert any(i.startswith("believed-node-for-wrong-agent: w.A -> t") for i in issues)


# -------------------------------------------------------------- open minds


def test_fixture_is_open_minded(depth3):
    assert dp.is_open_minded(depth3) == (True, [])


def test_hidden_observation_closes_the_mind(honesty, capability):
    tm = truthful_match_rules()
    st = DepthStack(("A", "H"), "obj", {
        "obj": SubjectiveMaid("obj", honesty,
                              {"A": {"inner": 1.0}, "H": {"inner": 1.0}}),
        "inner": SubjectiveMaid(
            "inner", maid.PostPolicyMaid(capability, {"D_A": tm["D_A"]}), {}),
    })
    ok, gaps = dp.is_open_minded(st)
    assert not ok
    assert ("obj", "H", iset_full("high", "high")) in gaps
    # the report-observing child cannot host the full-observation sets
    assert all(g[0] == "obj" for g in gaps)
    assert len(gaps) == 6


# -------------------------------------------------------- conditional values


def test_conditional_utility_under_commitments(depth3):
    solo = depth3.nodes["h_solo"].model
    # truthful reporting makes the report perfectly informative
    assert dp.conditional_utility(solo, "H", "D_H", {"D_A": "low"}, "deploy") == pytest.approx(1.0)
    assert dp.conditional_utility(solo, "H", "D_H", {"D_A": "high"}, "deploy") == pytest.approx(-5.0)
    assert dp.conditional_utility(solo, "H", "D_H", {"D_A": "high"}, "not_deploy") == pytest.approx(0.0)


def test_conditional_utility_zero_mass_context_falls_back_to_uniform(honesty):
    al = always_low_match_rules()
    fixed = maid.PostPolicyMaid(honesty, {"D_A": al["D_A"]})
    ctx = {"C": "high", "D_A": "high"}
    assert dp.conditional_utility(fixed, "H", "D_H", ctx, "deploy") == pytest.approx(1.0)
    assert dp.conditional_utility(fixed, "H", "D_H", ctx, "not_deploy") == pytest.approx(0.0)


def test_believed_action_value(depth3):
    assert dp.believed_action_value(
        depth3, "a_view", "H", iset_report("H", "low"), "deploy") == pytest.approx(1.0)
    assert dp.believed_action_value(
        depth3, "a_view", "H", iset_report("H", "high"), "deploy") == pytest.approx(-5.0)


# ----------------------------------------------------- assignment operators


def test_finality_moves_backwards_through_own_decisions():
    st = chain_stack()
    first = dp.final_information_sets(st, "root", "P")
    assert {i.observation for i in first} == {(("D1", "l"),), (("D1", "r"),)}

    st2, steps = dp.final_decision_assignment(st, "root", "P")
    assert [(s.info_set.observation, s.action, s.value) for s in steps] == [
        ((("D1", "l"),), "l", 1.0),
        ((("D1", "r"),), "r", 2.0),
    ]
    assert all(s.written_to == ("inner",) for s in steps)

    second = dp.final_information_sets(st2, "root", "P")
    assert {i.observation for i in second} == {()}
    _, steps2 = dp.final_decision_assignment(st2, "root", "P")
    assert [(s.info_set.observation, s.action, s.value) for s in steps2] == [
        ((), "r", 2.0)]


def test_depth1_best_response_drives_all_passes():
    st = chain_stack()
    _, policy, steps = dp.depth1_best_response(st, "root", "P")
    assert [(s.info_set.observation, s.action, s.value) for s in steps] == [
        ((("D1", "l"),), "l", 1.0),
        ((("D1", "r"),), "r", 2.0),
        ((), "r", 2.0),
    ]
    rows = {k.observation: v for k, v in policy.items()}
    assert rows[()] == {"l": 0.0, "r": 1.0}
    assert rows[(("D1", "r"),)] == {"l": 0.0, "r": 1.0}


def test_depth1_best_response_requires_depth_one(depth3):
    with pytest.raises(ValidationError) as e:
        dp.depth1_best_response(depth3, "objective", "H")
    assert e.value.issues == ["not-depth-1: objective.H believes ['h_view']"]


def test_tie_breaks_toward_least_action():
    chain = single_agent_chain()
    flat = maid.Maid.build(
        ("P", "Q"),
        [v if v.name != "U" else bn.utility("U", "P", {"v0": 0.0, "v1": 0.0, "v2": 0.0})
         for v in chain.variables.values()],
        [(u, v) for v in chain.variables for u in chain.parents[v]],
        chain.cpds.values())
    st = DepthStack(("P", "Q"), "root", {
        "root": SubjectiveMaid("root", flat, {"P": {"inner": 1.0}}),
        "inner": SubjectiveMaid("inner", flat, {}),
    })
    _, policy, steps = dp.depth1_best_response(st, "root", "P")
    assert all(s.action == "l" for s in steps)


def test_reduce_copies_precommitted_rows_verbatim():
    chain = single_agent_chain()
    mix = Cpd("D2", ("D1",),
              {("l",): {"l": 0.5, "r": 0.5}, ("r",): {"l": 0.5, "r": 0.5}})
    st = DepthStack(("P", "Q"), "root", {
        "root": SubjectiveMaid("root", chain, {"P": {"inner": 1.0}}),
        "inner": SubjectiveMaid("inner", maid.PostPolicyMaid(chain, {"D2": mix}), {}),
    })
    reduced, steps = dp.reduce_stack(st)
    xi = maid.fixed_rules(reduced.nodes["root"].model)
    assert dict(xi["D2"].rows) == {("l",): {"l": 0.5, "r": 0.5},
                                   ("r",): {"l": 0.5, "r": 0.5}}
    # against the mixed commitment, r earns 1.0 and l earns 0.5
    assert [(s.info_set.observation, s.action, s.value) for s in steps] == [
        ((), "r", 1.0)]
    assert dp.classify_depth(reduced) == ({"inner": 0, "root": 0}, 0)


def test_reduce_drops_depth_by_one(depth3):
    depths, k = dp.classify_depth(depth3)
    st = depth3
    for want in range(k - 1, -1, -1):
        st, _ = dp.reduce_stack(st)
        assert dp.classify_depth(st)[1] == want


# ----------------------------------------------------- recursive best response


def test_recursive_best_response_trace(depth3):
    res = dp.recursive_best_response(depth3)
    assert res.depth == 3
    got = [(s.round, s.node, s.agent, s.info_set.observation, s.action,
            pytest.approx(s.value), s.written_to)
           for s in res.trace]
    assert got == [
        (1, "a_view", "H", (("D_A", "high"),), "not_deploy", 0.0, ("h_solo",)),
        (1, "a_view", "H", (("D_A", "low"),), "deploy", 1.0, ("h_solo",)),
        (2, "h_view", "A", (("C", "high"),), "low", 1.0, ("a_view",)),
        (2, "h_view", "A", (("C", "low"),), "low", 1.0, ("a_view",)),
        (3, "objective", "H", (("C", "high"), ("D_A", "high")), "deploy", 1.0, ("h_view",)),
        (3, "objective", "H", (("C", "high"), ("D_A", "low")), "not_deploy", 0.0, ("h_view",)),
        (3, "objective", "H", (("C", "low"), ("D_A", "high")), "not_deploy", 0.0, ("h_view",)),
        (3, "objective", "H", (("C", "low"), ("D_A", "low")), "deploy", 1.0, ("h_view",)),
    ]


def test_recursive_best_response_outcome(depth3):
    res = dp.recursive_best_response(depth3)
    rules = res.objective_rules
    assert {c: max(r, key=r.get) for c, r in rules["D_A"].rows.items()} == {
        ("high",): "low", ("low",): "low"}
    assert {c: max(r, key=r.get) for c, r in rules["D_H"].rows.items()} == {
        ("high", "high"): "deploy", ("high", "low"): "not_deploy",
        ("low", "high"): "not_deploy", ("low", "low"): "deploy"}
    final_model = res.final.nodes[res.final.objective].model
    assert maid.expected_utilities(final_model, {}) == pytest.approx(
        {"A": 0.8, "H": 0.9})


def test_audit_trace_accepts_fixture_run(depth3):
    res = dp.recursive_best_response(depth3)
    assert dp.audit_trace(depth3, res) == []


def test_rbr_on_committed_stack_is_vacuous(honesty):
    full = maid.PostPolicyMaid(honesty, dict(truthful_match_rules()))
    st = DepthStack(("A", "H"), "only",
                    {"only": SubjectiveMaid("only", full, {})})
    res = dp.recursive_best_response(st)
    assert res.depth == 0
    assert not res.trace and not res.profile
    assert dp.audit_trace(st, res) == []


# ---------------------------------------------------------------- unrolling


def test_unroll_builds_path_tree(example1):
    st1 = dp.unroll(example1, 1)
    assert sorted(st1.nodes) == [
        "objective", "objective/A:ai_belief", "objective/H:ground_truth"]
    st2 = dp.unroll(example1, 2)
    assert sorted(st2.nodes) == [
        "objective",
        "objective/A:ai_belief",
        "objective/A:ai_belief/H:ai_belief",
        "objective/H:ground_truth",
        "objective/H:ground_truth/A:ai_belief",
    ]
    assert dp.classify_depth(st2) == ({
        "objective": 2,
        "objective/A:ai_belief": 1,
        "objective/A:ai_belief/H:ai_belief": 0,
        "objective/H:ground_truth": 1,
        "objective/H:ground_truth/A:ai_belief": 0,
    }, 2)
    assert dp.validate_stack(st2) == []
    assert dp.is_open_minded(st2)[0]


def test_unrolled_best_response(example1):
    st = dp.unroll(example1, 2)
    res = dp.recursive_best_response(st)
    rules = res.objective_rules
    assert {c: max(r, key=r.get) for c, r in rules["D_A"].rows.items()} == {
        ("high",): "high", ("low",): "high"}
    assert {c: max(r, key=r.get) for c, r in rules["D_H"].rows.items()} == {
        ("high", "high"): "deploy", ("high", "low"): "not_deploy",
        ("low", "high"): "not_deploy", ("low", "low"): "deploy"}
    assert dp.audit_trace(st, res) == []
