import random

import pytest

from iimaid import bn, incomplete as inc, maid
from iimaid.bn import Cpd
from iimaid.errors import MissingRule, ValidationError
from iimaid.incomplete import IiMaid, InformationSet, SubjectiveMaid


def iset_report(agent, report, actions=("deploy", "not_deploy")):
    return InformationSet(agent, (("D_A", report),), tuple(sorted(actions)))


def iset_full(report_ctx, cap_ctx):
    return InformationSet("H", (("C", cap_ctx), ("D_A", report_ctx)),
                          ("deploy", "not_deploy"))


def iset_cap(cap_ctx):
    return InformationSet("A", (("C", cap_ctx),), ("high", "low"))


# ---------------------------------------------------------------- structure


def test_structural_validation_rejects_unknown_belief_target(example1):
    gt = example1.models["ground_truth"]
    with pytest.raises(ValidationError):
        IiMaid(example1.agents, "ground_truth", {
            "ground_truth": SubjectiveMaid(
                "ground_truth", gt.model, {"A": {"missing": 1.0}}),
        })


def test_structural_validation_rejects_bad_objective(example1):
    with pytest.raises(ValidationError):
        IiMaid(example1.agents, "nope", dict(example1.models))


def test_believers(example1):
    assert inc.believers(example1.models["ground_truth"]) == ["A", "H"]
    assert inc.believers(example1.models["ai_belief"]) == ["A", "H"]


# ---------------------------------------------------------------- coherence


def test_example_is_coherent(example1):
    assert inc.validate_coherence(example1) == []


def test_coherence_violation_reports_compatible_mass(example1):
    gt = example1.models["ground_truth"]
    mutated = IiMaid(example1.agents, example1.objective, {
        "ground_truth": SubjectiveMaid(
            "ground_truth", gt.model,
            {"A": {"ai_belief": 0.5, "ground_truth": 0.5},
             "H": {"ground_truth": 1.0}}),
        "ai_belief": example1.models["ai_belief"],
    })
    violations = inc.validate_coherence(mutated)
    assert violations == [inc.CoherenceViolation("A", "ground_truth", 0.5)]


# -------------------------------------------------------------- consistency


def test_consistency_report(example1):
    rep = inc.check_consistency(example1)
    assert rep.eq_feasible is True
    assert rep.sample == pytest.approx({"ai_belief": 1.0, "ground_truth": 0.0})
    assert rep.strongly_consistent is False
    assert rep.min_type_mass == pytest.approx(0.0)
    assert rep.mass_bounds["ai_belief"] == pytest.approx((1.0, 1.0))
    assert rep.mass_bounds["ground_truth"] == pytest.approx((0.0, 0.0))
    assert rep.type_classes == {"A": [["ai_belief", "ground_truth"]],
                                "H": [["ai_belief"], ["ground_truth"]]}


def test_belief_type_classes(example1):
    assert inc.belief_type_classes(example1, "A") == [["ai_belief", "ground_truth"]]
    assert inc.belief_type_classes(example1, "H") == [["ai_belief"], ["ground_truth"]]


def trivial_model(agents):
    variables = [bn.chance("X", ("a", "b"))]
    cpds = [Cpd("X", (), {(): {"a": 0.5, "b": 0.5}})]
    return maid.Maid.build(agents, variables, [], cpds)


def random_common_prior_iimaid(seed):
    """Beliefs derived from one positive prior by conditioning on type classes."""
    rng = random.Random(seed)
    agents = ("P1", "P2")
    ids = [f"m{i}" for i in range(rng.randint(3, 5))]
    weights = {i: rng.uniform(0.1, 1.0) for i in ids}
    total = sum(weights.values())
    prior = {i: w / total for i, w in weights.items()}
    base = trivial_model(agents)
    partitions = {}
    for agent in agents:
        shuffled = ids[:]
        rng.shuffle(shuffled)
        cells = [[] for _ in range(rng.randint(1, len(ids)))]
        for i, mid in enumerate(shuffled):
            cells[i % len(cells)].append(mid)
        partitions[agent] = [cell for cell in cells if cell]
    models = {}
    for mid in ids:
        beliefs = {}
        for agent in agents:
            cell = next(c for c in partitions[agent] if mid in c)
            mass = sum(prior[j] for j in cell)
            beliefs[agent] = {j: prior[j] / mass for j in cell}
        models[mid] = SubjectiveMaid(mid, base, beliefs)
    return IiMaid(agents, ids[0], models)


def test_common_prior_models_are_strongly_consistent():
    for seed in range(20):
        x = random_common_prior_iimaid(seed)
        assert inc.validate_coherence(x) == []
        rep = inc.check_consistency(x, include_bounds=False)
        assert rep.eq_feasible and rep.strongly_consistent
        assert rep.min_type_mass > 1e-6
        assert sum(rep.sample.values()) == pytest.approx(1.0)


# ----------------------------------------------------------- information sets


def test_information_sets_union(example1):
    assert len(inc.information_sets(example1, "A")) == 2
    assert len(inc.information_sets(example1, "H")) == 6
    assert iset_full("low", "high") in inc.information_sets(example1, "H")
    assert iset_report("H", "low") in inc.information_sets(example1, "H")


def test_model_information_sets(example1):
    gt = example1.models["ground_truth"].model
    ai = example1.models["ai_belief"].model
    assert len(inc.model_information_sets(gt, "H")) == 4
    assert len(inc.model_information_sets(ai, "H")) == 2
    assert inc.model_information_sets(gt, "A") == inc.model_information_sets(ai, "A")


def test_encounterability_is_model_relative(example1):
    gt = example1.models["ground_truth"]
    ai = example1.models["ai_belief"]
    assert inc.is_encounterable(iset_full("high", "high"), gt)
    assert not inc.is_encounterable(iset_full("high", "high"), ai)
    assert inc.is_encounterable(iset_report("H", "high"), ai)
    assert not inc.is_encounterable(iset_report("H", "high"), gt)
    assert inc.is_encounterable(iset_cap("low"), gt)
    assert inc.is_encounterable(iset_cap("low"), ai)


# ------------------------------------------------------------ subjective EU


def test_subjective_expected_utility(example1, ne_profile):
    assert inc.subjective_expected_utility(example1, "A", "ai_belief", ne_profile) == pytest.approx(0.0)
    assert inc.subjective_expected_utility(example1, "A", "ground_truth", ne_profile) == pytest.approx(0.0)
    assert inc.subjective_expected_utility(example1, "H", "ai_belief", ne_profile) == pytest.approx(0.2)
    assert inc.subjective_expected_utility(example1, "H", "ground_truth", ne_profile) == pytest.approx(0.9)


def test_seu_ignores_rows_outside_believed_models(example1, ne_profile):
    # A only believes the report-observing model, so H's full-observation rows
    # cannot move A's subjective value there
    before = inc.subjective_expected_utility(example1, "A", "ai_belief", ne_profile)
    perturbed = dict(ne_profile)
    for c in ("high", "low"):
        for r in ("high", "low"):
            perturbed[iset_full(r, c)] = {"deploy": 0.25, "not_deploy": 0.75}
    after = inc.subjective_expected_utility(example1, "A", "ai_belief", perturbed)
    assert before == pytest.approx(after)


def test_seu_missing_rule(example1, ne_profile):
    partial = {k: v for k, v in ne_profile.items() if k.agent == "A"}
    with pytest.raises(MissingRule):
        inc.subjective_expected_utility(example1, "H", "ground_truth", partial)


def test_validate_ii_policy(example1, ne_profile):
    assert inc.validate_ii_policy(example1, ne_profile) == []
    broken = dict(ne_profile)
    broken[iset_cap("high")] = {"high": 0.6, "low": 0.6}
    assert inc.validate_ii_policy(example1, broken)


def test_profile_rules_for_model(example1, ne_profile):
    gt = example1.models["ground_truth"].model
    rules = inc.profile_rules_for_model(gt, ne_profile)
    assert set(rules) == {"D_A", "D_H"}
    assert rules["D_H"].parents == ("C", "D_A")


# ----------------------------------------------------------------- solving


def test_best_response_ii_tie_takes_least_action(example1, ne_profile):
    others = {k: v for k, v in ne_profile.items() if k.agent == "H"}
    br, value = inc.best_response_ii(example1, "A", others)
    assert value == pytest.approx(0.0)
    for iset, row in br.items():
        assert row == {"high": 1.0, "low": 0.0}


def test_is_nash_ii_accepts_equilibrium(example1, ne_profile):
    ok, regrets = inc.is_nash_ii(example1, ne_profile)
    assert ok
    assert regrets == pytest.approx({"A": 0.0, "H": 0.0})


def truthful_deploy_low_profile(ne_profile):
    out = dict(ne_profile)
    out[iset_cap("high")] = {"high": 1.0, "low": 0.0}
    out[iset_cap("low")] = {"high": 0.0, "low": 1.0}
    out[iset_report("H", "high")] = {"deploy": 0.0, "not_deploy": 1.0}
    out[iset_report("H", "low")] = {"deploy": 1.0, "not_deploy": 0.0}
    return out


def test_is_nash_ii_rejects_with_regret(example1, ne_profile):
    ok, regrets = inc.is_nash_ii(example1, truthful_deploy_low_profile(ne_profile))
    assert not ok
    assert regrets["A"] == pytest.approx(0.2)
    assert regrets["H"] == pytest.approx(0.0)


def test_iter_pure_ii_profiles_count(example1):
    assert sum(1 for _ in inc.iter_pure_ii_profiles(example1)) == 256


def test_find_nash_ii(example1):
    sol = inc.find_nash_ii(example1)
    assert sol is not None
    ok, regrets = inc.is_nash_ii(example1, sol)
    assert ok and regrets == pytest.approx({"A": 0.0, "H": 0.0})
    assert sol[iset_cap("high")] == {"high": 1.0, "low": 0.0}
    assert sol[iset_cap("low")] == {"high": 1.0, "low": 0.0}
    assert sol[iset_full("high", "low")] == {"deploy": 0.0, "not_deploy": 1.0}
    assert sol[iset_full("low", "low")] == {"deploy": 1.0, "not_deploy": 0.0}


def test_has_perfect_recall_ii(example1):
    assert inc.has_perfect_recall_ii(example1)
