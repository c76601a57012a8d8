"""Influence-diagram games with subjective, possibly wrong, beliefs.

Each agent holds a distribution over candidate models (subjective MAIDs),
and each model in turn ascribes beliefs to every agent, so belief graphs may
be cyclic.  Agents act on information sets identified by what they observe
and what they can do, which lets a single policy span models that disagree
about the world.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Mapping

from . import bn
from .bn import Row, TOL
from .errors import (
    MissingRule,
    SearchSpaceTooLarge,
    UnknownAgent,
    ValidationError,
)
from .maid import (
    DEFAULT_CAP,
    Cpd,
    Maid,
    Model,
    PostPolicyMaid,
    base_maid,
    expected_utilities,
    fixed_rules,
    free_decisions,
    has_perfect_recall,
)


@dataclass(frozen=True, order=True)
class InformationSet:
    """What an agent knows when acting: an observation plus an action set.

    ``observation`` is a sorted tuple of (variable, outcome) pairs; ``actions``
    is the sorted action domain.  Two decision contexts in different models
    with the same observation and actions are the same information set.
    """

    agent: str
    observation: tuple[tuple[str, str], ...]
    actions: tuple[str, ...]


# An II policy profile: information set -> distribution over its actions.
IiPolicy = Mapping[InformationSet, Row]


@dataclass(frozen=True)
class SubjectiveMaid:
    """A candidate model of the game plus the beliefs it ascribes to agents.

    ``beliefs`` maps agent -> distribution over model ids.  Agents whose
    behaviour is already fixed inside ``model`` carry no entry.
    """

    id: str
    model: Model
    beliefs: Mapping[str, Mapping[str, float]]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "beliefs", {a: dict(row) for a, row in self.beliefs.items()}
        )


@dataclass(frozen=True)
class IiMaid:
    """A family of subjective models with a designated objective one."""

    agents: tuple[str, ...]
    objective: str
    models: Mapping[str, SubjectiveMaid]

    def __post_init__(self) -> None:
        object.__setattr__(self, "agents", tuple(sorted(self.agents)))
        object.__setattr__(self, "models", dict(self.models))
        issues = _structural_issues(self)
        if issues:
            raise ValidationError(issues)


def _structural_issues(x: IiMaid) -> list[str]:
    issues: list[str] = []
    if not x.models:
        issues.append("empty-model-set")
        return issues
    if x.objective not in x.models:
        issues.append(f"unknown-objective: {x.objective}")
    for sid in sorted(x.models):
        s = x.models[sid]
        if s.id != sid:
            issues.append(f"model-id-mismatch: {sid} vs {s.id}")
        if not set(base_maid(s.model).agents) <= set(x.agents):
            issues.append(f"unknown-agents-in-model: {sid}")
        for agent in sorted(s.beliefs):
            if agent not in x.agents:
                issues.append(f"unknown-believer: {agent} in {sid}")
                continue
            row = s.beliefs[agent]
            for target in sorted(row):
                if target not in x.models:
                    issues.append(f"dangling-belief: {sid}.{agent} -> {target}")
            if abs(sum(row.values()) - 1.0) > TOL or any(p < -TOL for p in row.values()):
                issues.append(f"belief-row-not-normalized: {sid}.{agent}")
    return issues


def believers(s: SubjectiveMaid) -> list[str]:
    return sorted(s.beliefs)


def _rows_close(a: Mapping[str, float], b: Mapping[str, float], tol: float = TOL) -> bool:
    keys = set(a) | set(b)
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol for k in keys)


@dataclass(frozen=True)
class CoherenceViolation:
    agent: str
    model: str
    compatible_mass: float


def validate_coherence(x: IiMaid, tol: float = TOL) -> list[CoherenceViolation]:
    """Check that agents are certain of their own beliefs.

    For each agent and model, the belief row must put all its mass on models
    ascribing that agent the very same row.
    """
    violations = []
    for sid in sorted(x.models):
        s = x.models[sid]
        for agent in believers(s):
            row = s.beliefs[agent]
            mass = 0.0
            for target, p in row.items():
                other = x.models[target].beliefs.get(agent)
                if other is not None and _rows_close(row, other, tol):
                    mass += p
            if abs(mass - 1.0) > tol:
                violations.append(CoherenceViolation(agent, sid, mass))
    return violations


def belief_type_classes(x: IiMaid, agent: str) -> list[list[str]]:
    """Partition of the models (where the agent holds beliefs) by belief row."""
    classes: list[tuple[Mapping[str, float], list[str]]] = []
    for sid in sorted(x.models):
        row = x.models[sid].beliefs.get(agent)
        if row is None:
            continue
        for rep_row, members in classes:
            if _rows_close(row, rep_row):
                members.append(sid)
                break
        else:
            classes.append((row, [sid]))
    return [members for _, members in classes]


@dataclass(frozen=True)
class ConsistencyReport:
    """Outcome of the common-prior feasibility analysis.

    ``eq_feasible`` says whether any prior reproduces every agent's beliefs by
    conditioning.  ``strongly_consistent`` additionally requires some solution
    to give positive mass to every belief type that actually occurs.
    ``mass_bounds`` (when computed) gives the feasible [min, max] prior mass
    per model, which exposes forced-zero models.
    """

    eq_feasible: bool
    sample: dict[str, float] | None
    strongly_consistent: bool
    min_type_mass: float | None
    mass_bounds: dict[str, tuple[float, float]] | None
    type_classes: dict[str, list[list[str]]]


def check_consistency(x: IiMaid, include_bounds: bool = True) -> ConsistencyReport:
    """Solve the common-prior equations as a linear program.

    The unknown is a prior p over models satisfying, for every agent i and
    model S', p(S') = sum_S P_i^S(S') p(S).  Strong consistency maximizes the
    minimum prior mass over realized belief-type classes and asks for a
    strictly positive optimum.
    """
    from scipy.optimize import linprog

    ids = sorted(x.models)
    k = len(ids)
    idx = {sid: j for j, sid in enumerate(ids)}
    full_agents = [
        a
        for a in x.agents
        if all(a in x.models[sid].beliefs for sid in ids)
    ]
    type_classes = {a: belief_type_classes(x, a) for a in x.agents}

    a_eq: list[list[float]] = [[1.0] * k]
    b_eq: list[float] = [1.0]
    for agent in full_agents:
        for target in ids:
            coeffs = [0.0] * k
            coeffs[idx[target]] += 1.0
            for sid in ids:
                coeffs[idx[sid]] -= x.models[sid].beliefs[agent].get(target, 0.0)
            a_eq.append(coeffs)
            b_eq.append(0.0)

    classes = [
        members for agent in x.agents for members in type_classes[agent] if members
    ]
    # Maximize t subject to: prior feasible, and each realized type class
    # holding mass at least t.  Variables are (p_1..p_k, t).
    a_ub = []
    for members in classes:
        row = [0.0] * (k + 1)
        for sid in members:
            row[idx[sid]] = -1.0
        row[k] = 1.0
        a_ub.append(row)
    res = linprog(
        c=[0.0] * k + [-1.0],
        A_eq=[row + [0.0] for row in a_eq],
        b_eq=b_eq,
        A_ub=a_ub or None,
        b_ub=[0.0] * len(a_ub) or None,
        bounds=[(0.0, 1.0)] * k + [(0.0, 1.0)],
        method="highs",
    )
    if not res.success:
        return ConsistencyReport(False, None, False, None, None, type_classes)

    sample = {sid: _snap(res.x[idx[sid]]) for sid in ids}
    min_type_mass = _snap(res.x[k])
    strongly = min_type_mass > TOL

    bounds = None
    if include_bounds:
        bounds = {}
        for sid in ids:
            lo_hi = []
            for sign in (1.0, -1.0):
                c = [0.0] * k
                c[idx[sid]] = sign
                r = linprog(
                    c=c, A_eq=a_eq, b_eq=b_eq, bounds=[(0.0, 1.0)] * k, method="highs"
                )
                lo_hi.append(_snap(abs(r.fun)) if r.success else 0.0)
            bounds[sid] = (lo_hi[0], lo_hi[1])
    return ConsistencyReport(True, sample, strongly, min_type_mass, bounds, type_classes)


def _snap(v: float, eps: float = 1e-12) -> float:
    if abs(v) < eps:
        return 0.0
    if abs(v - 1.0) < eps:
        return 1.0
    return float(v)


def _support_contexts(model: Model, name: str) -> set[tuple[str, ...]]:
    """Parent contexts of a decision reachable when every decision is free.

    Positivity is judged with all decisions, including pre-committed ones,
    replaced by free uniform choices; only chance zeros can rule a context out.
    """
    m = base_maid(model)
    pa = m.parents[name]
    if not pa:
        return {()}
    order = [
        v
        for v in bn.topo_sort({n: m.parents[n] for n in m.variables})
        if m.kind(v) != bn.UTILITY
    ]
    cut = max(order.index(p) for p in pa) + 1
    order = order[:cut]
    found: set[tuple[str, ...]] = set()
    a: dict[str, str] = {}

    def rec(i: int) -> None:
        if i == len(order):
            found.add(tuple(a[p] for p in pa))
            return
        v = order[i]
        if m.kind(v) == bn.CHANCE:
            row = m.cpds[v].row_for(a)
            labels = [lbl for lbl in m.variables[v].domain if row.get(lbl, 0.0) > 0.0]
        else:
            labels = list(m.variables[v].domain)
        for lbl in labels:
            a[v] = lbl
            rec(i + 1)
            del a[v]

    rec(0)
    return found


def model_information_sets(model: Model, agent: str) -> set[InformationSet]:
    """The agent's information sets arising from one model's open decisions."""
    m = base_maid(model)
    out: set[InformationSet] = set()
    for d in free_decisions(model, agent):
        actions = m.variables[d].domain
        pa = m.parents[d]
        for ctx in _support_contexts(model, d):
            out.add(InformationSet(agent, tuple(zip(pa, ctx)), actions))
    return out


def information_sets(x: IiMaid, agent: str) -> set[InformationSet]:
    """Union of the agent's information sets over every model in the family."""
    if agent not in x.agents:
        raise UnknownAgent(agent)
    out: set[InformationSet] = set()
    for sid in sorted(x.models):
        out |= model_information_sets(x.models[sid].model, agent)
    return out


def is_encounterable(iset: InformationSet, s: SubjectiveMaid) -> bool:
    """Whether some open decision in the model could face this information set.

    Purely domain-based: the decision's parents must be exactly the observed
    variables, the observed outcomes must lie in their domains, and the action
    set must match.
    """
    return bool(_matching_decisions(s.model, iset))


def _matching_decisions(model: Model, iset: InformationSet) -> list[str]:
    m = base_maid(model)
    obs_vars = tuple(v for v, _ in iset.observation)
    matches = []
    for d in free_decisions(model, iset.agent):
        if m.parents[d] != obs_vars:
            continue
        if m.variables[d].domain != iset.actions:
            continue
        if all(val in m.variables[v].domain for v, val in iset.observation):
            matches.append(d)
    return matches


def _default_row(actions: tuple[str, ...]) -> Row:
    return bn.point_row(actions, actions[0])


def profile_rules_for_model(model: Model, profile: IiPolicy) -> dict[str, Cpd]:
    """Decision rules for one model read off an information-set policy.

    Contexts that are unreachable under every policy (chance zeros) fall back
    to a lexicographic default; reachable contexts must be covered.
    """
    m = base_maid(model)
    rules: dict[str, Cpd] = {}
    for agent in m.agents:
        for d in free_decisions(model, agent):
            pa = m.parents[d]
            actions = m.variables[d].domain
            support = _support_contexts(model, d)
            rows = {}
            for ctx in product(*(m.variables[p].domain for p in pa)):
                key = InformationSet(agent, tuple(zip(pa, ctx)), actions)
                row = profile.get(key)
                if row is None:
                    if ctx in support:
                        raise MissingRule(f"no rule for {key}")
                    row = _default_row(actions)
                rows[ctx] = dict(row)
            rules[d] = Cpd(d, pa, rows)
    return rules


def subjective_expected_utility(
    x: IiMaid, agent: str, at: str, profile: IiPolicy
) -> float:
    """The agent's belief-weighted expected utility from the standpoint ``at``.

    Each positively believed model is evaluated under the profile restricted
    to it; models the agent gives probability zero are skipped entirely.
    """
    if agent not in x.agents:
        raise UnknownAgent(agent)
    if at not in x.models:
        raise ValidationError([f"unknown-model: {at}"])
    weights = x.models[at].beliefs.get(agent)
    if weights is None:
        raise UnknownAgent(f"{agent} holds no beliefs in {at}")
    total = 0.0
    for sid in sorted(weights):
        w = weights[sid]
        if w <= 0.0:
            continue
        s = x.models[sid]
        rules = profile_rules_for_model(s.model, profile)
        total += w * expected_utilities(s.model, rules).get(agent, 0.0)
    return total


def _profile_slots(
    x: IiMaid, agent: str, at: str
) -> tuple[list[InformationSet], list[InformationSet]]:
    """Split the agent's info sets into believed-relevant and the rest."""
    weights = x.models[at].beliefs.get(agent)
    if weights is None:
        raise UnknownAgent(f"{agent} holds no beliefs in {at}")
    believed = [x.models[sid] for sid, w in sorted(weights.items()) if w > 0.0]
    relevant, rest = [], []
    for iset in sorted(information_sets(x, agent)):
        if any(is_encounterable(iset, s) for s in believed):
            relevant.append(iset)
        else:
            rest.append(iset)
    return relevant, rest


def best_response_ii(
    x: IiMaid,
    agent: str,
    others: IiPolicy,
    at: str | None = None,
    cap: int = DEFAULT_CAP,
) -> tuple[dict[InformationSet, Row], float]:
    """Best pure information-set policy against the others' rules.

    Enumeration covers only info sets encounterable in some positively
    believed model; elsewhere the policy falls back to the least action.
    First maximizer in lexicographic order wins.
    """
    at = at or x.objective
    relevant, rest = _profile_slots(x, agent, at)
    count = 1
    for iset in relevant:
        count *= len(iset.actions)
        if count > cap:
            raise SearchSpaceTooLarge(f"{count} candidate policies exceeds cap {cap}")
    fallback = {iset: _default_row(iset.actions) for iset in rest}
    best: tuple[dict[InformationSet, Row], float] | None = None
    for combo in product(*(iset.actions for iset in relevant)):
        cand = {
            iset: bn.point_row(iset.actions, label)
            for iset, label in zip(relevant, combo)
        }
        cand.update(fallback)
        value = subjective_expected_utility(x, agent, at, {**dict(others), **cand})
        if best is None or value > best[1]:
            best = (cand, value)
    assert best is not None
    return best


def validate_ii_policy(x: IiMaid, profile: IiPolicy) -> list[str]:
    issues = []
    wanted: set[InformationSet] = set()
    for agent in x.agents:
        wanted |= information_sets(x, agent)
    for iset in sorted(wanted - set(profile)):
        issues.append(f"missing-rule: {iset}")
    for iset in sorted(set(profile) - wanted, key=repr):
        issues.append(f"unknown-information-set: {iset}")
    for iset in sorted(set(profile) & wanted):
        row = profile[iset]
        if set(row) != set(iset.actions) or abs(sum(row.values()) - 1.0) > TOL:
            issues.append(f"row-not-normalized: {iset}")
    return issues


def is_nash_ii(
    x: IiMaid, profile: IiPolicy, tol: float = 1e-6, cap: int = DEFAULT_CAP
) -> tuple[bool, dict[str, float]]:
    """Check the profile for unilateral deviations in subjective value.

    Each agent's value is taken at the objective model's beliefs and compared
    with their best response there.
    """
    issues = validate_ii_policy(x, profile)
    if issues:
        raise ValidationError(issues)
    regrets: dict[str, float] = {}
    for agent in x.agents:
        if agent not in x.models[x.objective].beliefs:
            continue
        own = information_sets(x, agent)
        others = {i: r for i, r in profile.items() if i not in own}
        achieved = subjective_expected_utility(x, agent, x.objective, profile)
        _, brv = best_response_ii(x, agent, others, cap=cap)
        regrets[agent] = brv - achieved
    return all(r <= tol for r in regrets.values()), regrets


def iter_pure_ii_profiles(
    x: IiMaid, cap: int = DEFAULT_CAP
) -> Iterator[dict[InformationSet, Row]]:
    slots: list[InformationSet] = []
    for agent in x.agents:
        slots.extend(sorted(information_sets(x, agent)))
    slots.sort()
    count = 1
    for iset in slots:
        count *= len(iset.actions)
        if count > cap:
            raise SearchSpaceTooLarge(f"{count} pure profiles exceeds cap {cap}")
    for combo in product(*(iset.actions for iset in slots)):
        yield {
            iset: bn.point_row(iset.actions, label)
            for iset, label in zip(slots, combo)
        }


def find_nash_ii(
    x: IiMaid,
    tol: float = 1e-6,
    cap: int = DEFAULT_CAP,
    max_sweeps: int = 1000,
) -> dict[InformationSet, Row] | None:
    """Search for an equilibrium profile.

    Tries exhaustive pure-profile enumeration first (lexicographic order,
    first hit wins).  If the pure space exceeds the cap, falls back to
    iterated best responses from the uniform profile; returns None when
    neither stage produces a profile passing the check.
    """
    for agent in x.agents:
        for sid in sorted(x.models):
            ok, _ = has_perfect_recall(x.models[sid].model, agent)
            if not ok:
                raise ValidationError([f"imperfect-recall: {agent} in {sid}"])
    try:
        for profile in iter_pure_ii_profiles(x, cap):
            ok, _ = is_nash_ii(x, profile, tol, cap)
            if ok:
                return profile
        return None
    except SearchSpaceTooLarge:
        pass

    profile = {}
    for agent in x.agents:
        for iset in information_sets(x, agent):
            profile[iset] = bn.uniform_row(iset.actions)
    for _ in range(max_sweeps):
        changed = False
        for agent in x.agents:
            if agent not in x.models[x.objective].beliefs:
                continue
            own = information_sets(x, agent)
            others = {i: r for i, r in profile.items() if i not in own}
            br, _ = best_response_ii(x, agent, others, cap=cap)
            for iset, row in br.items():
                if not _rows_close(profile[iset], row):
                    changed = True
                profile[iset] = row
        ok, _ = is_nash_ii(x, profile, tol, cap)
        if ok:
            return profile
        if not changed:
            return None
    return None


def has_perfect_recall_ii(x: IiMaid) -> bool:
    """Perfect recall of every agent in every model of the family."""
    for sid in sorted(x.models):
        for agent in x.agents:
            ok, _ = has_perfect_recall(x.models[sid].model, agent)
            if not ok:
                return False
    return True
