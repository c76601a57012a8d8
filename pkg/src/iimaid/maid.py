"""Multi-agent influence diagrams: ownership, policies, and equilibria.

A MAID is a Bayes net whose variables are partitioned into chance, decision
and utility kinds, with decisions and utilities owned by agents.  Policies
supply the missing decision CPDs; everything else reduces to exact inference
on the induced network.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Mapping, Union

from . import bn
from .bn import CHANCE, DECISION, TOL, UTILITY, Cpd, Row, Variable
from .errors import (
    MissingRule,
    SearchSpaceTooLarge,
    UnknownAgent,
    ValidationError,
)

DEFAULT_CAP = 10_000_000

# A decision rule is structurally just a CPD for the decision variable.
DecisionRule = Cpd

# A (possibly partial) policy profile: decision variable name -> rule.
PolicyRules = Mapping[str, Cpd]


@dataclass(frozen=True)
class Maid:
    """A DAG over chance, decision and utility variables with agent ownership.

    ``parents`` fixes the whole graph, including informational edges into
    decisions.  CPDs exist for every non-decision variable; decisions are
    parameterised later by policies.
    """

    agents: tuple[str, ...]
    variables: Mapping[str, Variable]
    parents: Mapping[str, tuple[str, ...]]
    cpds: Mapping[str, Cpd]

    @classmethod
    def build(
        cls,
        agents: Iterable[str],
        variables: Iterable[Variable],
        edges: Iterable[tuple[str, str]],
        cpds: Iterable[Cpd],
    ) -> "Maid":
        vs = {v.name: v for v in variables}
        issues: list[str] = []
        pa: dict[str, set[str]] = {name: set() for name in vs}
        for src, dst in edges:
            if src not in vs or dst not in vs:
                issues.append(f"dangling-edge: {src}->{dst}")
                continue
            pa[dst].add(src)
        m = cls(
            tuple(sorted(set(agents))),
            vs,
            {name: tuple(sorted(ps)) for name, ps in pa.items()},
            {c.child: c for c in cpds},
        )
        issues.extend(validate_maid(m))
        if issues:
            raise ValidationError(issues)
        return m

    def kind(self, name: str) -> str:
        return self.variables[name].kind

    def decisions(self, agent: str | None = None) -> list[str]:
        return sorted(
            n
            for n, v in self.variables.items()
            if v.kind == DECISION and (agent is None or v.owner == agent)
        )

    def utilities(self, agent: str | None = None) -> list[str]:
        return sorted(
            n
            for n, v in self.variables.items()
            if v.kind == UTILITY and (agent is None or v.owner == agent)
        )

    def chance_variables(self) -> list[str]:
        return sorted(n for n, v in self.variables.items() if v.kind == CHANCE)


def validate_maid(m: Maid) -> list[str]:
    issues: list[str] = []
    for name in sorted(m.variables):
        v = m.variables[name]
        if v.kind not in (CHANCE, DECISION, UTILITY):
            issues.append(f"unknown-kind: {name} is {v.kind!r}")
            continue
        if v.kind in (DECISION, UTILITY) and v.owner not in m.agents:
            issues.append(f"unknown-agent: {name} owned by {v.owner!r}")
        if v.kind in (CHANCE, DECISION) and len(v.domain) < 2:
            issues.append(f"degenerate-domain: {name}")
        if v.kind == UTILITY:
            if not v.values or set(v.values) != set(v.domain):
                issues.append(f"missing-utility-values: {name}")
            if any(name in m.parents[c] for c in m.variables):
                issues.append(f"utility-not-leaf: {name}")
        if v.kind == DECISION and name in m.cpds:
            issues.append(f"decision-with-cpd: {name}")
        if v.kind != DECISION and name not in m.cpds:
            issues.append(f"missing-cpd: {name}")
    for child in sorted(m.cpds):
        if child in m.variables and child in m.parents:
            if tuple(m.cpds[child].parents) != m.parents[child]:
                issues.append(f"cpd-parents-mismatch: {child}")
    if not issues:
        net = bn.BayesNet(
            m.variables, {**m.cpds, **{d: uniform_rule(m, d) for d in m.decisions()}}
        )
        issues.extend(bn.validate_net(net))
    return issues


@dataclass(frozen=True)
class PostPolicyMaid:
    """A MAID where some decisions are pre-committed to fixed rules.

    Committed decisions behave as part of the environment: their rules travel
    with the model, and only the remaining decisions are open to policies.
    """

    base: Maid
    assigned: Mapping[str, Cpd]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assigned", dict(self.assigned))
        issues = []
        for name, rule in self.assigned.items():
            if name not in self.base.variables or self.base.kind(name) != DECISION:
                issues.append(f"assigned-non-decision: {name}")
                continue
            issues.extend(_check_rule(self.base, name, rule))
        if issues:
            raise ValidationError(issues)


Model = Union[Maid, PostPolicyMaid]


def base_maid(model: Model) -> Maid:
    return model.base if isinstance(model, PostPolicyMaid) else model


def fixed_rules(model: Model) -> Mapping[str, Cpd]:
    return model.assigned if isinstance(model, PostPolicyMaid) else {}


def free_decisions(model: Model, agent: str | None = None) -> list[str]:
    committed = set(fixed_rules(model))
    return [d for d in base_maid(model).decisions(agent) if d not in committed]


def _check_rule(m: Maid, name: str, rule: Cpd) -> list[str]:
    issues = []
    if tuple(rule.parents) != m.parents[name]:
        issues.append(f"rule-parents-mismatch: {name}")
        return issues
    expected = set(product(*(m.variables[p].domain for p in rule.parents)))
    if set(rule.rows) != expected:
        issues.append(f"rule-context-mismatch: {name}")
        return issues
    dom = set(m.variables[name].domain)
    for ctx in sorted(rule.rows):
        row = rule.rows[ctx]
        if set(row) != dom or abs(sum(row.values()) - 1.0) > TOL:
            issues.append(f"rule-row-invalid: {name}{ctx}")
    return issues


def uniform_rule(model: Model, name: str) -> Cpd:
    m = base_maid(model)
    return bn.tabulate(
        name,
        m.variables[name].domain,
        {p: m.variables[p].domain for p in m.parents[name]},
        lambda ctx: bn.uniform_row(m.variables[name].domain),
    )


def decision_rule(model: Model, name: str, choose) -> Cpd:
    """Tabulate a rule from ``choose(context) -> label or distribution``."""
    m = base_maid(model)
    return bn.tabulate(
        name,
        m.variables[name].domain,
        {p: m.variables[p].domain for p in m.parents[name]},
        choose,
    )


def _merged_rules(model: Model, rules: PolicyRules) -> dict[str, Cpd]:
    m = base_maid(model)
    merged = {**fixed_rules(model), **dict(rules)}
    issues = []
    for d in m.decisions():
        if d not in merged:
            raise MissingRule(f"no rule for decision {d}")
    for name in merged:
        if name not in m.variables or m.kind(name) != DECISION:
            raise MissingRule(f"rule for non-decision {name}")
        issues.extend(_check_rule(m, name, merged[name]))
    if issues:
        raise ValidationError(issues)
    return merged


def induced_network(model: Model, rules: PolicyRules) -> bn.BayesNet:
    """The Bayes net obtained by plugging decision rules into the diagram."""
    m = base_maid(model)
    return bn.BayesNet(m.variables, {**m.cpds, **_merged_rules(model, rules)})


def expected_utilities(model: Model, rules: PolicyRules) -> dict[str, float]:
    """Each agent's expected sum of utility variables under the profile."""
    m = base_maid(model)
    tables = {**m.cpds, **_merged_rules(model, rules)}
    order = bn.topo_sort({name: m.parents[name] for name in m.variables})
    payoff_vars = [
        (name, m.variables[name].owner, m.variables[name].values)
        for name in m.utilities()
    ]
    totals = dict.fromkeys(m.agents, 0.0)
    a: dict[str, str] = {}

    def rec(i: int, prob: float) -> None:
        if i == len(order):
            for name, owner, values in payoff_vars:
                totals[owner] += prob * values[a[name]]
            return
        name = order[i]
        row = tables[name].row_for(a)
        for label in m.variables[name].domain:
            p = row.get(label, 0.0)
            if p <= 0.0:
                continue
            a[name] = label
            rec(i + 1, prob * p)
            del a[name]

    rec(0, 1.0)
    return totals


def expected_utility(model: Model, rules: PolicyRules, agent: str) -> float:
    if agent not in base_maid(model).agents:
        raise UnknownAgent(agent)
    return expected_utilities(model, rules)[agent]


def _policy_slots(model: Model, decisions: Iterable[str]) -> list[tuple[str, tuple[str, ...]]]:
    m = base_maid(model)
    slots = []
    for d in sorted(decisions):
        domains = [m.variables[p].domain for p in m.parents[d]]
        for ctx in product(*domains):
            slots.append((d, ctx))
    return slots


def count_pure_policies(model: Model, decisions: Iterable[str]) -> int:
    m = base_maid(model)
    total = 1
    for d, _ in _policy_slots(model, decisions):
        total *= len(m.variables[d].domain)
    return total


def iter_pure_rules(
    model: Model, decisions: Iterable[str], cap: int = DEFAULT_CAP
) -> Iterator[dict[str, Cpd]]:
    """All pure policies over ``decisions`` in lexicographic order.

    Order is by (decision name, parent context, action label), so the very
    first policy picks the least action everywhere.
    """
    m = base_maid(model)
    slots = _policy_slots(model, decisions)
    total = count_pure_policies(model, decisions)
    if total > cap:
        raise SearchSpaceTooLarge(f"{total} pure policies exceeds cap {cap}")
    for combo in product(*(m.variables[d].domain for d, _ in slots)):
        cells: dict[str, dict[tuple[str, ...], Row]] = {}
        for (d, ctx), label in zip(slots, combo):
            cells.setdefault(d, {})[ctx] = bn.point_row(m.variables[d].domain, label)
        yield {d: Cpd(d, m.parents[d], rows) for d, rows in cells.items()}


def best_response(
    model: Model, others: PolicyRules, agent: str, cap: int = DEFAULT_CAP
) -> tuple[dict[str, Cpd], float]:
    """The agent's best pure policy against fixed opponent rules.

    Ties are broken lexicographically: the first maximizer in enumeration
    order wins, which selects the least action at indifferent contexts.
    """
    if agent not in base_maid(model).agents:
        raise UnknownAgent(agent)
    own = free_decisions(model, agent)
    best_rules: dict[str, Cpd] | None = None
    best_value = 0.0
    for cand in iter_pure_rules(model, own, cap):
        value = expected_utility(model, {**dict(others), **cand}, agent)
        if best_rules is None or value > best_value:
            best_rules, best_value = cand, value
    assert best_rules is not None
    return best_rules, best_value


def is_nash(
    model: Model, rules: PolicyRules, tol: float = 1e-9, cap: int = DEFAULT_CAP
) -> tuple[bool, dict[str, float]]:
    """Check the profile for unilateral pure deviations; returns per-agent regret."""
    m = base_maid(model)
    regrets: dict[str, float] = {}
    for agent in m.agents:
        achieved = expected_utility(model, rules, agent)
        own = set(free_decisions(model, agent))
        others = {d: r for d, r in rules.items() if d not in own}
        _, brv = best_response(model, others, agent, cap)
        regrets[agent] = brv - achieved
    return all(r <= tol for r in regrets.values()), regrets


def find_pure_nash(
    model: Model, tol: float = 1e-9, cap: int = DEFAULT_CAP
) -> list[dict[str, Cpd]]:
    """All pure-policy Nash equilibria, in lexicographic profile order."""
    found = []
    for profile in iter_pure_rules(model, free_decisions(model), cap):
        ok, _ = is_nash(model, profile, tol, cap)
        if ok:
            found.append(profile)
    return found


def has_perfect_recall(model: Model, agent: str) -> tuple[bool, list[str] | None]:
    """Whether the agent's open decisions admit a recall-compatible total order.

    Returns (True, order) where each later decision observes every earlier
    decision and all of its informational parents, or (False, None).
    """
    m = base_maid(model)
    if agent not in m.agents:
        raise UnknownAgent(agent)
    ds = sorted(free_decisions(model, agent), key=lambda d: (len(m.parents[d]), d))
    for i, early in enumerate(ds):
        for late in ds[i + 1 :]:
            needed = set(m.parents[early]) | {early}
            if not needed <= set(m.parents[late]):
                return False, None
    return True, ds
