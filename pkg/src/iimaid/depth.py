"""Finite-depth belief stacks and the recursive best-response solver.

A stack is an acyclic family of subjective models: depth-0 nodes are
single-agent decision problems (everyone else pre-committed), and a node of
depth k believes at least one node of depth k-1 and nothing deeper.  Solving
works backwards: assign final decisions in the believed depth-0 problems,
collect them into best-response policies, push those policies one level up,
and repeat until the objective model is fully committed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Iterable, Mapping

from . import bn
from .bn import Row, TOL
from .errors import (
    CycleError,
    GameError,
    NotOpenMinded,
    UnknownAgent,
    ValidationError,
    ZeroProbabilityEvidence,
)
from .incomplete import (
    IiMaid,
    InformationSet,
    SubjectiveMaid,
    _support_contexts,
    believers,
    model_information_sets,
)
from .maid import (
    Cpd,
    Maid,
    Model,
    PostPolicyMaid,
    base_maid,
    fixed_rules,
    free_decisions,
    has_perfect_recall,
)

ValueFn = Callable[[Model, str, str, Mapping[str, str], str], float]


@dataclass(frozen=True)
class DepthStack:
    """An acyclic belief hierarchy over partially committed models."""

    agents: tuple[str, ...]
    objective: str
    nodes: Mapping[str, SubjectiveMaid]

    def __post_init__(self) -> None:
        object.__setattr__(self, "agents", tuple(sorted(self.agents)))
        object.__setattr__(self, "nodes", dict(self.nodes))
        issues = []
        if self.objective not in self.nodes:
            issues.append(f"unknown-objective: {self.objective}")
        for nid in sorted(self.nodes):
            s = self.nodes[nid]
            if s.id != nid:
                issues.append(f"node-id-mismatch: {nid} vs {s.id}")
            if not set(base_maid(s.model).agents) <= set(self.agents):
                issues.append(f"unknown-agents-in-node: {nid}")
            for agent in believers(s):
                if agent not in self.agents:
                    issues.append(f"unknown-believer: {agent} in {nid}")
                row = s.beliefs[agent]
                for target in sorted(row):
                    if target not in self.nodes:
                        issues.append(f"dangling-belief: {nid}.{agent} -> {target}")
                if abs(sum(row.values()) - 1.0) > TOL or any(
                    p < -TOL for p in row.values()
                ):
                    issues.append(f"belief-row-not-normalized: {nid}.{agent}")
        if issues:
            raise ValidationError(issues)


@dataclass(frozen=True)
class TraceStep:
    """One committed rule row: where it was decided and what it was worth."""

    round: int
    node: str
    agent: str
    info_set: InformationSet
    action: str
    value: float
    written_to: tuple[str, ...]


@dataclass(frozen=True)
class RbrResult:
    profile: dict[InformationSet, Row]
    trace: tuple[TraceStep, ...]
    final: DepthStack
    objective_rules: dict[str, Cpd]
    depth: int


def _positive_targets(s: SubjectiveMaid, agent: str) -> list[str]:
    return [t for t, p in sorted(s.beliefs.get(agent, {}).items()) if p > 0.0]


def _free_agents(model: Model) -> list[str]:
    return sorted({a for a in base_maid(model).agents if free_decisions(model, a)})


def classify_depth(stack: DepthStack) -> tuple[dict[str, int], int]:
    """Depth per node and the stack's overall depth.

    A node without beliefs is depth 0 and must be a single-agent problem;
    otherwise depth is one more than the deepest positively believed node.
    """
    depths: dict[str, int] = {}
    visiting: set[str] = set()

    def rec(nid: str) -> int:
        if nid in depths:
            return depths[nid]
        if nid in visiting:
            raise CycleError(f"cyclic-beliefs at {nid}")
        visiting.add(nid)
        s = stack.nodes[nid]
        children = [t for a in believers(s) for t in _positive_targets(s, a)]
        if not children:
            free = _free_agents(s.model)
            if len(free) > 1:
                raise ValidationError(
                    [f"depth-contract-violation: beliefless node {nid} "
                     f"leaves several agents uncommitted: {free}"]
                )
            d = 0
        else:
            d = 1 + max(rec(t) for t in children)
        visiting.discard(nid)
        depths[nid] = d
        return d

    for nid in sorted(stack.nodes):
        rec(nid)
    for nid in sorted(stack.nodes):
        s = stack.nodes[nid]
        for agent in believers(s):
            for target in sorted(s.beliefs[agent]):
                if depths[target] >= depths[nid]:
                    raise ValidationError(
                        [f"depth-contract-violation: {nid} (depth {depths[nid]}) "
                         f"references {target} (depth {depths[target]})"]
                    )
    return depths, depths[stack.objective]


def validate_stack(stack: DepthStack) -> list[str]:
    """Structural checks beyond construction: depth contract, belief scoping."""
    issues: list[str] = []
    try:
        classify_depth(stack)
    except (CycleError, ValidationError) as exc:
        issues.extend(str(exc).split("; "))
    for nid in sorted(stack.nodes):
        s = stack.nodes[nid]
        for agent in believers(s):
            if not free_decisions(s.model, agent):
                issues.append(f"committed-agent-with-beliefs: {agent} in {nid}")
            for target in _positive_targets(s, agent):
                subject = [
                    a
                    for a in _free_agents(stack.nodes[target].model)
                    if a not in believers(stack.nodes[target])
                ]
                if not set(subject) <= {agent}:
                    issues.append(
                        f"believed-node-for-wrong-agent: {nid}.{agent} -> {target} "
                        f"(uncommitted without beliefs there: {subject})"
                    )
        for agent in sorted(base_maid(s.model).agents):
            ok, _ = has_perfect_recall(s.model, agent)
            if not ok:
                issues.append(f"imperfect-recall: {agent} in {nid}")
    return issues


def is_open_minded(
    stack: DepthStack,
) -> tuple[bool, list[tuple[str, str, InformationSet]]]:
    """Every information set an agent could face must be believed possible.

    For each node and each agent holding beliefs there, every information set
    arising in that node's model must arise in some positively believed node.
    """
    from .incomplete import is_encounterable

    gaps = []
    for nid in sorted(stack.nodes):
        s = stack.nodes[nid]
        for agent in believers(s):
            targets = [stack.nodes[t] for t in _positive_targets(s, agent)]
            for iset in sorted(model_information_sets(s.model, agent)):
                if not any(is_encounterable(iset, t) for t in targets):
                    gaps.append((nid, agent, iset))
    return not gaps, gaps


def _matching_free(model: Model, agent: str, iset: InformationSet) -> list[str]:
    m = base_maid(model)
    obs_vars = tuple(v for v, _ in iset.observation)
    out = []
    for d in free_decisions(model, agent):
        if (
            m.parents[d] == obs_vars
            and m.variables[d].domain == iset.actions
            and all(val in m.variables[v].domain for v, val in iset.observation)
        ):
            out.append(d)
    return out


def _check_depth1(stack: DepthStack, nid: str, agent: str) -> None:
    if nid not in stack.nodes:
        raise ValidationError([f"unknown-node: {nid}"])
    s = stack.nodes[nid]
    if agent not in believers(s):
        raise UnknownAgent(f"{agent} holds no beliefs in {nid}")
    depths, _ = classify_depth(stack)
    deep = [t for t in _positive_targets(s, agent) if depths[t] != 0]
    if deep:
        raise ValidationError([f"not-depth-1: {nid}.{agent} believes {deep}"])


def final_information_sets(
    stack: DepthStack, nid: str, agent: str
) -> set[InformationSet]:
    """Information sets after which the agent takes no further open decision.

    Scans the agent's positively believed nodes: a set is final when no such
    node realizes it at a decision that feeds a later open decision of the
    same agent.
    """
    _check_depth1(stack, nid, agent)
    s = stack.nodes[nid]
    children = [stack.nodes[t] for t in _positive_targets(s, agent)]
    candidates: set[InformationSet] = set()
    for c in children:
        candidates |= model_information_sets(c.model, agent)
    out = set()
    for iset in candidates:
        final = True
        for c in children:
            m = base_maid(c.model)
            later = free_decisions(c.model, agent)
            for d in _matching_free(c.model, agent, iset):
                if any(d in m.parents[d2] for d2 in later if d2 != d):
                    final = False
        if final:
            out.add(iset)
    return out


def _net_rows(model: Model, pinned: Mapping[str, Row]) -> bn.BayesNet:
    """The model's network under its commitments, uniform where open."""
    m = base_maid(model)
    cpds = dict(m.cpds)
    for d in free_decisions(model):
        cpds[d] = Cpd(
            d,
            m.parents[d],
            {
                ctx: bn.uniform_row(m.variables[d].domain)
                for ctx in product(*(m.variables[p].domain for p in m.parents[d]))
            },
        )
    for d, rule in fixed_rules(model).items():
        cpds[d] = rule
    for d, row in pinned.items():
        cpds[d] = Cpd(d, m.parents[d], {
            ctx: dict(row)
            for ctx in product(*(m.variables[p].domain for p in m.parents[d]))
        })
    return bn.make_net(m.variables.values(), cpds.values())


def conditional_utility(
    model: Model, agent: str, decision: str, context: Mapping[str, str], action: str
) -> float:
    """Expected total utility for the agent given an observation and an action.

    The measure uses the model's committed rules with open decisions uniform.
    If the commitments give the observation zero probability, the expectation
    falls back to the measure with every decision uniform.
    """
    m = base_maid(model)
    pin = {decision: bn.point_row(m.variables[decision].domain, action)}
    for net in (_net_rows(model, pin), _net_rows(m, pin)):
        try:
            total = 0.0
            for u in m.utilities(agent):
                table = bn.marginal(net, [u], dict(context))
                total += sum(
                    m.variables[u].values[label] * p for (label,), p in table.items()
                )
            return total
        except ZeroProbabilityEvidence:
            continue
    raise ZeroProbabilityEvidence(
        f"observation {dict(context)} unreachable in every measure of {decision}"
    )


def _walk_conditional_utility(
    model: Model, agent: str, decision: str, context: Mapping[str, str], action: str
) -> float:
    """Independent recomputation of ``conditional_utility`` by direct recursion."""
    m = base_maid(model)
    pin = {decision: bn.point_row(m.variables[decision].domain, action)}
    for net in (_net_rows(model, pin), _net_rows(m, pin)):
        order = bn.topological_order(net)
        values = {
            u: m.variables[u].values for u in m.utilities(agent)
        }

        def rec(i: int, a: dict[str, str], p: float) -> tuple[float, float]:
            if p <= 0.0:
                return 0.0, 0.0
            if i == len(order):
                return p, p * sum(values[u][a[u]] for u in values)
            v = order[i]
            if v in context:
                row = net.cpds[v].row_for(a)
                a[v] = context[v]
                got = rec(i + 1, a, p * row.get(context[v], 0.0))
                del a[v]
                return got
            mass = gain = 0.0
            row = net.cpds[v].row_for(a)
            for label, q in row.items():
                a[v] = label
                dm, dg = rec(i + 1, a, p * q)
                mass += dm
                gain += dg
                del a[v]
            return mass, gain

        mass, gain = rec(0, {}, 1.0)
        if mass > 0.0:
            return gain / mass
    raise ZeroProbabilityEvidence(f"unreachable observation for {decision}")


def believed_action_value(
    stack: DepthStack,
    nid: str,
    agent: str,
    iset: InformationSet,
    action: str,
    value_fn: ValueFn = conditional_utility,
) -> float:
    """Belief-weighted conditional utility of an action at an information set."""
    s = stack.nodes[nid]
    row = s.beliefs.get(agent)
    if row is None:
        raise UnknownAgent(f"{agent} holds no beliefs in {nid}")
    total = 0.0
    hit = False
    for target, weight in sorted(row.items()):
        if weight <= 0.0:
            continue
        c = stack.nodes[target]
        for d in _matching_free(c.model, agent, iset):
            hit = True
            total += weight * value_fn(
                c.model, agent, d, dict(iset.observation), action
            )
            break
    if not hit:
        raise NotOpenMinded(f"{iset} arises in no believed model at {nid}")
    return total


def _complete_rule(
    m: Maid, d: str, chosen: Mapping[tuple[str, ...], str]
) -> Cpd:
    pa = m.parents[d]
    domain = m.variables[d].domain
    rows = {}
    for ctx in product(*(m.variables[p].domain for p in pa)):
        rows[ctx] = bn.point_row(domain, chosen.get(ctx, domain[0]))
    return Cpd(d, pa, rows)


def final_decision_assignment(
    stack: DepthStack,
    nid: str,
    agent: str,
    round_no: int = 0,
    value_fn: ValueFn = conditional_utility,
) -> tuple[DepthStack, list[TraceStep]]:
    """Commit the agent's final decisions in the believed models.

    Every decision all of whose reachable contexts are final gets a complete
    rule: the belief-weighted argmax row per final context and the least
    action elsewhere.  Rules are written into every believed model where the
    context arises.
    """
    finals = final_information_sets(stack, nid, agent)
    s = stack.nodes[nid]
    children = _positive_targets(s, agent)

    ready: list[tuple[str, str, dict[tuple[str, ...], InformationSet]]] = []
    for cid in children:
        c = stack.nodes[cid]
        m = base_maid(c.model)
        for d in free_decisions(c.model, agent):
            pa = m.parents[d]
            isets = {
                ctx: InformationSet(
                    agent, tuple(zip(pa, ctx)), m.variables[d].domain
                )
                for ctx in _support_contexts(c.model, d)
            }
            if set(isets.values()) <= finals:
                ready.append((cid, d, isets))

    if not ready:
        if any(free_decisions(stack.nodes[cid].model, agent) for cid in children):
            raise GameError(
                f"no assignable decision for {agent} at {nid}: "
                "believed models leave no fully final decision"
            )
        return stack, []

    to_assign = sorted({i for _, _, isets in ready for i in isets.values()})
    steps = []
    picks: dict[InformationSet, str] = {}
    for iset in to_assign:
        best_action, best_value = None, 0.0
        for action in iset.actions:
            v = believed_action_value(stack, nid, agent, iset, action, value_fn)
            if best_action is None or v > best_value + TOL:
                best_action, best_value = action, v
        assert best_action is not None
        picks[iset] = best_action
        written = tuple(
            cid for cid, _, isets in ready if iset in set(isets.values())
        )
        steps.append(
            TraceStep(round_no, nid, agent, iset, best_action, best_value, written)
        )

    new_nodes = dict(stack.nodes)
    per_child: dict[str, dict[str, Cpd]] = {}
    for cid, d, isets in ready:
        m = base_maid(stack.nodes[cid].model)
        chosen = {ctx: picks[i] for ctx, i in isets.items()}
        per_child.setdefault(cid, {})[d] = _complete_rule(m, d, chosen)
    for cid, new_rules in per_child.items():
        c = new_nodes[cid]
        model = PostPolicyMaid(
            base_maid(c.model), {**fixed_rules(c.model), **new_rules}
        )
        new_nodes[cid] = SubjectiveMaid(c.id, model, c.beliefs)
    return DepthStack(stack.agents, stack.objective, new_nodes), steps


def depth1_best_response(
    stack: DepthStack,
    nid: str,
    agent: str,
    round_no: int = 0,
    value_fn: ValueFn = conditional_utility,
) -> tuple[DepthStack, dict[InformationSet, Row], list[TraceStep]]:
    """The agent's optimal policy at a node whose believed models are committed.

    Applies the final-decision pass until the agent has nothing open in any
    believed model, then reads the full policy back out of those models'
    commitments (including rules committed before this call).
    """
    _check_depth1(stack, nid, agent)
    steps: list[TraceStep] = []
    while True:
        children = _positive_targets(stack.nodes[nid], agent)
        if not any(
            free_decisions(stack.nodes[cid].model, agent) for cid in children
        ):
            break
        stack, got = final_decision_assignment(stack, nid, agent, round_no, value_fn)
        steps.extend(got)

    policy: dict[InformationSet, Row] = {}
    for cid in children:
        c = stack.nodes[cid]
        m = base_maid(c.model)
        for d in sorted(fixed_rules(c.model)):
            if m.kind(d) != bn.DECISION or m.variables[d].owner != agent:
                continue
            rule = fixed_rules(c.model)[d]
            pa = m.parents[d]
            for ctx in _support_contexts(c.model, d):
                iset = InformationSet(agent, tuple(zip(pa, ctx)), m.variables[d].domain)
                policy[iset] = dict(rule.rows[ctx])
    return stack, policy, steps


def reduce_stack(
    stack: DepthStack, round_no: int = 1, value_fn: ValueFn = conditional_utility
) -> tuple[DepthStack, list[TraceStep]]:
    """Turn every depth-1 node into a committed depth-0 node.

    Each believing agent at a depth-1 node gets their best-response policy
    written into that node's commitments, after which the beliefs are dropped.
    The stack's overall depth decreases by exactly one.
    """
    depths, k = classify_depth(stack)
    if k < 1:
        raise ValidationError(["stack already fully committed"])
    steps: list[TraceStep] = []
    for nid in sorted(n for n, d in depths.items() if d == 1):
        for agent in believers(stack.nodes[nid]):
            stack, policy, got = depth1_best_response(
                stack, nid, agent, round_no, value_fn
            )
            steps.extend(got)
            node = stack.nodes[nid]
            m = base_maid(node.model)
            new_rules = {}
            for d in free_decisions(node.model, agent):
                pa = m.parents[d]
                domain = m.variables[d].domain
                support = _support_contexts(node.model, d)
                rows = {}
                for ctx in product(*(m.variables[p].domain for p in pa)):
                    if ctx in support:
                        iset = InformationSet(agent, tuple(zip(pa, ctx)), domain)
                        row = policy.get(iset)
                        if row is None:
                            raise NotOpenMinded(f"{iset} never resolved for {nid}")
                        rows[ctx] = dict(row)
                    else:
                        rows[ctx] = bn.point_row(domain, domain[0])
                new_rules[d] = Cpd(d, pa, rows)
            model = PostPolicyMaid(
                base_maid(node.model), {**fixed_rules(node.model), **new_rules}
            )
            beliefs = {a: r for a, r in node.beliefs.items() if a != agent}
            new_nodes = dict(stack.nodes)
            new_nodes[nid] = SubjectiveMaid(nid, model, beliefs)
            stack = DepthStack(stack.agents, stack.objective, new_nodes)
    _, k2 = classify_depth(stack)
    if k2 != k - 1:
        raise GameError(f"reduction changed depth {k} -> {k2}, expected {k - 1}")
    return stack, steps


def recursive_best_response(
    stack: DepthStack, value_fn: ValueFn = conditional_utility
) -> RbrResult:
    """Commit the whole stack and return the resulting policy profile.

    The profile collects every committed rule keyed by information set, with
    objective-level commitments taking precedence and least-action defaults at
    sets nothing ever resolved.  The objective model's own rules are returned
    alongside as decision tables.
    """
    issues = validate_stack(stack)
    if issues:
        raise ValidationError(issues)
    ok, gaps = is_open_minded(stack)
    if not ok:
        raise NotOpenMinded(f"{len(gaps)} unbelieved information sets, "
                            f"first: {gaps[0]}")
    obj = stack.nodes[stack.objective]
    uncovered = [a for a in _free_agents(obj.model) if a not in believers(obj)]
    if uncovered:
        raise ValidationError(
            [f"objective-agent-without-beliefs: {a}" for a in uncovered]
        )

    wanted: set[InformationSet] = set()
    for nid in sorted(stack.nodes):
        for agent in stack.agents:
            wanted |= model_information_sets(stack.nodes[nid].model, agent)

    _, k = classify_depth(stack)
    trace: list[TraceStep] = []
    for r in range(1, k + 1):
        stack, steps = reduce_stack(stack, r, value_fn)
        trace.extend(steps)

    profile: dict[InformationSet, Row] = {}
    for step in trace:
        profile[step.info_set] = bn.point_row(step.info_set.actions, step.action)
    for iset in sorted(wanted - set(profile)):
        profile[iset] = bn.point_row(iset.actions, iset.actions[0])

    objective_rules = dict(fixed_rules(stack.nodes[stack.objective].model))
    return RbrResult(profile, tuple(trace), stack, objective_rules, k)


def audit_trace(
    stack: DepthStack, result: RbrResult, tol: float = 1e-9
) -> list[str]:
    """Re-derive every committed action with an independent value computation.

    Replays the reduction on the original stack using a separately implemented
    conditional-utility routine and reports any step where the chosen action
    or its value disagrees.
    """
    redo = recursive_best_response(stack, value_fn=_walk_conditional_utility)
    problems = []
    if len(redo.trace) != len(result.trace):
        problems.append(
            f"trace length {len(result.trace)} vs recomputed {len(redo.trace)}"
        )
        return problems
    for got, want in zip(result.trace, redo.trace):
        where = (got.round, got.node, got.agent, got.info_set)
        if where != (want.round, want.node, want.agent, want.info_set):
            problems.append(f"step order diverges at {where}")
            return problems
        if got.action != want.action:
            problems.append(
                f"{where}: committed {got.action}, independent argmax {want.action}"
            )
        if abs(got.value - want.value) > tol:
            problems.append(
                f"{where}: value {got.value} vs recomputed {want.value}"
            )
    return problems


def unroll(x: IiMaid, k: int) -> DepthStack:
    """Truncate a (possibly cyclic) belief structure to a finite-depth stack.

    Produces a tree with path-based node ids.  At the depth horizon, beliefs
    are dropped and every other agent's open decisions are pinned to uniform
    rules, so the conversion is lossy by construction.
    """
    if k < 0:
        raise ValidationError([f"negative-depth: {k}"])
    nodes: dict[str, SubjectiveMaid] = {}

    def build(model_id: str, left: int, path: str, subject: str | None) -> str:
        src = x.models[model_id]
        if left == 0:
            rules = {}
            for agent in base_maid(src.model).agents:
                if agent == subject:
                    continue
                for d in free_decisions(src.model, agent):
                    m = base_maid(src.model)
                    rules[d] = Cpd(d, m.parents[d], {
                        ctx: bn.uniform_row(m.variables[d].domain)
                        for ctx in product(
                            *(m.variables[p].domain for p in m.parents[d])
                        )
                    })
            model: Model = (
                PostPolicyMaid(base_maid(src.model),
                               {**fixed_rules(src.model), **rules})
                if rules
                else src.model
            )
            nodes[path] = SubjectiveMaid(path, model, {})
            return path
        beliefs: dict[str, dict[str, float]] = {}
        for agent in believers(src):
            if agent == subject or not free_decisions(src.model, agent):
                continue
            row = {}
            for target in sorted(src.beliefs[agent]):
                p = src.beliefs[agent][target]
                if p <= 0.0:
                    continue
                child = build(target, left - 1, f"{path}/{agent}:{target}", agent)
                row[child] = p
            beliefs[agent] = row
        nodes[path] = SubjectiveMaid(path, src.model, beliefs)
        return path

    build(x.objective, k, "objective", None)
    return DepthStack(x.agents, "objective", nodes)
