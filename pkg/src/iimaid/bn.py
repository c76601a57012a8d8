"""Discrete Bayesian networks with exact inference by enumeration.

All types here are immutable values and the operations are pure functions.
Variables and outcome labels are iterated in sorted order everywhere, so
identical inputs always produce identical outputs.  Inference is plain
enumeration with zero-probability pruning, which is exact and fast enough
for the network sizes this package targets (roughly twenty binary variables).
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    CycleError,
    PartialAssignment,
    ZeroProbabilityEvidence,
)

TOL = 1e-9

CHANCE = "chance"
DECISION = "decision"
UTILITY = "utility"

Row = Mapping[str, float]
Assignment = Mapping[str, str]


@dataclass(frozen=True)
class Variable:
    """A named discrete variable.

    The domain is stored sorted so iteration order is canonical.  Utility
    variables carry a real payoff per outcome label in ``values``.
    """

    name: str
    domain: tuple[str, ...]
    kind: str = CHANCE
    owner: str | None = None
    values: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(sorted(self.domain)))
        if self.values is not None:
            object.__setattr__(self, "values", dict(self.values))


def chance(name: str, domain: Iterable[str]) -> Variable:
    return Variable(name, tuple(domain), CHANCE)


def decision(name: str, owner: str, domain: Iterable[str]) -> Variable:
    return Variable(name, tuple(domain), DECISION, owner)


def utility(name: str, owner: str, values: Mapping[str, float]) -> Variable:
    """A utility variable whose domain is the key set of ``values``."""
    return Variable(name, tuple(values), UTILITY, owner, dict(values))


@dataclass(frozen=True)
class Cpd:
    """A conditional probability table.

    ``rows`` maps parent-outcome tuples, aligned with ``parents``, to a
    distribution over the child's domain.  Parents are kept sorted by name;
    rows supplied against a differently ordered parent list are re-keyed.
    """

    child: str
    parents: tuple[str, ...]
    rows: Mapping[tuple[str, ...], Row]

    def __post_init__(self) -> None:
        parents = tuple(self.parents)
        if list(parents) != sorted(parents):
            perm = sorted(range(len(parents)), key=lambda i: parents[i])
            rekeyed = {
                tuple(key[i] for i in perm): dict(row) for key, row in self.rows.items()
            }
            object.__setattr__(self, "parents", tuple(sorted(parents)))
            object.__setattr__(self, "rows", rekeyed)
        else:
            object.__setattr__(self, "parents", parents)
            object.__setattr__(
                self, "rows", {tuple(k): dict(v) for k, v in self.rows.items()}
            )

    def row_for(self, assignment: Assignment) -> Row:
        return self.rows[tuple(assignment[p] for p in self.parents)]


def point_row(domain: Sequence[str], label: str) -> dict[str, float]:
    if label not in domain:
        raise ValueError(f"label {label!r} not in domain {tuple(domain)}")
    return {o: (1.0 if o == label else 0.0) for o in domain}


def uniform_row(domain: Sequence[str]) -> dict[str, float]:
    p = 1.0 / len(domain)
    return {o: p for o in domain}


def tabulate(child, child_domain, parent_domains: Mapping[str, Sequence[str]], choose) -> Cpd:
    """Build a CPD by calling ``choose(context)`` for every parent context.

    ``choose`` may return an outcome label (producing a point mass) or a full
    distribution mapping.
    """
    parents = tuple(sorted(parent_domains))
    rows = {}
    for combo in product(*(tuple(sorted(parent_domains[p])) for p in parents)):
        out = choose(dict(zip(parents, combo)))
        rows[combo] = point_row(child_domain, out) if isinstance(out, str) else dict(out)
    return Cpd(child, parents, rows)


@dataclass(frozen=True)
class BayesNet:
    variables: Mapping[str, Variable]
    cpds: Mapping[str, Cpd]


def make_net(variables: Iterable[Variable], cpds: Iterable[Cpd]) -> BayesNet:
    return BayesNet({v.name: v for v in variables}, {c.child: c for c in cpds})


def topo_sort(parents: Mapping[str, Iterable[str]]) -> list[str]:
    """Topological order of a dependency map, smallest name first among ready nodes."""
    remaining = {name: set(ps) for name, ps in parents.items()}
    children: dict[str, list[str]] = {name: [] for name in parents}
    for name, ps in remaining.items():
        for p in ps:
            if p in children:
                children[p].append(name)
    ready = sorted(name for name, ps in remaining.items() if not ps)
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        name = heapq.heappop(ready)
        order.append(name)
        for c in children[name]:
            remaining[c].discard(name)
            if not remaining[c]:
                heapq.heappush(ready, c)
    if len(order) != len(parents):
        rest = sorted(set(parents) - set(order))
        raise CycleError(f"cycle-detected among {rest}")
    return order


def topological_order(net: BayesNet) -> list[str]:
    return topo_sort(
        {v: tuple(net.cpds[v].parents) if v in net.cpds else () for v in net.variables}
    )


def validate_net(net: BayesNet) -> list[str]:
    """Structural invariant check; returns one message per violation."""
    issues: list[str] = []
    for name in sorted(net.variables):
        if name not in net.cpds:
            issues.append(f"missing-cpd: {name}")
    for child in sorted(net.cpds):
        cpd = net.cpds[child]
        if child not in net.variables:
            issues.append(f"unknown-variable: cpd for {child}")
            continue
        var = net.variables[child]
        dangling = [p for p in cpd.parents if p not in net.variables]
        for p in dangling:
            issues.append(f"dangling-parent: {child} <- {p}")
        if not dangling:
            expected = set(product(*(net.variables[p].domain for p in cpd.parents)))
            got = set(cpd.rows)
            for ctx in sorted(expected - got):
                issues.append(f"missing-row: {child}{ctx}")
            for ctx in sorted(got - expected):
                issues.append(f"unknown-context: {child}{ctx}")
        for ctx in sorted(cpd.rows):
            row = cpd.rows[ctx]
            if set(row) != set(var.domain):
                issues.append(f"row-domain-mismatch: {child}{ctx}")
                continue
            total = sum(row.values())
            if abs(total - 1.0) > TOL or any(p < -TOL or p > 1.0 + TOL for p in row.values()):
                issues.append(f"row-not-normalized: {child}{ctx} sums to {total!r}")
    try:
        topological_order(net)
    except CycleError as e:
        issues.append(str(e))
    return issues


def _check_evidence(net: BayesNet, evidence: Assignment) -> None:
    for name, label in evidence.items():
        if name not in net.variables:
            raise ValueError(f"unknown evidence variable {name!r}")
        if label not in net.variables[name].domain:
            raise ValueError(f"label {label!r} not in domain of {name!r}")


def joint_probability(net: BayesNet, assignment: Assignment) -> float:
    """Chain-rule probability of a full assignment."""
    if set(assignment) != set(net.variables):
        missing = sorted(set(net.variables) - set(assignment))
        extra = sorted(set(assignment) - set(net.variables))
        raise PartialAssignment(f"missing={missing} extra={extra}")
    _check_evidence(net, assignment)
    prob = 1.0
    for name in net.variables:
        prob *= net.cpds[name].row_for(assignment)[assignment[name]]
        if prob == 0.0:
            return 0.0
    return prob


def enumerate_support(
    net: BayesNet,
    evidence: Assignment | None = None,
    order: Sequence[str] | None = None,
) -> Iterator[tuple[dict[str, str], float]]:
    """Yield (assignment, probability) over full assignments with positive mass.

    Only assignments consistent with the evidence are produced; branches of
    probability zero are pruned as soon as they appear.
    """
    ev = dict(evidence or {})
    _check_evidence(net, ev)
    names = list(order) if order is not None else topological_order(net)
    a: dict[str, str] = {}

    def rec(i: int, prob: float) -> Iterator[tuple[dict[str, str], float]]:
        if i == len(names):
            yield dict(a), prob
            return
        name = names[i]
        row = net.cpds[name].row_for(a)
        labels = (ev[name],) if name in ev else net.variables[name].domain
        for label in labels:
            p = row.get(label, 0.0)
            if p <= 0.0:
                continue
            a[name] = label
            yield from rec(i + 1, prob * p)
            del a[name]

    yield from rec(0, 1.0)


def marginal(
    net: BayesNet,
    targets: Iterable[str],
    evidence: Assignment | None = None,
) -> dict[tuple[str, ...], float]:
    """Exact joint marginal of ``targets`` (sorted by name) given evidence.

    The result covers every combination of target outcomes, including those
    with probability zero.  Raises ZeroProbabilityEvidence when the evidence
    itself has no support.
    """
    names = tuple(sorted(targets))
    for t in names:
        if t not in net.variables:
            raise ValueError(f"unknown target variable {t!r}")
    table = {
        combo: 0.0 for combo in product(*(net.variables[t].domain for t in names))
    }
    total = 0.0
    for a, p in enumerate_support(net, evidence):
        table[tuple(a[t] for t in names)] += p
        total += p
    if total <= 0.0:
        raise ZeroProbabilityEvidence(
            f"evidence {sorted((evidence or {}).items())} has probability 0"
        )
    return {k: v / total for k, v in sorted(table.items())}


def ancestral_sample(net: BayesNet, order: Sequence[str], rng: random.Random) -> dict[str, str]:
    a: dict[str, str] = {}
    for name in order:
        row = net.cpds[name].row_for(a)
        r = rng.random()
        acc = 0.0
        chosen = None
        for label in net.variables[name].domain:
            p = row.get(label, 0.0)
            if p <= 0.0:
                continue
            acc += p
            chosen = label
            if r < acc:
                break
        a[name] = chosen
    return a


def sample(net: BayesNet, seed: int) -> dict[str, str]:
    """One ancestral sample, deterministic for a fixed seed."""
    return ancestral_sample(net, topological_order(net), random.Random(seed))
