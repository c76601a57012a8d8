"""Extensive-form games and the influence-diagram-to-tree conversion.

Trees are immutable node arrays.  Conversion expands chance and decision
variables in a topological order, folds utility variables into leaf payoffs
by conditional expectation, and groups decision nodes into information sets
by the observed parent context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

from . import bn
from .bn import CHANCE, DECISION, Row
from .errors import MissingRule, NonTopologicalOrder, UnknownAgent
from .maid import Maid

# Strategy: (agent, information-set key) -> distribution over action labels.
Strategy = Mapping[tuple[str, Hashable], Row]

# An observation is what the members of an information set have in common:
# the tree positions (depth indices) whose edge labels agree, with the label.
Observation = tuple[tuple[int, str], ...]


@dataclass(frozen=True)
class EfgNode:
    """One tree node.  ``edges`` holds (action label, child id), sorted by label."""

    kind: str  # "chance" | "decision" | "leaf"
    var: str | None = None
    owner: str | None = None
    iset: Hashable = None
    edges: tuple[tuple[str, int], ...] = ()
    dist: Mapping[str, float] | None = None
    payoffs: Mapping[str, float] | None = None

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.edges)


@dataclass(frozen=True)
class Efg:
    agents: tuple[str, ...]
    nodes: tuple[EfgNode, ...]
    root: int


def info_sets(g: Efg, agent: str) -> dict[Hashable, list[int]]:
    """The agent's information sets: key -> sorted member node ids."""
    if agent not in g.agents:
        raise UnknownAgent(agent)
    out: dict[Hashable, list[int]] = {}
    for nid, node in enumerate(g.nodes):
        if node.kind == DECISION and node.owner == agent:
            out.setdefault(node.iset, []).append(nid)
    return {k: sorted(v) for k, v in out.items()}


def maid2efg(
    m: Maid, order: Sequence[str] | None = None
) -> tuple[Efg, dict[int, dict[str, str]]]:
    """Convert a MAID to a game tree.

    Returns the tree and the node annotation map mu: node id -> the partial
    assignment of expanded variables on the path from the root (for leaves,
    the full chance-plus-decision assignment).

    Chance branches of probability zero are pruned; decision branches never
    are.  Decision nodes for the same variable whose observed parent values
    coincide share an information set keyed ``(variable, context)``.
    """
    expandable = sorted(m.chance_variables() + m.decisions())
    if order is None:
        names = [
            v
            for v in bn.topo_sort({n: m.parents[n] for n in m.variables})
            if m.kind(v) != bn.UTILITY
        ]
    else:
        names = list(order)
        if sorted(names) != expandable:
            raise NonTopologicalOrder(
                f"order must be a permutation of {expandable}"
            )
        seen: set[str] = set()
        for v in names:
            before = {p for p in m.parents[v] if m.kind(p) != bn.UTILITY}
            if not before <= seen:
                raise NonTopologicalOrder(f"{v} expanded before parents {sorted(before - seen)}")
            seen.add(v)

    payoff_vars = [
        (u, m.variables[u].owner, m.variables[u].values) for u in m.utilities()
    ]
    nodes: list[EfgNode] = []
    mu: dict[int, dict[str, str]] = {}

    def leaf_payoffs(a: dict[str, str]) -> dict[str, float]:
        out = dict.fromkeys(m.agents, 0.0)
        for name, owner, values in payoff_vars:
            row = m.cpds[name].row_for(a)
            out[owner] += sum(values[lbl] * p for lbl, p in row.items())
        return out

    def build(i: int, a: dict[str, str]) -> int:
        if i == len(names):
            nodes.append(EfgNode(kind="leaf", payoffs=leaf_payoffs(a)))
            nid = len(nodes) - 1
            mu[nid] = dict(a)
            return nid
        var = names[i]
        domain = m.variables[var].domain
        if m.kind(var) == CHANCE:
            row = m.cpds[var].row_for(a)
            edges = []
            dist = {}
            for label in domain:
                p = row.get(label, 0.0)
                if p <= 0.0:
                    continue
                a[var] = label
                edges.append((label, build(i + 1, a)))
                del a[var]
                dist[label] = p
            nodes.append(
                EfgNode(kind=CHANCE, var=var, edges=tuple(edges), dist=dist)
            )
        else:
            ctx = tuple(a[p] for p in m.parents[var])
            edges = []
            for label in domain:
                a[var] = label
                edges.append((label, build(i + 1, a)))
                del a[var]
            nodes.append(
                EfgNode(
                    kind=DECISION,
                    var=var,
                    owner=m.variables[var].owner,
                    iset=(var, ctx),
                    edges=tuple(edges),
                )
            )
        nid = len(nodes) - 1
        mu[nid] = dict(a)
        return nid

    root = build(0, {})
    return Efg(m.agents, tuple(nodes), root), mu


def efg_expected_utility(g: Efg, strategy: Strategy, agent: str) -> float:
    """Expected payoff of the agent under a behaviour strategy profile."""
    if agent not in g.agents:
        raise UnknownAgent(agent)

    def rec(nid: int) -> float:
        node = g.nodes[nid]
        if node.kind == "leaf":
            return node.payoffs.get(agent, 0.0)
        if node.kind == CHANCE:
            return sum(node.dist[lbl] * rec(child) for lbl, child in node.edges)
        key = (node.owner, node.iset)
        if key not in strategy:
            raise MissingRule(f"no strategy row for {key}")
        row = strategy[key]
        return sum(
            row.get(lbl, 0.0) * rec(child)
            for lbl, child in node.edges
            if row.get(lbl, 0.0) != 0.0
        )

    return rec(g.root)


def _parent_map(g: Efg) -> dict[int, tuple[int, str]]:
    parents: dict[int, tuple[int, str]] = {}
    for nid, node in enumerate(g.nodes):
        for label, child in node.edges:
            parents[child] = (nid, label)
    return parents


def history(g: Efg, nid: int) -> list[tuple[int, str]]:
    """Edge labels on the path from the root, as (node id, label taken) pairs."""
    parents = _parent_map(g)
    path: list[tuple[int, str]] = []
    while nid in parents:
        nid, label = parents[nid]
        path.append((nid, label))
    path.reverse()
    return path


def observation_of(g: Efg, agent: str, iset: Hashable) -> Observation:
    """The positions and labels every member history of the info set agrees on."""
    members = info_sets(g, agent).get(iset)
    if not members:
        raise MissingRule(f"agent {agent} has no information set {iset!r}")
    parents = _parent_map(g)
    hists = []
    for nid in members:
        path = []
        cur = nid
        while cur in parents:
            cur, label = parents[cur]
            path.append(label)
        path.reverse()
        hists.append(path)
    depth = min(len(h) for h in hists)
    return tuple(
        (pos, hists[0][pos])
        for pos in range(depth)
        if all(h[pos] == hists[0][pos] for h in hists)
    )


def has_perfect_recall_efg(g: Efg, agent: str) -> bool:
    """True when all members of each info set share the agent's own history.

    The own history of a node is the sequence of (information set, action)
    pairs at the agent's decision nodes strictly above it.
    """
    if agent not in g.agents:
        raise UnknownAgent(agent)
    parents = _parent_map(g)

    def own_history(nid: int) -> list[tuple[Hashable, str]]:
        path: list[tuple[Hashable, str]] = []
        cur = nid
        while cur in parents:
            cur, label = parents[cur]
            node = g.nodes[cur]
            if node.kind == DECISION and node.owner == agent:
                path.append((node.iset, label))
        path.reverse()
        return path

    for members in info_sets(g, agent).values():
        hists = [own_history(nid) for nid in members]
        if any(h != hists[0] for h in hists[1:]):
            return False
    return True


def strategy_from_policy(
    m: Maid, g: Efg, rules: Mapping[str, bn.Cpd]
) -> dict[tuple[str, Hashable], Row]:
    """Map MAID decision rules onto the converted tree's information sets."""
    out: dict[tuple[str, Hashable], Row] = {}
    for node in g.nodes:
        if node.kind != DECISION:
            continue
        var, ctx = node.iset
        if var not in rules:
            raise MissingRule(f"no rule for decision {var}")
        rule = rules[var]
        if tuple(rule.parents) != m.parents[var]:
            raise MissingRule(f"rule parents mismatch for {var}")
        out[(node.owner, node.iset)] = dict(rule.rows[ctx])
    return out
