"""Graphviz DOT renderings of diagrams, game trees, and belief structures."""

from __future__ import annotations

from .bn import CHANCE, DECISION, UTILITY
from .efg import Efg, info_sets
from .errors import ValidationError
from .incomplete import IiMaid, believers
from .maid import Model, base_maid, fixed_rules

_SHAPES = {CHANCE: "ellipse", DECISION: "box", UTILITY: "diamond"}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _maid_body(model: Model, prefix: str = "", indent: str = "  ") -> list[str]:
    m = base_maid(model)
    committed = set(fixed_rules(model))
    lines = []
    for name in sorted(m.variables):
        v = m.variables[name]
        label = name if v.owner is None else f"{name}\\n[{v.owner}]"
        attrs = [f"shape={_SHAPES[v.kind]}", f"label={_quote(label)}"]
        if name in committed:
            attrs.append("style=filled")
            attrs.append('fillcolor="lightgray"')
        lines.append(f"{indent}{_quote(prefix + name)} [{', '.join(attrs)}];")
    for child in sorted(m.variables):
        for parent in m.parents[child]:
            style = " [style=dashed]" if m.kind(child) == DECISION else ""
            lines.append(
                f"{indent}{_quote(prefix + parent)} -> {_quote(prefix + child)}{style};"
            )
    return lines


def maid_dot(model: Model, name: str = "G") -> str:
    """A diagram graph: dashed information links, one shape per variable kind."""
    lines = [f"digraph {name} {{"]
    lines.extend(_maid_body(model))
    lines.append("}")
    return "\n".join(lines) + "\n"


def efg_dot(g: Efg, name: str = "G") -> str:
    """A game tree with dashed connectors joining information-set members."""
    lines = [f"digraph {name} {{",
             "  node [shape=point];"]
    for nid, node in enumerate(g.nodes):
        ident = _quote(f"n{nid}")
        if node.kind == "leaf":
            payoff = ", ".join(
                f"{agent}: {node.payoffs.get(agent, 0.0):g}" for agent in g.agents
            )
            lines.append(f"  {ident} [shape=box, label={_quote(payoff)}];")
        elif node.kind == "chance":
            lines.append(
                f"  {ident} [shape=ellipse, label={_quote(node.var or '')}];"
            )
        else:
            lines.append(
                f"  {ident} [shape=box, "
                f"label={_quote(f'{node.var} [{node.owner}]')}];"
            )
        for label, child in node.edges:
            tag = label
            if node.kind == "chance" and node.dist is not None:
                tag = f"{label} ({node.dist.get(label, 0.0):g})"
            lines.append(
                f"  {ident} -> {_quote(f'n{child}')} [label={_quote(tag)}];"
            )
    for agent in g.agents:
        for key, members in sorted(info_sets(g, agent).items(), key=repr):
            for a, b in zip(members, members[1:]):
                lines.append(
                    f"  {_quote(f'n{a}')} -> {_quote(f'n{b}')} "
                    "[style=dashed, dir=none, constraint=false];"
                )
    lines.append("}")
    return "\n".join(lines) + "\n"


def belief_tree_dot(x: IiMaid, depth: int, name: str = "G") -> str:
    """Bounded unrolling of the belief structure into a tree of diagrams.

    One cluster per visited model occurrence, starting at the objective model;
    each positive belief becomes an edge labeled ``agent:probability``.
    Depth 0 renders the objective model alone.
    """
    if depth < 0:
        raise ValidationError([f"negative-depth: {depth}"])
    lines = [f"digraph {name} {{", "  compound=true;"]
    counter = [0]

    def anchor(mid: str, idx: int) -> str:
        m = base_maid(x.models[mid].model)
        return f"c{idx}_{sorted(m.variables)[0]}"

    def emit(mid: str, left: int) -> int:
        idx = counter[0]
        counter[0] += 1
        s = x.models[mid]
        lines.append(f"  subgraph cluster_{idx} {{")
        lines.append(f"    label={_quote(mid)};")
        lines.extend(_maid_body(s.model, prefix=f"c{idx}_", indent="    "))
        lines.append("  }")
        if left > 0:
            for agent in believers(s):
                for target, p in sorted(s.beliefs[agent].items()):
                    if p <= 0.0:
                        continue
                    child_idx = emit(target, left - 1)
                    lines.append(
                        f"  {_quote(anchor(mid, idx))} -> "
                        f"{_quote(anchor(target, child_idx))} "
                        f"[ltail=cluster_{idx}, lhead=cluster_{child_idx}, "
                        f"label={_quote(f'{agent}:{p:g}')}];"
                    )
        return idx

    emit(x.objective, depth)
    lines.append("}")
    return "\n".join(lines) + "\n"
