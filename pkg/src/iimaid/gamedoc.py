"""JSON interchange for games, belief structures, stacks, and profiles.

Documents carry an explicit format version and one of five kinds.  Numbers
travel as decimal strings so files stay stable across writers; serialization
is canonical (sorted keys, fixed list orders, two-space indent, trailing
newline), making serialize(parse(text)) == text for canonical inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

import jsonschema

from . import bn
from .bn import Cpd, Row, Variable
from .errors import SchemaViolation, ValidationError
from .incomplete import IiMaid, InformationSet, SubjectiveMaid
from .depth import DepthStack
from .maid import Maid, Model, PostPolicyMaid, base_maid, fixed_rules

FORMAT_VERSION = 1

PROB = {"type": "string", "pattern": r"^-?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$"}
NAME = {"type": "string", "minLength": 1}


def _row_schema() -> dict:
    return {"type": "object", "minProperties": 1, "additionalProperties": PROB}


_VARIABLE = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "name": NAME,
                "kind": {"const": "chance"},
                "domain": {"type": "array", "items": NAME, "minItems": 1},
            },
            "required": ["name", "kind", "domain"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "name": NAME,
                "kind": {"const": "decision"},
                "owner": NAME,
                "domain": {"type": "array", "items": NAME, "minItems": 1},
            },
            "required": ["name", "kind", "owner", "domain"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "name": NAME,
                "kind": {"const": "utility"},
                "owner": NAME,
                "values": {
                    "type": "object",
                    "minProperties": 1,
                    "additionalProperties": PROB,
                },
            },
            "required": ["name", "kind", "owner", "values"],
            "additionalProperties": False,
        },
    ],
}

_CPD = {
    "type": "object",
    "properties": {
        "child": NAME,
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "context": {"type": "array", "items": NAME},
                    "row": _row_schema(),
                },
                "required": ["context", "row"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["child", "rows"],
    "additionalProperties": False,
}

_GRAPH_PROPS = {
    "variables": {"type": "array", "items": _VARIABLE, "minItems": 1},
    "edges": {
        "type": "array",
        "items": {
            "type": "array",
            "items": NAME,
            "minItems": 2,
            "maxItems": 2,
        },
    },
    "cpds": {"type": "array", "items": _CPD},
}

_BELIEFS = {
    "type": "object",
    "additionalProperties": {
        "type": "object",
        "minProperties": 1,
        "additionalProperties": PROB,
    },
}

_SUBJECTIVE = {
    "type": "object",
    "properties": {
        "id": NAME,
        **_GRAPH_PROPS,
        "xi": {"type": "array", "items": _CPD},
        "beliefs": _BELIEFS,
    },
    "required": ["id", "variables", "edges", "cpds", "beliefs"],
    "additionalProperties": False,
}

SCHEMAS: dict[str, dict] = {
    "maid": {
        "type": "object",
        "properties": {
            "format_version": {"const": FORMAT_VERSION},
            "kind": {"const": "maid"},
            "agents": {"type": "array", "items": NAME, "minItems": 1},
            **_GRAPH_PROPS,
        },
        "required": ["format_version", "kind", "agents", "variables", "edges", "cpds"],
        "additionalProperties": False,
    },
    "ii-maid": {
        "type": "object",
        "properties": {
            "format_version": {"const": FORMAT_VERSION},
            "kind": {"const": "ii-maid"},
            "agents": {"type": "array", "items": NAME, "minItems": 1},
            "objective": NAME,
            "models": {"type": "array", "items": _SUBJECTIVE, "minItems": 1},
        },
        "required": ["format_version", "kind", "agents", "objective", "models"],
        "additionalProperties": False,
    },
    "depth-stack": {
        "type": "object",
        "properties": {
            "format_version": {"const": FORMAT_VERSION},
            "kind": {"const": "depth-stack"},
            "agents": {"type": "array", "items": NAME, "minItems": 1},
            "objective": NAME,
            "nodes": {"type": "array", "items": _SUBJECTIVE, "minItems": 1},
        },
        "required": ["format_version", "kind", "agents", "objective", "nodes"],
        "additionalProperties": False,
    },
    "maid-profile": {
        "type": "object",
        "properties": {
            "format_version": {"const": FORMAT_VERSION},
            "kind": {"const": "maid-profile"},
            "rules": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "decision": NAME,
                        "parents": {"type": "array", "items": NAME},
                        "rows": _CPD["properties"]["rows"],
                    },
                    "required": ["decision", "parents", "rows"],
                    "additionalProperties": False,
                },
            },
        },
        "required": ["format_version", "kind", "rules"],
        "additionalProperties": False,
    },
    "ii-profile": {
        "type": "object",
        "properties": {
            "format_version": {"const": FORMAT_VERSION},
            "kind": {"const": "ii-profile"},
            "rules": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "agent": NAME,
                        "observation": {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "items": NAME,
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        },
                        "row": _row_schema(),
                    },
                    "required": ["agent", "observation", "row"],
                    "additionalProperties": False,
                },
            },
        },
        "required": ["format_version", "kind", "rules"],
        "additionalProperties": False,
    },
}


@dataclass(frozen=True)
class MaidProfile:
    rules: dict[str, Cpd]


@dataclass(frozen=True)
class IiProfile:
    rules: dict[InformationSet, Row]


@dataclass(frozen=True)
class GameDocument:
    kind: str
    value: Maid | IiMaid | DepthStack | MaidProfile | IiProfile


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _parse_prob(s: str, path: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise SchemaViolation(path, f"not a decimal number: {s!r}") from None


def _check_row_sum(row: Mapping[str, float], path: str) -> None:
    total = sum(row.values())
    if abs(total - 1.0) > 1e-9 or any(p < -1e-9 for p in row.values()):
        raise SchemaViolation(path, f"row sums to {_fmt(total)}, expected 1")


def _variables_from_doc(items: list[dict], path: str) -> list[Variable]:
    out = []
    for i, item in enumerate(items):
        if item["kind"] == "utility":
            values = {
                label: _parse_prob(s, f"{path}[{i}].values.{label}")
                for label, s in item["values"].items()
            }
            out.append(
                Variable(
                    item["name"], tuple(sorted(values)), bn.UTILITY,
                    item["owner"], values,
                )
            )
        else:
            out.append(
                Variable(
                    item["name"],
                    tuple(item["domain"]),
                    item["kind"],
                    item.get("owner"),
                    None,
                )
            )
    return out


def _cpd_from_doc(
    item: dict, parents: tuple[str, ...], path: str
) -> Cpd:
    rows = {}
    for j, entry in enumerate(item["rows"]):
        ctx = tuple(entry["context"])
        if len(ctx) != len(parents):
            raise SchemaViolation(
                f"{path}.rows[{j}].context",
                f"expected {len(parents)} values for parents {list(parents)}",
            )
        row = {
            label: _parse_prob(s, f"{path}.rows[{j}].row.{label}")
            for label, s in entry["row"].items()
        }
        _check_row_sum(row, f"{path}.rows[{j}].row")
        rows[ctx] = row
    return Cpd(item["child"], parents, rows)


def _model_from_doc(
    doc: Mapping[str, Any], path: str, agents: Iterable[str]
) -> Model:
    variables = _variables_from_doc(doc["variables"], f"{path}.variables")
    names = {v.name for v in variables}
    kinds = {v.name: v.kind for v in variables}
    parents: dict[str, list[str]] = {v.name: [] for v in variables}
    for i, (u, v) in enumerate(doc["edges"]):
        if u not in names or v not in names:
            raise SchemaViolation(
                f"{path}.edges[{i}]", f"unknown variable in ({u}, {v})"
            )
        parents[v].append(u)
    cpds = {}
    for i, item in enumerate(doc["cpds"]):
        child = item["child"]
        if child not in names:
            raise SchemaViolation(f"{path}.cpds[{i}].child", f"unknown variable {child}")
        if kinds[child] == bn.DECISION:
            raise SchemaViolation(
                f"{path}.cpds[{i}]", f"decision {child} must use xi, not cpds"
            )
        cpds[child] = _cpd_from_doc(
            item, tuple(sorted(parents[child])), f"{path}.cpds[{i}]"
        )
    for v in variables:
        if v.kind != bn.DECISION and v.name not in cpds:
            raise SchemaViolation(f"{path}.cpds", f"missing table for {v.name}")
    try:
        maid = Maid.build(agents, variables, doc["edges"], cpds.values())
    except ValidationError as exc:
        raise SchemaViolation(path, "; ".join(exc.issues)) from None
    xi_items = doc.get("xi", [])
    if not xi_items:
        return maid
    xi = {}
    for i, item in enumerate(xi_items):
        child = item["child"]
        if child not in names or kinds[child] != bn.DECISION:
            raise SchemaViolation(
                f"{path}.xi[{i}].child", f"{child} is not a decision"
            )
        xi[child] = _cpd_from_doc(
            item, tuple(sorted(parents[child])), f"{path}.xi[{i}]"
        )
    try:
        return PostPolicyMaid(maid, xi)
    except ValidationError as exc:
        raise SchemaViolation(f"{path}.xi", "; ".join(exc.issues)) from None


def _beliefs_from_doc(
    doc: Mapping[str, float], path: str
) -> dict[str, dict[str, float]]:
    out = {}
    for agent in sorted(doc):
        row = {
            target: _parse_prob(s, f"{path}.{agent}.{target}")
            for target, s in doc[agent].items()
        }
        _check_row_sum(row, f"{path}.{agent}")
        out[agent] = row
    return out


def parse_document(text: str) -> GameDocument:
    """Validate and build the typed object a JSON document describes."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict) or "kind" not in raw:
        raise SchemaViolation("$.kind", "missing document kind")
    kind = raw["kind"]
    schema = SCHEMAS.get(kind)
    if schema is None:
        raise SchemaViolation("$.kind", f"unknown kind {kind!r}")
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaViolation(err.json_path, err.message)

    if kind == "maid":
        model = _model_from_doc(raw, "$", raw["agents"])
        if isinstance(model, PostPolicyMaid):
            raise SchemaViolation("$.xi", "plain game documents cannot carry xi")
        return GameDocument(kind, model)

    if kind in ("ii-maid", "depth-stack"):
        key = "models" if kind == "ii-maid" else "nodes"
        members = {}
        for i, item in enumerate(raw[key]):
            path = f"$.{key}[{i}]"
            model = _model_from_doc(item, path, raw["agents"])
            beliefs = _beliefs_from_doc(item["beliefs"], f"{path}.beliefs")
            members[item["id"]] = SubjectiveMaid(item["id"], model, beliefs)
        try:
            if kind == "ii-maid":
                return GameDocument(
                    kind, IiMaid(tuple(raw["agents"]), raw["objective"], members)
                )
            return GameDocument(
                kind, DepthStack(tuple(raw["agents"]), raw["objective"], members)
            )
        except ValidationError as exc:
            raise SchemaViolation(f"$.{key}", "; ".join(exc.issues)) from None

    if kind == "maid-profile":
        rules = {}
        for i, item in enumerate(raw["rules"]):
            rules[item["decision"]] = _cpd_from_doc(
                {"child": item["decision"], "rows": item["rows"]},
                tuple(item["parents"]),
                f"$.rules[{i}]",
            )
        return GameDocument(kind, MaidProfile(rules))

    rules = {}
    for i, item in enumerate(raw["rules"]):
        row = {
            label: _parse_prob(s, f"$.rules[{i}].row.{label}")
            for label, s in item["row"].items()
        }
        _check_row_sum(row, f"$.rules[{i}].row")
        iset = InformationSet(
            item["agent"],
            tuple(sorted((v, val) for v, val in item["observation"])),
            tuple(sorted(row)),
        )
        rules[iset] = row
    return GameDocument("ii-profile", IiProfile(rules))


def _variable_to_doc(v: Variable) -> dict:
    if v.kind == bn.UTILITY:
        return {
            "name": v.name,
            "kind": v.kind,
            "owner": v.owner,
            "values": {label: _fmt(v.values[label]) for label in v.domain},
        }
    out = {"name": v.name, "kind": v.kind, "domain": list(v.domain)}
    if v.owner is not None:
        out["owner"] = v.owner
    return out


def _cpd_to_doc(cpd: Cpd) -> dict:
    return {
        "child": cpd.child,
        "rows": [
            {
                "context": list(ctx),
                "row": {label: _fmt(p) for label, p in sorted(cpd.rows[ctx].items())},
            }
            for ctx in sorted(cpd.rows)
        ],
    }


def _graph_to_doc(model: Model) -> dict:
    m = base_maid(model)
    edges = sorted((u, v) for v in m.variables for u in m.parents[v])
    doc = {
        "variables": [_variable_to_doc(m.variables[n]) for n in sorted(m.variables)],
        "edges": [list(e) for e in edges],
        "cpds": [_cpd_to_doc(m.cpds[n]) for n in sorted(m.cpds)],
    }
    xi = fixed_rules(model)
    if xi:
        doc["xi"] = [_cpd_to_doc(xi[n]) for n in sorted(xi)]
    return doc


def _beliefs_to_doc(beliefs: Mapping[str, Mapping[str, float]]) -> dict:
    return {
        agent: {
            target: _fmt(p) for target, p in sorted(beliefs[agent].items())
        }
        for agent in sorted(beliefs)
    }


def serialize_document(value: object) -> str:
    """Render any supported object as canonical document text."""
    if isinstance(value, GameDocument):
        value = value.value
    if isinstance(value, Maid):
        doc: dict[str, Any] = {
            "format_version": FORMAT_VERSION,
            "kind": "maid",
            "agents": list(value.agents),
            **_graph_to_doc(value),
        }
    elif isinstance(value, IiMaid):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "ii-maid",
            "agents": list(value.agents),
            "objective": value.objective,
            "models": [
                {
                    "id": mid,
                    **_graph_to_doc(value.models[mid].model),
                    "beliefs": _beliefs_to_doc(value.models[mid].beliefs),
                }
                for mid in sorted(value.models)
            ],
        }
    elif isinstance(value, DepthStack):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "depth-stack",
            "agents": list(value.agents),
            "objective": value.objective,
            "nodes": [
                {
                    "id": nid,
                    **_graph_to_doc(value.nodes[nid].model),
                    "beliefs": _beliefs_to_doc(value.nodes[nid].beliefs),
                }
                for nid in sorted(value.nodes)
            ],
        }
    elif isinstance(value, MaidProfile):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "maid-profile",
            "rules": [
                {
                    "decision": d,
                    "parents": list(value.rules[d].parents),
                    "rows": _cpd_to_doc(value.rules[d])["rows"],
                }
                for d in sorted(value.rules)
            ],
        }
    elif isinstance(value, IiProfile):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "ii-profile",
            "rules": [
                {
                    "agent": iset.agent,
                    "observation": [list(pair) for pair in iset.observation],
                    "row": {
                        label: _fmt(p)
                        for label, p in sorted(value.rules[iset].items())
                    },
                }
                for iset in sorted(value.rules)
            ],
        }
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
