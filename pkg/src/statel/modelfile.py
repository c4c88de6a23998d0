"""JSON model files.

Values: JSON strings are label tokens, JSON lists are numeric vectors (numbers
or rational strings).  Weights and epsilons are rational strings ("p/q" or a
decimal) or JSON numbers.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .divergence import (
    Divergence,
    DivergenceSpec,
    GroundMetric,
    LipschitzSpec,
    Relation,
    build_from_spec,
    complement_relation,
    explicit_relation,
)
from .errors import StatelError, UnknownRelation
from .formula import format_number, parse_number
from .model import Model, State, Value, make_world


class ModelFileError(StatelError):
    pass


def _rational(raw) -> Fraction:
    if isinstance(raw, bool):
        raise ModelFileError(f"expected a rational, got {raw!r}")
    if isinstance(raw, str):
        try:
            return parse_number(raw.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ModelFileError(f"bad rational {raw!r}: {e}") from None
    if isinstance(raw, float):
        return Fraction(str(raw))
    if isinstance(raw, int):
        return Fraction(raw)
    raise ModelFileError(f"expected a rational, got {raw!r}")


def value_from_json(raw) -> Value:
    if isinstance(raw, str):
        return raw
    if isinstance(raw, list):
        return tuple(_rational(c) for c in raw)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return (_rational(raw),)
    raise ModelFileError(f"unsupported value {raw!r}")


def value_to_json(v: Value):
    if isinstance(v, str):
        return v
    return [format_number(c) for c in v]


def _divergence(spec: dict) -> Divergence:
    kind = spec.get("divergence", "tv")
    metric = spec.get("metric")
    return Divergence(kind, GroundMetric(metric) if metric else None)


def relation_spec_from_json(spec: dict):
    kind = spec.get("kind")
    if kind == "divergence":
        return DivergenceSpec(spec["var"], _divergence(spec), _rational(spec["epsilon"]))
    if kind == "lipschitz":
        return LipschitzSpec(spec.get("in_var", "x"), spec.get("out_var", "yhat"),
                             _divergence(spec), GroundMetric(spec.get("input_metric", "l1")),
                             _rational(spec["epsilon"]))
    raise ModelFileError(f"unknown relation kind {kind!r}")


def model_from_dict(doc: dict) -> Model:
    try:
        vars_ = doc["vars"]
        states = []
        raw_states = doc["states"]
        if isinstance(raw_states, dict):
            raw_states = [{"id": k, "assignment": v} for k, v in raw_states.items()]
        for s in raw_states:
            states.append(State(s["id"], {k: value_from_json(v) for k, v in s["assignment"].items()}))
        valuation = {
            sid: {p: [tuple(value_from_json(a) for a in t) for t in tuples]
                  for p, tuples in preds.items()}
            for sid, preds in (doc.get("valuation") or {}).items()
        }
        worlds = [make_world({s: _rational(p) for s, p in ws.items()}, wid)
                  for wid, ws in doc["worlds"].items()]
    except KeyError as e:
        raise ModelFileError(f"model file lacks field {e}") from None
    m = Model(vars_, states, worlds, valuation=valuation, arities=doc.get("predicates"),
              aliases=doc.get("aliases"))
    pending = dict(doc.get("relations") or {})
    # complements refer to other relations; resolve those last
    for rid, spec in pending.items():
        kind = spec.get("kind")
        if kind == "explicit":
            m.add_relation(rid, explicit_relation([tuple(p) for p in spec.get("pairs", [])], rid))
        elif kind != "complement":
            m.add_relation(rid, build_from_spec(m, relation_spec_from_json(spec), rid))
    for rid, spec in pending.items():
        if spec.get("kind") == "complement":
            base = spec.get("of")
            if base not in m.relations:
                raise UnknownRelation(f"relation {rid!r} complements unknown {base!r}")
            m.add_relation(rid, complement_relation(m, m.relations[base], rid))
    real = doc.get("real_world")
    if real is not None:
        m.world(real)
        m.real_world = real
    return m


def load_model(path) -> Model:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ModelFileError(f"{path}: expected a JSON object")
    return model_from_dict(doc)


def _valuation_table(m: Model) -> dict:
    """Explicit tuples for every predicate, including interpreter-backed ones."""
    out: dict = {}
    for sid, s in m.states.items():
        preds: dict = {}
        for pred, tuples in m.valuation.get(sid, {}).items():
            if pred not in m.interpreters:
                preds[pred] = sorted(([value_to_json(v) for v in t] for t in tuples), key=repr)
        for pred, (k, fn) in m.interpreters.items():
            values = [s.assignment[v] for v in m.vars]
            hits = []
            for args in _tuples(values, k):
                if fn(args):
                    hits.append([value_to_json(v) for v in args])
            if hits:
                preds[pred] = hits
        if preds:
            out[sid] = preds
    return out


def _tuples(values, k):
    if k == 0:
        yield ()
        return
    for v in values:
        for rest in _tuples(values, k - 1):
            yield (v, *rest)


def _value_text(v) -> str:
    return format_number(v) if isinstance(v, Fraction) else str(v)


def relation_to_dict(rel: Relation) -> dict:
    if rel.spec is not None:
        return rel.spec.to_dict()
    return {"kind": "explicit", "pairs": sorted([list(p) for p in rel.pairs])}


def model_to_dict(m: Model) -> dict:
    doc = {
        "vars": list(m.vars),
        "states": [{"id": s.id, "assignment": {k: value_to_json(v) for k, v in s.assignment.items()}}
                   for s in m.states.values()],
        "predicates": dict(sorted(m.arities.items())),
        "valuation": _valuation_table(m),
        "worlds": {w.id: {s: format_number(p) for s, p in sorted(w.weights.items())}
                   for w in m.world_list},
        "relations": {rid: relation_to_dict(r) for rid, r in m.relations.items()},
        "real_world": m.real_world,
    }
    if m.aliases:
        doc["aliases"] = dict(m.aliases)
    resolved = {}
    for rid, rel in m.relations.items():
        pairs = []
        for a, b in sorted(rel.pairs):
            entry = {"from": a, "to": b}
            if (a, b) in rel.values:
                entry["value"] = _value_text(rel.values[(a, b)])
            pairs.append(entry)
        resolved[rid] = {"provenance": rel.provenance, "pairs": pairs}
    doc["relations_resolved"] = resolved
    return doc


def dump_model(m: Model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m), indent=2) + "\n")
