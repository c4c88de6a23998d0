"""Classification models built from classifier/oracle tables and datasets.

Each dataset becomes one world: a distribution over states, one state per
distinct input ``x`` with ``y = H(x)`` and ``yhat = C(x)``.  Built-in
predicates are bound to interpreters:

    psi(x,yhat)    C(x) = yhat         psi_<l>(x)   C(x) = l
    h(x,y)         H(x) = y            h_<l>(x)     H(x) = l
    eta_<G>(x)     x in G              input_<i>(x) x is the i-th distinct input
"""

from __future__ import annotations

import csv
import itertools
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .divergence import GroundMetric, Relation, build_from_spec
from .errors import (
    EmptyDataset,
    InconsistentLabels,
    MissingScore,
    UndefinedInput,
)
from .formula import StaticFormula, format_number, parse_number, to_text
from .model import Model, State, Value, World

X, Y, YHAT = "x", "y", "yhat"
_IDENT_SAFE = re.compile(r"[^A-Za-z0-9_]")


def value_key(v: Value) -> str:
    """Canonical text key of an input value (used by CSV tables)."""
    if isinstance(v, str):
        return v
    return " ".join(format_number(c) for c in v)


def parse_value(text: str) -> Value:
    parts = text.split()
    try:
        return tuple(parse_number(p) for p in parts) if parts else text
    except (ValueError, ZeroDivisionError):
        return text.strip()


def ident_part(label: str) -> str:
    return _IDENT_SAFE.sub("_", str(label))


# --------------------------------------------------------------------------
# classifiers and oracles
# --------------------------------------------------------------------------


class LabelMap:
    """Total function from inputs to labels; used for both C and H."""

    def __init__(self, table: Mapping[Value, str] | Callable[[Value], str], name: str = "C"):
        self.name = name
        self._table = dict(table) if isinstance(table, Mapping) else None
        self._fn = None if isinstance(table, Mapping) else table

    def __call__(self, v: Value) -> str:
        if self._table is not None:
            try:
                return self._table[v]
            except (KeyError, TypeError):
                raise UndefinedInput(f"{self.name} is undefined on input {value_key(v)!r}") from None
        return self._fn(v)

    def get(self, v: Value):
        try:
            return self(v)
        except (UndefinedInput, TypeError, ValueError):
            return None


Classifier = LabelMap
Oracle = LabelMap


def oracle_from_scores(scores: Mapping[Value, Mapping[str, object]]) -> LabelMap:
    """argmax over labels of the score; ties go to the lexicographically least label."""
    labels = set()
    for row in scores.values():
        labels |= set(row)
    table = {}
    for v, row in scores.items():
        missing = labels - set(row)
        if missing:
            raise MissingScore(f"input {value_key(v)!r} has no score for {sorted(missing)}")
        best = max(Fraction(str(s)) if isinstance(s, float) else Fraction(s) for s in row.values())
        table[v] = min(lab for lab, s in row.items()
                       if (Fraction(str(s)) if isinstance(s, float) else Fraction(s)) == best)
    return LabelMap(table, "H")


def read_label_table(path) -> LabelMap:
    """Two-column ``input,label`` table, or scoring table ``input,label,score``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        if "input" not in cols or "label" not in cols:
            raise ValueError(f"{path}: expected columns 'input,label[,score]', got {cols}")
        rows = list(reader)
    if "score" in cols:
        scores: dict = {}
        for r in rows:
            scores.setdefault(parse_value(r["input"]), {})[r["label"].strip()] = parse_number(r["score"])
        return oracle_from_scores(scores)
    table = {}
    for r in rows:
        v = parse_value(r["input"])
        lab = r["label"].strip()
        if table.get(v, lab) != lab:
            raise InconsistentLabels(f"{path}: input {r['input']!r} mapped to two labels")
        table[v] = lab
    return LabelMap(table)


# --------------------------------------------------------------------------
# datasets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    x: Value
    y: str | None = None
    yhat: str | None = None
    groups: frozenset = frozenset()
    weight: Fraction = Fraction(1)


@dataclass
class ClassificationData:
    rows: list[Row]
    x_columns: tuple[str, ...] = ("x_0",)

    def __post_init__(self):
        for r in self.rows:
            if r.weight <= 0:
                raise ValueError(f"row weight must be positive, got {r.weight}")

    def input_distribution(self) -> dict:
        total = sum((r.weight for r in self.rows), Fraction(0))
        out: dict = {}
        for r in self.rows:
            out[r.x] = out.get(r.x, Fraction(0)) + r.weight / total
        return out


@dataclass(frozen=True)
class GroupDef:
    name: str
    members: frozenset

    def __contains__(self, v) -> bool:
        return v in self.members


def groups_from_data(*datasets: ClassificationData) -> list[GroupDef]:
    members: dict[str, set] = {}
    for d in datasets:
        for r in d.rows:
            for g in r.groups:
                members.setdefault(g, set()).add(r.x)
    return [GroupDef(g, frozenset(vs)) for g, vs in sorted(members.items())]


def read_dataset_csv(path) -> ClassificationData:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        xcols = tuple(c for c in cols if c.startswith("x_"))
        if not xcols:
            raise ValueError(f"{path}: no x_* feature columns")
        rows = []
        for r in reader:
            cells = [r[c].strip() for c in xcols]
            try:
                x: Value = tuple(parse_number(c) for c in cells)
            except (ValueError, ZeroDivisionError):
                x = " ".join(cells)
            groups = frozenset(g.strip() for g in (r.get("group") or "").split(";") if g.strip())
            weight = parse_number(r["weight"]) if r.get("weight") else Fraction(1)
            rows.append(Row(
                x=x,
                y=(r.get("y") or "").strip() or None,
                yhat=(r.get("yhat") or "").strip() or None,
                groups=groups,
                weight=weight,
            ))
    if not rows:
        raise EmptyDataset(f"{path}: no rows")
    return ClassificationData(rows, xcols)


def write_dataset_csv(data: ClassificationData, path) -> None:
    has_y = any(r.y is not None for r in data.rows)
    has_yhat = any(r.yhat is not None for r in data.rows)
    has_group = any(r.groups for r in data.rows)
    has_weight = any(r.weight != 1 for r in data.rows)
    header = list(data.x_columns)
    header += ["y"] * has_y + ["yhat"] * has_yhat + ["group"] * has_group + ["weight"] * has_weight
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in data.rows:
            cells = [format_number(c) for c in r.x] if not isinstance(r.x, str) else r.x.split(" ")
            if has_y:
                cells.append(r.y or "")
            if has_yhat:
                cells.append(r.yhat or "")
            if has_group:
                cells.append(";".join(sorted(r.groups)))
            if has_weight:
                cells.append(format_number(r.weight))
            w.writerow(cells)


def label_map_from_rows(datasets: Iterable[ClassificationData], column: str, name: str) -> LabelMap:
    table: dict = {}
    for d in datasets:
        for r in d.rows:
            lab = getattr(r, column)
            if lab is None:
                continue
            if table.get(r.x, lab) != lab:
                raise InconsistentLabels(
                    f"input {value_key(r.x)!r} has {column} labels {table[r.x]!r} and {lab!r}"
                )
            table[r.x] = lab
    return LabelMap(table, name)


# --------------------------------------------------------------------------
# model construction
# --------------------------------------------------------------------------


@dataclass
class ClassificationModel:
    """A built model plus the bookkeeping needed to address its parts."""

    model: Model
    classifier: LabelMap
    oracle: LabelMap
    labels: tuple[str, ...]
    inputs: tuple[Value, ...]
    groups: dict = field(default_factory=dict)
    # (dataset, condition text) -> world id of the restriction, or None if undefined
    restrictions: dict = field(default_factory=dict)

    def input_predicate(self, v: Value) -> str:
        return f"input_{self.inputs.index(v)}"


def _dist_from_rows(rows: list[Row], state_of: Mapping[Value, str]) -> dict:
    total = sum((r.weight for r in rows), Fraction(0))
    weights: dict = {}
    for r in rows:
        s = state_of[r.x]
        weights[s] = weights.get(s, Fraction(0)) + r.weight / total
    return weights


def build_classification_model(
    datasets: Mapping[str, ClassificationData],
    classifier: LabelMap | None = None,
    oracle: LabelMap | None = None,
    groups: Iterable[GroupDef] | None = None,
    relations: Mapping[str, object] | None = None,
    restrictions: Iterable[tuple[str, StaticFormula]] = (),
    real_world: str | None = None,
    labels: Iterable[str] = (),
) -> ClassificationModel:
    """One world per dataset, restricted worlds on request, relations materialized last.

    ``relations`` maps relation ids to a divergence/Lipschitz spec (materialized
    over the final universe) or to an explicit :class:`Relation`.  Datasets with
    identical distributions collapse to one world; the later name is an alias.
    """
    if not datasets:
        raise EmptyDataset("no datasets given")
    for name, d in datasets.items():
        if not d.rows:
            raise EmptyDataset(f"dataset {name!r} is empty")
    classifier = classifier or label_map_from_rows(datasets.values(), "yhat", "C")
    oracle = oracle or label_map_from_rows(datasets.values(), "y", "H")
    groups = list(groups) if groups is not None else groups_from_data(*datasets.values())

    inputs: list[Value] = []
    seen = set()
    for d in datasets.values():
        for r in d.rows:
            if r.x not in seen:
                seen.add(r.x)
                inputs.append(r.x)
    states = []
    state_of = {}
    for i, v in enumerate(inputs):
        sid = f"s{i}"
        states.append(State(sid, {X: v, Y: oracle(v), YHAT: classifier(v)}))
        state_of[v] = sid

    label_set = set(labels)
    for s in states:
        label_set.add(s.assignment[Y])
        label_set.add(s.assignment[YHAT])
    label_tuple = tuple(sorted(label_set))

    interpreters: dict = {
        "psi": (2, lambda a: classifier.get(a[0]) == a[1]),
        "h": (2, lambda a: oracle.get(a[0]) == a[1]),
    }
    for lab in label_tuple:
        key = ident_part(lab)
        if f"psi_{key}" in interpreters:
            raise ValueError(f"labels collide after sanitizing: {lab!r}")
        interpreters[f"psi_{key}"] = (1, lambda a, lab=lab: classifier.get(a[0]) == lab)
        interpreters[f"h_{key}"] = (1, lambda a, lab=lab: oracle.get(a[0]) == lab)
    for g in groups:
        interpreters[f"eta_{ident_part(g.name)}"] = (1, lambda a, g=g: a[0] in g.members)
    for i, v in enumerate(inputs):
        interpreters[f"input_{i}"] = (1, lambda a, v=v: a[0] == v)

    worlds: list[World] = []
    by_key: dict = {}
    aliases: dict = {}
    for name, d in datasets.items():
        w = World(name, _dist_from_rows(d.rows, state_of))
        if w.key in by_key:
            aliases[name] = by_key[w.key]
            continue
        by_key[w.key] = name
        worlds.append(w)

    base = Model((X, Y, YHAT), states, worlds, interpreters=interpreters, aliases=aliases)

    restricted: dict = {}
    extra: list[World] = []
    for dname, cond in restrictions:
        text = to_text(cond)
        if (dname, text) in restricted:
            continue
        parent = base.world(dname)
        r = base.restrict(parent, cond)
        if r is None:
            restricted[(dname, text)] = None
            continue
        if r.key in by_key:
            restricted[(dname, text)] = by_key[r.key]
            continue
        wid = f"{dname}|{text.replace(' ', '')}"
        by_key[r.key] = wid
        extra.append(r.named(wid))
        restricted[(dname, text)] = wid

    model = base.with_worlds(extra)
    for rid, spec in (relations or {}).items():
        rel = spec if isinstance(spec, Relation) else build_from_spec(model, spec, rid)
        model.add_relation(rid, rel)
    if real_world is None:
        real_world = next(iter(datasets))
    model.real_world = model.aliases.get(real_world, real_world)
    model.world(model.real_world)

    return ClassificationModel(
        model=model,
        classifier=classifier,
        oracle=oracle,
        labels=label_tuple,
        inputs=tuple(inputs),
        groups={g.name: g for g in groups},
        restrictions=restricted,
    )


def data_from_world(cm: ClassificationModel, world_id: str) -> ClassificationData:
    """Weighted dataset whose empirical input distribution is the world's x-marginal."""
    m = cm.model
    w = m.world(world_id)
    rows = [
        Row(x=m.states[s].assignment[X], y=m.states[s].assignment[Y],
            yhat=m.states[s].assignment[YHAT], weight=p)
        for s, p in w.weights.items()
    ]
    return ClassificationData(rows)


# --------------------------------------------------------------------------
# bounded perturbations
# --------------------------------------------------------------------------


def grid_domain(lo: int, hi: int, dim: int, step: Fraction = Fraction(1)) -> list[tuple]:
    """All points of the rational grid {lo, lo+step, ..., hi}^dim."""
    axis = []
    v = Fraction(lo)
    while v <= hi:
        axis.append(v)
        v += step
    return [tuple(p) for p in itertools.product(axis, repeat=dim)]


def _dataset_key(rows: list[Row]) -> tuple:
    return tuple(sorted((repr(r.x), r.y, r.yhat, tuple(sorted(r.groups)), r.weight) for r in rows))


def perturb(
    data: ClassificationData,
    domain: Iterable[Value],
    metric: GroundMetric,
    epsilon,
    k: int,
) -> list[ClassificationData]:
    """Every dataset reachable by replacing at most ``k`` inputs within distance ``epsilon``.

    The unperturbed dataset comes first; duplicates (as multisets of rows)
    are dropped.  A replaced row keeps its true label and group and loses its
    prediction, which must be recomputed by the classifier.
    """
    epsilon = Fraction(epsilon)
    domain = list(domain)
    neighbours = []
    for r in data.rows:
        near = [v for v in domain if v != r.x and metric(r.x, v) <= epsilon]
        neighbours.append(near)
    out = [data]
    seen = {_dataset_key(data.rows)}
    n = len(data.rows)
    for size in range(1, min(k, n) + 1):
        for idx in itertools.combinations(range(n), size):
            if any(not neighbours[i] for i in idx):
                continue
            for choice in itertools.product(*(neighbours[i] for i in idx)):
                rows = list(data.rows)
                for i, v in zip(idx, choice):
                    rows[i] = replace(rows[i], x=v, yhat=None)
                key = _dataset_key(rows)
                if key not in seen:
                    seen.add(key)
                    out.append(ClassificationData(rows, data.x_columns))
    return out
