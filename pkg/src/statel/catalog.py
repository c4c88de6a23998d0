"""Formula generators for classifier properties and equivalence checkers.

Covers the table of confusion, targeted / non-targeted robustness, group
fairness, individual fairness and equal opportunity, plus brute-force
checkers for the two conditional-indistinguishability characterizations.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .classifiers import (
    ClassificationData,
    ClassificationModel,
    GroupDef,
    LabelMap,
    build_classification_model,
    ident_part,
)
from .divergence import (
    Divergence,
    DivergenceSpec,
    GroundMetric,
    LipschitzSpec,
    Relation,
    build_divergence_relation,
    explicit_relation,
)
from .errors import MissingDatasetWorld, MissingRelation
from .formula import (
    And,
    Atom,
    CounterPossible,
    EpistemicFormula,
    Implies,
    IntervalSet,
    Know,
    Not,
    Piece,
    Prob,
    Q,
    SAnd,
    SNot,
    SOr,
    StaticFormula,
    Suppose,
    Xi,
    iff_static,
    to_text,
)
from .model import Model, State, World
from .semantics import Evaluator, holds_Q, holds_xi

X = "x"


def psi_l(label: str, var: str = X) -> Atom:
    """The classifier predicts ``label`` on ``var``."""
    return Atom(f"psi_{ident_part(label)}", (var,))


def h_l(label: str, var: str = X) -> Atom:
    """The oracle assigns ``label`` to ``var``."""
    return Atom(f"h_{ident_part(label)}", (var,))


def eta(group: str, var: str = X) -> Atom:
    return Atom(f"eta_{ident_part(group)}", (var,))


PSI = Atom("psi", ("x", "yhat"))
H = Atom("h", ("x", "y"))

POSITIVE_MASS = IntervalSet((Piece(Fraction(0), False, Fraction(1), True),))
ONE = IntervalSet.point(1)


# --------------------------------------------------------------------------
# table of confusion
# --------------------------------------------------------------------------


class ConfusionKind(enum.Enum):
    TP = "tp"
    FP = "fp"
    FN = "fn"
    TN = "tn"
    PREVALENCE = "prevalence"
    ACCURACY = "accuracy"
    PRECISION = "precision"
    FDR = "fdr"
    FOR = "for"
    NPV = "npv"
    RECALL = "recall"
    FALL_OUT = "fallout"
    MISS_RATE = "missrate"
    SPECIFICITY = "specificity"

    @property
    def is_static(self) -> bool:
        return self in (ConfusionKind.TP, ConfusionKind.FP, ConfusionKind.FN, ConfusionKind.TN)


# (condition, body) of the conditional-probability entries; None = positive,
# "not" = negated predicate
_CONDITIONAL = {
    ConfusionKind.PRECISION: (("psi", True), ("h", True)),
    ConfusionKind.FDR: (("psi", True), ("h", False)),
    ConfusionKind.FOR: (("psi", False), ("h", True)),
    ConfusionKind.NPV: (("psi", False), ("h", False)),
    ConfusionKind.RECALL: (("h", True), ("psi", True)),
    ConfusionKind.FALL_OUT: (("h", False), ("psi", True)),
    ConfusionKind.MISS_RATE: (("h", True), ("psi", False)),
    ConfusionKind.SPECIFICITY: (("h", False), ("psi", False)),
}


def _lit(which: str, positive: bool, label: str, var: str) -> StaticFormula:
    a = psi_l(label, var) if which == "psi" else h_l(label, var)
    return a if positive else SNot(a)


def confusion_formula(kind: ConfusionKind | str, label: str, interval: IntervalSet | None = None,
                      var: str = X):
    """Static formula (TP/FP/FN/TN) or epistemic formula for one table-of-confusion cell."""
    kind = ConfusionKind(kind) if isinstance(kind, str) else kind
    p, h = psi_l(label, var), h_l(label, var)
    if kind is ConfusionKind.TP:
        return SAnd(p, h)
    if kind is ConfusionKind.FP:
        return SAnd(p, SNot(h))
    if kind is ConfusionKind.FN:
        return SAnd(SNot(p), h)
    if kind is ConfusionKind.TN:
        return SAnd(SNot(p), SNot(h))
    if interval is None:
        raise ValueError(f"{kind.value} needs an interval")
    if kind is ConfusionKind.PREVALENCE:
        return Prob(interval, h)
    if kind is ConfusionKind.ACCURACY:
        return Prob(interval, iff_static(p, h))
    (cw, cpos), (bw, bpos) = _CONDITIONAL[kind]
    return Suppose(_lit(cw, cpos, label, var), Prob(interval, _lit(bw, bpos, label, var)))


def measured_probability(m: Model, w: World, phi) -> Fraction | None:
    """The probability a Prob / Suppose-chain formula compares against its interval.

    None when a supposition has no mass or the formula has no such reading.
    """
    while isinstance(phi, Suppose):
        w = m.restrict(w, phi.condition)
        if w is None:
            return None
        phi = phi.body
    if isinstance(phi, Prob):
        return m.mass(w, phi.body)
    return None


# --------------------------------------------------------------------------
# robustness
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Targeted:
    label: str
    delta: Fraction
    target: str


@dataclass(frozen=True)
class NonTargeted:
    label: str
    interval: IntervalSet


def robustness_formula(kind: Targeted | NonTargeted, relation: str) -> EpistemicFormula:
    if isinstance(kind, Targeted):
        return Know(relation, Suppose(h_l(kind.label), Prob(IntervalSet.closed(0, kind.delta),
                                                            psi_l(kind.target))))
    return Know(relation, confusion_formula(ConfusionKind.RECALL, kind.label, kind.interval))


def robust_confusion_formula(kind: ConfusionKind, label: str, interval: IntervalSet,
                             relation: str) -> EpistemicFormula:
    """Any epistemic table-of-confusion entry required under every perturbation."""
    f = confusion_formula(kind, label, interval)
    if isinstance(f, StaticFormula):
        raise ValueError(f"{kind.value} is a static formula; quantify it first")
    return Know(relation, f)


# --------------------------------------------------------------------------
# fairness
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupFairness:
    g0: str
    g1: str
    epsilon: Fraction
    dataset: str
    relation: str = "parity_tv"


@dataclass(frozen=True)
class IndividualFairness:
    """Lipschitz fairness.  ``pointwise`` compares the single-input worlds of the
    dataset pairwise; otherwise the condition is psi(x,yhat) alone."""

    epsilon: Fraction
    dataset: str
    metric: GroundMetric = GroundMetric("l1")
    divergence: Divergence = Divergence("tv")
    pointwise: bool = True
    relation: str = "lipschitz"


@dataclass(frozen=True)
class EqualOpportunity:
    group: str
    label: str
    dataset: str
    relation: str = "eqopp_tv0"


FairnessKind = GroupFairness | IndividualFairness | EqualOpportunity


def required_relation(kind: FairnessKind):
    if isinstance(kind, GroupFairness):
        return DivergenceSpec("yhat", Divergence("tv"), Fraction(kind.epsilon))
    if isinstance(kind, EqualOpportunity):
        return DivergenceSpec("yhat", Divergence("tv"), Fraction(0))
    return LipschitzSpec("x", "yhat", kind.divergence, kind.metric, Fraction(kind.epsilon))


def fairness_conditions(kind: FairnessKind, cm: ClassificationModel | None = None
                        ) -> list[tuple[StaticFormula, StaticFormula]]:
    """(psi, psi') pairs whose conditional indistinguishability is required."""
    if isinstance(kind, GroupFairness):
        return [(SAnd(eta(kind.g0), PSI), SAnd(eta(kind.g1), PSI))]
    if isinstance(kind, EqualOpportunity):
        g, hl = eta(kind.group), h_l(kind.label)
        return [(SAnd(SAnd(g, PSI), hl), SAnd(SAnd(SNot(g), PSI), hl))]
    if not kind.pointwise:
        return [(PSI, PSI)]
    if cm is None:
        raise ValueError("pointwise individual fairness needs the classification model")
    w_d = cm.model.world(kind.dataset)
    xs = sorted({cm.model.states[s].assignment["x"] for s in w_d.support}, key=cm.inputs.index)
    conds = [SAnd(PSI, Atom(cm.input_predicate(v), ("x",))) for v in xs]
    return [(a, b) for i, a in enumerate(conds) for b in conds[i + 1:]]


def indistinguishability_formula(psi: StaticFormula, psi2: StaticFormula, relation: str,
                                 dataset: str) -> EpistemicFormula:
    """psi |> !CP<a>(Xi<d> & Q<d> psi')."""
    return Suppose(psi, Not(CounterPossible(relation, And(Xi(dataset), Q(dataset, psi2)))))


def fairness_formula(kind: FairnessKind, cm: ClassificationModel | None = None) -> EpistemicFormula:
    parts = [indistinguishability_formula(a, b, kind.relation, kind.dataset)
             for a, b in fairness_conditions(kind, cm)]
    if not parts:
        # a single-input dataset has no pair to compare
        return Prob(IntervalSet.closed(0, 1), PSI)
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def build_fairness_model(datasets: Mapping[str, ClassificationData], kind: FairnessKind,
                         classifier: LabelMap | None = None, oracle: LabelMap | None = None,
                         groups: Iterable[GroupDef] | None = None) -> ClassificationModel:
    """Dataset worlds, their restrictions by every fairness condition, and the relation."""
    base = build_classification_model(datasets, classifier, oracle, groups)
    if kind.dataset not in base.model.worlds and kind.dataset not in base.model.aliases:
        raise MissingDatasetWorld(f"dataset world {kind.dataset!r} is not declared")
    conds = fairness_conditions(kind, base)
    restrictions = [(kind.dataset, c) for pair in conds for c in pair]
    return build_classification_model(
        datasets, base.classifier, base.oracle, list(base.groups.values()),
        relations={kind.relation: required_relation(kind)},
        restrictions=restrictions, real_world=kind.dataset,
    )


@dataclass
class FastPathResult:
    verdict: bool
    pairs: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def fairness_fast_path(m: Model, kind: FairnessKind, cm: ClassificationModel | None = None
                       ) -> FastPathResult:
    """Decide fairness from world pairs: every dataset-conditioning pair must be related."""
    if kind.relation not in m.relations:
        raise MissingRelation(f"relation {kind.relation!r} is not declared")
    try:
        w_d = m.world(kind.dataset)
    except Exception:
        raise MissingDatasetWorld(f"dataset world {kind.dataset!r} is not declared") from None
    rel = m.relations[kind.relation]
    result = FastPathResult(True)
    for psi, psi2 in fairness_conditions(kind, cm):
        if m.mass(w_d, psi) == 0:
            result.verdict = False
            result.notes.append(f"condition {to_text(psi)} has no mass in {kind.dataset}; "
                                "supposing operator false")
            continue
        left = [w for w in m.world_list if holds_xi(m, w, w_d) and holds_Q(m, w, w_d, psi)]
        right = [w for w in m.world_list if holds_xi(m, w, w_d) and holds_Q(m, w, w_d, psi2)]
        for w in left:
            for w2 in right:
                ok = (w.id, w2.id) in rel.pairs
                value = rel.values.get((w.id, w2.id))
                result.pairs.append({"from": w.id, "to": w2.id, "related": ok,
                                     "value": None if value is None else str(value)})
                result.verdict = result.verdict and ok
    return result


@dataclass
class FairnessAudit:
    formula: EpistemicFormula
    semantic_verdict: bool
    fast_path: FastPathResult
    universe_size: int

    @property
    def agree(self) -> bool:
        return self.semantic_verdict == self.fast_path.verdict


def audit_fairness(cm: ClassificationModel, kind: FairnessKind) -> FairnessAudit:
    m = cm.model
    phi = fairness_formula(kind, cm)
    verdict = Evaluator(m).eval(m.world(kind.dataset), phi)
    return FairnessAudit(phi, verdict, fairness_fast_path(m, kind, cm), len(m.worlds))


# --------------------------------------------------------------------------
# proposition checkers
# --------------------------------------------------------------------------


@dataclass
class EquivalenceReport:
    trials: int = 0
    checks: int = 0
    agreements: int = 0
    counterexample: dict | None = None
    seed: int | None = None

    @property
    def disagreements(self) -> int:
        return self.checks - self.agreements

    def record(self, ok: bool, dump) -> None:
        self.checks += 1
        if ok:
            self.agreements += 1
        elif self.counterexample is None:
            self.counterexample = dump()

    def merge(self, other: EquivalenceReport) -> None:
        self.trials += other.trials
        self.checks += other.checks
        self.agreements += other.agreements
        if self.counterexample is None:
            self.counterexample = other.counterexample

    def to_dict(self) -> dict:
        return {"trials": self.trials, "checks": self.checks, "agreements": self.agreements,
                "disagreements": self.disagreements, "seed": self.seed,
                "counterexample": self.counterexample}


def _dump(m: Model, **items) -> dict:
    from .modelfile import model_to_dict

    out = {k: (to_text(v) if isinstance(v, (StaticFormula, EpistemicFormula)) else v)
           for k, v in items.items()}
    out["model"] = model_to_dict(m)
    return out


def prop1_formula(psi, psi2, a) -> EpistemicFormula:
    return Suppose(psi, Not(CounterPossible(a, Prob(ONE, psi2))))


def guarded(psi: StaticFormula, phi: EpistemicFormula) -> EpistemicFormula:
    """Require ``phi`` only where ``psi`` has positive mass."""
    return Implies(Prob(POSITIVE_MASS, psi), phi)


def prop1_rhs(m: Model, psi, psi2, a) -> bool:
    rel = m.relations[a]
    sure = [w.id for w in m.world_list if m.mass(w, psi) == 1]
    sure2 = [w.id for w in m.world_list if m.mass(w, psi2) == 1]
    return all((u, v) in rel.pairs for u in sure for v in sure2)


def check_prop1(m: Model, psi: StaticFormula, psi2: StaticFormula, a: str,
                mutant: str | None = None) -> EquivalenceReport:
    """Compare the semantic and pairwise sides of conditional indistinguishability.

    The semantic side is read where ``psi`` has positive mass (the supposing
    operator is false elsewhere); the literal reading is checked separately
    against ``rhs and psi has mass in every world``.  Requires the universe to
    contain ``w|psi`` and ``w|psi'`` for every world ``w``.
    """
    ev = Evaluator(m, mutant=mutant)
    rep = EquivalenceReport(trials=1)
    phi = prop1_formula(psi, psi2, a)
    lhs = ev.eval_global(guarded(psi, phi))[0]
    rhs = prop1_rhs(m, psi, psi2, a)
    rep.record(lhs == rhs, lambda: _dump(m, claim="(i)", psi=psi, psi2=psi2, relation=a,
                                         lhs=lhs, rhs=rhs))
    strict = ev.eval_global(phi)[0]
    everywhere = all(m.mass(w, psi) > 0 for w in m.world_list)
    rep.record(strict == (rhs and everywhere),
               lambda: _dump(m, claim="(i) literal", psi=psi, psi2=psi2, relation=a,
                             lhs=strict, rhs=rhs, psi_everywhere=everywhere))
    if m.relations[a].is_symmetric():
        flipped = ev.eval_global(guarded(psi2, prop1_formula(psi2, psi, a)))[0]
        rep.record(lhs == flipped, lambda: _dump(m, claim="(ii)", psi=psi, psi2=psi2, relation=a,
                                                 lhs=lhs, flipped=flipped))
    return rep


def prop2_formula(psi, psi2, a, dataset) -> EpistemicFormula:
    return indistinguishability_formula(psi, psi2, a, dataset)


def prop2_rhs(m: Model, w_d: World, psi, psi2, a) -> bool:
    rel = m.relations[a]
    left = [w.id for w in m.world_list if holds_xi(m, w, w_d) and holds_Q(m, w, w_d, psi)]
    right = [w.id for w in m.world_list if holds_xi(m, w, w_d) and holds_Q(m, w, w_d, psi2)]
    return all((u, v) in rel.pairs for u in left for v in right)


def check_prop2(m: Model, w_d: str, psi: StaticFormula, psi2: StaticFormula, a: str,
                mutant: str | None = None) -> EquivalenceReport:
    """Dataset-local version of :func:`check_prop1`, evaluated at ``w_d``.

    The universe must contain ``w_d|psi`` and ``w_d|psi'`` when defined.
    """
    if w_d not in m.worlds:
        raise MissingDatasetWorld(f"dataset world {w_d!r} is not declared")
    ev = Evaluator(m, mutant=mutant)
    wd = m.worlds[w_d]
    rep = EquivalenceReport(trials=1)
    phi = prop2_formula(psi, psi2, a, w_d)
    lhs = ev.eval(wd, guarded(psi, phi))
    rhs = prop2_rhs(m, wd, psi, psi2, a)
    rep.record(lhs == rhs, lambda: _dump(m, claim="(i)", dataset=w_d, psi=psi, psi2=psi2,
                                         relation=a, lhs=lhs, rhs=rhs))
    strict = ev.eval(wd, phi)
    defined = m.mass(wd, psi) > 0
    rep.record(strict == (rhs and defined),
               lambda: _dump(m, claim="(i) literal", dataset=w_d, psi=psi, psi2=psi2,
                             relation=a, lhs=strict, rhs=rhs, psi_defined=defined))
    if m.relations[a].is_symmetric():
        flipped = ev.eval(wd, guarded(psi2, prop2_formula(psi2, psi, a, w_d)))
        rep.record(lhs == flipped, lambda: _dump(m, claim="(ii)", dataset=w_d, psi=psi,
                                                 psi2=psi2, relation=a, lhs=lhs, flipped=flipped))
    return rep


# --------------------------------------------------------------------------
# random models for the trials
# --------------------------------------------------------------------------

_PREDS = ("p", "q")


def random_static(rng: random.Random, depth: int = 2) -> StaticFormula:
    if depth == 0 or rng.random() < 0.35:
        return Atom(rng.choice(_PREDS), ("x",))
    op = rng.choice(("not", "and", "or"))
    if op == "not":
        return SNot(random_static(rng, depth - 1))
    cls = SAnd if op == "and" else SOr
    return cls(random_static(rng, depth - 1), random_static(rng, depth - 1))


def _random_weights(rng: random.Random, state_ids: list[str]) -> dict:
    k = rng.randint(1, len(state_ids))
    chosen = rng.sample(state_ids, k)
    raw = {s: rng.randint(1, 4) for s in chosen}
    total = sum(raw.values())
    return {s: Fraction(v, total) for s, v in raw.items()}


def _random_states(rng: random.Random, n: int):
    states = [State(f"s{i}", {"x": f"v{i}", "y": rng.choice("ab")}) for i in range(n)]
    valuation = {
        s.id: {p: [(s.assignment["x"],)] for p in _PREDS if rng.random() < 0.5}
        for s in states
    }
    return states, valuation


def _restrict_raw(weights: dict, keep) -> dict | None:
    kept = {s: p for s, p in weights.items() if keep(s)}
    total = sum(kept.values(), Fraction(0))
    if total == 0:
        return None
    return {s: p / total for s, p in kept.items()}


def _random_relation(rng: random.Random, probe: Model, ids: list[str]) -> Relation:
    choice = rng.random()
    all_pairs = [(a, b) for a in ids for b in ids]
    if choice < 0.1:
        return explicit_relation(all_pairs)
    if choice < 0.2:
        return explicit_relation([])
    if choice < 0.35:
        eps = Fraction(rng.randint(0, 4), 4)
        return build_divergence_relation(probe, "y", Divergence("tv"), eps)
    density = rng.random()
    if choice < 0.65:
        pairs = set()
        for i, a in enumerate(ids):
            for b in ids[i:]:
                if rng.random() < density:
                    pairs |= {(a, b), (b, a)}
        return explicit_relation(pairs)
    return explicit_relation([p for p in all_pairs if rng.random() < density])


def random_prop1_instance(rng: random.Random, max_states: int = 4, max_worlds: int = 6):
    """A model whose universe is closed under restriction by psi and psi'."""
    n = rng.randint(1, max_states)
    states, valuation = _random_states(rng, n)
    psi, psi2 = random_static(rng), random_static(rng)
    probe = Model(("x", "y"), states, [], valuation=valuation, arities={p: 1 for p in _PREDS})
    ids = [s.id for s in states]

    def closure(weights: dict) -> list[dict]:
        # w, w|psi, w|psi', and w|(psi & psi') = (w|psi)|psi'
        out = [weights]
        for f in (psi, psi2, SAnd(psi, psi2)):
            r = _restrict_raw(weights, lambda s, f=f: probe.satisfies(s, f))
            if r is not None:
                out.append(r)
        return out

    universe: dict = {}
    target = rng.randint(1, max_worlds)
    for _ in range(4 * max_worlds):
        if len(universe) >= target:
            break
        group = {frozenset(w.items()): w for w in closure(_random_weights(rng, ids))}
        new = {k: v for k, v in group.items() if k not in universe}
        if len(universe) + len(new) <= max_worlds:
            universe.update(new)
    if not universe:
        # a point mass is closed under every restriction
        s = rng.choice(ids)
        universe[frozenset({(s, Fraction(1))})] = {s: Fraction(1)}
    worlds = [World(f"w{i}", w) for i, w in enumerate(universe.values())]
    probe = Model(("x", "y"), states, worlds, valuation=valuation, arities={p: 1 for p in _PREDS})
    rel = _random_relation(rng, probe, [w.id for w in worlds])
    probe.add_relation("a", rel)
    return probe, psi, psi2, "a"


def random_prop2_instance(rng: random.Random, max_states: int = 4, max_worlds: int = 6):
    """A model with dataset world ``wd`` and its restrictions by psi and psi'."""
    n = rng.randint(1, max_states)
    states, valuation = _random_states(rng, n)
    psi, psi2 = random_static(rng), random_static(rng)
    probe = Model(("x", "y"), states, [], valuation=valuation, arities={p: 1 for p in _PREDS})
    ids = [s.id for s in states]

    universe: dict = {}
    for _ in range(20):
        wd = _random_weights(rng, ids)
        group = [wd]
        for f in (psi, psi2):
            r = _restrict_raw(wd, lambda s, f=f: probe.satisfies(s, f))
            if r is not None:
                group.append(r)
        universe = {frozenset(w.items()): w for w in group}
        if len(universe) <= max_worlds:
            break
    else:
        s = rng.choice(ids)
        wd = {s: Fraction(1)}
        universe = {frozenset(wd.items()): wd}
    order = [frozenset(wd.items())] + [k for k in universe if k != frozenset(wd.items())]
    target = rng.randint(len(universe), max(len(universe), max_worlds))
    for _ in range(4 * max_worlds):
        if len(universe) >= target:
            break
        if rng.random() < 0.5:
            keep = set(rng.sample(ids, rng.randint(1, n)))
            cand = _restrict_raw(wd, lambda s: s in keep)
        else:
            cand = _random_weights(rng, ids)
        if cand is not None and frozenset(cand.items()) not in universe:
            universe[frozenset(cand.items())] = cand
            order.append(frozenset(cand.items()))
    names = {}
    worlds = []
    for i, k in enumerate(order):
        wid = "wd" if i == 0 else f"w{i}"
        names[k] = wid
        worlds.append(World(wid, universe[k]))
    m = Model(("x", "y"), states, worlds, valuation=valuation, arities={p: 1 for p in _PREDS})
    m.add_relation("a", _random_relation(rng, m, [w.id for w in worlds]))
    return m, "wd", psi, psi2, "a"


def run_prop_trials(trials: int, seed: int, max_states: int = 4, max_worlds: int = 6,
                    mutant: str | None = None) -> tuple[EquivalenceReport, EquivalenceReport]:
    """Seeded random trials for both characterizations."""
    if max_states < 1 or max_worlds < 1:
        raise ValueError("bounds must be at least 1")
    rng = random.Random(seed)
    r1, r2 = EquivalenceReport(seed=seed), EquivalenceReport(seed=seed)
    for _ in range(trials):
        m, psi, psi2, a = random_prop1_instance(rng, max_states, max_worlds)
        r1.merge(check_prop1(m, psi, psi2, a, mutant=mutant))
        m, wd, psi, psi2, a = random_prop2_instance(rng, max_states, max_worlds)
        r2.merge(check_prop2(m, wd, psi, psi2, a, mutant=mutant))
    return r1, r2
