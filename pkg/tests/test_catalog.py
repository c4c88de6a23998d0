from fractions import Fraction

import pytest

from statel import catalog
from statel.catalog import (
    ConfusionKind,
    EqualOpportunity,
    GroupFairness,
    IndividualFairness,
    NonTargeted,
    Targeted,
    audit_fairness,
    build_fairness_model,
    check_prop1,
    check_prop2,
    confusion_formula,
    fairness_fast_path,
    robustness_formula,
)
from statel.classifiers import ClassificationData, GroupDef, Row, groups_from_data
from statel.divergence import explicit_relation
from statel.errors import MissingRelation
from statel.formula import (
    Atom,
    IntervalSet,
    Know,
    Prob,
    SAnd,
    SNot,
    Suppose,
    iff_static,
    parse_epistemic,
    to_text,
)
from statel.model import Model, State, World
from statel.semantics import eval

F = Fraction
I = IntervalSet.closed(F(1, 2), 1)
psiL, hL = Atom("psi_L", ("x",)), Atom("h_L", ("x",))


def test_table_of_confusion_shapes():
    assert confusion_formula(ConfusionKind.TP, "L") == SAnd(psiL, hL)
    assert confusion_formula(ConfusionKind.TN, "L") == SAnd(SNot(psiL), SNot(hL))
    assert confusion_formula(ConfusionKind.PRECISION, "L", I) == Suppose(psiL, Prob(I, hL))
    assert confusion_formula(ConfusionKind.RECALL, "L", I) == Suppose(hL, Prob(I, psiL))
    assert confusion_formula(ConfusionKind.ACCURACY, "L", I) == Prob(I, iff_static(psiL, hL))
    assert confusion_formula(ConfusionKind.FALL_OUT, "L", I) == Suppose(SNot(hL), Prob(I, psiL))
    assert confusion_formula("npv", "L", I) == Suppose(SNot(psiL), Prob(I, SNot(hL)))
    assert len(ConfusionKind) == 14
    with pytest.raises(ValueError):
        confusion_formula(ConfusionKind.RECALL, "L")


def test_robustness_shapes():
    delta = IntervalSet.closed(F(9, 10), 1)
    assert robustness_formula(NonTargeted("L", delta), "a") == Know(
        "a", confusion_formula(ConfusionKind.RECALL, "L", delta))
    t = robustness_formula(Targeted("L", F(0), "M"), "a")
    assert t == Know("a", Suppose(hL, Prob(IntervalSet.closed(0, 0), Atom("psi_M", ("x",)))))
    assert to_text(catalog.robust_confusion_formula(ConfusionKind.PRECISION, "L", I, "a")) \
        == "K<a> (psi_L(x) |> P[0.5,1] h_L(x))"


def two_groups(outs_a, outs_b, labels_a=None, labels_b=None):
    rows = []
    for i, yhat in enumerate(outs_a):
        rows.append(Row((F(i),), (labels_a or outs_a)[i], yhat, frozenset({"A"})))
    for j, yhat in enumerate(outs_b):
        rows.append(Row((F(100 + j),), (labels_b or outs_b)[j], yhat, frozenset({"B"})))
    return ClassificationData(rows)


def run(kind, data, groups=None):
    cm = build_fairness_model({"w_d": data}, kind, groups=groups)
    return cm, audit_fairness(cm, kind)


def test_parity_identical_groups():
    _, a = run(GroupFairness("A", "B", F(0), "w_d"), two_groups("LLM", "MLL"))
    assert a.semantic_verdict and a.agree


def test_parity_threshold():
    data = two_groups("L" * 10, "MMM" + "L" * 7)
    for eps, expected in ((F(1, 5), False), (F(3, 10), True)):
        cm, a = run(GroupFairness("A", "B", eps, "w_d"), data)
        assert a.semantic_verdict is expected and a.agree
        values = {p["value"] for p in a.fast_path.pairs}
        assert values == {"3/10"}


def test_equal_opportunity_equal_recall():
    # both groups: 4 positives, 3 predicted positive
    data = two_groups("LLLMM", "MLLLM", labels_a="LLLLM", labels_b="LLLLM")
    _, a = run(EqualOpportunity("A", "L", "w_d"), data)
    assert a.semantic_verdict and a.agree
    data = two_groups("LLLMM", "MMLLM", labels_a="LLLLM", labels_b="LLLLM")
    _, a = run(EqualOpportunity("A", "L", "w_d"), data)
    assert not a.semantic_verdict and a.agree


def test_individual_fairness_pointwise():
    rows = [Row((F(0),), "a", "a"), Row((F(2),), "a", "b"), Row((F(5),), "b", "b")]
    data = ClassificationData(rows)
    _, a = run(IndividualFairness(F(1, 2), "w_d"), data)
    assert a.semantic_verdict and a.agree
    _, a = run(IndividualFairness(F(1, 3), "w_d"), data)
    assert not a.semantic_verdict and a.agree


def with_empty_group(data):
    return groups_from_data(data) + [GroupDef("Z", frozenset())]


def test_fast_path_vacuous_and_missing():
    data = two_groups("LL", "LL")
    kind = GroupFairness("A", "Z", F(0), "w_d")
    cm = build_fairness_model({"w_d": data}, kind, groups=with_empty_group(data))
    res = fairness_fast_path(cm.model, kind, cm)
    # the second condition never holds, so there are no pairs to compare
    assert res.verdict and res.pairs == []
    with pytest.raises(MissingRelation):
        fairness_fast_path(cm.model, GroupFairness("A", "B", F(0), "w_d", relation="nope"), cm)


def test_fairness_unsatisfiable_condition_is_false():
    data = two_groups("LL", "LL")
    kind = GroupFairness("Z", "A", F(0), "w_d")
    cm, a = run(kind, data, with_empty_group(data))
    assert not a.semantic_verdict and not a.fast_path.verdict


# -- proposition checkers ------------------------------------------------------


def sure_worlds_model():
    states = [State("s0", {"x": "u"}), State("s1", {"x": "v"})]
    valuation = {"s0": {"p": [("u",)]}, "s1": {"q": [("v",)]}}
    worlds = [World("w0", {"s0": F(1)}), World("w1", {"s1": F(1)})]
    return Model(("x",), states, worlds, valuation=valuation, arities={"p": 1, "q": 1})


P, Qs = Atom("p", ("x",)), Atom("q", ("x",))


def test_prop1_empty_and_complete_relations():
    m = sure_worlds_model()
    m.add_relation("a", explicit_relation([]))
    assert not catalog.prop1_rhs(m, P, Qs, "a")
    assert not eval(m, "w0", catalog.prop1_formula(P, Qs, "a"))
    assert check_prop1(m, P, Qs, "a").disagreements == 0
    m.add_relation("a", explicit_relation([(a, b) for a in m.worlds for b in m.worlds]))
    assert catalog.prop1_rhs(m, P, Qs, "a")
    assert eval(m, "w0", catalog.prop1_formula(P, Qs, "a"))
    assert check_prop1(m, P, Qs, "a").disagreements == 0


def prop2_model():
    states = [State(f"s{i}", {"x": f"v{i}"}) for i in range(3)]
    valuation = {"s0": {"p": [("v0",)]}, "s1": {"p": [("v1",)], "q": [("v1",)]}}
    w_d = World("wd", {"s0": F(1, 2), "s1": F(1, 4), "s2": F(1, 4)})
    worlds = [w_d, World("wp", {"s0": F(2, 3), "s1": F(1, 3)}), World("wq", {"s1": F(1)})]
    return Model(("x",), states, worlds, valuation=valuation, arities={"p": 1, "q": 1})


def test_prop2_same_condition_reflexive():
    m = prop2_model()
    m.add_relation("a", explicit_relation([(w, w) for w in m.worlds]))
    assert eval(m, "wd", catalog.prop2_formula(P, P, "a", "wd"))
    assert catalog.prop2_rhs(m, m.worlds["wd"], P, P, "a")
    assert check_prop2(m, "wd", P, P, "a").disagreements == 0


def test_prop2_unsatisfiable_condition():
    m = prop2_model()
    m.add_relation("a", explicit_relation([]))
    never = SAnd(P, SNot(P))
    # the right side is vacuous; the literal left side is false (no restriction),
    # the guarded reading is vacuously true
    assert catalog.prop2_rhs(m, m.worlds["wd"], never, Qs, "a")
    assert not eval(m, "wd", catalog.prop2_formula(never, Qs, "a", "wd"))
    assert eval(m, "wd", catalog.guarded(never, catalog.prop2_formula(never, Qs, "a", "wd")))
    assert check_prop2(m, "wd", never, Qs, "a").disagreements == 0


def test_prop2_related_and_unrelated_pair():
    m = prop2_model()
    m.add_relation("a", explicit_relation([("wp", "wq")]))
    assert check_prop2(m, "wd", P, Qs, "a").disagreements == 0
    assert eval(m, "wd", catalog.prop2_formula(P, Qs, "a", "wd"))
    m.add_relation("a", explicit_relation([("wq", "wp")]))
    assert not eval(m, "wd", catalog.prop2_formula(P, Qs, "a", "wd"))
    assert check_prop2(m, "wd", P, Qs, "a").disagreements == 0


def test_trials_are_seeded():
    a = catalog.run_prop_trials(40, seed=3)
    b = catalog.run_prop_trials(40, seed=3)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    assert all(r.disagreements == 0 for r in a)
    assert all(r.trials == 40 for r in a)


def test_mutant_is_caught():
    r1, r2 = catalog.run_prop_trials(60, seed=5, mutant="complement")
    assert r1.disagreements > 0 and r1.counterexample is not None
    assert "model" in r1.counterexample


def test_measured_probability():
    m = prop2_model()
    assert catalog.measured_probability(m, m.worlds["wd"], parse_epistemic("p(x) |> P{1} q(x)")) \
        == F(1, 3)
    assert catalog.measured_probability(m, m.worlds["wq"], parse_epistemic("!q(x) |> P{1} q(x)")) \
        is None
