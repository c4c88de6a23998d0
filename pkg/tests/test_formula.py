from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import epistemic_formulas, interval_sets, models, static_formulas
from statel.formula import (
    And,
    Atom,
    FormulaSyntaxError,
    Implies,
    IntervalError,
    IntervalSet,
    Know,
    Not,
    Or,
    Piece,
    Possible,
    Prob,
    Q,
    SAnd,
    SNot,
    SOr,
    Suppose,
    Xi,
    desugar,
    desugar_static,
    format_number,
    interval_contains,
    is_core,
    parse_epistemic,
    parse_interval,
    parse_number,
    parse_static,
    predicates,
    to_text,
)
from statel.semantics import Evaluator


def test_open_lower_bound():
    f = parse_epistemic("P(0.95,1] psi(x)")
    assert f == Prob(IntervalSet((Piece(Fraction(19, 20), False, Fraction(1), True),)),
                     Atom("psi", ("x",)))


def test_singleton_interval():
    f = parse_epistemic("P{0.2} psiL(x)")
    assert f == Prob(IntervalSet.point(Fraction(1, 5)), Atom("psiL", ("x",)))
    assert parse_epistemic("P[0.2,0.2] psiL(x)") == f
    assert parse_epistemic("P{1/5} psiL(x)") == f


def test_union_of_intervals():
    f = parse_epistemic("P[0.5,0.6]u[0.9,1] a(x)")
    assert len(f.interval.pieces) == 2


def test_overlapping_union_rejected():
    with pytest.raises((FormulaSyntaxError, IntervalError), match="non-disjoint"):
        parse_epistemic("P[0.5,0.6]u[0.55,1] a(x)")


@pytest.mark.parametrize("text", ["P[0.6,0.5] a(x)", "P[0,1.5] a(x)", "P(0.3,0.3) a(x)"])
def test_malformed_intervals(text):
    with pytest.raises((FormulaSyntaxError, IntervalError)):
        parse_epistemic(text)


def test_static_parse():
    f = parse_static("h(x,y) & !psi(x,yhat)")
    assert f == SAnd(Atom("h", ("x", "y")), SNot(Atom("psi", ("x", "yhat"))))
    assert parse_static("a(x) | b(x)") == SOr(Atom("a", ("x",)), Atom("b", ("x",)))


def test_epistemic_in_static_position():
    with pytest.raises(FormulaSyntaxError, match="epistemic operator in static position"):
        parse_static("P[0,1] a(x)")
    with pytest.raises(FormulaSyntaxError):
        parse_epistemic("(P[0,1] a(x)) |> P[0,1] b(x)")


def test_static_in_epistemic_position():
    with pytest.raises(FormulaSyntaxError, match="static formula .* in epistemic position"):
        parse_epistemic("a(x) & P[0,1] b(x)")


def test_syntax_error_reports_position():
    with pytest.raises(FormulaSyntaxError) as exc:
        parse_epistemic("P[0,1] a(x) &\n  K<a> ")
    assert exc.value.line == 2


def test_precedence():
    f = parse_epistemic("p(x) |> P[0,1] a(x) -> P{1} b(x) | P{0} c(x) & !P{1} d(x)")
    a, b, c, d = (Prob(i, Atom(n, ("x",))) for i, n in zip(
        [IntervalSet.closed(0, 1), IntervalSet.point(1), IntervalSet.point(0), IntervalSet.point(1)],
        "abcd"))
    assert f == Suppose(Atom("p", ("x",)), Implies(a, Or(b, And(c, Not(d)))))


def test_modalities_and_dataset_hooks():
    f = parse_epistemic("K<a> Pos<b> CK<c> CP<d> (Xi<w_d> & Q<w_d> psi(x,yhat))")
    assert isinstance(f, Know)
    assert f.body.body.body.body == And(Xi("w_d"), Q("w_d", Atom("psi", ("x", "yhat"))))


def test_implies_right_assoc():
    f = parse_epistemic("P{1} a(x) -> P{1} b(x) -> P{1} c(x)")
    assert isinstance(f.right, Implies)


def test_interval_contains_examples():
    assert not interval_contains(parse_interval("(0.95,1]"), Fraction(95, 100))
    assert interval_contains(parse_interval("[0.2,0.2]"), Fraction(1, 5))
    assert not interval_contains(parse_interval("[0,0.1]u[0.9,1]"), Fraction(1, 2))


def test_numbers_are_exact():
    assert parse_number("0.1") == Fraction(1, 10)
    assert parse_number("3/7") == Fraction(3, 7)
    assert format_number(Fraction(3, 7)) == "3/7"
    assert format_number(Fraction(1, 8)) == "0.125"


def test_desugar_examples():
    phi = Prob(IntervalSet.point(1), Atom("a", ("x",)))
    psi = Prob(IntervalSet.point(0), Atom("b", ("x",)))
    assert desugar(Possible("a", phi)) == Not(Know("a", Not(phi)))
    assert desugar(Implies(phi, psi)) == Not(And(Not(Not(phi)), Not(psi)))


def test_predicates_collects_arity():
    f = parse_epistemic("psi(x,yhat) |> P{1} h_L(x)")
    assert predicates(f) == {("psi", 2), ("h_L", 1)}


@settings(max_examples=1000, deadline=None)
@given(epistemic_formulas(with_dataset=True))
def test_print_parse_round_trip(phi):
    assert parse_epistemic(to_text(phi)) == phi


@settings(max_examples=300, deadline=None)
@given(static_formulas())
def test_static_round_trip(psi):
    assert parse_static(to_text(psi)) == psi


@settings(max_examples=300, deadline=None)
@given(interval_sets())
def test_interval_round_trip(iset):
    assert parse_interval(str(iset)) == iset


@settings(max_examples=300, deadline=None)
@given(epistemic_formulas())
def test_desugar_is_core_and_idempotent(phi):
    d = desugar(phi)
    assert is_core(d)
    assert desugar(d) == d


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_desugar_preserves_verdicts(data):
    m = data.draw(models())
    phi = data.draw(epistemic_formulas())
    ev = Evaluator(m)
    for w in m.world_list:
        try:
            expected = ev.eval(w, phi)
        except Exception as e:  # closure errors must match too
            with pytest.raises(type(e)):
                ev.eval(w, desugar(phi))
            continue
        assert ev.eval(w, desugar(phi)) == expected


@settings(max_examples=300, deadline=None)
@given(static_formulas(), st.data())
def test_desugar_static_preserves_truth(psi, data):
    m = data.draw(models())
    for s in m.states:
        assert m.satisfies(s, desugar_static(psi)) == m.satisfies(s, psi)


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="PKQXiu<>{}[](),.!&|->/ 0123456789abcxy", max_size=30))
def test_parser_total(text):
    # either a formula or a syntax error, never anything else
    try:
        f = parse_epistemic(text)
    except (FormulaSyntaxError, IntervalError):
        return
    assert parse_epistemic(to_text(f)) == f
