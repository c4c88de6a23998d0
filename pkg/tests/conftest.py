from fractions import Fraction

from hypothesis import strategies as st

from statel.divergence import explicit_relation
from statel.formula import (
    And,
    Atom,
    CounterKnow,
    CounterPossible,
    Implies,
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
)
from statel.model import Model, State, World

PREDS = ("p", "q", "r")

fractions01 = st.builds(
    lambda n, d: Fraction(min(n, d), d), st.integers(0, 12), st.integers(1, 12)
)


@st.composite
def interval_sets(draw):
    cuts = sorted(set(draw(st.lists(fractions01, min_size=2, max_size=6))))
    if len(cuts) < 2:
        v = cuts[0]
        return IntervalSet((Piece(v, True, v, True),))
    pieces = []
    # take every other gap so that pieces never touch
    for lo, hi in list(zip(cuts, cuts[1:]))[::2]:
        pieces.append(Piece(lo, draw(st.booleans()), hi, draw(st.booleans())))
    return IntervalSet(tuple(pieces))


def static_formulas(preds=PREDS, args=("x",)):
    leaves = st.builds(lambda p, a: Atom(p, (a,)), st.sampled_from(preds), st.sampled_from(args))
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            st.builds(SNot, sub), st.builds(SAnd, sub, sub), st.builds(SOr, sub, sub)
        ),
        max_leaves=5,
    )


def epistemic_formulas(relations=("a", "b"), datasets=("w0",), with_dataset=False):
    statics = static_formulas()
    leaves = st.builds(Prob, interval_sets(), statics)
    if with_dataset:
        leaves = st.one_of(
            leaves,
            st.builds(Xi, st.sampled_from(datasets)),
            st.builds(Q, st.sampled_from(datasets), statics),
        )
    rel = st.sampled_from(relations)
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            st.builds(Not, sub),
            st.builds(And, sub, sub),
            st.builds(Or, sub, sub),
            st.builds(Implies, sub, sub),
            st.builds(Suppose, statics, sub),
            st.builds(Know, rel, sub),
            st.builds(Possible, rel, sub),
            st.builds(CounterKnow, rel, sub),
            st.builds(CounterPossible, rel, sub),
        ),
        max_leaves=6,
    )


@st.composite
def distributions(draw, state_ids):
    chosen = draw(st.lists(st.sampled_from(state_ids), min_size=1, max_size=len(state_ids),
                           unique=True))
    raw = [draw(st.integers(1, 5)) for _ in chosen]
    total = sum(raw)
    return {s: Fraction(v, total) for s, v in zip(chosen, raw)}


@st.composite
def models(draw, max_states=4, max_worlds=5):
    """Small random models over unary predicates p, q, r on x with explicit relations a, b."""
    n = draw(st.integers(1, max_states))
    states = [State(f"s{i}", {"x": f"v{i}"}) for i in range(n)]
    valuation = {
        f"s{i}": {p: [(f"v{i}",)] for p in PREDS if draw(st.booleans())} for i in range(n)
    }
    ids = [s.id for s in states]
    worlds = {}
    for _ in range(draw(st.integers(1, max_worlds))):
        d = draw(distributions(ids))
        w = World(f"w{len(worlds)}", d)
        if all(w != v for v in worlds.values()):
            worlds[w.id] = w
    m = Model(("x",), states, worlds.values(), valuation=valuation,
              arities={p: 1 for p in PREDS})
    wids = list(worlds)
    for rid in ("a", "b"):
        pairs = draw(st.sets(st.tuples(st.sampled_from(wids), st.sampled_from(wids))))
        m.add_relation(rid, explicit_relation(pairs))
    return m


def closed_worlds(m: Model, conditions) -> list[World]:
    """The worlds of ``m`` plus every iterated restriction by ``conditions``."""
    out = list(m.world_list)
    seen = {w.key for w in out}
    i = 0
    while i < len(out):
        for c in conditions:
            r = m.restrict(out[i], c)
            if r is not None and r.key not in seen:
                seen.add(r.key)
                out.append(r.named(f"w{len(out)}"))
        i += 1
    return out


def rebuild(m: Model, worlds, relations=None) -> Model:
    return Model(m.vars, m.states.values(), worlds, valuation=m.valuation, arities=m.arities,
                 relations=relations)
