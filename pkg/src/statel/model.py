"""Finite distributional Kripke models with exact rational weights.

A world is a probability distribution over a finite set of states; every
state carries a total assignment of the measurement variables.  Worlds that
share a state share its assignment, so the per-world observation map is
implicit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from .errors import (
    ArityError,
    DuplicateWorld,
    NegativeWeight,
    NonUnitMass,
    UnknownPredicate,
    UnknownState,
    UnknownVariable,
    UnknownWorld,
)
from .formula import Atom, SAnd, SNot, SOr, StaticFormula

# A value is a label token or a vector of rational coordinates.
Value = Union[str, tuple]
Distribution = dict


def as_value(raw) -> Value:
    if isinstance(raw, str):
        return raw
    if isinstance(raw, (list, tuple)):
        return tuple(Fraction(str(c)) if isinstance(c, float) else Fraction(c) for c in raw)
    if isinstance(raw, (int, Fraction)):
        return (Fraction(raw),)
    raise TypeError(f"unsupported value {raw!r}")


def support(d: Mapping) -> set:
    """Values carrying positive mass."""
    return {v for v, p in d.items() if p > 0}


@dataclass(frozen=True, eq=False)
class State:
    id: str
    assignment: Mapping[str, Value]


@dataclass(frozen=True, eq=False)
class World:
    """A distribution over state ids.  Only positive weights are stored."""

    id: str | None
    weights: Mapping[str, Fraction]
    key: frozenset = field(init=False, repr=False)

    def __post_init__(self):
        clean = {s: Fraction(p) for s, p in self.weights.items() if Fraction(p) != 0}
        object.__setattr__(self, "weights", clean)
        object.__setattr__(self, "key", frozenset(clean.items()))

    def __getitem__(self, state_id: str) -> Fraction:
        return self.weights.get(state_id, Fraction(0))

    def __eq__(self, other):
        return isinstance(other, World) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def support(self) -> frozenset:
        return frozenset(self.weights)

    def named(self, world_id: str | None) -> World:
        return World(world_id, self.weights)


def make_world(weights: Mapping[str, object], world_id: str | None = None) -> World:
    """Validate and build a world; the mass must sum to exactly 1."""
    parsed = {}
    for s, p in weights.items():
        q = Fraction(p) if not isinstance(p, str) else _parse_rational(p)
        if q < 0:
            raise NegativeWeight(f"negative weight {q} on state {s!r}")
        parsed[s] = q
    total = sum(parsed.values(), Fraction(0))
    if total != 1:
        raise NonUnitMass(f"weights sum to {total}, not 1")
    return World(world_id, parsed)


def _parse_rational(text: str) -> Fraction:
    from .formula import parse_number

    return parse_number(text)


Interpreter = Callable[[tuple], bool]


class Model:
    """Universe of named worlds with valuations and accessibility relations.

    ``valuation`` maps state id -> predicate -> set of argument tuples.
    ``interpreters`` bind predicates to a function of the argument values and
    take precedence over explicit tuples.
    """

    def __init__(
        self,
        vars: Iterable[str],
        states: Iterable[State],
        worlds: Iterable[World],
        valuation: Mapping[str, Mapping[str, Iterable[tuple]]] | None = None,
        arities: Mapping[str, int] | None = None,
        interpreters: Mapping[str, tuple[int, Interpreter]] | None = None,
        relations: Mapping | None = None,
        real_world: str | None = None,
        aliases: Mapping[str, str] | None = None,
    ):
        self.vars = tuple(vars)
        # extra names for declared worlds (e.g. datasets with equal distributions)
        self.aliases = dict(aliases or {})
        self.states = {s.id: s for s in states}
        var_set = set(self.vars)
        for s in self.states.values():
            missing = var_set - set(s.assignment)
            if missing:
                raise UnknownVariable(f"state {s.id!r} lacks assignment for {sorted(missing)}")
            extra = set(s.assignment) - var_set
            if extra:
                raise UnknownVariable(f"state {s.id!r} assigns undeclared {sorted(extra)}")

        self.valuation: dict[str, dict[str, frozenset]] = {}
        self.arities: dict[str, int] = dict(arities or {})
        for sid, preds in (valuation or {}).items():
            if sid not in self.states:
                raise UnknownState(f"valuation for unknown state {sid!r}")
            self.valuation[sid] = {}
            for pred, tuples in preds.items():
                tuples = frozenset(tuple(as_value(v) for v in t) for t in tuples)
                for t in tuples:
                    k = self.arities.setdefault(pred, len(t))
                    if k != len(t):
                        raise ArityError(f"predicate {pred!r} used with arity {len(t)} and {k}")
                self.valuation[sid][pred] = tuples
        self.interpreters = dict(interpreters or {})
        for pred, (k, _) in self.interpreters.items():
            if self.arities.setdefault(pred, k) != k:
                raise ArityError(f"predicate {pred!r} declared with conflicting arity")

        self.worlds: dict[str, World] = {}
        self._by_key: dict[frozenset, str] = {}
        for w in worlds:
            self._add_world(w)

        self.relations: dict = {}
        for rid, rel in (relations or {}).items():
            self.add_relation(rid, rel)

        if real_world is not None and real_world not in self.worlds:
            raise UnknownWorld(f"real world {real_world!r} is not declared")
        self.real_world = real_world

    # construction helpers --------------------------------------------------

    def _add_world(self, w: World) -> None:
        if w.id is None:
            raise UnknownWorld("declared worlds need an id")
        if w.id in self.worlds:
            raise DuplicateWorld(f"world id {w.id!r} declared twice")
        for s in w.weights:
            if s not in self.states:
                raise UnknownState(f"world {w.id!r} puts mass on unknown state {s!r}")
        if sum(w.weights.values(), Fraction(0)) != 1:
            raise NonUnitMass(f"world {w.id!r} does not sum to 1")
        if w.key in self._by_key:
            raise DuplicateWorld(
                f"worlds {self._by_key[w.key]!r} and {w.id!r} are the same distribution"
            )
        self.worlds[w.id] = w
        self._by_key[w.key] = w.id

    def add_relation(self, rid: str, rel) -> None:
        from .divergence import Relation

        if not isinstance(rel, Relation):
            raise TypeError("relations must be Relation instances")
        for a, b in rel.pairs:
            if a not in self.worlds or b not in self.worlds:
                raise UnknownWorld(f"relation {rid!r} references undeclared world in {(a, b)}")
        self.relations[rid] = rel.named(rid)

    # queries ---------------------------------------------------------------

    @property
    def world_list(self) -> list[World]:
        return list(self.worlds.values())

    def world(self, world_id: str) -> World:
        world_id = self.aliases.get(world_id, world_id)
        try:
            return self.worlds[world_id]
        except KeyError:
            raise UnknownWorld(f"unknown world {world_id!r}") from None

    def resolve(self, w: World) -> str | None:
        """Id of the declared world with the same distribution, if any."""
        return self._by_key.get(w.key)

    def value(self, state_id: str, var: str) -> Value:
        if var not in self.vars:
            raise UnknownVariable(f"unknown variable {var!r}")
        return self.states[state_id].assignment[var]

    def satisfies(self, state_id: str, psi: StaticFormula) -> bool:
        if isinstance(psi, Atom):
            k = self.arities.get(psi.pred)
            if k is None:
                raise UnknownPredicate(f"unknown predicate {psi.pred!r}")
            if k != len(psi.args):
                raise ArityError(f"predicate {psi.pred!r} has arity {k}, used with {len(psi.args)}")
            args = tuple(self.value(state_id, x) for x in psi.args)
            interp = self.interpreters.get(psi.pred)
            if interp is not None:
                return bool(interp[1](args))
            return args in self.valuation.get(state_id, {}).get(psi.pred, ())
        if isinstance(psi, SNot):
            return not self.satisfies(state_id, psi.operand)
        if isinstance(psi, SAnd):
            return self.satisfies(state_id, psi.left) and self.satisfies(state_id, psi.right)
        if isinstance(psi, SOr):
            return self.satisfies(state_id, psi.left) or self.satisfies(state_id, psi.right)
        raise TypeError(f"not a static formula: {psi!r}")

    def mass(self, w: World, psi: StaticFormula) -> Fraction:
        """Exact probability that a state drawn from ``w`` satisfies ``psi``."""
        return sum((p for s, p in w.weights.items() if self.satisfies(s, psi)), Fraction(0))

    def marginal(self, w: World, var: str) -> Distribution:
        if var not in self.vars:
            raise UnknownVariable(f"unknown variable {var!r}")
        out: dict = {}
        for s, p in w.weights.items():
            v = self.states[s].assignment[var]
            out[v] = out.get(v, Fraction(0)) + p
        return out

    def restrict(self, w: World, psi: StaticFormula) -> World | None:
        kept = {s: p for s, p in w.weights.items() if self.satisfies(s, psi)}
        total = sum(kept.values(), Fraction(0))
        if total == 0:
            return None
        restricted = World(None, {s: p / total for s, p in kept.items()})
        return restricted.named(self.resolve(restricted))

    def with_worlds(self, extra: Iterable[World], relations: Mapping | None = None) -> Model:
        """Copy of this model with additional worlds and (re)built relations."""
        return Model(
            self.vars,
            self.states.values(),
            [*self.worlds.values(), *extra],
            valuation=self.valuation,
            arities=self.arities,
            interpreters=self.interpreters,
            relations=relations if relations is not None else {},
            real_world=self.real_world,
            aliases=self.aliases,
        )

    def __repr__(self) -> str:
        return (
            f"Model(vars={self.vars}, states={len(self.states)}, worlds={len(self.worlds)}, "
            f"relations={sorted(self.relations)})"
        )


def marginal(m: Model, w: World, var: str) -> Distribution:
    return m.marginal(w, var)


def restrict(m: Model, w: World, psi: StaticFormula) -> World | None:
    """Conditional distribution ``w | psi``, or None when ``psi`` has no mass."""
    return m.restrict(w, psi)
