"""Evaluation of static and epistemic formulas over a distributional Kripke model.

Modalities quantify over the declared worlds only.  When a modality is
evaluated at a restricted world, that distribution is looked up among the
declared worlds; divergence relations can also be applied to undeclared
distributions directly, explicit relations cannot (``ClosureError``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ClosureError, UnknownRelation, UnknownWorld
from .formula import (
    And,
    CounterKnow,
    CounterPossible,
    EpistemicFormula,
    Implies,
    Know,
    Not,
    Or,
    Possible,
    Prob,
    Q,
    StaticFormula,
    Suppose,
    Xi,
    interval_contains,
    to_text,
)
from .model import Model, World


def eval_static(m: Model, state_id: str, psi: StaticFormula) -> bool:
    return m.satisfies(state_id, psi)


def holds_xi(m: Model, w: World, w_d: World) -> bool:
    """``w`` is ``w_d`` conditioned on some subset of states."""
    if not w.support <= w_d.support:
        return False
    total = sum((w_d[s] for s in w.support), Fraction(0))
    return all(w[s] == w_d[s] / total for s in w.support)


def holds_Q(m: Model, w: World, w_ref: World, psi: StaticFormula) -> bool:
    """``w`` gives ``psi`` probability 1 and every ``psi``-state of ``w_ref`` stays supported."""
    if m.mass(w, psi) != 1:
        return False
    return not any(m.satisfies(s, psi) for s in w_ref.support - w.support)


@dataclass
class Evaluator:
    """Evaluates formulas against one model.

    ``trace`` collects one entry per evaluated subformula.  ``mutant`` is a
    test-only fault injection hook: ``"complement"`` makes the counterfactual
    modalities use the relation itself instead of its complement.
    """

    model: Model
    trace: bool = False
    mutant: str | None = None
    log: list = field(default_factory=list)

    # relation access -------------------------------------------------------

    def relation(self, rid: str):
        try:
            return self.model.relations[rid]
        except KeyError:
            raise UnknownRelation(f"unknown relation {rid!r}") from None

    def successors(self, rid: str, w: World) -> list[World]:
        rel = self.relation(rid)
        m = self.model
        wid = w.id if w.id is not None else m.resolve(w)
        if wid is not None:
            return [m.worlds[v] for v in m.worlds if v in rel.successors(wid)]
        if rel.spec is None:
            raise ClosureError(
                f"relation {rid!r} is explicit and the world {dict(w.weights)} is not declared; "
                "add the restricted world to the universe"
            )
        return [v for v in m.world_list if rel.spec.related(m, w, v)]

    def counter_successors(self, rid: str, w: World) -> list[World]:
        succ = self.successors(rid, w)
        if self.mutant == "complement":
            return succ
        keys = {v.key for v in succ}
        return [v for v in self.model.world_list if v.key not in keys]

    # evaluation ------------------------------------------------------------

    def _record(self, phi, w: World, verdict: bool, depth: int, **extra) -> None:
        if self.trace:
            entry = {"depth": depth, "formula": to_text(phi), "world": _world_label(w),
                     "verdict": verdict}
            entry.update(extra)
            self.log.append(entry)

    def eval(self, w: World, phi: EpistemicFormula, depth: int = 0) -> bool:
        m = self.model
        extra = {}
        if isinstance(phi, Prob):
            p = m.mass(w, phi.body)
            verdict = interval_contains(phi.interval, p)
            extra["probability"] = str(p)
        elif isinstance(phi, Not):
            verdict = not self.eval(w, phi.operand, depth + 1)
        elif isinstance(phi, And):
            verdict = self.eval(w, phi.left, depth + 1) and self.eval(w, phi.right, depth + 1)
        elif isinstance(phi, Or):
            verdict = self.eval(w, phi.left, depth + 1) or self.eval(w, phi.right, depth + 1)
        elif isinstance(phi, Implies):
            verdict = (not self.eval(w, phi.left, depth + 1)) or self.eval(w, phi.right, depth + 1)
        elif isinstance(phi, Suppose):
            restricted = m.restrict(w, phi.condition)
            extra["condition_mass"] = str(m.mass(w, phi.condition))
            if restricted is None:
                verdict = False
                extra["note"] = "condition unsatisfiable; supposing operator false"
            else:
                verdict = self.eval(restricted, phi.body, depth + 1)
        elif isinstance(phi, Know):
            verdict = all(self.eval(v, phi.body, depth + 1) for v in self.successors(phi.relation, w))
        elif isinstance(phi, Possible):
            verdict = any(self.eval(v, phi.body, depth + 1) for v in self.successors(phi.relation, w))
        elif isinstance(phi, CounterKnow):
            verdict = all(self.eval(v, phi.body, depth + 1)
                          for v in self.counter_successors(phi.relation, w))
        elif isinstance(phi, CounterPossible):
            verdict = any(self.eval(v, phi.body, depth + 1)
                          for v in self.counter_successors(phi.relation, w))
        elif isinstance(phi, Xi):
            verdict = holds_xi(m, w, self._dataset(phi.dataset))
        elif isinstance(phi, Q):
            verdict = holds_Q(m, w, self._dataset(phi.ref), phi.body)
        else:
            raise TypeError(f"not an epistemic formula: {phi!r}")
        self._record(phi, w, verdict, depth, **extra)
        return verdict

    def _dataset(self, wid: str) -> World:
        try:
            return self.model.world(wid)
        except UnknownWorld:
            from .errors import MissingDatasetWorld

            raise MissingDatasetWorld(f"dataset world {wid!r} is not declared") from None

    def eval_global(self, phi: EpistemicFormula) -> tuple[bool, str | None]:
        for wid, w in self.model.worlds.items():
            if not self.eval(w, phi):
                return False, wid
        return True, None


def _world_label(w: World) -> str:
    if w.id is not None:
        return w.id
    return "{" + ", ".join(f"{s}: {p}" for s, p in sorted(w.weights.items())) + "}"


def eval(m: Model, w: World | str, phi: EpistemicFormula, **kwargs) -> bool:
    """Truth of ``phi`` at world ``w`` (a World or a declared world id)."""
    if isinstance(w, str):
        w = m.world(w)
    return Evaluator(m, **kwargs).eval(w, phi)


def eval_global(m: Model, phi: EpistemicFormula, **kwargs) -> tuple[bool, str | None]:
    """``phi`` at every declared world; on failure also the first refuting world id."""
    if not m.worlds:
        raise UnknownWorld("model has no worlds")
    return Evaluator(m, **kwargs).eval_global(phi)
