"""Statistical epistemic logic over finite distributional Kripke models."""

from .formula import (
    And,
    Atom,
    CounterKnow,
    CounterPossible,
    Implies,
    IntervalSet,
    Know,
    Not,
    Or,
    Possible,
    Prob,
    Q,
    SAnd,
    SNot,
    SOr,
    Suppose,
    Xi,
    parse_epistemic,
    parse_static,
    to_text,
)
from .model import Model, State, World, make_world
from .semantics import Evaluator, eval, eval_global

__all__ = [
    "And", "Atom", "CounterKnow", "CounterPossible", "Implies", "IntervalSet", "Know", "Not",
    "Or", "Possible", "Prob", "Q", "SAnd", "SNot", "SOr", "Suppose", "Xi", "parse_epistemic",
    "parse_static", "to_text", "Model", "State", "World", "make_world", "Evaluator", "eval",
    "eval_global",
]
