"""Statistical divergences and divergence-derived accessibility relations.

Everything is exact.  L2 ground distances can be irrational; they are carried
as :class:`Root` values (the square root of a rational) and compared by
squaring, never by floating point.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping, Union

from .errors import DimensionMismatch

if TYPE_CHECKING:
    from .model import Model, World


# --------------------------------------------------------------------------
# exact non-negative reals of the form sqrt(q)
# --------------------------------------------------------------------------


class Root:
    """The non-negative square root of a rational that is not a perfect square."""

    __slots__ = ("square",)

    def __init__(self, square: Fraction):
        self.square = Fraction(square)

    def __float__(self) -> float:
        return math.sqrt(self.square)

    def __repr__(self) -> str:
        return f"sqrt({self.square})"

    def __str__(self) -> str:
        return f"sqrt({self.square})"

    def __mul__(self, k):
        k = Fraction(k)
        if k < 0:
            raise ValueError("Root only scales by non-negative rationals")
        return sqrt_exact(self.square * k * k)

    __rmul__ = __mul__

    def __eq__(self, other):
        try:
            return squared(self) == squared(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(("root", self.square))

    def __lt__(self, other):
        return squared(self) < squared(other)

    def __le__(self, other):
        return squared(self) <= squared(other)

    def __gt__(self, other):
        return squared(self) > squared(other)

    def __ge__(self, other):
        return squared(self) >= squared(other)


Real = Union[Fraction, Root]


def squared(x) -> Fraction:
    """Square of a non-negative exact real."""
    if isinstance(x, Root):
        return x.square
    if isinstance(x, (int, Fraction)):
        if x < 0:
            raise ValueError("squared() expects a non-negative value")
        return Fraction(x) ** 2
    raise TypeError(f"not an exact real: {x!r}")


def sqrt_exact(q: Fraction) -> Real:
    q = Fraction(q)
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return Root(q)


def to_float(x: Real) -> float:
    return float(x)


# --------------------------------------------------------------------------
# ground metrics
# --------------------------------------------------------------------------

METRIC_KINDS = ("l1", "l2", "linf", "discrete")


@dataclass(frozen=True)
class GroundMetric:
    kind: str = "linf"

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric {self.kind!r}; expected one of {METRIC_KINDS}")

    def _coords(self, u, v):
        if isinstance(u, str) or isinstance(v, str):
            raise DimensionMismatch(f"metric {self.kind} needs numeric vectors, got {u!r}, {v!r}")
        if len(u) != len(v):
            raise DimensionMismatch(f"vectors of dimension {len(u)} and {len(v)}")
        return [abs(Fraction(a) - Fraction(b)) for a, b in zip(u, v)]

    def key(self, u, v) -> Fraction:
        """Exact order-preserving surrogate: the distance, squared for L2."""
        if self.kind == "discrete":
            return Fraction(0) if u == v else Fraction(1)
        diffs = self._coords(u, v)
        if self.kind == "l1":
            return sum(diffs, Fraction(0))
        if self.kind == "linf":
            return max(diffs, default=Fraction(0))
        return sum((d * d for d in diffs), Fraction(0))

    def from_key(self, k: Fraction) -> Real:
        return sqrt_exact(k) if self.kind == "l2" else Fraction(k)

    def __call__(self, u, v) -> Real:
        return self.from_key(self.key(u, v))


# --------------------------------------------------------------------------
# divergences
# --------------------------------------------------------------------------


def total_variation(mu: Mapping, nu: Mapping) -> Fraction:
    """Half the L1 distance between two mass functions."""
    values = set(mu) | set(nu)
    total = sum((abs(Fraction(mu.get(v, 0)) - Fraction(nu.get(v, 0))) for v in values), Fraction(0))
    return total / 2


def _max_flow(cap: dict, source, sink) -> Fraction:
    """Edmonds-Karp on a dict-of-dicts residual graph, exact arithmetic."""
    flow = Fraction(0)
    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v, c in cap[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return flow
        path = []
        v = sink
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        push = min(cap[u][v] for u, v in path)
        for u, v in path:
            cap[u][v] -= push
            cap[v][u] = cap[v].get(u, Fraction(0)) + push
        flow += push


def transport_feasible(mu: Mapping, nu: Mapping, allowed) -> bool:
    """True iff some coupling of mu and nu is supported on ``allowed`` pairs."""
    src, snk = ("src",), ("snk",)
    cap: dict = {src: {}, snk: {}}
    for a, p in mu.items():
        if p > 0:
            cap[src][("a", a)] = Fraction(p)
            cap.setdefault(("a", a), {})
    for b, q in nu.items():
        if q > 0:
            cap.setdefault(("b", b), {})[snk] = Fraction(q)
    for a, b in allowed:
        cap[("a", a)][("b", b)] = Fraction(1)
    return _max_flow(cap, src, snk) == 1


def wasserstein_inf(mu: Mapping, nu: Mapping, metric: GroundMetric) -> Real:
    """Smallest t such that a coupling moves no mass farther than t."""
    return metric.from_key(wasserstein_inf_key(mu, nu, metric))


def wasserstein_inf_key(mu: Mapping, nu: Mapping, metric: GroundMetric) -> Fraction:
    a_supp = [a for a, p in mu.items() if p > 0]
    b_supp = [b for b, q in nu.items() if q > 0]
    keys = {(a, b): metric.key(a, b) for a in a_supp for b in b_supp}
    thresholds = sorted(set(keys.values()))
    lo, hi = 0, len(thresholds) - 1
    # the largest threshold admits every pair, hence the product coupling
    while lo < hi:
        mid = (lo + hi) // 2
        t = thresholds[mid]
        if transport_feasible(mu, nu, [pair for pair, k in keys.items() if k <= t]):
            hi = mid
        else:
            lo = mid + 1
    return thresholds[lo]


@dataclass(frozen=True)
class Divergence:
    """Total variation (``tv``) or infinity-Wasserstein (``winf``) over a ground metric."""

    kind: str = "tv"
    metric: GroundMetric | None = None

    def __post_init__(self):
        if self.kind not in ("tv", "winf"):
            raise ValueError(f"unknown divergence {self.kind!r}")
        if self.kind == "winf" and self.metric is None:
            object.__setattr__(self, "metric", GroundMetric("linf"))

    def __call__(self, mu: Mapping, nu: Mapping) -> Real:
        if self.kind == "tv":
            return total_variation(mu, nu)
        return wasserstein_inf(mu, nu, self.metric)

    def to_dict(self) -> dict:
        out = {"divergence": self.kind}
        if self.kind == "winf":
            out["metric"] = self.metric.kind
        return out


# --------------------------------------------------------------------------
# relations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceSpec:
    """Worlds related when the divergence of their ``var`` marginals is <= epsilon."""

    var: str
    divergence: Divergence
    epsilon: Fraction

    def value(self, m: Model, w: World, w2: World) -> Real:
        return self.divergence(m.marginal(w, self.var), m.marginal(w2, self.var))

    def check(self, m: Model, w: World, w2: World) -> tuple[Real, bool]:
        d = self.value(m, w, w2)
        return d, d <= self.epsilon

    def related(self, m: Model, w: World, w2: World) -> bool:
        return self.check(m, w, w2)[1]

    def to_dict(self) -> dict:
        return {"kind": "divergence", "var": self.var, **self.divergence.to_dict(),
                "epsilon": str(self.epsilon)}


@dataclass(frozen=True)
class LipschitzSpec:
    """Worlds related when D(out marginals) <= epsilon * r(v, v') for all input pairs."""

    in_var: str
    out_var: str
    divergence: Divergence
    metric: GroundMetric
    epsilon: Fraction

    def value(self, m: Model, w: World, w2: World) -> Real:
        return self.divergence(m.marginal(w, self.out_var), m.marginal(w2, self.out_var))

    def check(self, m: Model, w: World, w2: World) -> tuple[Real, bool]:
        d = self.value(m, w, w2)
        ins = [v for v, p in m.marginal(w, self.in_var).items() if p > 0]
        ins2 = [v for v, p in m.marginal(w2, self.in_var).items() if p > 0]
        return d, all(d <= self.epsilon * self.metric(v, v2) for v in ins for v2 in ins2)

    def related(self, m: Model, w: World, w2: World) -> bool:
        return self.check(m, w, w2)[1]

    def to_dict(self) -> dict:
        return {"kind": "lipschitz", "in_var": self.in_var, "out_var": self.out_var,
                **self.divergence.to_dict(), "input_metric": self.metric.kind,
                "epsilon": str(self.epsilon)}


@dataclass(frozen=True)
class Relation:
    """Materialized accessibility relation over declared world ids."""

    id: str | None
    pairs: frozenset
    spec: DivergenceSpec | LipschitzSpec | None = None
    provenance: str = "explicit"
    values: Mapping = field(default_factory=dict, compare=False)
    _succ: Mapping = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(tuple(p) for p in self.pairs))
        succ: dict = {}
        for a, b in self.pairs:
            succ.setdefault(a, set()).add(b)
        object.__setattr__(self, "_succ", succ)

    def named(self, rid: str) -> Relation:
        if rid == self.id:
            return self
        return Relation(rid, self.pairs, self.spec, self.provenance, self.values)

    def successors(self, world_id: str) -> set:
        return self._succ.get(world_id, set())

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs

    def is_symmetric(self) -> bool:
        return all((b, a) in self.pairs for a, b in self.pairs)

    def is_reflexive_on(self, world_ids) -> bool:
        return all((w, w) in self.pairs for w in world_ids)


def explicit_relation(pairs, rid: str | None = None) -> Relation:
    return Relation(rid, frozenset(tuple(p) for p in pairs))


def _materialize(m: Model, spec, rid, provenance) -> Relation:
    worlds = m.world_list
    pairs = set()
    values = {}
    for i, w in enumerate(worlds):
        for w2 in worlds[i:]:
            val, ok = spec.check(m, w, w2)
            values[(w.id, w2.id)] = values[(w2.id, w.id)] = val
            if ok:
                pairs.add((w.id, w2.id))
            if w2 is not w:
                # TV and W-infinity are symmetric, and so is the Lipschitz test
                if ok:
                    pairs.add((w2.id, w.id))
    return Relation(rid, frozenset(pairs), spec, provenance, values)


def build_divergence_relation(m: Model, var: str, divergence: Divergence, epsilon,
                              rid: str | None = None) -> Relation:
    """All pairs of declared worlds whose ``var`` marginals are within epsilon."""
    spec = DivergenceSpec(var, divergence, Fraction(epsilon))
    if var not in m.vars:
        from .errors import UnknownVariable

        raise UnknownVariable(f"unknown variable {var!r}")
    return _materialize(m, spec, rid, "divergence")


def build_lipschitz_relation(m: Model, in_var: str, out_var: str, divergence: Divergence,
                             metric: GroundMetric, epsilon, rid: str | None = None) -> Relation:
    spec = LipschitzSpec(in_var, out_var, divergence, metric, Fraction(epsilon))
    for v in (in_var, out_var):
        if v not in m.vars:
            from .errors import UnknownVariable

            raise UnknownVariable(f"unknown variable {v!r}")
    return _materialize(m, spec, rid, "lipschitz")


def complement_relation(m: Model, rel: Relation, rid: str | None = None) -> Relation:
    """(W x W) minus ``rel`` over the declared worlds of ``m``."""
    ids = list(m.worlds)
    pairs = frozenset((a, b) for a in ids for b in ids if (a, b) not in rel.pairs)
    return Relation(rid, pairs, None, f"complement of {rel.id}")


def build_from_spec(m: Model, spec, rid: str | None = None) -> Relation:
    if isinstance(spec, DivergenceSpec):
        return build_divergence_relation(m, spec.var, spec.divergence, spec.epsilon, rid)
    if isinstance(spec, LipschitzSpec):
        return build_lipschitz_relation(m, spec.in_var, spec.out_var, spec.divergence,
                                        spec.metric, spec.epsilon, rid)
    raise TypeError(f"unknown relation spec {spec!r}")
