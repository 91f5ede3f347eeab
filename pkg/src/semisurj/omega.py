"""Omega-indexed machinery: pairing, limits, greatest fixed points, strata.

The limit operators iterate until two consecutive values agree exactly.
When that never happens but the recent differences are translates of each
other by a constant index shift within one tag, the limit is closed off in
one step as a progression union ("acceleration"); the candidate is accepted
only after it passes the fixpoint equation, the translating window sits
above every irregular index of the step function, and one further concrete
step confirms the pattern.  Anything else raises NonStabilizing: a limit is
never returned unproved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .errors import NonStabilizing, NotDescending
from .maps import PAMap
from .sets import SemilinearSet


def cantor_pair(m, n):
    """The usual diagonal bijection omega x omega -> omega."""
    return (m + n) * (m + n + 1) // 2 + m


def cantor_unpair(k):
    w = int((math.isqrt(8 * k + 1) - 1) // 2)
    t = w * (w + 1) // 2
    m = k - t
    return m, w - m


@dataclass(frozen=True)
class Budget:
    """Iteration policy for the limit operators."""

    max_steps: int = 64
    acceleration: bool = True

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


DEFAULT_BUDGET = Budget()


# ---------------------------------------------------------------------------
# Isotone set expressions over one variable.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsotoneExpr:
    """A closed expression tree over one set variable.

    Node kinds: variable, constant set, union, intersection, image under a
    fixed map, preimage under a fixed map.  Every kind is monotone in the
    variable, so the denoted transformer is isotone by construction.
    """

    kind: str
    payload: tuple = ()

    @classmethod
    def var(cls):
        return cls("var")

    @classmethod
    def const(cls, s):
        return cls("const", (s,))

    @classmethod
    def union(cls, a, b):
        return cls("union", (a, b))

    @classmethod
    def intersect(cls, a, b):
        return cls("intersect", (a, b))

    @classmethod
    def image(cls, f, e):
        return cls("image", (f, e))

    @classmethod
    def preimage(cls, f, e):
        return cls("preimage", (f, e))

    def eval(self, d):
        k = self.kind
        if k == "var":
            return d
        if k == "const":
            return self.payload[0]
        if k == "union":
            return self.payload[0].eval(d) | self.payload[1].eval(d)
        if k == "intersect":
            return self.payload[0].eval(d) & self.payload[1].eval(d)
        if k == "image":
            return self.payload[0].image_of(self.payload[1].eval(d))
        if k == "preimage":
            return self.payload[0].preimage_of(self.payload[1].eval(d))
        raise ValueError(k)  # pragma: no cover

    def horizon(self):
        k = self.kind
        if k == "var":
            return 0
        if k == "const":
            return self.payload[0].structural_horizon()
        if k in ("union", "intersect"):
            return max(self.payload[0].horizon(), self.payload[1].horizon())
        return max(_map_horizon(self.payload[0]), self.payload[1].horizon())


StepLike = Union[PAMap, IsotoneExpr]


def _map_horizon(f):
    top = 0
    for k, v in f.finite_graph.items():
        top = max(top, k.index + 1, v.index + 1)
    for p in f.pieces:
        top = max(top, p.guard.low + p.guard.modulus, p.base + 1)
    return top


def _step_fn(step):
    if isinstance(step, PAMap):
        return step.image_of
    if isinstance(step, IsotoneExpr):
        return step.eval
    raise TypeError("step must be a PAMap or an IsotoneExpr")


def _step_horizon(step):
    if isinstance(step, PAMap):
        return _map_horizon(step)
    return step.horizon()


def _translate_delta(prev, cur):
    """The shift amount if cur == prev shifted up within one shared tag."""
    if prev.is_empty() or cur.is_empty():
        return None
    tags = prev.tags()
    if len(tags) != 1 or cur.tags() != tags:
        return None
    tag = tags[0]
    d = cur.min_index(tag) - prev.min_index(tag)
    if d < 1:
        return None
    return d if prev.shift(d) == cur else None


def omega_union(seed, step, budget=DEFAULT_BUDGET):
    """Least set U with seed ⊆ U and step(U) ⊆ U, or NonStabilizing.

    ``step`` is a PAMap (meaning image under the map) or an IsotoneExpr.
    """
    fn = _step_fn(step)
    floor = max(_step_horizon(step), seed.structural_horizon())
    current = seed
    deltas = []
    last_delta = None
    for k in range(budget.max_steps):
        nxt = current | fn(current)
        delta = nxt - current
        if delta.is_empty():
            return current
        last_delta = delta
        deltas.append(delta)
        if budget.acceleration and len(deltas) >= 3:
            d1 = _translate_delta(deltas[-3], deltas[-2])
            d2 = _translate_delta(deltas[-2], deltas[-1])
            tag = deltas[-3].tags()[0] if len(deltas[-3].tags()) == 1 else None
            if (
                d1 is not None
                and d1 == d2
                and tag is not None
                and deltas[-3].min_index(tag) >= floor
            ):
                candidate = nxt | delta.spread(d1)
                grown = nxt | fn(nxt)
                if (
                    candidate | fn(candidate) == candidate
                    and grown - nxt == delta.shift(d1)
                ):
                    return candidate
        current = nxt
    raise NonStabilizing(
        f"no stabilization within {budget.max_steps} steps",
        steps=budget.max_steps,
        last_delta=last_delta,
    )


def omega_intersection(chain, budget=DEFAULT_BUDGET):
    """Stabilized intersection of a descending chain of sets.

    ``chain`` is any iterable yielding the successive sets; each item must
    be contained in the previous one (NotDescending otherwise).  The chain
    is trusted to be eventually constant: the intersection is returned when
    two consecutive items agree, or when the iterable is exhausted.  With
    acceleration on, removals that translate upward are closed off after
    one extra confirming item.
    """
    it = iter(chain)
    try:
        current = next(it)
    except StopIteration:
        raise ValueError("chain must yield at least one set")
    deltas = []
    last_delta = None
    for k in range(budget.max_steps):
        try:
            nxt = next(it)
        except StopIteration:
            return current
        if not nxt <= current:
            raise NotDescending("chain item is not contained in its predecessor")
        delta = current - nxt
        if delta.is_empty():
            return current
        last_delta = delta
        deltas.append(delta)
        if budget.acceleration and len(deltas) >= 3:
            d1 = _translate_delta(deltas[-3], deltas[-2])
            d2 = _translate_delta(deltas[-2], deltas[-1])
            if d1 is not None and d1 == d2:
                candidate = nxt - delta.shift(d1).spread(d1)
                try:
                    confirm = next(it)
                except StopIteration:
                    return nxt
                if not confirm <= nxt:
                    raise NotDescending(
                        "chain item is not contained in its predecessor"
                    )
                if nxt - confirm == delta.shift(d1):
                    return candidate
                current = confirm
                deltas = []
                continue
        current = nxt
    raise NonStabilizing(
        f"no stabilization within {budget.max_steps} steps",
        steps=budget.max_steps,
        last_delta=last_delta,
    )


def gfp_isotone(expr, ambient, budget=DEFAULT_BUDGET):
    """Greatest fixed point of an isotone expression inside ``ambient``.

    Computed by downward iteration from the ambient, which is valid because
    expr(ambient) ⊆ ambient is required and the expression is isotone; every
    post-fixed point stays below each iterate, so a stabilized value is the
    greatest fixed point.
    """
    first = expr.eval(ambient)
    if not first <= ambient:
        raise NotDescending("expression does not map the ambient into itself")
    floor = max(expr.horizon(), ambient.structural_horizon())
    current = ambient
    deltas = []
    last_delta = None
    for k in range(budget.max_steps):
        nxt = expr.eval(current) & current
        delta = current - nxt
        if delta.is_empty():
            return current
        last_delta = delta
        deltas.append(delta)
        if budget.acceleration and len(deltas) >= 3:
            d1 = _translate_delta(deltas[-3], deltas[-2])
            d2 = _translate_delta(deltas[-2], deltas[-1])
            tag = deltas[-3].tags()[0] if len(deltas[-3].tags()) == 1 else None
            if (
                d1 is not None
                and d1 == d2
                and tag is not None
                and deltas[-3].min_index(tag) >= floor
            ):
                candidate = nxt - delta.shift(d1).spread(d1)
                shrunk = expr.eval(nxt) & nxt
                if (
                    expr.eval(candidate) == candidate
                    and nxt - shrunk == delta.shift(d1)
                ):
                    return candidate
        current = nxt
    raise NonStabilizing(
        f"no stabilization within {budget.max_steps} steps",
        steps=budget.max_steps,
        last_delta=last_delta,
    )


def least_index_stratify(domain, step, target, budget=DEFAULT_BUDGET):
    """The partial map x -> step^{m(x)}(x), m(x) least with step^m(x) in target.

    Strata are computed symbolically: the total preimage closure of the
    target decides which elements ever arrive, and per-m strata peel off the
    domain until it is exhausted.  Elements that provably never reach the
    target (the closure excludes them) are simply outside the returned map's
    domain; exhausting the budget first raises NonStabilizing.
    """
    from .maps import map_identity, map_iterate, map_union_disjoint

    reach = omega_union(target, IsotoneExpr.preimage(step, IsotoneExpr.var()), budget)
    wanted = domain & reach
    parts = []
    covered = SemilinearSet.empty()
    pre = target
    power = None
    for m in range(budget.max_steps + 1):
        stratum = (domain & pre) - covered
        if not stratum.is_empty():
            if m == 0:
                parts.append(map_identity(stratum))
            else:
                parts.append(power.restrict(stratum))
            covered = covered | stratum
        if covered == wanted:
            return map_union_disjoint(*parts)
        pre = step.preimage_of(pre)
        power = step if power is None else step.compose(power)
    raise NonStabilizing(
        f"strata not exhausted within {budget.max_steps} steps",
        steps=budget.max_steps,
        last_delta=wanted - covered,
    )
