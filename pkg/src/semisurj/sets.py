"""Eventually periodic sets of tagged naturals.

A :class:`SemilinearSet` denotes a (possibly infinite) subset of
``{(tag, n) : n a natural}`` for finitely many tags.  Per tag, the set is
*eventually periodic*: below a threshold it is listed explicitly, and at or
above the threshold membership depends only on the index modulo a fixed
modulus.  Every instance is kept in a canonical normal form — minimal
eventual modulus, then minimal threshold — so two instances denote the same
set if and only if they compare equal structurally.  All operations are
exact; nothing is approximated or sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import TagCollision


class Element(NamedTuple):
    """A single tagged natural."""

    tag: str
    index: int


# ---------------------------------------------------------------------------
# Per-tag slices.
#
# A slice (threshold, modulus, residues, finite) denotes
#     finite  ∪  { n >= threshold : n % modulus in residues }
# with finite ⊆ [0, threshold).  The canonical form has the minimal modulus
# for which the tail is periodic and then the minimal threshold.  The empty
# slice is represented as None and never stored.
# ---------------------------------------------------------------------------


class _Slice(NamedTuple):
    threshold: int
    modulus: int
    residues: frozenset
    finite: frozenset


def _divisors(m):
    out = []
    d = 1
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            if d != m // d:
                out.append(m // d)
        d += 1
    out.sort()
    return out


def _canon_slice(threshold, modulus, residues, finite):
    """Normalize a raw slice description; return None for the empty set."""
    if modulus < 1:
        raise ValueError("modulus must be positive")
    res = frozenset(r % modulus for r in residues)
    fin = frozenset(finite)
    if not res and not fin:
        return None
    t0 = max(threshold, (max(fin) + 1) if fin else 0)

    def member(n):
        return n in fin or (n >= threshold and n % modulus in res)

    if res:
        m_star = modulus
        for d in _divisors(modulus):
            rd = {r % d for r in res}
            if frozenset(x for x in range(modulus) if x % d in rd) == res:
                m_star = d
                break
        r_star = frozenset(r % m_star for r in res)
    else:
        m_star, r_star = 1, frozenset()

    t_star = t0
    while t_star > 0:
        n = t_star - 1
        if member(n) == ((n % m_star) in r_star):
            t_star -= 1
        else:
            break

    f_star = frozenset(x for x in fin if x < t_star) | frozenset(
        n for n in range(threshold, min(t0, t_star)) if n % modulus in res
    )
    if not r_star and not f_star:
        return None
    return _Slice(t_star, m_star, r_star, f_star)


_EMPTY = _Slice(0, 1, frozenset(), frozenset())


def _lift(sl, threshold, modulus):
    """Re-express a slice at a coarser (threshold, modulus) grid."""
    res = frozenset(r for r in range(modulus) if r % sl.modulus in sl.residues)
    fin = sl.finite | frozenset(
        n for n in range(sl.threshold, threshold) if n % sl.modulus in sl.residues
    )
    return res, fin


def _slice_binop(a, b, kind):
    a = a or _EMPTY
    b = b or _EMPTY
    mod = math.lcm(a.modulus, b.modulus)
    thr = max(a.threshold, b.threshold)
    ra, fa = _lift(a, thr, mod)
    rb, fb = _lift(b, thr, mod)
    if kind == "or":
        res, fin = ra | rb, fa | fb
    elif kind == "and":
        res, fin = ra & rb, fa & fb
    elif kind == "sub":
        res, fin = ra - rb, fa - fb
    else:  # pragma: no cover
        raise ValueError(kind)
    return _canon_slice(thr, mod, res, fin)


def _slice_subset(a, b):
    if a is None:
        return True
    if b is None:
        return False
    mod = math.lcm(a.modulus, b.modulus)
    thr = max(a.threshold, b.threshold)
    ra, fa = _lift(a, thr, mod)
    rb, fb = _lift(b, thr, mod)
    return ra <= rb and fa <= fb


def _slice_member(sl, n):
    if sl is None or n < 0:
        return False
    if n < sl.threshold:
        return n in sl.finite
    return (n % sl.modulus) in sl.residues


def _slice_min(sl):
    if sl is None:
        return None
    best = min(sl.finite) if sl.finite else None
    if sl.residues:
        tail = min(
            sl.threshold + ((r - sl.threshold) % sl.modulus) for r in sl.residues
        )
        best = tail if best is None else min(best, tail)
    return best


def _slice_iter(sl, limit):
    if sl is None:
        return
    for n in sorted(sl.finite):
        if n >= limit:
            break
        yield n
    if sl.residues:
        for n in range(sl.threshold, limit):
            if n % sl.modulus in sl.residues:
                yield n


def _slice_shift(sl, delta):
    """Translate a slice upward by delta >= 0."""
    if sl is None:
        return None
    return _canon_slice(
        sl.threshold + delta,
        sl.modulus,
        frozenset((r + delta) % sl.modulus for r in sl.residues),
        frozenset(x + delta for x in sl.finite),
    )


def _slice_spread(sl, delta):
    """Close a slice under repeated translation by delta >= 1."""
    if sl is None:
        return None
    acc = None
    for x in sl.finite:
        piece = _canon_slice(x, delta, {x % delta}, ())
        acc = _slice_binop(acc, piece, "or")
    if sl.residues:
        g = math.gcd(sl.modulus, delta)
        for r in sl.residues:
            low = sl.threshold + ((r - sl.threshold) % sl.modulus)
            for j in range(sl.modulus // g):
                piece = _canon_slice(
                    low + j * delta,
                    sl.modulus,
                    {(r + j * delta) % sl.modulus},
                    (),
                )
                acc = _slice_binop(acc, piece, "or")
    return acc


def _slice_affine_image(sl, base, step):
    """Image of a slice under k -> base + step*k (step >= 0)."""
    if sl is None:
        return None
    if step == 0:
        return _canon_slice(0, 1, (), {base})
    fin = frozenset(base + step * x for x in sl.finite)
    mod = step * sl.modulus
    res = frozenset((base + step * r) % mod for r in sl.residues)
    thr = base + step * sl.threshold
    return _canon_slice(thr, mod, res, fin)


def _slice_affine_preimage(sl, base, step):
    """Preimage {k : base + step*k in slice}; step == 0 handled by caller."""
    if step <= 0:
        raise ValueError("step must be positive")
    if sl is None:
        return None
    res = frozenset(
        k for k in range(sl.modulus) if (base + step * k) % sl.modulus in sl.residues
    )
    k0 = max(0, -(-(sl.threshold - base) // step))  # ceil division
    fin = frozenset(k for k in range(0, k0) if _slice_member(sl, base + step * k))
    return _canon_slice(k0, sl.modulus, res, fin)


def _slice_size(sl):
    if sl is None:
        return 0
    if sl.residues:
        return None
    return len(sl.finite)


def _slice_horizon(sl):
    if sl is None:
        return 0
    return sl.threshold + sl.modulus


# ---------------------------------------------------------------------------
# Public value types.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Progression:
    """The arithmetic progression {(tag, n) : n ≡ residue (mod modulus), n >= low}.

    Normalized on construction so that residue < modulus and low is the
    least member of the progression.
    """

    tag: str
    residue: int
    modulus: int
    low: int

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        if self.low < 0 or self.residue < 0:
            raise ValueError("residue and low must be naturals")
        r = self.residue % self.modulus
        low = self.low + ((r - self.low) % self.modulus)
        object.__setattr__(self, "residue", r)
        object.__setattr__(self, "low", low)

    def member_at(self, k):
        """The k-th member of the progression, counted from 0."""
        return Element(self.tag, self.low + k * self.modulus)

    def position_of(self, index):
        """Inverse of member_at; None when (tag, index) is not a member."""
        if index < self.low or (index - self.low) % self.modulus:
            return None
        return (index - self.low) // self.modulus

    def __contains__(self, el):
        return (
            isinstance(el, Element)
            and el.tag == self.tag
            and self.position_of(el.index) is not None
        )

    def as_set(self):
        return SemilinearSet.from_parts((), (self,))


class SemilinearSet:
    """A finitely represented, possibly infinite set of tagged naturals.

    Instances are immutable, hashable, and always in normal form; equality
    is set equality.  The usual operators are available: ``|`` union,
    ``&`` intersection, ``-`` difference, ``<=`` subset, ``in`` membership.
    """

    def __init__(self, slices=None):
        items = []
        if slices:
            for tag in sorted(slices):
                sl = slices[tag]
                if sl is not None:
                    items.append((tag, sl))
        self._items = tuple(items)
        self._by_tag = dict(items)

    # -- constructors -------------------------------------------------------

    @classmethod
    def empty(cls):
        return _EMPTY_SET

    @classmethod
    def of(cls, *elements):
        """Finite set from explicit (tag, index) pairs or Elements."""
        return cls.from_parts([Element(t, i) for t, i in elements], ())

    @classmethod
    def from_parts(cls, finite_part, blocks):
        per_tag_fin = {}
        for el in finite_part:
            el = Element(*el)
            if el.index < 0:
                raise ValueError("indices must be naturals")
            per_tag_fin.setdefault(el.tag, set()).add(el.index)
        slices = {}
        for tag, fin in per_tag_fin.items():
            slices[tag] = _canon_slice(max(fin) + 1, 1, (), fin)
        for blk in blocks:
            raw = _canon_slice(blk.low, blk.modulus, {blk.residue}, ())
            slices[blk.tag] = _slice_binop(slices.get(blk.tag), raw, "or")
        return cls(slices)

    @classmethod
    def all_of_tag(cls, tag):
        """Every natural under one tag."""
        return cls({tag: _Slice(0, 1, frozenset({0}), frozenset())})

    # -- structure ----------------------------------------------------------

    @property
    def finite_part(self):
        """Elements below the per-tag thresholds, as a frozenset."""
        return frozenset(
            Element(tag, i) for tag, sl in self._items for i in sorted(sl.finite)
        )

    @property
    def blocks(self):
        """The canonical progressions covering the per-tag tails."""
        out = []
        for tag, sl in self._items:
            for r in sorted(sl.residues):
                low = sl.threshold + ((r - sl.threshold) % sl.modulus)
                out.append(Progression(tag, r, sl.modulus, low))
        return tuple(out)

    def tags(self):
        return tuple(tag for tag, _ in self._items)

    def slice_for(self, tag):
        return self._by_tag.get(tag)

    # -- predicates ---------------------------------------------------------

    def is_empty(self):
        return not self._items

    def __bool__(self):
        return bool(self._items)

    def is_finite(self):
        return all(not sl.residues for _, sl in self._items)

    def size(self):
        """Number of elements; raises ValueError on infinite sets."""
        total = 0
        for _, sl in self._items:
            n = _slice_size(sl)
            if n is None:
                raise ValueError("set is infinite")
            total += n
        return total

    def __contains__(self, el):
        if not isinstance(el, Element):
            el = Element(*el)
        return _slice_member(self._by_tag.get(el.tag), el.index)

    def __le__(self, other):
        return all(
            _slice_subset(sl, other._by_tag.get(tag)) for tag, sl in self._items
        )

    def issubset(self, other):
        return self <= other

    def isdisjoint(self, other):
        return (self & other).is_empty()

    def __eq__(self, other):
        if not isinstance(other, SemilinearSet):
            return NotImplemented
        return self._items == other._items

    def __hash__(self):
        return hash(self._items)

    # -- algebra ------------------------------------------------------------

    def _binop(self, other, kind):
        tags = {t for t, _ in self._items} | {t for t, _ in other._items}
        slices = {}
        for tag in tags:
            slices[tag] = _slice_binop(
                self._by_tag.get(tag), other._by_tag.get(tag), kind
            )
        return SemilinearSet(slices)

    def __or__(self, other):
        return self._binop(other, "or")

    def __and__(self, other):
        return self._binop(other, "and")

    def __sub__(self, other):
        return self._binop(other, "sub")

    def union(self, *others):
        out = self
        for o in others:
            out = out | o
        return out

    # -- enumeration --------------------------------------------------------

    def iter_prefix(self, limit):
        """All elements with index < limit, sorted by (tag, index)."""
        for tag, sl in self._items:
            for n in sorted(_slice_iter(sl, limit)):
                yield Element(tag, n)

    def min_index(self, tag):
        return _slice_min(self._by_tag.get(tag))

    def shift(self, delta):
        """Translate every index upward by delta >= 0."""
        return SemilinearSet(
            {tag: _slice_shift(sl, delta) for tag, sl in self._items}
        )

    def spread(self, delta):
        """Union of all upward translates by multiples of delta >= 1."""
        if delta < 1:
            raise ValueError("delta must be >= 1")
        return SemilinearSet(
            {tag: _slice_spread(sl, delta) for tag, sl in self._items}
        )

    def structural_horizon(self):
        """An index bound above which every tag behaves purely periodically."""
        return max((_slice_horizon(sl) for _, sl in self._items), default=0)

    def __repr__(self):
        bits = []
        for tag, sl in self._items:
            parts = [str(i) for i in sorted(sl.finite)]
            for r in sorted(sl.residues):
                low = sl.threshold + ((r - sl.threshold) % sl.modulus)
                if sl.modulus == 1:
                    parts.append(f">={low}")
                else:
                    parts.append(f"{r}%{sl.modulus}>={low}")
            bits.append(f"{tag}:{{{','.join(parts)}}}")
        return f"SemilinearSet({' '.join(bits) or '∅'})"


_EMPTY_SET = SemilinearSet()


def tag_product(m, a, universe=None):
    """m pairwise-disjoint retagged copies of ``a``.

    Copy ``i`` of tag ``t`` carries the derived tag ``t·i`` (middle dot).
    Raises TagCollision if a derived tag already exists in the universe
    (the tags of ``a`` plus any extra universe supplied).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    known = set(a.tags()) | set(universe or ())
    slices = {}
    for tag, sl in a._items:
        for i in range(m):
            derived = f"{tag}·{i}"
            if derived in known:
                raise TagCollision(derived)
            slices[derived] = sl
    return SemilinearSet(slices)


def product_tag(tag, copy):
    """The derived tag carried by copy ``copy`` in a tag product."""
    return f"{tag}·{copy}"
