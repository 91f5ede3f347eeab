"""Renaming actions on atoms, and their application to every value kind.

An :class:`Action` is a bijection on tagged naturals built from a tag
permutation plus finitely many index permutations within tags.  Applying an
action is structural: it commutes with every operation of the algebra, which
is what the equivariance tests exercise.  ``rename`` dispatches over sets,
maps, pairs, witness bundles (any dataclass of such values), and containers.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import InvalidAction
from .maps import AffinePiece, PAMap, SurjectionPair
from .sets import Element, Progression, SemilinearSet


@dataclass(frozen=True)
class Action:
    """pi(⟨t, i⟩) = ⟨tag_map[t], index_maps[t][i]⟩ with identity defaults.

    The index permutation is keyed by the original tag and applied before
    the tag is renamed.  Both parts must be genuine permutations; anything
    else raises InvalidAction.
    """

    tag_map: tuple = ()
    index_maps: tuple = ()

    @classmethod
    def of(cls, tag_map=None, index_maps=None):
        tm = dict(tag_map or {})
        if sorted(tm.keys()) != sorted(tm.values()):
            raise InvalidAction("tag map is not a permutation")
        ims = {}
        for tag, perm in (index_maps or {}).items():
            perm = dict(perm)
            if sorted(perm.keys()) != sorted(perm.values()):
                raise InvalidAction(f"index map for tag {tag!r} is not a permutation")
            if any(i < 0 for i in perm):
                raise InvalidAction("index permutations act on naturals")
            perm = {k: v for k, v in perm.items() if k != v}
            if perm:
                ims[tag] = tuple(sorted(perm.items()))
        return cls(
            tuple(sorted((k, v) for k, v in tm.items() if k != v)),
            tuple(sorted(ims.items())),
        )

    @classmethod
    def identity(cls):
        return cls.of()

    @classmethod
    def tag_swap(cls, *pairs):
        tm = {}
        for a, b in pairs:
            tm[a], tm[b] = b, a
        return cls.of(tm)

    def __invert__(self):
        return Action.of(
            {v: k for k, v in self.tag_map},
            {t: {v: k for k, v in perm} for t, perm in self.index_maps},
        )

    def then(self, after):
        """The composite action: self first, then ``after``."""
        tags = {t for t, _ in self.tag_map} | {t for t, _ in after.tag_map}
        tm = {t: after.tag(self.tag(t)) for t in tags}
        ims = {}
        touched = {t for t, _ in self.index_maps}
        touched |= {t for t, _ in after.index_maps}
        for t in touched:
            mine = dict(dict(self.index_maps).get(t, ()))
            # after's index permutation is keyed by after's original tag,
            # which is self's renamed tag
            theirs = dict(dict(after.index_maps).get(self.tag(t), ()))
            idxs = set(mine) | set(theirs)
            ims[t] = {i: theirs.get(mine.get(i, i), mine.get(i, i)) for i in idxs}
        return Action.of(tm, ims)

    def tag(self, t):
        return dict(self.tag_map).get(t, t)

    def index(self, t, i):
        return dict(dict(self.index_maps).get(t, ())).get(i, i)

    def element(self, el):
        return Element(self.tag(el.tag), self.index(el.tag, el.index))

    def moved_indices(self, t):
        return frozenset(dict(dict(self.index_maps).get(t, ())))

    def is_pure_tag_permutation(self):
        return not self.index_maps

    def index_part(self):
        return Action((), self.index_maps)

    def tag_part(self):
        return Action(self.tag_map, ())


# -- sets ---------------------------------------------------------------------


def _rename_set(pi, s):
    if pi.is_pure_tag_permutation():
        return SemilinearSet({pi.tag(t): s.slice_for(t) for t in s.tags()})
    moved_tags = {t for t, _ in pi.index_maps}
    slices = {}
    extra = []
    for t in s.tags():
        if t not in moved_tags:
            slices[pi.tag(t)] = s.slice_for(t)
            continue
        part = SemilinearSet({t: s.slice_for(t)})
        moved = SemilinearSet.from_parts(
            [Element(t, i) for i in pi.moved_indices(t)], ()
        )
        kept = part - moved
        slices[pi.tag(t)] = kept.slice_for(t)
        extra.extend(
            Element(pi.tag(t), pi.index(t, el.index))
            for el in (part & moved).finite_part
        )
    out = SemilinearSet(slices)
    if extra:
        out = out | SemilinearSet.from_parts(extra, ())
    return out


# -- maps -----------------------------------------------------------------------


def _retag_map(pi, f):
    """Apply a pure tag permutation structurally."""
    graph = {
        Element(pi.tag(k.tag), k.index): Element(pi.tag(v.tag), v.index)
        for k, v in f.finite_graph.items()
    }
    pieces = [
        AffinePiece(
            Progression(
                pi.tag(p.guard.tag), p.guard.residue, p.guard.modulus, p.guard.low
            ),
            pi.tag(p.target_tag),
            p.base,
            p.step,
        )
        for p in f.pieces
    ]
    return PAMap(graph, pieces)


def _conjugate_index(rho, f):
    """rho ∘ f ∘ rho⁻¹ for a pure index permutation rho (tags unchanged)."""
    moved = SemilinearSet.from_parts(
        [Element(t, i) for t, perm in rho.index_maps for i, _ in perm], ()
    )
    non_const = PAMap(
        f.finite_graph, [p for p in f.pieces if p.step != 0]
    )
    danger = (f.domain & moved) | non_const.preimage_of(moved)
    core = f.erase(danger)
    pieces = []
    for p in core.pieces:
        if p.step == 0:
            pieces.append(
                AffinePiece(
                    p.guard, p.target_tag, rho.index(p.target_tag, p.base), 0
                )
            )
        else:
            pieces.append(p)
    graph = dict(core.finite_graph)
    for el in danger.finite_part:
        if el in f.domain:
            graph[rho.element(el)] = rho.element(f.apply(el))
    return PAMap(graph, pieces)


def _rename_map(pi, f):
    if not pi.is_pure_tag_permutation():
        f = _conjugate_index(pi.index_part(), f)
    return _retag_map(pi.tag_part(), f)


def rename(pi, x):
    """Apply an action to a value of any supported kind."""
    if isinstance(x, Element):
        return pi.element(x)
    if isinstance(x, SemilinearSet):
        return _rename_set(pi, x)
    if isinstance(x, PAMap):
        return _rename_map(pi, x)
    if isinstance(x, SurjectionPair):
        return SurjectionPair(
            rename(pi, x.forward),
            rename(pi, x.backward),
            rename(pi, x.left),
            rename(pi, x.right),
        )
    if isinstance(x, Progression):
        if not pi.is_pure_tag_permutation():
            raise InvalidAction("index permutations do not preserve bare progressions")
        return Progression(pi.tag(x.tag), x.residue, x.modulus, x.low)
    if isinstance(x, Action) or isinstance(x, (int, str, bool, type(None))):
        return x
    if isinstance(x, tuple):
        return tuple(rename(pi, v) for v in x)
    if isinstance(x, (list, frozenset)):
        return type(x)(rename(pi, v) for v in x)
    if isinstance(x, dict):
        return {rename(pi, k): rename(pi, v) for k, v in x.items()}
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return type(x)(
            **{f.name: rename(pi, getattr(x, f.name)) for f in dataclasses.fields(x)}
        )
    raise TypeError(f"cannot rename value of type {type(x).__name__}")
