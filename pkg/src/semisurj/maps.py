"""Piecewise-affine partial maps between tagged naturals.

A :class:`PAMap` is a partial function on tagged naturals given by a finite
graph plus finitely many affine pieces.  A piece carries a guard progression
and sends the k-th member of the guard (in increasing index order) to
``(target_tag, base + k*step)``; ``step == 0`` yields a constant, hence
non-injective, piece.  The class is closed under composition, restriction,
erasure and disjoint union, and images/preimages of semilinear sets are
computed exactly as semilinear sets.

Maps compare equal iff they are equal as functions; a canonical normal form
(minimal eventual modulus per tag, then minimal threshold) makes this a
structural comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .errors import ConflictingUnion, NotPartialSurjection
from .sets import (
    Element,
    Progression,
    SemilinearSet,
    _canon_slice,
    _slice_affine_image,
    _slice_affine_preimage,
    _slice_member,
)


@dataclass(frozen=True)
class AffinePiece:
    """One affine piece: k-th member of guard -> (target_tag, base + k*step)."""

    guard: Progression
    target_tag: str
    base: int
    step: int

    def __post_init__(self):
        if self.base < 0 or self.step < 0:
            raise ValueError("base and step must be naturals")

    def apply_index(self, index):
        k = self.guard.position_of(index)
        if k is None:
            return None
        return Element(self.target_tag, self.base + k * self.step)

    def domain_set(self):
        return self.guard.as_set()

    def image_set(self):
        # guard positions are exactly the naturals
        pos = _canon_slice(0, 1, {0}, ())
        return SemilinearSet(
            {self.target_tag: _slice_affine_image(pos, self.base, self.step)}
        )


def _piece_sort_key(p):
    return (
        p.guard.tag,
        p.guard.modulus,
        p.guard.residue,
        p.guard.low,
        p.target_tag,
        p.base,
        p.step,
    )


class PAMap:
    """A piecewise-affine partial function, always single-valued.

    Construction validates functionality: the guards of distinct pieces and
    the keys of the finite graph must be pairwise disjoint.
    """

    def __init__(self, graph=(), pieces=()):
        g = {}
        for k, v in dict(graph).items():
            k = Element(*k)
            v = Element(*v)
            if k.index < 0 or v.index < 0:
                raise ValueError("indices must be naturals")
            g[k] = v
        self._graph = g
        self._pieces = tuple(sorted(pieces, key=_piece_sort_key))
        self._pieces_by_tag = {}
        for p in self._pieces:
            self._pieces_by_tag.setdefault(p.guard.tag, []).append(p)
        self._validate_functionality()

    def _validate_functionality(self):
        for tag, pieces in self._pieces_by_tag.items():
            for i, p in enumerate(pieces):
                for q in pieces[i + 1 :]:
                    # progressions meet iff residues agree mod gcd of moduli
                    # (solutions are unbounded above, so the lows never save us)
                    g = math.gcd(p.guard.modulus, q.guard.modulus)
                    if (p.guard.residue - q.guard.residue) % g == 0:
                        raise ConflictingUnion(
                            f"piece guards overlap on tag {tag!r}"
                        )
        for k in self._graph:
            for p in self._pieces_by_tag.get(k.tag, ()):
                if k in p.guard:
                    raise ConflictingUnion(
                        f"graph key {k} lies inside a piece guard"
                    )

    # -- basic structure ----------------------------------------------------

    @classmethod
    def empty(cls):
        return cls()

    @classmethod
    def identity(cls, s):
        """The identity map on a semilinear set."""
        graph = {el: el for el in s.finite_part}
        pieces = [
            AffinePiece(blk, blk.tag, blk.low, blk.modulus) for blk in s.blocks
        ]
        return cls(graph, pieces)

    @property
    def finite_graph(self):
        return dict(sorted(self._graph.items()))

    @property
    def pieces(self):
        return self._pieces

    def is_empty(self):
        return not self._graph and not self._pieces

    @cached_property
    def domain(self):
        out = SemilinearSet.from_parts(self._graph.keys(), ())
        for p in self._pieces:
            out = out | p.domain_set()
        return out

    @cached_property
    def image(self):
        out = SemilinearSet.from_parts(self._graph.values(), ())
        for p in self._pieces:
            out = out | p.image_set()
        return out

    def apply(self, el):
        """Evaluate at one element; None when outside the domain."""
        if not isinstance(el, Element):
            el = Element(*el)
        hit = self._graph.get(el)
        if hit is not None:
            return hit
        for p in self._pieces_by_tag.get(el.tag, ()):
            out = p.apply_index(el.index)
            if out is not None:
                return out
        return None

    # -- images and preimages ------------------------------------------------

    def image_of(self, s):
        """Exact image of a semilinear set."""
        fin = [v for k, v in self._graph.items() if k in s]
        out = SemilinearSet.from_parts(fin, ())
        for p in self._pieces:
            sl = (s & p.guard.as_set()).slice_for(p.guard.tag)
            if sl is None:
                continue
            pos = _slice_affine_preimage(sl, p.guard.low, p.guard.modulus)
            img = _slice_affine_image(pos, p.base, p.step)
            out = out | SemilinearSet({p.target_tag: img})
        return out

    def preimage_of(self, s):
        """Exact preimage of a semilinear set."""
        fin = [k for k, v in self._graph.items() if v in s]
        out = SemilinearSet.from_parts(fin, ())
        for p in self._pieces:
            sl = s.slice_for(p.target_tag)
            if sl is None:
                continue
            if p.step == 0:
                if _slice_member(sl, p.base):
                    out = out | p.guard.as_set()
                continue
            pos = _slice_affine_preimage(sl, p.base, p.step)
            src = _slice_affine_image(pos, p.guard.low, p.guard.modulus)
            out = out | SemilinearSet({p.guard.tag: src})
        return out

    # -- surgery --------------------------------------------------------------

    def restrict(self, s):
        """The map on domain ∩ s."""
        graph = {k: v for k, v in self._graph.items() if k in s}
        pieces = []
        for p in self._pieces:
            inter = p.guard.as_set() & s
            sl = inter.slice_for(p.guard.tag)
            if sl is None:
                continue
            for el in inter.finite_part:
                graph[el] = p.apply_index(el.index)
            for blk in inter.blocks:
                # blk ⊆ guard forces blk.modulus to be a multiple of the
                # guard modulus, so the restriction is again affine.
                k0 = p.guard.position_of(blk.low)
                pieces.append(
                    AffinePiece(
                        blk,
                        p.target_tag,
                        p.base + k0 * p.step,
                        p.step * (blk.modulus // p.guard.modulus),
                    )
                )
        return PAMap(graph, pieces)

    def erase(self, s):
        """The map with s removed from its domain."""
        return self.restrict(self.domain - s)

    def compose(self, inner):
        """self ∘ inner: x -> self(inner(x)) where both sides are defined."""
        usable = inner.restrict(inner.preimage_of(self.domain))
        graph = {}
        pieces = []
        for k, v in usable._graph.items():
            graph[k] = self.apply(v)
        for p in usable._pieces:
            if p.step == 0:
                # constant piece: one lookup decides the whole guard
                out = self.apply(Element(p.target_tag, p.base))
                pieces.append(AffinePiece(p.guard, out.tag, out.index, 0))
                continue
            # split p along self's graph keys and pieces on the target tag
            for key in self._graph:
                if key.tag != p.target_tag:
                    continue
                if (key.index - p.base) % p.step:
                    continue
                k = (key.index - p.base) // p.step
                if k < 0:
                    continue
                graph[p.guard.member_at(k)] = self._graph[key]
            for q in self._pieces_by_tag.get(p.target_tag, ()):
                # positions k of p whose value lands inside q's guard
                gsl = _canon_slice(
                    q.guard.low, q.guard.modulus, {q.guard.residue}, ()
                )
                ks = _slice_affine_preimage(gsl, p.base, p.step)
                if ks is None:
                    continue
                kset = SemilinearSet({"#": ks})
                for el in kset.finite_part:
                    k = el.index
                    graph[p.guard.member_at(k)] = q.apply_index(
                        p.base + k * p.step
                    )
                for blk in kset.blocks:
                    # guard positions k = blk.low + j*blk.modulus, j >= 0
                    src = Progression(
                        p.guard.tag,
                        p.guard.low + blk.low * p.guard.modulus,
                        blk.modulus * p.guard.modulus,
                        p.guard.low + blk.low * p.guard.modulus,
                    )
                    v0 = p.base + blk.low * p.step
                    vstep = blk.modulus * p.step
                    # v = v0 + j*vstep lies in q.guard for all j
                    k2 = q.guard.position_of(v0)
                    pieces.append(
                        AffinePiece(
                            src,
                            q.target_tag,
                            q.base + k2 * q.step,
                            q.step * (vstep // q.guard.modulus),
                        )
                    )
        return PAMap(graph, pieces)

    def iterate(self, n):
        """n-fold composition; n == 0 gives the identity on dom ∪ ran."""
        if n < 0:
            raise ValueError("n must be a natural")
        if n == 0:
            return PAMap.identity(self.domain | self.image)
        out = self
        for _ in range(n - 1):
            out = out.compose(self)
        return out

    # -- equality -------------------------------------------------------------

    @cached_property
    def _normal_key(self):
        nf = self.normal_form()
        return (
            tuple(sorted(nf._graph.items())),
            tuple(
                (
                    p.guard.tag,
                    p.guard.residue,
                    p.guard.modulus,
                    p.guard.low,
                    p.target_tag,
                    p.base,
                    p.step,
                )
                for p in nf._pieces
            ),
        )

    def normal_form(self):
        """Canonical representative of this map as a function.

        Per domain tag: the minimal modulus M for which the eventual
        behaviour is affine on every residue class mod M, then the minimal
        threshold; entries below the threshold go to the finite graph, each
        in-domain residue class above it becomes one piece.
        """
        graph = {}
        pieces = []
        tags = sorted({k.tag for k in self._graph} | set(self._pieces_by_tag))
        for tag in tags:
            tag_pieces = self._pieces_by_tag.get(tag, ())
            keys = [k.index for k in self._graph if k.tag == tag]
            if not tag_pieces:
                for i in keys:
                    graph[Element(tag, i)] = self._graph[Element(tag, i)]
                continue
            big = math.lcm(*(p.guard.modulus for p in tag_pieces))
            theta0 = max(
                [p.guard.low for p in tag_pieces] + [i + 1 for i in keys] + [0]
            )

            def value(n):
                return self.apply(Element(tag, n))

            chosen = None
            for d in sorted(_mult_divisors(big)):
                ok = True
                for rho in range(d):
                    n0 = theta0 + ((rho - theta0) % d)
                    samples = [value(n0 + j * d) for j in range(2 * (big // d) + 2)]
                    defined = [v is not None for v in samples]
                    if any(defined) != all(defined):
                        ok = False
                        break
                    if not defined[0]:
                        continue
                    t = samples[0].tag
                    stepd = samples[1].index - samples[0].index
                    if stepd < 0 or any(
                        v.tag != t or v.index != samples[0].index + j * stepd
                        for j, v in enumerate(samples)
                    ):
                        ok = False
                        break
                if ok:
                    chosen = d
                    break
            m = chosen  # big itself always qualifies
            # per-class affine laws anchored at the first member >= theta0
            anchors = {}
            for rho in range(m):
                n0 = theta0 + ((rho - theta0) % m)
                v = value(n0)
                if v is None:
                    anchors[rho] = None
                else:
                    anchors[rho] = (n0, v.tag, v.index, value(n0 + m).index - v.index)
            theta = theta0
            while theta > 0:
                n = theta - 1
                a = anchors[n % m]
                v = value(n)
                if a is None:
                    if v is not None:
                        break
                else:
                    n0, t, v0, stepm = a
                    predicted = v0 - ((n0 - n) // m) * stepm
                    if v is None or predicted < 0 or v.tag != t or v.index != predicted:
                        break
                theta = n
            for rho in range(m):
                a = anchors[rho]
                if a is None:
                    continue
                low = theta + ((rho - theta) % m)
                n0, t, v0, stepm = a
                base = v0 - ((n0 - low) // m) * stepm
                pieces.append(
                    AffinePiece(Progression(tag, rho, m, low), t, base, stepm)
                )
            for n in range(theta):
                v = value(n)
                if v is not None:
                    graph[Element(tag, n)] = v
        return PAMap(graph, pieces)

    def __eq__(self, other):
        if not isinstance(other, PAMap):
            return NotImplemented
        return self._normal_key == other._normal_key

    def __hash__(self):
        return hash(self._normal_key)

    def __repr__(self):
        n_g = len(self._graph)
        n_p = len(self._pieces)
        return f"PAMap({n_g} graph entries, {n_p} pieces)"


def _mult_divisors(m):
    out = []
    d = 1
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            if d != m // d:
                out.append(m // d)
        d += 1
    return out


# ---------------------------------------------------------------------------
# Module-level operations in the shape the rest of the package uses.
# ---------------------------------------------------------------------------


def map_compose(outer, inner):
    return outer.compose(inner)


def map_image(f, s):
    return f.image_of(s)


def map_preimage(f, s):
    return f.preimage_of(s)


def map_restrict(f, s):
    return f.restrict(s)


def map_erase(f, s):
    return f.erase(s)


def map_identity(s):
    return PAMap.identity(s)


def map_iterate(f, n):
    return f.iterate(n)


def map_union_disjoint(*maps):
    """Union of maps with pairwise disjoint domains; ConflictingUnion otherwise."""
    maps = [m for m in maps if not m.is_empty()]
    if not maps:
        return PAMap.empty()
    doms = [m.domain for m in maps]
    for i in range(len(doms)):
        for j in range(i + 1, len(doms)):
            if not (doms[i] & doms[j]).is_empty():
                raise ConflictingUnion("map domains overlap")
    graph = {}
    pieces = []
    for m in maps:
        graph.update(m._graph)
        pieces.extend(m._pieces)
    return PAMap(graph, pieces)


def is_partial_surjection(f, source, onto):
    """dom(f) ⊆ source and f[dom(f)] == onto, both checked exactly."""
    return f.domain <= source and f.image == onto


@dataclass(frozen=True)
class SurjectionPair:
    """A validated-on-demand pair of opposite partial surjections.

    ``forward`` runs from ``left`` onto ``right``; ``backward`` runs from
    ``right`` onto ``left``.
    """

    forward: PAMap
    backward: PAMap
    left: SemilinearSet
    right: SemilinearSet

    def problems(self):
        out = []
        if not self.forward.domain <= self.left:
            out.append("forward: domain not inside left")
        if self.forward.image != self.right:
            out.append("forward: image mismatch")
        if not self.backward.domain <= self.right:
            out.append("backward: domain not inside right")
        if self.backward.image != self.left:
            out.append("backward: image mismatch")
        return out

    def is_valid(self):
        return not self.problems()

    def check(self):
        probs = self.problems()
        if probs:
            raise NotPartialSurjection("; ".join(probs))
        return self

    @classmethod
    def empty(cls):
        return cls(PAMap.empty(), PAMap.empty(), SemilinearSet.empty(), SemilinearSet.empty())


def retag_map(s, tag_of):
    """Index-preserving bijection from s onto its retagged copy.

    ``tag_of`` maps each tag of s to a replacement tag.
    """
    graph = {el: Element(tag_of(el.tag), el.index) for el in s.finite_part}
    pieces = [
        AffinePiece(blk, tag_of(blk.tag), blk.low, blk.modulus)
        for blk in s.blocks
    ]
    return PAMap(graph, pieces)
