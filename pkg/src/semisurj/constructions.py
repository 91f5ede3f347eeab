"""The explicit constructions, each returning a validated witness bundle.

Every function here builds a concrete object — a partial surjection or a
bundle of partitions and surjection pairs — from its inputs alone, using
only canonical operations (images, preimages, erasures, fixed points,
orbit closures, least-index strata).  No choices are made anywhere, which
is why every construction commutes with renaming of atoms; the test suite
checks that equivariance exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    DisjointnessViolation,
    ExpansivityRequired,
    InvalidChain,
    InvalidFamily,
    NonStabilizing,
    NotPartialSurjection,
    NotSurjectionPair,
)
from .maps import (
    PAMap,
    SurjectionPair,
    map_identity,
    map_union_disjoint,
)
from .omega import (
    DEFAULT_BUDGET,
    Budget,
    IsotoneExpr,
    cantor_pair,
    cantor_unpair,
    gfp_isotone,
    least_index_stratify,
    omega_intersection,
    omega_union,
)
from .sets import SemilinearSet


def _require_partial_surjection(f, source, onto, what):
    if not f.domain <= source:
        raise NotPartialSurjection(f"{what}: domain escapes its source")
    if f.image != onto:
        raise NotPartialSurjection(f"{what}: image mismatch")


def _require_pair(pair, what):
    probs = pair.problems()
    if probs:
        raise NotSurjectionPair(f"{what}: " + "; ".join(probs))


def _union_all(sets):
    out = SemilinearSet.empty()
    for s in sets:
        out = out | s
    return out


# ---------------------------------------------------------------------------
# Families.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailedFamily:
    """Finitely many (B_n, f_n) entries; an empty tail is understood beyond.

    Each f_n must be a partial surjection from the carrier A onto A ∪ B_n,
    and every B_n must be disjoint from A.  The B_n need not be disjoint
    from one another.
    """

    entries: tuple = ()

    def validate(self, carrier):
        for n, (b_n, f_n) in enumerate(self.entries):
            if not (carrier & b_n).is_empty():
                raise InvalidFamily(f"entry {n}: B_n meets the carrier")
            if not f_n.domain <= carrier:
                raise InvalidFamily(f"entry {n}: map domain escapes the carrier")
            if f_n.image != carrier | b_n:
                raise InvalidFamily(f"entry {n}: map is not onto carrier ∪ B_n")

    def target(self, carrier):
        return carrier | _union_all(b for b, _ in self.entries)


@dataclass(frozen=True)
class ChainEntry:
    left: SemilinearSet          # A_n
    extra: SemilinearSet         # B_n
    pair: SurjectionPair         # between A_n and A_{n+1} ∪ B_n


@dataclass(frozen=True)
class ChainFamily:
    """Finitely many chain stages; all sets beyond the support are empty."""

    entries: tuple = ()

    def __len__(self):
        return len(self.entries)

    def a(self, n):
        return (
            self.entries[n].left if n < len(self.entries) else SemilinearSet.empty()
        )

    def b(self, n):
        return (
            self.entries[n].extra if n < len(self.entries) else SemilinearSet.empty()
        )

    def pair(self, n):
        if n < len(self.entries):
            return self.entries[n].pair
        return SurjectionPair.empty()

    def validate(self):
        parts = []
        for n, e in enumerate(self.entries):
            parts.append((f"A_{n}", e.left))
            parts.append((f"B_{n}", e.extra))
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                if not (parts[i][1] & parts[j][1]).is_empty():
                    raise InvalidChain(
                        f"{parts[i][0]} and {parts[j][0]} are not disjoint"
                    )
        for n, e in enumerate(self.entries):
            want_left = e.left
            want_right = self.a(n + 1) | e.extra
            if e.pair.left != want_left or e.pair.right != want_right:
                raise InvalidChain(f"stage {n}: pair endpoints mismatch")
            if not e.pair.is_valid():
                raise InvalidChain(
                    f"stage {n}: " + "; ".join(e.pair.problems())
                )


# ---------------------------------------------------------------------------
# Witness bundles.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountableUnionWitness:
    carrier: SemilinearSet
    family: TailedFamily
    union_map: PAMap
    budget: Budget


@dataclass(frozen=True)
class IteratedImageWitness:
    carrier: SemilinearSet
    step: PAMap
    closure: SemilinearSet
    union_map: PAMap
    budget: Budget


@dataclass(frozen=True)
class RefinementWitness:
    # inputs
    A: SemilinearSet
    B: SemilinearSet
    C: SemilinearSet
    f: PAMap
    g: PAMap
    # fixed points and orbit splits
    X: SemilinearSet
    Y: SemilinearSet
    P: SemilinearSet
    Q: SemilinearSet
    A_prime: SemilinearSet
    B_prime: SemilinearSet
    A_tilde: SemilinearSet
    B_tilde: SemilinearSet
    # maps
    surj_Aprime_onto_AprimeQ: PAMap
    surj_Bprime_onto_BprimeP: PAMap
    pair_Atilde_Aprime: SurjectionPair
    pair_Btilde_Bprime: SurjectionPair
    pruned_f_tilde: PAMap
    pruned_g_tilde: PAMap
    budget: Budget


@dataclass(frozen=True)
class AbsorptionWitness:
    D1: SemilinearSet
    D2: SemilinearSet
    Q: SemilinearSet
    f: PAMap
    Q1: SemilinearSet
    Q2: SemilinearSet
    g1: PAMap
    g2: PAMap
    budget: Budget


@dataclass(frozen=True)
class QuadWitness:
    # inputs
    A1: SemilinearSet
    A2: SemilinearSet
    B1: SemilinearSet
    B2: SemilinearSet
    pair: SurjectionPair
    # outputs
    C1: SemilinearSet
    C2: SemilinearSet
    C3: SemilinearSet
    C4: SemilinearSet
    pair_A1: SurjectionPair   # A1 ~ C1 ∪ C2
    pair_A2: SurjectionPair   # A2 ~ C3 ∪ C4
    pair_B1: SurjectionPair   # B1 ~ C1 ∪ C3
    pair_B2: SurjectionPair   # B2 ~ C2 ∪ C4
    # intermediates
    D1: SemilinearSet
    D2: SemilinearSet
    D3: SemilinearSet
    D4: SemilinearSet
    P1: SemilinearSet
    P2: SemilinearSet
    Q1: SemilinearSet
    Q2: SemilinearSet
    budget: Budget


@dataclass(frozen=True)
class RemainderLevels:
    """Stage-indexed intermediates of the remainder construction.

    ``tilde_A``, ``A_prime``, ``P``, ``f_tilde``, ``g_tilde`` are indexed
    0..N; the rest 0..N-1.
    """

    tilde_A: tuple
    A_prime: tuple
    P: tuple
    f_tilde: tuple
    g_tilde: tuple
    tilde_B: tuple
    B_prime: tuple
    Q: tuple
    f_prime: tuple
    g_prime: tuple
    p: tuple
    q: tuple


@dataclass(frozen=True)
class RemainderWitness:
    chain: ChainFamily
    C: SemilinearSet
    per_m: tuple               # SurjectionPair between A_m and C ∪ ⋃ B_{m+n}
    levels: RemainderLevels
    D: tuple                   # D_m for m = 0..N
    budget: Budget


# ---------------------------------------------------------------------------
# Countable unions and iterated images.
# ---------------------------------------------------------------------------


def countable_union_surjection(carrier, family, budget=DEFAULT_BUDGET):
    """A partial surjection from the carrier onto carrier ∪ ⋃_n B_n.

    Folds the family entry by entry: what currently lands back in the
    carrier is pushed through the next map, what lands in already covered
    extras is kept.  Entirely canonical, hence equivariant.
    """
    family.validate(carrier)
    g = map_identity(carrier)
    covered = SemilinearSet.empty()
    for b_n, f_n in family.entries:
        keep = g.restrict(g.preimage_of(covered))
        push = f_n.compose(g.restrict(g.preimage_of(carrier)))
        g = map_union_disjoint(push, keep)
        covered = covered | b_n
    return g


def dovetail_strata(carrier, family, depth=6):
    """The diagonal strata C_{m,n} of the classical recursion, materialized
    for pairing indices below ``depth``; used by the validator to assert
    their pairwise disjointness."""
    n_entries = len(family.entries)

    def fam_map(n):
        if n < n_entries:
            return family.entries[n][1]
        return map_identity(carrier)

    h = [map_identity(carrier)]
    for k in range(depth):
        m, n = cantor_unpair(k)
        if m == 0:
            h.append(fam_map(n).compose(h[k]))
        else:
            prev = cantor_pair(m - 1, n) + 1
            h.append(h[prev].compose(h[k]))
    strata = {}
    for k in range(depth):
        m, n = cantor_unpair(k)
        b_n = family.entries[n][0] if n < n_entries else SemilinearSet.empty()
        strata[(m, n)] = h[k + 1].preimage_of(b_n)
    return strata


def iterated_image_surjection(carrier, f, budget=DEFAULT_BUDGET):
    """A partial surjection from the carrier onto ⋃_n f^n[carrier].

    Requires carrier ⊆ f[carrier]; the image chain is then ascending and
    must stabilize concretely within the budget (a chain that only closes
    under acceleration has no finite family presentation).
    """
    if not carrier <= f.image_of(carrier):
        raise ExpansivityRequired("carrier is not contained in its image")
    powers = [carrier]
    maps = [map_identity(carrier)]
    for _ in range(budget.max_steps):
        nxt = f.image_of(powers[-1])
        if nxt == powers[-1]:
            break
        powers.append(nxt)
        maps.append(f.compose(maps[-1]))
    else:
        raise NonStabilizing(
            f"image chain did not stabilize within {budget.max_steps} steps",
            steps=budget.max_steps,
            last_delta=None,
        )
    entries = tuple(
        (powers[n] - carrier, maps[n])
        for n in range(1, len(powers))
        if not (powers[n] - carrier).is_empty()
    )
    return countable_union_surjection(carrier, TailedFamily(entries), budget)


# ---------------------------------------------------------------------------
# The key refinement.
# ---------------------------------------------------------------------------


def _orbit_extension_map(fixpoint, prime, extra, step, budget):
    """Partial surjection from ``prime`` onto prime ∪ extra.

    ``fixpoint`` ⊆ prime satisfies fixpoint ⊆ step[fixpoint]; its orbit
    closure covers fixpoint ∪ extra.  The orbit map restricted back to that
    target, extended by the identity on the rest of prime, is exact.
    """
    orbit_map = iterated_image_surjection(fixpoint, step, budget)
    trimmed = orbit_map.restrict(orbit_map.preimage_of(fixpoint | extra))
    return map_union_disjoint(trimmed, map_identity(prime - fixpoint))


def _covering_map(prime, fixpoint, window, orbit_img, ft, gt, budget):
    """Partial surjection from ``prime`` onto window ∪ orbit_img ∪ escape.

    ``window`` is the part of the backward preimage the proof keeps
    (g̃⁻¹[side] minus the other side's orbit image), ``orbit_img`` is
    f̃ of the own-side orbit closure, and the escape chunk is
    f̃[prime] \\ dom(g̃).  Assembled from the stratified least-arrival map
    into the window plus the escape branch, then routed through the orbit
    surjection on g̃⁻¹[fixpoint].
    """
    step = gt.compose(ft)
    # surjection from the window onto window ∪ orbit_img
    z = gt.preimage_of(fixpoint)
    zmap = iterated_image_surjection(z, ft.compose(gt), budget)
    extended = map_union_disjoint(zmap, map_identity(window - z))
    map1 = extended.restrict(extended.preimage_of(window | orbit_img))
    # least-arrival map from prime into the window, plus the escape branch
    strat = least_index_stratify(prime, step, ft.preimage_of(window), budget)
    h_main = ft.compose(strat)
    escape_dom = (prime & ft.domain) - ft.preimage_of(gt.domain)
    h_escape = ft.restrict(escape_dom)
    return map_union_disjoint(map1.compose(h_main), h_escape)


def key_refinement(A, B, C, f, g, budget=DEFAULT_BUDGET):
    """Partition A, B, C and produce the five connecting surjections.

    Inputs: A ∩ B = ∅ and a surjection pair ⟨f, g⟩ between A ∪ B and C.
    Output partitions: A = A′ ∪ P, B = B′ ∪ Q, C = Ã ∪ B̃, with partial
    surjections A′ ↠ A′ ∪ Q and B′ ↠ B′ ∪ P and surjection pairs
    Ã ~ A′ and B̃ ~ B′.
    """
    if not (A & B).is_empty():
        raise DisjointnessViolation("A and B overlap")
    _require_pair(SurjectionPair(f, g, A | B, C), "input pair")

    # normalize so that f[A] and f[B] are disjoint: drop B-side assignments
    # whose values are already reached from A (smallest canonical erasure)
    f = f.erase(B & f.preimage_of(f.image_of(A)))

    var = IsotoneExpr.var()
    through = lambda const: IsotoneExpr.intersect(
        IsotoneExpr.const(const),
        IsotoneExpr.image(g, IsotoneExpr.image(f, var)),
    )
    X = gfp_isotone(through(A), A, budget)
    Y = gfp_isotone(through(B), B, budget)

    fp = f.erase(f.preimage_of(f.image_of(X)) - X)
    gp = g.erase(g.preimage_of(X) - f.image_of(X))
    ft = fp.erase(fp.preimage_of(fp.image_of(Y)) - Y)
    gt = gp.erase(gp.preimage_of(Y) - fp.image_of(Y))

    step = gt.compose(ft)
    orbit_Y = omega_union(Y, step, budget)
    orbit_X = omega_union(X, step, budget)
    P = A & orbit_Y
    Q = B & orbit_X
    A_prime = A - P
    B_prime = B - Q

    f_orbit_Y = ft.image_of(orbit_Y)
    f_orbit_X = ft.image_of(orbit_X)
    window_A = gt.preimage_of(A) - f_orbit_Y
    window_B = gt.preimage_of(B) - f_orbit_X
    escape_A = ft.image_of(A_prime) - gt.domain
    escape_B = ft.image_of(B_prime) - gt.domain
    A_tilde = window_A | f_orbit_X | escape_A
    B_tilde = C - A_tilde

    surj_A = _orbit_extension_map(X, A_prime, Q, step, budget)
    surj_B = _orbit_extension_map(Y, B_prime, P, step, budget)

    fwd_A = gt.restrict(gt.preimage_of(A_prime))
    back_A = _covering_map(A_prime, X, window_A, f_orbit_X, ft, gt, budget)
    fwd_B = gt.restrict(gt.preimage_of(B_prime))
    back_B_raw = _covering_map(B_prime, Y, window_B, f_orbit_Y, ft, gt, budget)
    back_B = back_B_raw.restrict(back_B_raw.preimage_of(B_tilde))

    witness = RefinementWitness(
        A=A,
        B=B,
        C=C,
        f=f,
        g=g,
        X=X,
        Y=Y,
        P=P,
        Q=Q,
        A_prime=A_prime,
        B_prime=B_prime,
        A_tilde=A_tilde,
        B_tilde=B_tilde,
        surj_Aprime_onto_AprimeQ=surj_A,
        surj_Bprime_onto_BprimeP=surj_B,
        pair_Atilde_Aprime=SurjectionPair(fwd_A, back_A, A_tilde, A_prime),
        pair_Btilde_Bprime=SurjectionPair(fwd_B, back_B, B_tilde, B_prime),
        pruned_f_tilde=ft,
        pruned_g_tilde=gt,
        budget=budget,
    )
    _require_partial_surjection(surj_A, A_prime, A_prime | Q, "A-side extension")
    _require_partial_surjection(surj_B, B_prime, B_prime | P, "B-side extension")
    _require_pair(witness.pair_Atilde_Aprime, "pair Ã ~ A′")
    _require_pair(witness.pair_Btilde_Bprime, "pair B̃ ~ B′")
    return witness


# ---------------------------------------------------------------------------
# Absorption.
# ---------------------------------------------------------------------------


def absorption_split(D1, D2, Q, f, budget=DEFAULT_BUDGET):
    """Split Q so each half is absorbed by its own side.

    Input: pairwise disjoint D1, D2, Q and a partial surjection f from
    D1 ∪ D2 onto D1 ∪ D2 ∪ Q.  Output (Q1, Q2, g1, g2) with Q = Q1 ∪ Q2
    disjointly, g1 a partial surjection D1 ↠ D1 ∪ Q1 and g2 one from
    D2 ↠ D2 ∪ Q2.
    """
    for x, y, names in ((D1, D2, "D1/D2"), (D1, Q, "D1/Q"), (D2, Q, "D2/Q")):
        if not (x & y).is_empty():
            raise DisjointnessViolation(f"{names} overlap")
    _require_partial_surjection(f, D1 | D2, D1 | D2 | Q, "absorption input")

    preimage_step = IsotoneExpr.preimage(f, IsotoneExpr.var())
    touched_from_D2 = (
        omega_union(f.image_of(D2), f, budget)
        if not D2.is_empty()
        else SemilinearSet.empty()
    )
    C1 = D1 - touched_from_D2
    touched_from_C1 = (
        omega_union(f.image_of(C1), f, budget)
        if not C1.is_empty()
        else SemilinearSet.empty()
    )
    C2 = D2 - touched_from_C1

    # g1: step once within C1, else ride f to the first arrival in Q
    part_a = f.restrict(C1 & f.preimage_of(C1))
    dom_b = (C1 - f.preimage_of(C1)) & f.domain
    if not dom_b.is_empty():
        strat_q = least_index_stratify(f.image_of(dom_b), f, Q, budget)
        part_b = strat_q.compose(f.restrict(dom_b))
    else:
        part_b = PAMap.empty()
    part_c = map_identity(D1 - part_a.domain - part_b.domain)
    g1 = map_union_disjoint(part_a, part_b, part_c)

    # g2: ride f to the first return into C2, else to the first arrival in Q
    dom_a2 = C2 & f.domain
    if not dom_a2.is_empty():
        strat_c2 = least_index_stratify(f.image_of(dom_a2), f, C2, budget)
        part_a2 = strat_c2.compose(f.restrict(dom_a2))
    else:
        part_a2 = PAMap.empty()
    back_into_C2 = (
        omega_union(f.preimage_of(C2), preimage_step, budget)
        if not C2.is_empty()
        else SemilinearSet.empty()
    )
    dom_b2 = ((C2 - back_into_C2) & f.domain) - part_a2.domain
    if not dom_b2.is_empty():
        strat_q2 = least_index_stratify(f.image_of(dom_b2), f, Q, budget)
        part_b2 = strat_q2.compose(f.restrict(dom_b2))
    else:
        part_b2 = PAMap.empty()
    part_c2 = map_identity(D2 - part_a2.domain - part_b2.domain)
    g2 = map_union_disjoint(part_a2, part_b2, part_c2)

    Q1 = Q & g1.image
    Q2 = Q - Q1
    g2 = g2.restrict(g2.preimage_of(D2 | Q2))

    _require_partial_surjection(g1, D1, D1 | Q1, "g1")
    _require_partial_surjection(g2, D2, D2 | Q2, "g2")
    return Q1, Q2, g1, g2


# ---------------------------------------------------------------------------
# Finite refinement.
# ---------------------------------------------------------------------------


def finite_refinement(A1, A2, B1, B2, pair, budget=DEFAULT_BUDGET):
    """Four pairwise disjoint parts refining A1 + A2 = B1 + B2."""
    sets = [("A1", A1), ("A2", A2), ("B1", B1), ("B2", B2)]
    for i in range(4):
        for j in range(i + 1, 4):
            if not (sets[i][1] & sets[j][1]).is_empty():
                raise DisjointnessViolation(
                    f"{sets[i][0]} and {sets[j][0]} overlap"
                )
    if pair.left != A1 | A2 or pair.right != B1 | B2:
        raise NotSurjectionPair("pair endpoints do not match A1∪A2 and B1∪B2")
    _require_pair(pair, "input pair")

    ref = key_refinement(A1, A2, B1 | B2, pair.forward, pair.backward, budget)
    P, Q = ref.P, ref.Q
    tilde_1, tilde_2 = ref.A_tilde, ref.B_tilde
    h1, h2 = ref.surj_Aprime_onto_AprimeQ, ref.surj_Bprime_onto_BprimeP
    f1, g1 = ref.pair_Atilde_Aprime.forward, ref.pair_Atilde_Aprime.backward
    f2, g2 = ref.pair_Btilde_Bprime.forward, ref.pair_Btilde_Bprime.backward

    D1, D2 = tilde_1 & B1, tilde_1 & B2
    D3, D4 = tilde_2 & B1, tilde_2 & B2

    m1 = map_union_disjoint(g1, map_identity(Q)).compose(h1).compose(f1)
    m2 = map_union_disjoint(g2, map_identity(P)).compose(h2).compose(f2)
    Q1, Q2, s1, s2 = absorption_split(D1, D2, Q, m1, budget)
    P1, P2, s3, s4 = absorption_split(D3, D4, P, m2, budget)

    C1, C2 = D1 | Q1, D2 | Q2
    C3, C4 = D3 | P1, D4 | P2

    pair_A1 = SurjectionPair(
        map_union_disjoint(g1, map_identity(P)),
        map_union_disjoint(f1, map_identity(P)),
        A1,
        C1 | C2,
    )
    pair_A2 = SurjectionPair(
        map_union_disjoint(g2, map_identity(Q)),
        map_union_disjoint(f2, map_identity(Q)),
        A2,
        C3 | C4,
    )
    pair_B1 = SurjectionPair(
        map_union_disjoint(s1, s3),
        map_identity(D1 | D3),
        B1,
        C1 | C3,
    )
    pair_B2 = SurjectionPair(
        map_union_disjoint(s2, s4),
        map_identity(D2 | D4),
        B2,
        C2 | C4,
    )
    witness = QuadWitness(
        A1=A1,
        A2=A2,
        B1=B1,
        B2=B2,
        pair=pair,
        C1=C1,
        C2=C2,
        C3=C3,
        C4=C4,
        pair_A1=pair_A1,
        pair_A2=pair_A2,
        pair_B1=pair_B1,
        pair_B2=pair_B2,
        D1=D1,
        D2=D2,
        D3=D3,
        D4=D4,
        P1=P1,
        P2=P2,
        Q1=Q1,
        Q2=Q2,
        budget=budget,
    )
    for name, pr in (
        ("A1 ~ C1∪C2", pair_A1),
        ("A2 ~ C3∪C4", pair_A2),
        ("B1 ~ C1∪C3", pair_B1),
        ("B2 ~ C2∪C4", pair_B2),
    ):
        _require_pair(pr, name)
    return witness


def remainder_chain(chain, budget=DEFAULT_BUDGET):
    """The common remainder of a descending chain, with per-stage pairs.

    From stages ⟨A_n, B_n, pair_n⟩ with pair_n between A_n and A_{n+1} ∪ B_n,
    produce C disjoint from ⋃ B_n and a surjection pair between A_m and
    C ∪ ⋃_n B_{m+n} for every m below the support.
    """
    chain.validate()
    n_stages = len(chain)

    tilde_A = [chain.a(0)]
    A_prime = [chain.a(0)]
    P = [SemilinearSet.empty()]
    f_tilde = [map_identity(chain.a(0))]
    g_tilde = [map_identity(chain.a(0))]
    tilde_B, B_prime, Q, f_prime, g_prime, p_maps, q_maps = (
        [],
        [],
        [],
        [],
        [],
        [],
        [],
    )

    for n in range(n_stages):
        fn, gn = chain.pair(n).forward, chain.pair(n).backward
        lift = map_union_disjoint(g_tilde[n], map_identity(P[n]))
        drop = map_union_disjoint(f_tilde[n], map_identity(P[n]))
        forward = lift.compose(gn)            # A_{n+1} ∪ B_n ↠ Ã_n ∪ P_n
        backward = fn.compose(drop)           # Ã_n ∪ P_n ↠ A_{n+1} ∪ B_n
        ref = key_refinement(
            chain.a(n + 1), chain.b(n), tilde_A[n] | P[n], forward, backward, budget
        )
        A_prime.append(ref.A_prime)
        P.append(ref.P)
        tilde_A.append(ref.A_tilde)
        f_tilde.append(ref.pair_Atilde_Aprime.forward)
        g_tilde.append(ref.pair_Atilde_Aprime.backward)
        B_prime.append(ref.B_prime)
        Q.append(ref.Q)
        tilde_B.append(ref.B_tilde)
        f_prime.append(ref.pair_Btilde_Bprime.forward)
        g_prime.append(ref.pair_Btilde_Bprime.backward)
        q_maps.append(ref.surj_Aprime_onto_AprimeQ)
        p_maps.append(ref.surj_Bprime_onto_BprimeP)

    D = []
    for m in range(n_stages + 1):
        D.append(tilde_A[m] | _union_all(P[m:]))
    C = omega_intersection(D, budget) if D else SemilinearSet.empty()

    per_m = []
    for m in range(n_stages):
        per_m.append(
            _remainder_pair_for_stage(
                chain, m, C, tilde_A, A_prime, P, f_tilde, g_tilde,
                tilde_B, B_prime, Q, f_prime, g_prime, p_maps, q_maps, budget
            )
        )

    witness = RemainderWitness(
        chain=chain,
        C=C,
        per_m=tuple(per_m),
        levels=RemainderLevels(
            tilde_A=tuple(tilde_A),
            A_prime=tuple(A_prime),
            P=tuple(P),
            f_tilde=tuple(f_tilde),
            g_tilde=tuple(g_tilde),
            tilde_B=tuple(tilde_B),
            B_prime=tuple(B_prime),
            Q=tuple(Q),
            f_prime=tuple(f_prime),
            g_prime=tuple(g_prime),
            p=tuple(p_maps),
            q=tuple(q_maps),
        ),
        D=tuple(D),
        budget=budget,
    )
    return witness


def _remainder_pair_for_stage(
    chain, m, C, tilde_A, A_prime, P, f_tilde, g_tilde,
    tilde_B, B_prime, Q, f_prime, g_prime, p_maps, q_maps, budget
):
    n_stages = len(chain)
    span = n_stages - m                       # stages m .. n_stages-1
    A_m = chain.a(m)
    B_rest = _union_all(chain.b(m + n) for n in range(span))

    # forward telescopes F_n: A_m ↠ A_{m+n+1} ∪ ⋃_{k<=n} B_{m+k}
    F, G = [], []
    covered = SemilinearSet.empty()
    for l in range(span):
        fpp = map_union_disjoint(chain.pair(m + l).forward, map_identity(covered))
        gpp = map_union_disjoint(chain.pair(m + l).backward, map_identity(covered))
        F.append(fpp if not F else fpp.compose(F[-1]))
        G.append(gpp if not G else G[-1].compose(gpp))
        covered = covered | chain.b(m + l)

    # one surjection A_m ↠ A_m ∪ V for each nonempty residue chunk V
    entries = []
    for n in range(span):
        stage = m + n
        window = chain.a(stage + 1) | _union_all(
            chain.b(m + k) for k in range(n + 1)
        )
        if not Q[stage].is_empty():
            entries.append(
                (
                    Q[stage],
                    _residue_reacher(
                        A_m, window, F[n], G[n], q_maps[stage],
                        A_prime[stage + 1], Q[stage]
                    ),
                )
            )
        if not P[stage + 1].is_empty():
            entries.append(
                (
                    P[stage + 1],
                    _residue_reacher(
                        A_m, window, F[n], G[n], p_maps[stage],
                        B_prime[stage], P[stage + 1]
                    ),
                )
            )
    psi = countable_union_surjection(A_m, TailedFamily(tuple(entries)), budget)

    P_rest = _union_all(P[m:])
    Q_rest = _union_all(Q[m:])
    kappa1 = map_union_disjoint(
        g_tilde[m], map_identity(P_rest), map_identity(Q_rest)
    )
    kappa2 = map_union_disjoint(
        map_identity(C),
        *[f_prime[m + n] for n in range(span)],
        map_identity(Q_rest),
    )
    phi = kappa2.compose(kappa1.compose(psi))

    gamma = map_union_disjoint(f_tilde[m], map_identity(P[m])).compose(
        map_union_disjoint(
            map_identity(C), *[g_prime[m + n] for n in range(span)]
        )
    )
    pair = SurjectionPair(phi, gamma, A_m, C | B_rest)
    _require_pair(pair, f"stage {m} remainder pair")
    return pair


def _residue_reacher(A_m, window, F_n, G_n, producer, producer_src, target):
    """Partial surjection from A_m onto A_m ∪ target.

    ``producer`` maps producer_src onto producer_src ∪ target inside the
    window.  Compose the forward telescope with (producer ∪ id): the window
    stays fully covered because the producer is onto its own source, so the
    produced copies of the target can be routed out while everything else
    returns through the backward telescope.
    """
    sigma = map_union_disjoint(producer, map_identity(window - producer_src))
    chi = sigma.compose(F_n)
    divert = F_n.preimage_of(producer.preimage_of(target))
    out_part = chi.restrict(divert)
    back_part = G_n.compose(chi.restrict(chi.domain - divert))
    return map_union_disjoint(out_part, back_part)
