import itertools

import pytest

from semisurj.errors import NonStabilizing, NotDescending
from semisurj.maps import AffinePiece, PAMap, map_identity
from semisurj.omega import (
    Budget,
    IsotoneExpr,
    cantor_pair,
    cantor_unpair,
    gfp_isotone,
    least_index_stratify,
    omega_intersection,
    omega_union,
)
from semisurj.sets import Element, Progression, SemilinearSet


def halving(tag="a"):
    return PAMap(
        {},
        [
            AffinePiece(Progression(tag, 0, 2, 0), tag, 0, 1),
            AffinePiece(Progression(tag, 1, 2, 1), tag, 0, 1),
        ],
    )


def plus(delta, tag="a"):
    return PAMap({}, [AffinePiece(Progression(tag, 0, 1, 0), tag, delta, 1)])


# -- cantor pairing -----------------------------------------------------------


def test_cantor_pair_values():
    assert cantor_pair(0, 0) == 0
    assert cantor_pair(0, 1) == 1
    assert cantor_pair(1, 0) == 2


def test_cantor_unpair_inverts():
    for m in range(100):
        for n in range(100):
            assert cantor_unpair(cantor_pair(m, n)) == (m, n)


# -- omega_union ---------------------------------------------------------------


def test_union_identity_step_stabilizes_immediately():
    a = SemilinearSet.all_of_tag("a")
    assert omega_union(a, map_identity(a)) == a


def test_union_halving_reaches_everything():
    seed = SemilinearSet.from_parts((), [Progression("a", 0, 1, 8)])
    # oracle: brute-force closure below 64
    closure = set(range(8, 64))
    frontier = list(closure)
    while frontier:
        n = frontier.pop()
        if n // 2 not in closure:
            closure.add(n // 2)
            frontier.append(n // 2)
    assert closure == set(range(64))
    assert omega_union(seed, halving()) == SemilinearSet.all_of_tag("a")


def test_union_accelerates_shift_step():
    seed = SemilinearSet.of(("a", 0))
    out = omega_union(seed, plus(2))
    # oracle: prefix enumeration below 128 of the orbit of 0 under +2
    orbit = {0}
    while max(orbit) + 2 < 128:
        orbit.add(max(orbit) + 2)
    for n in range(128):
        assert (Element("a", n) in out) == (n in orbit)
    assert out == Progression("a", 0, 2, 0).as_set()


def test_union_without_acceleration_raises():
    with pytest.raises(NonStabilizing):
        omega_union(SemilinearSet.of(("a", 0)), plus(2), Budget(acceleration=False))


def test_union_budget_exhaustion_doubling():
    # n -> 2n explodes; deltas are never translates
    dbl = PAMap({}, [AffinePiece(Progression("a", 0, 1, 1), "a", 2, 2)])
    with pytest.raises(NonStabilizing) as exc:
        omega_union(SemilinearSet.of(("a", 1)), dbl, Budget(max_steps=16))
    assert exc.value.steps == 16


def test_union_result_is_minimal_on_finite_map():
    # finite graph dies out: acceleration must not overshoot
    f = PAMap({Element("a", 2 * i): Element("a", 2 * i + 2) for i in range(6)})
    out = omega_union(SemilinearSet.of(("a", 0)), f)
    assert out == SemilinearSet.of(*[("a", 2 * i) for i in range(7)])


# -- omega_intersection ---------------------------------------------------------


def test_intersection_constant_chain():
    s = SemilinearSet.of(("a", 1), ("b", 2))
    assert omega_intersection(itertools.repeat(s)) == s


def test_intersection_reaching_empty():
    chain = [
        SemilinearSet.of(*[("a", i) for i in range(k, 5)]) for k in range(6)
    ] + [SemilinearSet.empty()] * 3
    assert omega_intersection(chain) == SemilinearSet.empty()


def test_intersection_rejects_non_descending():
    chain = [SemilinearSet.of(("a", 0)), SemilinearSet.of(("a", 1))]
    with pytest.raises(NotDescending):
        omega_intersection(chain)


def test_intersection_finite_chain_exhausts():
    chain = [SemilinearSet.all_of_tag("a"), Progression("a", 0, 2, 0).as_set()]
    assert omega_intersection(chain) == Progression("a", 0, 2, 0).as_set()


def test_intersection_accelerates_translating_removals():
    base = SemilinearSet.all_of_tag("a")
    chain = (base - SemilinearSet.of(*[("a", i) for i in range(k)]) for k in itertools.count(0))
    out = omega_intersection(chain)
    assert out == SemilinearSet.empty()


# -- gfp ------------------------------------------------------------------------


def test_gfp_intersect_with_constant():
    amb = SemilinearSet.all_of_tag("a")
    s = Progression("a", 1, 3, 1).as_set()
    expr = IsotoneExpr.intersect(IsotoneExpr.const(s), IsotoneExpr.var())
    assert gfp_isotone(expr, amb) == s


def test_gfp_constant_empty():
    amb = SemilinearSet.of(("a", 0), ("a", 1))
    expr = IsotoneExpr.const(SemilinearSet.empty())
    assert gfp_isotone(expr, amb) == SemilinearSet.empty()


def exhaustive_gfp(expr, atoms):
    """The union of all post-fixed subsets, by enumerating the power set."""
    out = SemilinearSet.empty()
    for r in range(len(atoms) + 1):
        for combo in itertools.combinations(atoms, r):
            d = SemilinearSet.from_parts(combo, ())
            if d <= expr.eval(d):
                out = out | d
    return out


def test_gfp_matches_exhaustive_oracle_on_small_instances():
    atoms = [Element("a", i) for i in range(5)] + [Element("b", i) for i in range(3)]
    amb = SemilinearSet.from_parts(atoms, ())
    f = PAMap({Element("a", i): Element("a", (i + 1) % 5) for i in range(5)})
    g = PAMap(
        {Element("a", i): Element("b", i % 3) for i in range(5)},
    )
    cases = [
        IsotoneExpr.intersect(
            IsotoneExpr.const(amb), IsotoneExpr.image(f, IsotoneExpr.var())
        ),
        IsotoneExpr.image(f, IsotoneExpr.intersect(IsotoneExpr.var(), IsotoneExpr.const(amb))),
        IsotoneExpr.intersect(
            IsotoneExpr.const(SemilinearSet.from_parts(atoms[:4], ())),
            IsotoneExpr.preimage(f, IsotoneExpr.var()),
        ),
        IsotoneExpr.union(
            IsotoneExpr.intersect(IsotoneExpr.const(SemilinearSet.empty()), IsotoneExpr.var()),
            IsotoneExpr.intersect(IsotoneExpr.image(g, IsotoneExpr.var()), IsotoneExpr.const(amb)),
        ),
    ]
    for expr in cases:
        # clamp into the ambient so the range precondition holds
        clamped = IsotoneExpr.intersect(expr, IsotoneExpr.const(amb))
        assert gfp_isotone(clamped, amb) == exhaustive_gfp(clamped, atoms)


# -- least_index_stratify ----------------------------------------------------------


def test_stratify_identity_step():
    dom = SemilinearSet.all_of_tag("a")
    target = Progression("a", 0, 2, 0).as_set()
    out = least_index_stratify(dom, map_identity(dom), target)
    assert out == map_identity(target)


def test_stratify_next_multiple_of_three():
    dom = SemilinearSet.all_of_tag("a")
    step = plus(1)
    target = Progression("a", 0, 3, 0).as_set()
    h = least_index_stratify(dom, step, target)
    # pointwise oracle below 300
    for n in range(300):
        want = n if n % 3 == 0 else n + (3 - n % 3)
        assert h.apply(Element("a", n)) == Element("a", want)


def test_stratify_cycle_with_unreachable_target():
    two_cycle = PAMap(
        {Element("a", 0): Element("a", 1), Element("a", 1): Element("a", 0)}
    )
    dom = SemilinearSet.of(("a", 0), ("a", 1))
    out = least_index_stratify(dom, two_cycle, SemilinearSet.empty())
    assert out == PAMap.empty()


def test_stratify_unbounded_strata_raise():
    # n -> n-1 with target {0}: every element arrives but at its own stratum
    minus_one = PAMap({}, [AffinePiece(Progression("a", 0, 1, 1), "a", 0, 1)])
    with pytest.raises(NonStabilizing):
        least_index_stratify(
            SemilinearSet.all_of_tag("a"),
            minus_one,
            SemilinearSet.of(("a", 0)),
            Budget(max_steps=24),
        )
