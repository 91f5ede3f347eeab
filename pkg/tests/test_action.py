import pytest
from hypothesis import given, settings, strategies as st

from semisurj.action import Action, rename
from semisurj.errors import InvalidAction
from semisurj.maps import AffinePiece, PAMap, SurjectionPair, map_identity, retag_map
from semisurj.sets import Element, Progression, SemilinearSet

TAGS = ("a", "b", "c")


def sample_map():
    return PAMap(
        {Element("a", 1): Element("b", 5)},
        [
            AffinePiece(Progression("a", 0, 2, 2), "a", 0, 1),
            AffinePiece(Progression("b", 0, 1, 0), "c", 3, 0),
        ],
    )


def test_swap_tags_on_set():
    s = SemilinearSet.all_of_tag("a")
    assert rename(Action.tag_swap(("a", "b")), s) == SemilinearSet.all_of_tag("b")


def test_identity_is_identity():
    pi = Action.identity()
    s = SemilinearSet.of(("a", 0), ("b", 3))
    f = sample_map()
    assert rename(pi, s) == s
    assert rename(pi, f) == f


def test_non_permutation_rejected():
    with pytest.raises(InvalidAction):
        Action.of({"a": "b"})
    with pytest.raises(InvalidAction):
        Action.of({}, {"a": {0: 1}})


def test_rename_surjection_pair_is_structural():
    a, b = SemilinearSet.all_of_tag("a"), SemilinearSet.all_of_tag("b")
    pair = SurjectionPair(retag_map(a, lambda _: "b"), retag_map(b, lambda _: "a"), a, b)
    out = rename(Action.tag_swap(("a", "c")), pair)
    assert out.left == SemilinearSet.all_of_tag("c")
    assert out.right == b
    assert out.is_valid()


def test_action_composition_law():
    pi = Action.tag_swap(("a", "b"))
    sigma = Action.of({"b": "c", "c": "b"}, {"a": {0: 1, 1: 0}})
    s = SemilinearSet.of(("a", 0), ("b", 2), ("c", 7))
    assert rename(pi.then(sigma), s) == rename(sigma, rename(pi, s))
    f = sample_map()
    assert rename(pi.then(sigma), f) == rename(sigma, rename(pi, f))


def test_index_permutation_on_set():
    pi = Action.of({}, {"a": {0: 3, 3: 0}})
    s = SemilinearSet.of(("a", 0), ("a", 1))
    assert rename(pi, s) == SemilinearSet.of(("a", 3), ("a", 1))
    evens = Progression("a", 0, 2, 0).as_set()
    out = rename(pi, evens)
    # members {0,2,4,...}: 0 moves to 3, and 3 (not a member) contributes nothing
    want = (evens - SemilinearSet.of(("a", 0))) | SemilinearSet.of(("a", 3))
    assert out == want
    assert Element("a", 0) not in out


def test_index_permutation_conjugates_map():
    pi = Action.of({}, {"a": {0: 2, 2: 0}})
    f = map_identity(SemilinearSet.all_of_tag("a"))
    assert rename(pi, f) == f  # conjugating the identity changes nothing
    g = PAMap({}, [AffinePiece(Progression("a", 0, 1, 0), "a", 1, 1)])  # n -> n+1
    h = rename(pi, g)
    # h = pi o g o pi^{-1}: h(2)=pi(g(0))=pi(1)=1, h(0)=pi(g(2))=pi(3)=3, h(1)=pi(g(1))=0
    assert h.apply(Element("a", 2)) == Element("a", 1)
    assert h.apply(Element("a", 0)) == Element("a", 3)
    assert h.apply(Element("a", 1)) == Element("a", 0)
    assert h.apply(Element("a", 5)) == Element("a", 6)


def test_index_permutation_on_constant_piece():
    pi = Action.of({}, {"b": {3: 9, 9: 3}})
    f = PAMap({}, [AffinePiece(Progression("a", 0, 1, 0), "b", 3, 0)])
    h = rename(pi, f)
    for i in (0, 1, 7, 40):
        assert h.apply(Element("a", i)) == Element("b", 9)


@settings(max_examples=80, derandomize=True)
@given(st.permutations(list(TAGS)))
def test_equivariance_of_composition_and_image(perm):
    pi = Action.of(dict(zip(TAGS, perm)))
    f = sample_map()
    g = PAMap({}, [AffinePiece(Progression("a", 0, 1, 0), "a", 2, 2)])
    s = SemilinearSet.of(("a", 2), ("a", 4)) | Progression("b", 1, 2, 1).as_set()
    assert rename(pi, f.compose(g)) == rename(pi, f).compose(rename(pi, g))
    assert rename(pi, f.image_of(s)) == rename(pi, f).image_of(rename(pi, s))
    assert rename(pi, f.preimage_of(s)) == rename(pi, f).preimage_of(rename(pi, s))
