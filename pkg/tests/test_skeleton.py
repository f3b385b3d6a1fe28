from fractions import Fraction

from bandforge.core import make_complex, scale
from bandforge.gallery import build_Z
from bandforge.rips import subdivide_band
from bandforge.skeleton import equivalence, equivalent, skeleton_graph, skeleton_hash

ONES = (1, 1, 1, 1, 1)


def test_subdivision_does_not_change_the_foliated_space(rotation):
    assert equivalent(rotation, subdivide_band(rotation, "a"))


def test_scaled_copy_needs_the_scale(rotation):
    big = scale(rotation, 2)
    assert equivalent(rotation, big, scale=2)
    assert not equivalent(rotation, big)


def test_long_band_lengths_are_structure(rotation):
    a = rotation.with_lengths({"a": 1, "b": 1})
    b = rotation.with_lengths({"a": 1, "b": 2})
    assert not equivalent(a, b)
    assert equivalent(a, subdivide_band(a, "a"))


def test_hash_is_label_free(rotation):
    third = Fraction(1, 3)
    renamed = make_complex({"Q": 1}, [("y", third, ("Q", 2 * third), ("Q", 0)),
                                      ("x", 2 * third, ("Q", 0), ("Q", third))])
    assert skeleton_hash(skeleton_graph(rotation)) == skeleton_hash(skeleton_graph(renamed))


def test_the_two_presentations_differ():
    # same area, but gluing E onto D moves a base: not a homeomorphism
    a = build_Z(ONES, (1, 1, 1), "three_band")
    b = build_Z(ONES, (1, 1, 1), "four_band")
    assert a.area == b.area == 13
    assert not equivalent(a, b)
    assert equivalence(b, build_Z(ONES, (1, 1, 1), "four_band")) is not None


def test_enhanced_and_plain_never_match(rotation):
    assert not equivalent(rotation, rotation.with_lengths({"a": Fraction(1), "b": Fraction(1)}))
