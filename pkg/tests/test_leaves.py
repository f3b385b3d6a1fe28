import random
from fractions import Fraction as F

import pytest

from bandforge.core import make_complex, scale
from bandforge.leaves import (
    PointOutsideSupport,
    RadiusTooSmall,
    block_decomposition,
    end_statistics,
    estimate_ends,
    first_return,
    sample_point,
    similar,
    trace_leaf,
)


def test_rational_rotation_leaf_closes_up(rotation):
    ball = trace_leaf(rotation, ("D", F(1, 7)), 5)
    assert ball.vertices == {("D", F(1, 7)), ("D", F(10, 21)), ("D", F(17, 21))}
    assert ball.has_cycle()


def test_shift_leaf_is_a_segment(shift_band):
    ball = trace_leaf(shift_band, ("D", F(1, 2)), 5)
    assert not ball.has_cycle()
    assert ball.vertices == {("D", F(1, 2)), ("D", F(3, 2)), ("D", F(5, 2))}


def test_annulus_leaf_has_a_cycle(annulus):
    ball = trace_leaf(annulus, ("D", F(1, 2)), 4)
    assert ball.has_cycle()


def test_point_outside_support(rotation):
    with pytest.raises(PointOutsideSupport):
        trace_leaf(rotation, ("D", 2), 3)


def test_shift_leaves_are_compact(shift_band):
    est = estimate_ends(trace_leaf(shift_band, ("D", F(1, 2)), 20), [5, 10])
    assert est.label == "0"


def test_ladder_must_sit_inside_the_ball(shift_band):
    with pytest.raises(RadiusTooSmall):
        estimate_ends(trace_leaf(shift_band, ("D", F(1, 2)), 10), [5, 10])


def test_shift_histogram_is_all_class_zero(shift_band):
    hist = end_statistics(shift_band, 30, 20, seed=3)
    assert hist.fraction("0") == 1
    assert hist.to_csv().splitlines()[0].startswith("class")


def test_histogram_is_seeded(fixture_complex):
    c = fixture_complex("remark3band")
    a = end_statistics(c, 20, 24, seed=5).to_csv()
    assert a == end_statistics(c, 20, 24, seed=5).to_csv()


def test_samples_are_in_the_support(rotation):
    rng = random.Random(0)
    for _ in range(50):
        cid, x = sample_point(rotation, rng)
        assert cid == "D" and 0 <= x <= 1


def test_first_return_of_a_rotation(rotation):
    fr = first_return(rotation, ("D", 0, 1))
    assert fr.relates(0, "+", F(1, 3), "-")
    assert fr.relates(F(2, 3), "+", 0, "-") or fr.relates(0, "-", F(2, 3), "+")


def test_similarity_ignores_scale(rotation):
    assert similar(first_return(rotation, ("D", 0, 1)), first_return(scale(rotation, 3), ("D", 0, 3)))


def test_similarity_sees_the_angle(rotation):
    other = make_complex({"D": 1}, [("a", F(3, 4), ("D", 0), ("D", F(1, 4))),
                                    ("b", F(1, 4), ("D", F(3, 4)), ("D", 0))])
    assert not similar(first_return(rotation, ("D", 0, 1)), first_return(other, ("D", 0, 1)))


def test_blocks_of_a_rotation(rotation):
    bd = block_decomposition(rotation, ("D", 0, 1))
    assert [b.interval for b in bd.blocks] == [(0, F(1, 3)), (F(1, 3), F(2, 3)), (F(2, 3), 1)]
    assert all(b.is_product for b in bd.blocks)
    assert sum(b.excess for b in bd.blocks) == -1


def test_shift_block_has_a_free_arm(shift_band):
    (block,) = block_decomposition(shift_band, ("D", 0, 1)).blocks
    assert block.free_arms == 1 and block.is_product
