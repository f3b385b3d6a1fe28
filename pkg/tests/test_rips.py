import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bandforge.core import excess, make_complex, total_width
from bandforge.rips import (
    FreeArc,
    NotAFreeArc,
    NotASplittingPoint,
    OutOfRange,
    collapse,
    collapse_with_origins,
    cut_component,
    cut_vertical,
    density_evidence,
    free_arcs,
    imanishi,
    interleaving_check,
    run_machine,
    split,
    splitting_points,
    subdivide_band,
)

from conftest import random_complex, random_move

F = Fraction


def test_shift_band_free_arcs(shift_band):
    arcs = free_arcs(shift_band)
    assert [(a.lo, a.hi, a.covering_base) for a in arcs] == [(0, 1, 0), (2, 3, 1)]


def test_rotation_has_no_free_arc(rotation):
    assert free_arcs(rotation) == []


def test_free_arc_stops_at_a_degenerate_base():
    c = make_complex({"D": 4, "E": 1},
                     [("B", 1, ("D", 0), ("E", 0)),
                      ("p", 0, ("D", F(1, 2)), ("E", 1))])
    arcs = free_arcs(c)
    assert [(a.component, a.lo, a.hi) for a in arcs if a.component == "D"] == [("D", 0, F(1, 2)),
                                                                              ("D", F(1, 2), 1)]


def test_collapse_removes_the_strip(shift_band):
    arc = free_arcs(shift_band)[0]
    c = collapse(shift_band, arc)
    assert c.support_length == 2
    assert total_width(c) == 1
    assert excess(c) == excess(shift_band)


def test_collapse_reports_origins(shift_band):
    arc = free_arcs(shift_band)[1]
    c, origins = collapse_with_origins(shift_band, arc)
    assert sorted(origins.values()) == [("D", 0)]
    assert [x.length for x in c.components] == [2]


def test_collapse_rejects_a_non_free_arc(shift_band):
    with pytest.raises(NotAFreeArc):
        collapse(shift_band, FreeArc("D", F(0), F(2), "S", 0))


def test_shift_band_machine_ends_degenerate(shift_band):
    trace = run_machine(shift_band, "leftmost", 50)
    assert trace.halted == "no_free_arc"
    assert total_width(trace.final) == 0
    assert trace.final.support_length == 1
    assert all(s.excess == -1 for s in trace.steps)


def test_cut_vertical(rotation):
    c = cut_vertical(rotation, "a", F(1, 3))
    assert len(c.bands) == 3
    assert excess(c) == excess(rotation)
    with pytest.raises(OutOfRange):
        cut_vertical(rotation, "a", 1)


def test_split_needs_a_splitting_point():
    c = make_complex({"D": 4}, [("x", 1, ("D", 0), ("D", 1)), ("y", 1, ("D", 2), ("D", 3))])
    assert splitting_points(c, "D") == [1, 2, 3]
    s = split(c, "D", 2)
    assert len(s.components) == 2 and excess(s) == excess(c)
    with pytest.raises(NotASplittingPoint):
        split(c, "D", F(1, 2))


def test_subdivide_keeps_long_band_length():
    c = make_complex({"D": 3}, [("S", 2, ("D", 0), ("D", 1))], {"S": 5})
    s = subdivide_band(c, "S")
    assert excess(s) == excess(c)
    assert sum(b.length for b in s.bands) == 5


def test_cut_component_lowers_excess_by_added_length(rotation):
    c = cut_component(rotation, "D")
    assert excess(rotation) - excess(c) == 2 * 1 - 1


def test_runs_are_deterministic(fixture_complex):
    c = fixture_complex("remark3band")
    a = run_machine(c, "random", 40, seed=7).to_jsonl()
    b = run_machine(c, "random", 40, seed=7).to_jsonl()
    assert a == b


def test_trace_lines_are_json(fixture_complex):
    import json

    trace = run_machine(fixture_complex("remark3band"), "widest", 10)
    for line in trace.to_jsonl().splitlines():
        doc = json.loads(line)
        assert doc["excess"] == "0"


def test_interleaving_between_policies(fixture_complex):
    c = fixture_complex("remark3band")
    res = interleaving_check(c, "leftmost", "widest", k=3, budget=200)
    assert res.confirmed, res


def test_imanishi_examples(shift_band, annulus, rotation):
    rep = imanishi(shift_band)
    assert rep.annulus_free == "yes" and rep.compact_leaf_measure == 1
    assert imanishi(annulus).annulus_free == "no"
    assert imanishi(rotation).annulus_free == "no"


def test_imanishi_budget():
    t = F(4973, 9973)
    c = make_complex({"D": 1}, [("a", 1 - t, ("D", 0), ("D", t)), ("b", t, ("D", 1 - t), ("D", 0))])
    assert imanishi(c, budget=10).annulus_free.startswith("unknown")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_moves_preserve_excess(seed):
    rng = random.Random(seed)
    c = random_complex(rng)
    e = excess(c)
    for _ in range(8):
        c = random_move(c, rng)
        assert excess(c) == e


def test_cutting_a_bare_component_removes_it():
    c = make_complex({"D": 2, "E": 5}, [("x", 1, ("D", 0), ("D", 1))])
    cut = cut_component(c, "E")
    assert [x.id for x in cut.components] == ["D"]
    assert excess(c) - excess(cut) == -5


def test_density_evidence_separates_periodic_from_long_orbits(rotation):
    periodic = density_evidence(rotation, F(1, 100), samples=5)
    assert periodic.closed == 5 and periodic.covering == 0
    t = F(4973, 9973)
    long = make_complex({"D": 1}, [("a", 1 - t, ("D", 0), ("D", t)), ("b", t, ("D", 1 - t), ("D", 0))])
    ev = density_evidence(long, F(1, 100), samples=5)
    assert ev.covering_fraction == 1 and ev.worst_gap <= F(1, 50)
