import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bandforge.core import (
    BandComplexError,
    as_fraction,
    deserialize,
    disjoint_union,
    excess,
    from_dict,
    invariant_key,
    isomorphic,
    isomorphism,
    make_complex,
    normalize_long_bands,
    scale,
    serialize,
    to_dict,
    total_width,
)

from conftest import random_complex


def test_floats_are_rejected():
    with pytest.raises(TypeError):
        as_fraction(0.5)
    assert as_fraction("3/6") == Fraction(1, 2)


def test_excess_of_small_examples(shift_band, annulus, rotation):
    assert excess(shift_band) == -1
    assert excess(annulus) == 0
    assert excess(rotation) == 0


def test_base_outside_component_is_rejected():
    with pytest.raises(BandComplexError, match="outside"):
        make_complex({"D": 1}, [("B", 1, ("D", 0), ("D", Fraction(1, 2)))])


def test_enhanced_needs_a_positive_length():
    with pytest.raises(BandComplexError):
        make_complex({"D": 2}, [("B", 1, ("D", 0), ("D", 1))], {"B": 0})


def test_round_trip_is_byte_stable(rotation):
    text = serialize(rotation)
    again = serialize(deserialize(text))
    assert text == again
    assert deserialize(text) == rotation


def test_rationals_are_strings(rotation):
    doc = json.loads(serialize(rotation))
    assert doc["bands"][0]["width"] == "2/3"


@pytest.mark.parametrize("doc, where", [
    ({"format": "bandcomplex/1", "components": [{"id": "D"}], "bands": []}, r"components\[0\].*length"),
    ({"format": "bandcomplex/1", "components": [{"id": "D", "length": "x"}], "bands": []}, r"components\[0\].*length"),
    ({"format": "bandcomplex/1", "components": [{"id": "D", "length": "1"}],
      "bands": [{"id": "B", "width": "1", "base0": {"component": "D", "offset": "0"},
                 "base1": {"component": "E", "offset": "0"}}]}, "unknown component"),
])
def test_bad_documents_name_the_field(doc, where):
    with pytest.raises(BandComplexError, match=where):
        from_dict(doc)


def test_orientation_reversing_band_is_rejected():
    doc = json.loads(serialize(make_complex({"D": 2}, [("B", 1, ("D", 0), ("D", 1))])))
    doc["bands"][0]["orientation"] = "reversing"
    with pytest.raises(BandComplexError):
        from_dict(doc)


def test_syntax_error_reports_line():
    with pytest.raises(BandComplexError, match="line 1"):
        deserialize("{")


def test_isomorphism_relabels(rotation):
    renamed = make_complex({"X": 1}, [("q", Fraction(1, 3), ("X", Fraction(2, 3)), ("X", 0)),
                                      ("p", Fraction(2, 3), ("X", 0), ("X", Fraction(1, 3)))])
    w = isomorphism(rotation, renamed)
    assert w == {"components": {"D": "X"}, "bands": {"a": "p", "b": "q"}}


def test_isomorphism_with_scale(rotation):
    assert isomorphic(rotation, scale(rotation, 3), 3)
    assert not isomorphic(rotation, scale(rotation, 3))


def test_band_orientation_is_not_structure():
    a = make_complex({"D": 3}, [("S", 2, ("D", 0), ("D", 1))])
    b = make_complex({"D": 3}, [("S", 2, ("D", 1), ("D", 0))])
    assert isomorphic(a, b)


def test_disjoint_union_adds_excess(shift_band, rotation):
    u = disjoint_union(shift_band, rotation)
    assert excess(u) == excess(shift_band) + excess(rotation)


def test_normalize_merges_a_chain():
    c = make_complex({"D": 1, "E": 1}, [("x", 1, ("D", 0), ("E", 0)), ("y", 1, ("E", 0), ("D", 0))],
                     {"x": 2, "y": 3})
    n = normalize_long_bands(c)
    assert len(n.bands) == 1 and n.bands[0].length == 5
    assert excess(n) == excess(c)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_invariant_key_is_label_free(seed):
    c = random_complex(random.Random(seed))
    doc = to_dict(c)
    rename = {x["id"]: f"z{i}" for i, x in enumerate(doc["components"])}
    for x in doc["components"]:
        x["id"] = rename[x["id"]]
    for b in doc["bands"]:
        b["id"] = "r" + b["id"]
        for side in ("base0", "base1"):
            b[side]["component"] = rename[b[side]["component"]]
    d = from_dict(doc)
    assert invariant_key(c) == invariant_key(d)
    assert isomorphic(c, d)
    assert total_width(c) == total_width(d)
