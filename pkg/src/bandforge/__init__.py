"""Unions of bands with exact rational data, the Rips machine, and the
renormalization gallery Z(w, l)."""

from .core import (
    Band,
    BandComplex,
    BandComplexError,
    Base,
    Component,
    deserialize,
    disjoint_union,
    excess,
    isomorphic,
    isomorphism,
    load,
    make_complex,
    normalize_long_bands,
    serialize,
    solid_part,
    total_width,
)
from .rips import FreeArc, collapse, free_arcs, imanishi, run_machine
from .skeleton import equivalence, equivalent

__version__ = "0.1.0"

__all__ = [
    "Band", "BandComplex", "BandComplexError", "Base", "Component", "FreeArc",
    "collapse", "deserialize", "disjoint_union", "equivalence", "equivalent", "excess",
    "free_arcs", "imanishi", "isomorphic", "isomorphism", "load", "make_complex",
    "normalize_long_bands", "run_machine", "serialize", "solid_part", "total_width",
]
