"""Exact data model for unions of bands.

A union of bands is stored combinatorially: a set of abstract support
components (an id and a length) and a set of bands, each of whose two bases
is attached to a component by a translation, i.e. a ``(component, offset)``
pair.  All coordinates are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator

FORMAT = "bandcomplex/1"


class BandComplexError(ValueError):
    """Raised when a document or a constructed complex violates an invariant."""


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected on purpose: they would silently carry rounding
    error into exact computations.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Component:
    id: str
    length: Fraction


@dataclass(frozen=True)
class Base:
    component: str
    offset: Fraction


@dataclass(frozen=True)
class Band:
    id: str
    width: Fraction
    base0: Base
    base1: Base
    length: Fraction | None = None

    @property
    def degenerate(self) -> bool:
        return self.width == 0

    def base(self, side: int) -> Base:
        return self.base0 if side == 0 else self.base1

    @property
    def shift(self) -> tuple[str, str, Fraction]:
        """(from-component, to-component, offset difference) of the translation base0 -> base1."""
        return (self.base0.component, self.base1.component, self.base1.offset - self.base0.offset)


@dataclass(frozen=True)
class BandComplex:
    components: tuple[Component, ...]
    bands: tuple[Band, ...]
    enhanced: bool = False
    _comp_index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _band_index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "bands", tuple(self.bands))
        comps = {c.id: c for c in self.components}
        bands = {b.id: b for b in self.bands}
        if len(comps) != len(self.components):
            raise BandComplexError("duplicate component id")
        if len(bands) != len(self.bands):
            raise BandComplexError("duplicate band id")
        object.__setattr__(self, "_comp_index", comps)
        object.__setattr__(self, "_band_index", bands)
        for c in self.components:
            if c.length < 0:
                raise BandComplexError(f"component {c.id!r} has negative length")
        for b in self.bands:
            if b.width < 0:
                raise BandComplexError(f"band {b.id!r} has negative width")
            for side in (0, 1):
                base = b.base(side)
                comp = comps.get(base.component)
                if comp is None:
                    raise BandComplexError(
                        f"band {b.id!r}: base{side} refers to unknown component {base.component!r}")
                if base.offset < 0 or base.offset + b.width > comp.length:
                    raise BandComplexError(
                        f"band {b.id!r}: base{side} [{base.offset}, {base.offset + b.width}] "
                        f"lies outside component {comp.id!r} of length {comp.length}")
            if self.enhanced and (b.length is None or b.length < 0):
                raise BandComplexError(f"band {b.id!r}: enhanced complex needs a length >= 0")
        if self.enhanced and self.bands and not any(b.length > 0 for b in self.bands):
            raise BandComplexError("enhanced complex needs at least one positive band length")

    # lookups -------------------------------------------------------------

    def component(self, cid: str) -> Component:
        return self._comp_index[cid]

    def band(self, bid: str) -> Band:
        return self._band_index[bid]

    def has_band(self, bid: str) -> bool:
        return bid in self._band_index

    def attachments(self, cid: str) -> Iterator[tuple[Band, int]]:
        """All (band, side) pairs whose base lies on component ``cid``."""
        for b in self.bands:
            for side in (0, 1):
                if b.base(side).component == cid:
                    yield b, side

    # measures ------------------------------------------------------------

    @property
    def support_length(self) -> Fraction:
        return sum((c.length for c in self.components), Fraction(0))

    @property
    def area(self) -> Fraction:
        if not self.enhanced:
            raise BandComplexError("area is only defined for enhanced complexes")
        return sum((b.width * b.length for b in self.bands), Fraction(0))

    def with_lengths(self, lengths: dict[str, Fraction]) -> BandComplex:
        """Enhanced copy with the given band lengths (missing bands get 0)."""
        bands = [replace(b, length=as_fraction(lengths.get(b.id, 0))) for b in self.bands]
        return BandComplex(self.components, bands, enhanced=True)

    def forget_lengths(self) -> BandComplex:
        return BandComplex(self.components, [replace(b, length=None) for b in self.bands], False)

    def __len__(self) -> int:
        return len(self.bands)


def make_complex(components: dict, bands: Iterable[tuple], lengths: dict | None = None) -> BandComplex:
    """Convenience constructor.

    ``components`` maps id -> length; ``bands`` is an iterable of
    ``(id, width, (comp0, off0), (comp1, off1))`` tuples.
    """
    comps = [Component(cid, as_fraction(length)) for cid, length in components.items()]
    out = []
    for bid, width, (c0, o0), (c1, o1) in bands:
        out.append(Band(bid, as_fraction(width), Base(c0, as_fraction(o0)), Base(c1, as_fraction(o1))))
    c = BandComplex(comps, out)
    if lengths is not None:
        c = c.with_lengths(lengths)
    return c


def total_width(c: BandComplex) -> Fraction:
    return sum((b.width for b in c.bands), Fraction(0))


def excess(c: BandComplex) -> Fraction:
    """Total band width minus total support length."""
    return total_width(c) - c.support_length


def disjoint_union(a: BandComplex, b: BandComplex, tags=("a", "b")) -> BandComplex:
    ta, tb = tags

    def relabel(c, t):
        comps = [Component(f"{t}:{x.id}", x.length) for x in c.components]
        bands = [replace(x, id=f"{t}:{x.id}",
                         base0=Base(f"{t}:{x.base0.component}", x.base0.offset),
                         base1=Base(f"{t}:{x.base1.component}", x.base1.offset)) for x in c.bands]
        return comps, bands

    ca, ba = relabel(a, ta)
    cb, bb = relabel(b, tb)
    enhanced = a.enhanced and b.enhanced
    if not enhanced:
        ba = [replace(x, length=None) for x in ba]
        bb = [replace(x, length=None) for x in bb]
    return BandComplex(ca + cb, ba + bb, enhanced)


def scale(c: BandComplex, factor) -> BandComplex:
    """Multiply every transverse coordinate by ``factor`` (lengths untouched)."""
    s = as_fraction(factor)
    if s <= 0:
        raise ValueError("scale factor must be positive")
    comps = [Component(x.id, x.length * s) for x in c.components]
    bands = [replace(b, width=b.width * s,
                     base0=Base(b.base0.component, b.base0.offset * s),
                     base1=Base(b.base1.component, b.base1.offset * s)) for b in c.bands]
    return BandComplex(comps, bands, c.enhanced)


def solid_part(c: BandComplex) -> BandComplex:
    """Drop degenerate bands and the isolated points they leave behind."""
    bands = [b for b in c.bands if not b.degenerate]
    used = {b.base0.component for b in bands} | {b.base1.component for b in bands}
    comps = [x for x in c.components if x.length > 0 or x.id in used]
    return BandComplex(comps, bands, c.enhanced)


def fresh_id(taken, prefix: str) -> str:
    i = 0
    while f"{prefix}{i}" in taken:
        i += 1
    return f"{prefix}{i}"


# ---------------------------------------------------------------------------
# isomorphism

def _band_key(b: Band, cmap: dict, s: Fraction, enhanced: bool):
    """Orientation-free descriptor of a band after mapping its components."""
    e0 = (cmap[b.base0.component], b.base0.offset * s)
    e1 = (cmap[b.base1.component], b.base1.offset * s)
    lo, hi = sorted((e0, e1))
    return (b.width * s, lo, hi, b.length if enhanced else None)


def _component_signature(c: BandComplex, cid: str, s: Fraction, enhanced: bool):
    sig = sorted((b.base(side).offset * s, b.width * s, b.length if enhanced else None)
                 for b, side in c.attachments(cid))
    return (c.component(cid).length * s, tuple(sig))


def isomorphism(a: BandComplex, b: BandComplex, scale_factor=1) -> dict | None:
    """Find an isomorphism from ``a`` rescaled by ``scale_factor`` onto ``b``.

    Returns a witness ``{"components": {...}, "bands": {...}}`` mapping ids of
    ``a`` to ids of ``b``, or None.  Band lengths are compared only when both
    complexes are enhanced.
    """
    s = as_fraction(scale_factor)
    if len(a.components) != len(b.components) or len(a.bands) != len(b.bands):
        return None
    enhanced = a.enhanced and b.enhanced
    if a.enhanced != b.enhanced:
        return None
    sig_a = {x.id: _component_signature(a, x.id, s, enhanced) for x in a.components}
    sig_b = {x.id: _component_signature(b, x.id, 1, enhanced) for x in b.components}
    if Counter(sig_a.values()) != Counter(sig_b.values()):
        return None
    by_sig = defaultdict(list)
    for cid, sig in sig_b.items():
        by_sig[sig].append(cid)
    # most constrained components first
    order = sorted(sig_a, key=lambda cid: (len(by_sig[sig_a[cid]]), sig_a[cid][0], cid))
    target_bands = Counter(_band_key(x, {y.id: y.id for y in b.components}, Fraction(1), enhanced)
                           for x in b.bands)

    cmap: dict[str, str] = {}
    used: set[str] = set()

    def consistent() -> bool:
        # bands whose two ends are already mapped must exist in b
        need = Counter()
        for x in a.bands:
            if x.base0.component in cmap and x.base1.component in cmap:
                need[_band_key(x, cmap, s, enhanced)] += 1
        return all(target_bands[k] >= v for k, v in need.items())

    def backtrack(i: int) -> bool:
        if i == len(order):
            return True
        cid = order[i]
        for cand in by_sig[sig_a[cid]]:
            if cand in used:
                continue
            cmap[cid] = cand
            used.add(cand)
            if consistent() and backtrack(i + 1):
                return True
            del cmap[cid]
            used.discard(cand)
        return False

    if not backtrack(0):
        return None
    pool = defaultdict(list)
    for x in b.bands:
        pool[_band_key(x, {y.id: y.id for y in b.components}, Fraction(1), enhanced)].append(x.id)
    bmap = {}
    for x in sorted(a.bands, key=lambda x: x.id):
        bmap[x.id] = pool[_band_key(x, cmap, s, enhanced)].pop()
    return {"components": dict(cmap), "bands": bmap}


def isomorphic(a: BandComplex, b: BandComplex, scale_factor=1) -> bool:
    return isomorphism(a, b, scale_factor) is not None


def invariant_key(c: BandComplex) -> tuple:
    """Hashable isomorphism invariant (equal for isomorphic complexes).

    Not a complete invariant; callers confirm collisions with
    :func:`isomorphism`.
    """
    enhanced = c.enhanced
    sigs = {x.id: _component_signature(c, x.id, Fraction(1), enhanced) for x in c.components}
    comp_part = tuple(sorted(sigs.values()))
    band_part = tuple(sorted(_band_key(b, sigs, Fraction(1), enhanced) for b in c.bands))
    return (enhanced, comp_part, band_part)


# ---------------------------------------------------------------------------
# long bands

def _find_series_pair(c: BandComplex):
    for comp in c.components:
        atts = list(c.attachments(comp.id))
        for i, (b1, s1) in enumerate(atts):
            if b1.degenerate:
                continue
            lo, hi = b1.base(s1).offset, b1.base(s1).offset + b1.width
            for b2, s2 in atts[i + 1:]:
                if b2 is b1 or b2.width != b1.width or b2.base(s2).offset != lo:
                    continue
                clean = True
                for b3, s3 in atts:
                    if (b3, s3) in ((b1, s1), (b2, s2)):
                        continue
                    o3 = b3.base(s3).offset
                    e3 = o3 + b3.width
                    # no other base may meet the open interval (lo, hi)
                    if o3 < hi and e3 > lo:
                        clean = False
                        break
                if clean:
                    return comp, b1, s1, b2, s2
    return None


def _merge_series(c: BandComplex, comp: Component, b1: Band, s1: int, b2: Band, s2: int) -> BandComplex:
    lo = b1.base(s1).offset
    hi = lo + b1.width
    taken = {x.id for x in c.components}
    left_id = fresh_id(taken, f"{comp.id}.")
    right_id = fresh_id(taken | {left_id}, f"{comp.id}.")

    def move(base: Base) -> Base:
        if base.component != comp.id:
            return base
        if base.offset <= lo:
            return Base(left_id, base.offset)
        return Base(right_id, base.offset - hi)

    length = b1.length + b2.length if c.enhanced else None
    merged = Band(b1.id, b1.width, b1.base(1 - s1), b2.base(1 - s2), length)
    bands = []
    for x in c.bands:
        if x.id == b2.id:
            continue
        if x.id == b1.id:
            x = merged
        bands.append(replace(x, base0=move(x.base0), base1=move(x.base1)))
    used = {x.base0.component for x in bands} | {x.base1.component for x in bands}
    pieces = [Component(left_id, lo), Component(right_id, comp.length - hi)]
    comps = [x for x in c.components if x.id != comp.id]
    comps += [x for x in pieces if x.length > 0 or x.id in used]
    return BandComplex(comps, bands, c.enhanced)


def normalize_long_bands(c: BandComplex) -> BandComplex:
    """Merge bands in series until none remain.

    Two bands are in series when a base of one and a base of the other
    occupy exactly the same subinterval of a component and no other base
    meets its interior.  The shared interval is removed from the support
    and, for enhanced complexes, the lengths add up.
    """
    while True:
        found = _find_series_pair(c)
        if found is None:
            return c
        c = _merge_series(c, *found)


# ---------------------------------------------------------------------------
# serialization

def to_dict(c: BandComplex) -> dict:
    bands = []
    for b in c.bands:
        d = {
            "id": b.id,
            "width": format_fraction(b.width),
            "base0": {"component": b.base0.component, "offset": format_fraction(b.base0.offset)},
            "base1": {"component": b.base1.component, "offset": format_fraction(b.base1.offset)},
        }
        if c.enhanced:
            d["length"] = format_fraction(b.length)
        bands.append(d)
    return {
        "format": FORMAT,
        "enhanced": c.enhanced,
        "components": [{"id": x.id, "length": format_fraction(x.length)} for x in c.components],
        "bands": bands,
    }


def serialize(c: BandComplex) -> str:
    return json.dumps(to_dict(c), indent=2) + "\n"


def _field(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise BandComplexError(f"{where}: missing field {key!r}")
    return obj[key]


def _rational(obj, key, where) -> Fraction:
    raw = _field(obj, key, where)
    if isinstance(raw, bool) or not isinstance(raw, (str, int)):
        raise BandComplexError(f"{where}.{key}: expected a rational string, got {raw!r}")
    try:
        return as_fraction(raw)
    except (ValueError, ZeroDivisionError):
        raise BandComplexError(f"{where}.{key}: malformed rational {raw!r}") from None


def from_dict(doc: dict) -> BandComplex:
    if not isinstance(doc, dict):
        raise BandComplexError("document: expected a JSON object")
    fmt = doc.get("format", FORMAT)
    if fmt != FORMAT:
        raise BandComplexError(f"document: unsupported format {fmt!r}")
    enhanced = bool(doc.get("enhanced", False))
    comps = []
    for i, raw in enumerate(_field(doc, "components", "document")):
        where = f"components[{i}]"
        comps.append(Component(str(_field(raw, "id", where)), _rational(raw, "length", where)))
    bands = []
    for i, raw in enumerate(_field(doc, "bands", "document")):
        where = f"bands[{i}]"
        bid = str(_field(raw, "id", where))
        if "orientation" in raw and raw["orientation"] not in ("preserving", "+", 1):
            raise BandComplexError(f"band {bid!r}: orientation-reversing gluings are not supported")
        b0 = _field(raw, "base0", where)
        b1 = _field(raw, "base1", where)
        length = _rational(raw, "length", where) if "length" in raw else None
        if enhanced and length is None:
            raise BandComplexError(f"band {bid!r}: enhanced complex needs a length")
        bands.append(Band(bid, _rational(raw, "width", where),
                          Base(str(_field(b0, "component", where + ".base0")),
                               _rational(b0, "offset", where + ".base0")),
                          Base(str(_field(b1, "component", where + ".base1")),
                               _rational(b1, "offset", where + ".base1")),
                          length if enhanced else None))
    return BandComplex(comps, bands, enhanced)


def deserialize(text: str) -> BandComplex:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BandComplexError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_dict(doc)


def load(path) -> BandComplex:
    with open(path) as fh:
        return deserialize(fh.read())


def dump(c: BandComplex, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(c))
