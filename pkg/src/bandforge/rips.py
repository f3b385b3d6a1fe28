"""Rips machine moves and their bookkeeping.

Every move is a pure function ``BandComplex -> BandComplex``.  Moves that
change the support also report where each new component sits inside the
old one (``origins``), so runs can be compared in the coordinates of the
starting complex.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable

from .core import (
    Band,
    BandComplex,
    Base,
    Component,
    as_fraction,
    excess,
    format_fraction,
    fresh_id,
    total_width,
)


class NotAFreeArc(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class NotASplittingPoint(ValueError):
    pass


@dataclass(frozen=True, order=True)
class FreeArc:
    component: str
    lo: Fraction
    hi: Fraction
    covering_band: str
    covering_base: int

    @property
    def measure(self) -> Fraction:
        return self.hi - self.lo

    def describe(self) -> dict:
        return {"component": self.component, "lo": format_fraction(self.lo),
                "hi": format_fraction(self.hi), "band": self.covering_band,
                "base": self.covering_base}


def _base_intervals(c: BandComplex, cid: str):
    out = []
    for b, side in c.attachments(cid):
        o = b.base(side).offset
        out.append((o, o + b.width, b.id, side))
    return out


def free_arcs(c: BandComplex) -> list[FreeArc]:
    """All free arcs of ``c``, by an exact sweep over base endpoints."""
    arcs = []
    for comp in c.components:
        bases = _base_intervals(c, comp.id)
        points = sorted({Fraction(0), comp.length} | {x for iv in bases for x in iv[:2]})
        degenerate_at = {o for o, e, _, _ in bases if o == e}
        runs = []
        for p, q in zip(points, points[1:]):
            cover = [(bid, side) for o, e, bid, side in bases if o <= p and e >= q and o < e]
            if len(cover) != 1:
                continue
            if runs and runs[-1][1] == p and runs[-1][2] == cover[0] and p not in degenerate_at:
                runs[-1][1] = q
            else:
                runs.append([p, q, cover[0]])
        arcs += [FreeArc(comp.id, lo, hi, bid, side) for lo, hi, (bid, side) in runs]
    return arcs


def _split_component(comp: Component, lo: Fraction, hi: Fraction, taken: set[str]):
    """Ids and lengths of the closed pieces left after deleting the open (lo, hi)."""
    left = fresh_id(taken, comp.id + ".")
    right = fresh_id(taken | {left}, comp.id + ".")
    return Component(left, lo), Component(right, comp.length - hi)


def _drop_isolated(c_comps: list[Component], bands: list[Band], candidates: Iterable[str]):
    """Remove produced isolated points that carry nothing or a single degenerate band."""
    comps = {x.id: x for x in c_comps}
    todo = [cid for cid in candidates if cid in comps and comps[cid].length == 0]
    while todo:
        cid = todo.pop()
        if cid not in comps:
            continue
        attached = [b for b in bands if cid in (b.base0.component, b.base1.component)]
        if not attached:
            del comps[cid]
        elif len(attached) == 1 and attached[0].degenerate:
            b = attached[0]
            bands = [x for x in bands if x.id != b.id]
            del comps[cid]
            for other in (b.base0.component, b.base1.component):
                if other != cid and comps.get(other) is not None and comps[other].length == 0:
                    if not any(other in (x.base0.component, x.base1.component) for x in bands):
                        todo.append(other)
    return [x for x in c_comps if x.id in comps], bands


def collapse_with_origins(c: BandComplex, arc: FreeArc):
    """Collapse from a free arc; also return ``{new component: (old component, shift)}``."""
    if arc not in free_arcs(c):
        raise NotAFreeArc(f"{arc} is not a free arc of this complex")
    comp = c.component(arc.component)
    taken = {x.id for x in c.components}
    left, right = _split_component(comp, arc.lo, arc.hi, taken)
    cover = c.band(arc.covering_band)
    o = cover.base(arc.covering_base).offset
    lo_rel, hi_rel = arc.lo - o, arc.hi - o

    band_ids = {b.id for b in c.bands} - {cover.id}
    root = cover.id.split(".")[0]
    id_l = fresh_id(band_ids, root + ".")
    id_r = fresh_id(band_ids | {id_l}, root + ".")
    frag_l = Band(id_l, lo_rel, cover.base0, cover.base1, cover.length)
    frag_r = Band(id_r, cover.width - hi_rel,
                  Base(cover.base0.component, cover.base0.offset + hi_rel),
                  Base(cover.base1.component, cover.base1.offset + hi_rel), cover.length)

    def place(base: Base, width: Fraction) -> Base:
        if base.component != comp.id:
            return base
        if base.offset + width <= arc.lo:
            return Base(left.id, base.offset)
        return Base(right.id, base.offset - arc.hi)

    bands = []
    for b in c.bands:
        if b.id == cover.id:
            for frag in (frag_l, frag_r):
                bands.append(replace(frag, base0=place(frag.base0, frag.width),
                                     base1=place(frag.base1, frag.width)))
        else:
            bands.append(replace(b, base0=place(b.base0, b.width), base1=place(b.base1, b.width)))

    comps = []
    for x in c.components:
        if x.id == comp.id:
            comps.extend([left, right])
        else:
            comps.append(x)
    comps, bands = _drop_isolated(comps, bands, [left.id, right.id])
    origins = {x.id: (x.id, Fraction(0)) for x in c.components if x.id != comp.id}
    origins[left.id] = (comp.id, Fraction(0))
    origins[right.id] = (comp.id, arc.hi)
    origins = {k: v for k, v in origins.items() if any(x.id == k for x in comps)}
    return BandComplex(comps, bands, c.enhanced), origins


def collapse(c: BandComplex, arc: FreeArc) -> BandComplex:
    """Remove a free arc from the support and the strip above it from its band."""
    return collapse_with_origins(c, arc)[0]


def cut_vertical(c: BandComplex, band: str, at) -> BandComplex:
    """Cut ``band`` along the vertical arc at transverse position ``at``."""
    at = as_fraction(at)
    b = c.band(band)
    if at < 0 or at > b.width:
        raise OutOfRange(f"cut position {at} outside [0, {b.width}] of band {band!r}")
    if at in (0, b.width):
        return c
    taken = {x.id for x in c.bands} - {b.id}
    id_l = fresh_id(taken, b.id + ".")
    id_r = fresh_id(taken | {id_l}, b.id + ".")
    left = Band(id_l, at, b.base0, b.base1, b.length)
    right = Band(id_r, b.width - at, Base(b.base0.component, b.base0.offset + at),
                 Base(b.base1.component, b.base1.offset + at), b.length)
    bands = []
    for x in c.bands:
        bands.extend([left, right] if x.id == b.id else [x])
    return BandComplex(c.components, bands, c.enhanced)


def splitting_points(c: BandComplex, component: str) -> list[Fraction]:
    comp = c.component(component)
    bases = _base_intervals(c, component)
    ends = {x for o, e, _, _ in bases for x in (o, e)}
    return sorted(p for p in ends
                  if 0 < p < comp.length and not any(o < p < e for o, e, _, _ in bases))


def split(c: BandComplex, component: str, at) -> BandComplex:
    """Split a component at a splitting point, joining the halves by a degenerate band.

    The new band's base0 sits on the left half and base1 on the right half,
    which is enough to glue the halves back together.
    """
    at = as_fraction(at)
    if at not in splitting_points(c, component):
        raise NotASplittingPoint(f"{at} is not a splitting point of component {component!r}")
    comp = c.component(component)
    taken = {x.id for x in c.components}
    left = fresh_id(taken, comp.id + ".")
    right = fresh_id(taken | {left}, comp.id + ".")

    def place(base: Base) -> Base:
        if base.component != comp.id:
            return base
        if base.offset >= at:
            return Base(right, base.offset - at)
        return Base(left, base.offset)

    bands = [replace(b, base0=place(b.base0), base1=place(b.base1)) for b in c.bands]
    joint = Band(fresh_id({b.id for b in bands}, "s"), Fraction(0), Base(left, at), Base(right, Fraction(0)),
                 Fraction(0) if c.enhanced else None)
    bands.append(joint)
    comps = []
    for x in c.components:
        comps.extend([Component(left, at), Component(right, comp.length - at)] if x.id == comp.id else [x])
    return BandComplex(comps, bands, c.enhanced)


def subdivide_band(c: BandComplex, band: str) -> BandComplex:
    """Replace a band by two bands chained through a new subdivision arc.

    In an enhanced complex the first half keeps the length and the second
    half gets length 0, so the long band keeps its length.
    """
    b = c.band(band)
    arc = fresh_id({x.id for x in c.components}, "sub")
    taken = {x.id for x in c.bands} - {b.id}
    id1 = fresh_id(taken, b.id + ".")
    id2 = fresh_id(taken | {id1}, b.id + ".")
    first = Band(id1, b.width, b.base0, Base(arc, Fraction(0)), b.length)
    second = Band(id2, b.width, Base(arc, Fraction(0)), b.base1, Fraction(0) if c.enhanced else None)
    bands = []
    for x in c.bands:
        bands.extend([first, second] if x.id == b.id else [x])
    return BandComplex(list(c.components) + [Component(arc, b.width)], bands, c.enhanced)


def cut_component(c: BandComplex, component: str) -> BandComplex:
    """Detach every base on ``component`` onto its own fresh interval.

    A bare component simply disappears.
    """
    comp = c.component(component)
    attached = list(c.attachments(component))
    taken = {x.id for x in c.components} - {comp.id}
    new_comps = []
    slots = {}
    for b, side in sorted(attached, key=lambda t: (t[0].base(t[1]).offset, t[0].id, t[1])):
        cid = fresh_id(taken, comp.id + ".")
        taken.add(cid)
        new_comps.append(Component(cid, b.width))
        slots[(b.id, side)] = cid
    bands = []
    for b in c.bands:
        b0, b1 = b.base0, b.base1
        if (b.id, 0) in slots:
            b0 = Base(slots[(b.id, 0)], Fraction(0))
        if (b.id, 1) in slots:
            b1 = Base(slots[(b.id, 1)], Fraction(0))
        bands.append(replace(b, base0=b0, base1=b1))
    comps = [x for x in c.components if x.id != comp.id] + new_comps
    return BandComplex(comps, bands, c.enhanced)


# ---------------------------------------------------------------------------
# running the machine

@dataclass(frozen=True)
class TraceStep:
    move: dict
    complex: BandComplex
    excess: Fraction
    total_width: Fraction
    # component id -> (component of the starting complex, offset inside it)
    ambient: dict = field(compare=False)

    def to_json(self) -> str:
        move = {k: v for k, v in self.move.items() if k != "arc"}
        return json.dumps({"move": move, "excess": format_fraction(self.excess),
                           "total_width": format_fraction(self.total_width),
                           "support": format_fraction(self.complex.support_length),
                           "bands": len(self.complex.bands)}, sort_keys=True)


@dataclass
class RipsTrace:
    steps: list[TraceStep]
    policy: str
    seed: int | None = None
    halted: str = "no_free_arc"

    @property
    def final(self) -> BandComplex:
        return self.steps[-1].complex

    @property
    def collapses(self) -> list[FreeArc]:
        return [s.move["arc"] for s in self.steps[1:]]

    def to_jsonl(self) -> str:
        return "".join(s.to_json() + "\n" for s in self.steps)

    def ambient_support(self, k: int) -> list[tuple[str, Fraction, Fraction]]:
        step = self.steps[min(k, len(self.steps) - 1)]
        out = []
        for comp in step.complex.components:
            root, off = step.ambient[comp.id]
            out.append((root, off, off + comp.length))
        return sorted(out)


POLICIES = ("leftmost", "widest", "random")


def _choose(arcs: list[FreeArc], policy: str, rng: random.Random) -> FreeArc:
    if policy == "leftmost":
        return arcs[0]
    if policy == "widest":
        best = max(a.measure for a in arcs)
        return next(a for a in arcs if a.measure == best)
    if policy == "random":
        return rng.choice(arcs)
    raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")


def run_machine(c: BandComplex, policy: str = "leftmost", max_steps: int = 1000,
                seed: int | None = 0) -> RipsTrace:
    """Collapse free arcs under ``policy`` until none is left or the budget runs out."""
    rng = random.Random(seed)
    ambient = {x.id: (x.id, Fraction(0)) for x in c.components}
    steps = [TraceStep({"kind": "start"}, c, excess(c), total_width(c), ambient)]
    halted = "no_free_arc"
    for _ in range(max_steps):
        arcs = free_arcs(c)
        if not arcs:
            break
        arc = _choose(arcs, policy, rng)
        c, origins = collapse_with_origins(c, arc)
        ambient = {cid: (ambient[old][0], ambient[old][1] + shift) for cid, (old, shift) in origins.items()}
        steps.append(TraceStep({"kind": "collapse", "arc": arc, **_arc_fields(arc)}, c,
                               excess(c), total_width(c), ambient))
    else:
        if free_arcs(c):
            halted = "budget"
    return RipsTrace(steps, policy, seed if policy == "random" else None, halted)


def _arc_fields(arc: FreeArc) -> dict:
    return {k: v for k, v in arc.describe().items()}


def _contained(inner, outer) -> bool:
    for root, lo, hi in inner:
        if not any(r == root and a <= lo and hi <= b for r, a, b in outer):
            return False
    return True


@dataclass(frozen=True)
class InterleavingResult:
    confirmed: bool
    k: int
    l: int | None
    steps_a: int
    steps_b: int

    @property
    def status(self) -> str:
        return "confirmed" if self.confirmed else "exhausted"


def interleaving_check(c: BandComplex, policy_a="leftmost", policy_b="widest", k: int = 1,
                       budget: int = 1000, seed_a: int = 0, seed_b: int = 1) -> InterleavingResult:
    """Look for l <= budget with the A-run's support at step l inside the B-run's at step k."""
    run_b = run_machine(c, policy_b, k, seed_b)
    target = run_b.ambient_support(k)
    run_a = run_machine(c, policy_a, budget, seed_a)
    for l in range(len(run_a.steps)):
        if _contained(run_a.ambient_support(l), target):
            return InterleavingResult(True, k, l, len(run_a.steps) - 1, len(run_b.steps) - 1)
    return InterleavingResult(False, k, None, len(run_a.steps) - 1, len(run_b.steps) - 1)


# ---------------------------------------------------------------------------
# compact leaves

@dataclass(frozen=True)
class ImanishiReport:
    compact_leaf_measure: Fraction | None
    witnesses: tuple
    annulus_free: str
    classes: int = 0
    orbit_points: int = 0

    @property
    def definite(self) -> bool:
        return self.annulus_free in ("yes", "no")


def covering(c: BandComplex, cid: str, x: Fraction):
    """(band, side) pairs whose base contains the point ``x`` of component ``cid``."""
    for b, side in c.attachments(cid):
        o = b.base(side).offset
        if o <= x <= o + b.width:
            yield b, side


def crossings(c: BandComplex, cid: str, x: Fraction):
    """Points reached from ``(cid, x)`` by crossing one band, with the band and side used."""
    for b, side in covering(c, cid, x):
        here, there = b.base(side), b.base(1 - side)
        yield (there.component, x - here.offset + there.offset), b.id, side


def imanishi(c: BandComplex, budget: int = 100_000) -> ImanishiReport:
    """Measure of compact leaves and annulus-freeness.

    The orbits of all singular points (component and base endpoints) are
    enumerated exactly.  For rational data they are finite; the open
    intervals between consecutive orbit points are then carried onto each
    other by the bands, and each equivalence class of intervals is a family
    of parallel compact leaves.  A class whose crossing graph has a cycle
    is a family of annular leaves.
    """
    seeds = []
    for comp in c.components:
        seeds += [(comp.id, Fraction(0)), (comp.id, comp.length)]
        for o, e, _, _ in _base_intervals(c, comp.id):
            seeds += [(comp.id, o), (comp.id, e)]
    seen = set(seeds)
    stack = list(seen)
    while stack:
        cid, x = stack.pop()
        for pt, _, _ in crossings(c, cid, x):
            if pt not in seen:
                seen.add(pt)
                if len(seen) > budget:
                    return ImanishiReport(None, (), f"unknown(budget={budget})", 0, len(seen))
                stack.append(pt)

    by_comp: dict[str, list[Fraction]] = {}
    for cid, x in seen:
        by_comp.setdefault(cid, []).append(x)
    atoms = []
    index = {}
    for comp in c.components:
        pts = sorted(by_comp.get(comp.id, []))
        for p, q in zip(pts, pts[1:]):
            index[(comp.id, p)] = len(atoms)
            atoms.append((comp.id, p, q))

    parent = list(range(len(atoms)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    degree = [0] * len(atoms)
    for i, (cid, p, q) in enumerate(atoms):
        for b, side in c.attachments(cid):
            o = b.base(side).offset
            if o <= p and q <= o + b.width:
                degree[i] += 1
                there = b.base(1 - side)
                j = index[(there.component, p - o + there.offset)]
                parent[find(i)] = find(j)

    classes: dict[int, list[int]] = {}
    for i in range(len(atoms)):
        classes.setdefault(find(i), []).append(i)
    measure = Fraction(0)
    witnesses = []
    annular = False
    for members in classes.values():
        edges = sum(degree[i] for i in members)
        if edges != 2 * (len(members) - 1):
            annular = True
        first = min(members)
        cid, p, q = atoms[first]
        measure += q - p
        witnesses.append((cid, p, q))
    report = ImanishiReport(measure, tuple(witnesses), "no" if annular else "yes", len(classes), len(seen))
    if not annular and measure != -excess(c):
        raise AssertionError("compact-leaf measure disagrees with the negative excess")
    return report


@dataclass(frozen=True)
class DensityEvidence:
    """Orbit epsilon-net statistics.  Evidence only: density is not decided."""
    eps: Fraction
    orbits: int
    closed: int              # orbits that stopped growing before the budget
    covering: int            # orbits that are an eps-net of the whole support
    worst_gap: Fraction      # largest gap left by any orbit, ends included

    @property
    def covering_fraction(self) -> float:
        return self.covering / self.orbits if self.orbits else 0.0


def _largest_gap(c: BandComplex, pts: Iterable[tuple[str, Fraction]]) -> Fraction:
    by_comp: dict[str, list[Fraction]] = {x.id: [] for x in c.components}
    for cid, x in pts:
        by_comp[cid].append(x)
    worst = Fraction(0)
    for comp in c.components:
        xs = sorted(by_comp[comp.id])
        if not xs:
            worst = max(worst, comp.length)
            continue
        # a point covers eps on both sides, so ends count double
        gaps = [2 * xs[0], 2 * (comp.length - xs[-1])] + [b - a for a, b in zip(xs, xs[1:])]
        worst = max(worst, max(gaps))
    return worst


def density_evidence(c: BandComplex, eps, samples: int = 20, budget: int = 5000,
                     seed: int = 0) -> DensityEvidence:
    """How well sampled orbits fill the support at scale ``eps``.

    An orbit is an eps-net when every point of the support lies within
    ``eps`` of it.  Orbits are grown breadth first up to ``budget`` points.
    """
    eps = as_fraction(eps)
    rng = random.Random(seed)
    comps = [x for x in c.components if x.length > 0]
    if not comps:
        return DensityEvidence(eps, 0, 0, 0, Fraction(0))
    closed = covering = 0
    worst = Fraction(0)
    for _ in range(samples):
        comp = rng.choices(comps, weights=[float(x.length) for x in comps])[0]
        start = (comp.id, comp.length * Fraction(rng.randrange(1, 1 << 16), 1 << 16))
        seen = {start}
        frontier = [start]
        while frontier and len(seen) < budget:
            nxt = []
            for cid, x in frontier:
                for pt, _, _ in crossings(c, cid, x):
                    if pt not in seen:
                        seen.add(pt)
                        nxt.append(pt)
            frontier = nxt
        closed += not frontier
        gap = _largest_gap(c, seen)
        covering += gap <= 2 * eps
        worst = max(worst, gap)
    return DensityEvidence(eps, samples, closed, covering, worst)
