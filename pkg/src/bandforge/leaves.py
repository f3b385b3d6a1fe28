"""Leaves as graphs: balls, end estimates, first returns and blocks.

A leaf meets the support in an orbit of the pseudogroup generated by the
band translations; its edges are band crossings.  Distances count
crossings, not enhanced lengths.
"""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .core import BandComplex, Band, as_fraction, format_fraction

Point = tuple[str, Fraction]


class PointOutsideSupport(ValueError):
    pass


class RadiusTooSmall(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


def _ports(c: BandComplex, by_comp, p: Point):
    """(band, side) pairs whose base contains ``p``."""
    cid, x = p
    for b, side in by_comp[cid]:
        o = b.base(side).offset
        if o <= x <= o + b.width:
            yield b, side


def _across(b: Band, side: int, x: Fraction) -> Point:
    there = b.base(1 - side)
    return there.component, x - b.base(side).offset + there.offset


def _index(c: BandComplex):
    by_comp = defaultdict(list)
    for b in c.bands:
        for side in (0, 1):
            by_comp[b.base(side).component].append((b, side))
    return by_comp


def _check_point(c: BandComplex, p) -> Point:
    cid, x = p[0], as_fraction(p[1])
    if not any(k.id == cid for k in c.components) or not 0 <= x <= c.component(cid).length:
        raise PointOutsideSupport(f"{cid}:{x} is not in the support")
    return cid, x


# ---------------------------------------------------------------------------
# balls

@dataclass
class LeafBall:
    base_point: Point
    radius: int
    distance: dict[Point, int]
    edges: set[tuple[Point, str]]          # (point on base0, band id)

    @property
    def vertices(self) -> set[Point]:
        return set(self.distance)

    @property
    def boundary(self) -> set[Point]:
        return {v for v, d in self.distance.items() if d == self.radius}

    def graph(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.distance)
        for p, bid in self.edges:
            g.add_edge(p, self._other[(p, bid)], key=bid)
        return g

    def has_cycle(self) -> bool:
        return len(self.edges) >= len(self.distance)

    def to_json(self) -> str:
        def name(p):
            return f"{p[0]}:{format_fraction(p[1])}"
        verts = sorted(self.distance, key=lambda p: (p[0], p[1]))
        doc = {
            "base_point": name(self.base_point),
            "radius": self.radius,
            "vertices": [{"id": name(v), "distance": self.distance[v]} for v in verts],
            "edges": [{"band": bid, "source": name(p), "target": name(self._other[(p, bid)])}
                      for p, bid in sorted(self.edges, key=lambda e: (e[1], e[0]))],
        }
        return json.dumps(doc, indent=2)

    def to_svg(self, c: BandComplex, width: int = 800, height: int = 300) -> str:
        """Vertices on one horizontal measure line, crossings as arcs above it."""
        comps = list(c.components)
        total = sum(k.length for k in comps) or Fraction(1)
        start, acc = {}, Fraction(0)
        for k in comps:
            start[k.id] = acc
            acc += k.length
        margin = 20
        base_y = height - 40

        def xpos(p):
            return margin + float((start[p[0]] + p[1]) / total) * (width - 2 * margin)

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
               f'<line x1="{margin}" y1="{base_y}" x2="{width - margin}" y2="{base_y}" stroke="black"/>']
        for p, bid in sorted(self.edges, key=lambda e: (e[1], e[0])):
            x1, x2 = xpos(p), xpos(self._other[(p, bid)])
            r = max(abs(x2 - x1) / 2, 2.0)
            out.append(f'<path d="M {x1:.2f} {base_y} A {r:.2f} {min(r, base_y - 10):.2f} 0 0 1 {x2:.2f} {base_y}" '
                       f'fill="none" stroke="steelblue"><title>{bid}</title></path>')
        for v in sorted(self.distance, key=lambda p: (p[0], p[1])):
            colour = "crimson" if v == self.base_point else "black"
            out.append(f'<circle cx="{xpos(v):.2f}" cy="{base_y}" r="2" fill="{colour}"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def trace_leaf(c: BandComplex, p, radius: int) -> LeafBall:
    """Breadth-first ball of graph radius ``radius`` around ``p`` in its leaf."""
    p = _check_point(c, p)
    by_comp = _index(c)
    dist = {p: 0}
    edges = set()
    other = {}
    queue = deque([p])
    while queue:
        v = queue.popleft()
        d = dist[v]
        if d == radius:
            continue
        for b, side in _ports(c, by_comp, v):
            w = _across(b, side, v[1])
            key = (v, b.id) if side == 0 else (w, b.id)
            if key not in edges:
                edges.add(key)
                other[key] = w if side == 0 else v
            if w not in dist:
                dist[w] = d + 1
                queue.append(w)
    ball = LeafBall(p, radius, dist, edges)
    ball._other = other
    return ball


@dataclass(frozen=True)
class EndEstimate:
    inner_radius: int
    outer_radius: int
    count: int
    stable: bool
    counts: tuple[int, ...] = ()

    @property
    def label(self) -> str:
        if not self.stable:
            return "unstable"
        return ">=3" if self.count >= 3 else str(self.count)


def _far_components(ball: LeafBall, r: int) -> int:
    g = ball.graph()
    outside = [v for v, d in ball.distance.items() if d > r]
    h = g.subgraph(outside)
    R = ball.radius
    return sum(1 for comp in nx.connected_components(h) if any(ball.distance[v] == R for v in comp))


def estimate_ends(ball: LeafBall, r_ladder) -> EndEstimate:
    ladder = sorted(set(int(r) for r in r_ladder))
    if not ladder or ladder[-1] >= ball.radius:
        raise RadiusTooSmall(f"ladder {ladder} must stay below radius {ball.radius}")
    counts = tuple(_far_components(ball, r) for r in ladder)
    return EndEstimate(ladder[-1], ball.radius, counts[-1], len(set(counts)) == 1, counts)


# Calibrated on the depth-6 constant-(1,1) and doubling gallery complexes:
# far components beyond graph distance 64 and 80 that still reach 160.
CALIBRATED_RADIUS = 160
CALIBRATED_LADDER = (64, 80)


def default_ladder(radius: int) -> list[int]:
    return [radius // 4, radius // 2, (3 * radius) // 4]


def sample_point(c: BandComplex, rng: random.Random, denominator: int = 1 << 20) -> Point:
    """A point of the support drawn by length measure, with bounded denominator."""
    comps = [k for k in c.components if k.length > 0]
    total = sum(k.length for k in comps)
    t = Fraction(rng.randrange(denominator), denominator) * total
    for k in comps:
        if t < k.length:
            return k.id, t
        t -= k.length
    return comps[-1].id, comps[-1].length


END_CLASSES = ("0", "1", "2", ">=3", "unstable")


@dataclass
class EndHistogram:
    counts: dict[str, int]
    n_samples: int
    radius: int
    ladder: list[int]
    seed: int

    def fraction(self, label: str) -> float:
        return self.counts[label] / self.n_samples

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "count", "fraction", "seed", "radius"])
        for k in END_CLASSES:
            w.writerow([k, self.counts[k], f"{self.fraction(k):.6f}", self.seed, self.radius])
        return buf.getvalue()

    def to_svg(self, width: int = 400, height: int = 200) -> str:
        bar = (width - 40) // len(END_CLASSES)
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
        for i, k in enumerate(END_CLASSES):
            h = int((height - 40) * self.fraction(k))
            x = 20 + i * bar
            out.append(f'<rect x="{x}" y="{height - 20 - h}" width="{bar - 4}" height="{h}" fill="steelblue"/>')
            out.append(f'<text x="{x}" y="{height - 5}" font-size="10">{k}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def end_statistics(c: BandComplex, n_samples: int, radius: int, seed: int = 0, ladder=None) -> EndHistogram:
    """Histogram of finite-scale end counts over points sampled by measure.

    Each sample has its own generator seeded from ``(seed, index)``, so the
    result does not depend on evaluation order.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    ladder = list(ladder) if ladder is not None else default_ladder(radius)
    counts = Counter({k: 0 for k in END_CLASSES})
    for i in range(n_samples):
        rng = random.Random(f"{seed}:{i}")
        p = sample_point(c, rng)
        counts[estimate_ends(trace_leaf(c, p, radius), ladder).label] += 1
    return EndHistogram(dict(counts), n_samples, radius, ladder, seed)


# ---------------------------------------------------------------------------
# first return

def _sign(side: int) -> str:
    return "+" if side == 0 else "-"


@dataclass(frozen=True)
class Family:
    """{(x + a1, e1) ~ (x + a2, e2) : x in I}, offsets relative to the carrier's left end."""
    a1: Fraction
    e1: str
    a2: Fraction
    e2: str
    lo: Fraction
    hi: Fraction

    def key(self):
        return (self.lo + self.a1, self.e1, self.a2 - self.a1, self.e2, self.hi - self.lo)


@dataclass
class Correspondence:
    carrier: tuple[str, Fraction, Fraction]
    families: list[Family]
    open_intervals: list[tuple[Fraction, Fraction, str]] = field(default_factory=list)

    @property
    def length(self) -> Fraction:
        return self.carrier[2] - self.carrier[1]

    def relates(self, x, ex: str, y, ey: str) -> bool:
        x, y = as_fraction(x) - self.carrier[1], as_fraction(y) - self.carrier[1]
        for f in self.families:
            for (a, e, b, e_) in ((f.a1, f.e1, f.a2, f.e2), (f.a2, f.e2, f.a1, f.e1)):
                t = x - a
                if e == ex and e_ == ey and f.lo <= t <= f.hi and t + b == y:
                    return True
        return False

    def canonical(self, unit: bool = False) -> tuple:
        s = self.length if unit else Fraction(1)

        def form(flip: bool):
            out = []
            for f in self.families:
                e1, e2 = f.e1, f.e2
                if flip:
                    e1, e2 = _flip(e1), _flip(e2)
                ends = sorted([(f.lo + f.a1, e1), (f.lo + f.a2, e2)])
                (p1, s1), (p2, s2) = ends
                out.append((p1 / s, s1, p2 / s, s2, (f.hi - f.lo) / s))
            return tuple(sorted(out))

        return min(form(False), form(True))

    def flipped(self) -> Correspondence:
        fams = [Family(f.a1, _flip(f.e1), f.a2, _flip(f.e2), f.lo, f.hi) for f in self.families]
        return Correspondence(self.carrier, fams, list(self.open_intervals))

    def to_dict(self) -> dict:
        f = format_fraction
        return {
            "carrier": [self.carrier[0], f(self.carrier[1]), f(self.carrier[2])],
            "families": [{"pairs": [[f(x.a1), x.e1], [f(x.a2), x.e2]], "interval": [f(x.lo), f(x.hi)]}
                         for x in self.families],
            "open": [[f(a), f(b), e] for a, b, e in self.open_intervals],
        }


def _flip(e: str) -> str:
    return ("-" if e[0] == "+" else "+") + e[1:]


def _cuts(c: BandComplex, by_comp, cid: str, lo: Fraction, hi: Fraction, extra=()) -> list[Fraction]:
    xs = {lo, hi}
    for b, side in by_comp[cid]:
        o = b.base(side).offset
        for x in (o, o + b.width):
            if lo < x < hi:
                xs.add(x)
    for x in extra:
        if lo < x < hi:
            xs.add(x)
    return sorted(xs)


def first_return(c: BandComplex, sigma, budget: int = 100_000) -> Correspondence:
    """Return correspondence of leaves to the transversal ``sigma`` in the support.

    ``sigma = (component, lo, hi)``.  A point of the support leaves through
    each base covering it: ``+`` through a base0, ``-`` through a base1, tagged
    with the band id when a point has several exits of one sign.  Intervals
    are pushed through the bands, cut wherever the set of exits changes,
    until every piece is back on ``sigma``.
    """
    cid, lo, hi = sigma[0], as_fraction(sigma[1]), as_fraction(sigma[2])
    if not lo < hi:
        raise ValueError("sigma must be nondegenerate")
    _check_point(c, (cid, lo))
    _check_point(c, (cid, hi))
    by_comp = _index(c)
    tagged = _needs_tags(c, by_comp, cid, lo, hi)

    def label(b, side):
        return _sign(side) + (b.id if tagged else "")

    families: list[Family] = []
    open_ivals = []
    steps = 0
    # work items: (start interval on sigma [s, t], start exit, current comp, shift,
    #              arrival band/side, visited (comp, shift) pairs)
    stack = []
    for s, t in zip(*(lambda xs: (xs, xs[1:]))(_cuts(c, by_comp, cid, lo, hi))):
        for b, side in by_comp[cid]:
            o = b.base(side).offset
            if o <= s and t <= o + b.width:
                there = b.base(1 - side)
                stack.append((s, t, label(b, side), there.component, there.offset - o,
                              (b, 1 - side), frozenset([(cid, Fraction(0))])))
    while stack:
        s, t, exit_label, comp, shift, (ab, aside), visited = stack.pop()
        steps += 1
        if steps > budget:
            open_ivals.append((s - lo, t - lo, exit_label))
            continue
        ps, pt = s + shift, t + shift
        if comp == cid:
            inside = _cuts(c, by_comp, comp, ps, pt, (lo, hi))
        else:
            inside = _cuts(c, by_comp, comp, ps, pt)
        for u, v in zip(inside, inside[1:]):
            a, b_ = u - shift, v - shift
            if comp == cid and lo <= u and v <= hi:
                families.append(Family(Fraction(0), exit_label, shift, label(ab, aside), a - lo, b_ - lo))
                continue
            key = (comp, shift)
            if key in visited:
                continue
            for b, side in by_comp[comp]:
                if b is ab and side == aside:
                    continue
                o = b.base(side).offset
                if o <= u and v <= o + b.width:
                    there = b.base(1 - side)
                    stack.append((a, b_, exit_label, there.component, shift + there.offset - o,
                                  (b, 1 - side), visited | {key}))
    return Correspondence((cid, lo, hi), _merge_families(families), sorted(open_ivals))


def _needs_tags(c, by_comp, cid, lo, hi) -> bool:
    xs = _cuts(c, by_comp, cid, lo, hi)
    for s, t in zip(xs, xs[1:]):
        sides = Counter(side for b, side in by_comp[cid]
                        if b.base(side).offset <= s and t <= b.base(side).offset + b.width)
        if sides[0] > 1 or sides[1] > 1:
            return True
    return False


def _normal_family(f: Family) -> Family:
    """The same relation with ``a1 = 0``, read from whichever end comes first."""
    fwd = Family(Fraction(0), f.e1, f.a2 - f.a1, f.e2, f.lo + f.a1, f.hi + f.a1)
    rev = Family(Fraction(0), f.e2, f.a1 - f.a2, f.e1, f.lo + f.a2, f.hi + f.a2)
    return min(fwd, rev, key=lambda x: (x.lo, x.e1, x.a2, x.e2))


def _merge_families(fams: list[Family]) -> list[Family]:
    """Glue adjacent pieces with the same data; keep one of each symmetric pair."""
    groups = defaultdict(list)
    for f in {_normal_family(f) for f in fams}:
        groups[(f.e1, f.a2, f.e2)].append((f.lo, f.hi))
    out = []
    for (e1, a2, e2), ivals in groups.items():
        ivals.sort()
        cur_lo, cur_hi = ivals[0]
        for a, b in ivals[1:]:
            if a <= cur_hi:
                cur_hi = max(cur_hi, b)
            else:
                out.append(Family(Fraction(0), e1, a2, e2, cur_lo, cur_hi))
                cur_lo, cur_hi = a, b
        out.append(Family(Fraction(0), e1, a2, e2, cur_lo, cur_hi))
    # gluing can make a piece coincide with the reverse of another
    return sorted({_normal_family(f) for f in out}, key=lambda f: (f.lo, f.e1, f.a2, f.e2))


def similar(a: Correspondence, b: Correspondence) -> bool:
    """Equal after rescaling both carriers to unit length, up to a flip."""
    return a.canonical(unit=True) == b.canonical(unit=True)


# ---------------------------------------------------------------------------
# blocks

@dataclass
class Block:
    interval: tuple[Fraction, Fraction]     # parameter range on sigma
    bands: list[str]
    arms: list[tuple[str, str]]             # (band, exit label)
    binding_arcs: list[tuple[Fraction, Fraction, str]]
    is_product: bool
    excess: Fraction
    free_arms: int = 0

    def to_dict(self) -> dict:
        f = format_fraction
        return {
            "interval": [f(self.interval[0]), f(self.interval[1])],
            "bands": self.bands, "arms": [list(a) for a in self.arms],
            "binding_arcs": [[f(a), f(b), e] for a, b, e in self.binding_arcs],
            "is_product": self.is_product, "excess": f(self.excess), "free_arms": self.free_arms,
        }


@dataclass
class BlockDecomposition:
    sigma: tuple
    blocks: list[Block]

    def to_dict(self) -> dict:
        sig = [x if isinstance(x, str) else format_fraction(as_fraction(x)) for x in self.sigma]
        return {"sigma": sig,
                "blocks": [b.to_dict() for b in self.blocks]}


def block_decomposition(c: BandComplex, sigma, budget: int = 100_000) -> BlockDecomposition:
    """Blocks of the complex cut along the transversal ``sigma``.

    ``sigma`` is either ``(component, lo, hi)`` in the support or
    ``("band", id, lo, hi)``, a horizontal arc across part of a band at
    height one half, given by offsets inside the band's width.  Points of
    sigma whose leaf pieces (components of leaf minus sigma) have the same
    combinatorics form one block.  A block is a product when every such
    piece is a finite graph; its excess is ``width * (edges - vertices)``
    with the points of sigma counted as vertices.
    """
    from .rips import subdivide_band, cut_vertical

    if sigma[0] == "band":
        _, bid, s, t = sigma
        s, t = as_fraction(s), as_fraction(t)
        band = c.band(bid)
        work = c
        piece = bid
        if s > 0:
            work = cut_vertical(work, piece, s)
            piece = _piece_at(work, bid, band, s)
        if t < band.width:
            work = cut_vertical(work, piece, t - s)
            piece = _piece_at(work, bid, band, s)
        before = {k.id for k in work.components}
        work = subdivide_band(work, piece)
        (new,) = [k.id for k in work.components if k.id not in before]
        return _blocks(work, (new, Fraction(0), t - s), budget, sigma)
    cid, lo, hi = sigma[0], as_fraction(sigma[1]), as_fraction(sigma[2])
    return _blocks(c, (cid, lo, hi), budget, (cid, lo, hi))


def _piece_at(c: BandComplex, root: str, band: Band, s: Fraction) -> str:
    o = band.base0.offset + s
    for b in c.bands:
        if (b.id == root or b.id.startswith(root + ".")) and b.base0.component == band.base0.component \
                and b.base0.offset == o:
            return b.id
    raise KeyError(root)


def _blocks(c: BandComplex, sigma, budget: int, label) -> BlockDecomposition:
    cid, lo, hi = sigma
    by_comp = _index(c)
    xs = set(_cuts(c, by_comp, cid, lo, hi))
    # refine sigma so every piece has constant leaf-piece combinatorics
    from .skeleton import singular_points
    for pc, x in singular_points(c, budget):
        if pc == cid and lo < x < hi:
            xs.add(x)
    xs = sorted(xs)
    pieces = []
    for s, t in zip(xs, xs[1:]):
        mid = (s + t) / 2
        pieces.append((s, t, _leaf_piece_shape(c, by_comp, sigma, mid, budget)))
    blocks: list[Block] = []
    seen = {}
    for s, t, shape in pieces:
        key = shape["key"]
        width = t - s
        if key in seen:
            blk = seen[key]
            blk.interval = (min(blk.interval[0], s - lo), max(blk.interval[1], t - lo))
            blk.binding_arcs.extend((s - lo, t - lo, e) for e in shape["exits"])
            blk.excess += shape["euler"] * width if shape["finite"] else 0
            continue
        blk = Block((s - lo, t - lo), shape["bands"], shape["arms"],
                    [(s - lo, t - lo, e) for e in shape["exits"]],
                    shape["finite"], shape["euler"] * width if shape["finite"] else Fraction(0),
                    shape["free_arms"])
        seen[key] = blk
        blocks.append(blk)
    return BlockDecomposition(label, blocks)


def _leaf_piece_shape(c, by_comp, sigma, x, budget):
    """Combinatorics of the pieces of the leaf through ``x`` cut open at sigma."""
    cid, lo, hi = sigma
    start = (cid, x)
    exits = []
    bands = set()
    verts = {start}
    n_edges = 0
    free_arms = 0
    finite = True
    stack = []
    for b, side in _ports(c, by_comp, start):
        exits.append(_sign(side) + b.id)
        stack.append((b, side, start))
    seen_edges = set()
    while stack:
        b, side, v = stack.pop()
        w = _across(b, side, v[1])
        ekey = (v, b.id, side) if side == 0 else (w, b.id, 0)
        if ekey in seen_edges:
            continue
        seen_edges.add(ekey)
        n_edges += 1
        bands.add(b.id)
        if n_edges > budget:
            finite = False
            break
        if w[0] == cid and lo <= w[1] <= hi:
            verts.add(w)
            continue
        if w not in verts:
            verts.add(w)
            ports = [(bb, ss) for bb, ss in _ports(c, by_comp, w) if not (bb is b and ss == 1 - side)]
            if not ports:
                free_arms += 1
            for bb, ss in ports:
                stack.append((bb, ss, w))
    rel = sorted((format_fraction(p[1] - x), p[0]) for p in verts)
    return {
        "key": (tuple(sorted(exits)), tuple(sorted(bands)), n_edges, len(verts), finite, tuple(rel)),
        "exits": sorted(exits),
        "bands": sorted(bands),
        "arms": sorted((e[1:], e[0]) for e in exits),
        "euler": Fraction(n_edges - len(verts)) if finite else Fraction(0),
        "finite": finite,
        "free_arms": free_arms,
    }
