"""Presentation-free isomorphism of rational unions of bands.

Two unions of bands are isomorphic when some homeomorphism carries one
transverse form onto the other; the support intervals need not correspond.
For rational data every leaf is a finite graph, so the complex splits into

* singular leaves: the orbits of component and base endpoints, and
* families: products (finite graph) x (open interval), one for each class of
  open intervals between consecutive singular orbit points.

The skeleton records both, how each family's two ends sit inside the
singular leaves, and the band-crossing lengths of enhanced complexes.
Vertices that only exist because of where the support happens to be cut
are smoothed away, so the skeleton is an isomorphism invariant and, up to
graph isomorphism, a complete one.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
from networkx.algorithms.isomorphism import GraphMatcher

from .core import BandComplex, format_fraction


class SkeletonBudgetExceeded(RuntimeError):
    pass


def singular_points(c: BandComplex, budget: int = 200_000) -> set[tuple[str, Fraction]]:
    """Closure of all component and base endpoints under band crossings."""
    seeds = set()
    for comp in c.components:
        seeds.add((comp.id, Fraction(0)))
        seeds.add((comp.id, comp.length))
    for b in c.bands:
        for base in (b.base0, b.base1):
            seeds.add((base.component, base.offset))
            seeds.add((base.component, base.offset + b.width))
    by_comp = defaultdict(list)
    for b in c.bands:
        for side in (0, 1):
            by_comp[b.base(side).component].append((b, side))
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        cid, x = stack.pop()
        for b, side in by_comp[cid]:
            o = b.base(side).offset
            if o <= x <= o + b.width:
                there = b.base(1 - side)
                pt = (there.component, x - o + there.offset)
                if pt not in seen:
                    seen.add(pt)
                    if len(seen) > budget:
                        raise SkeletonBudgetExceeded(f"more than {budget} singular orbit points")
                    stack.append(pt)
    return seen


@dataclass
class _Edge:
    kind: str            # "fe" (inside a family) or "se" (on a singular leaf)
    label: str           # crossing type for "se"
    length: Fraction | None
    ends: list           # vertex keys, 0 or 2 entries
    family: int | None = None
    img: dict = None     # "L"/"R" -> {se edge id: raw pieces crossed}
    pieces: int = 1


class Skeleton:
    """The smoothed leaf-space graph of a complex, as a networkx graph."""

    def __init__(self, c: BandComplex, budget: int = 200_000, scale=1):
        self.enhanced = c.enhanced
        self.scale = Fraction(scale)
        self._build(c, budget)

    # raw structure --------------------------------------------------------

    def _build(self, c: BandComplex, budget: int) -> None:
        pts = singular_points(c, budget)
        by_comp = defaultdict(list)
        for cid, x in pts:
            by_comp[cid].append(x)
        atoms = []
        atom_at = {}
        for comp in c.components:
            xs = sorted(by_comp[comp.id])
            for p, q in zip(xs, xs[1:]):
                key = ("a", comp.id, p)
                atom_at[(comp.id, p)] = key
                atoms.append((key, comp.id, p, q))

        # union-find over atoms gives the families
        parent = {a[0]: a[0] for a in atoms}

        def find(k):
            while parent[k] != k:
                parent[k] = parent[parent[k]]
                k = parent[k]
            return k

        attach = defaultdict(list)
        for b in c.bands:
            attach[b.base0.component].append(b)

        edges: dict[int, _Edge] = {}
        inc = defaultdict(list)          # vertex -> [edge ids] (loops twice)
        eid = itertools.count()
        se_of = {}                       # (point, band) -> se edge id

        def new_edge(e: _Edge) -> int:
            i = next(eid)
            edges[i] = e
            for v in e.ends:
                inc[v].append(i)
            return i

        def length_of(b):
            return b.length if self.enhanced else None

        for cid, x in sorted(pts):
            inc.setdefault(("p", cid, x), [])
        for b in c.bands:
            o0, o1 = b.base0.offset, b.base1.offset
            for cid, x in [(b.base0.component, x) for (cc, x) in pts if cc == b.base0.component
                           and o0 <= x <= o0 + b.width]:
                r = x - o0
                if b.width == 0:
                    label = "deg"
                elif r == 0:
                    label = "L"
                elif r == b.width:
                    label = "R"
                else:
                    label = "int"
                u = ("p", cid, x)
                v = ("p", b.base1.component, r + o1)
                se_of[(cid, x, b.id)] = new_edge(_Edge("se", label, length_of(b), [u, v]))

        families = {}
        for key, cid, p, q in atoms:
            inc.setdefault(key, [])
        for key, cid, p, q in atoms:
            for b in attach[cid]:
                o0 = b.base0.offset
                if o0 <= p and q <= o0 + b.width:
                    other = atom_at[(b.base1.component, p - o0 + b.base1.offset)]
                    parent[find(key)] = find(other)
        for key, cid, p, q in atoms:
            families.setdefault(find(key), (q - p))
        fam_index = {root: i for i, root in enumerate(sorted(families, key=str))}
        self.family_width = {fam_index[r]: w * self.scale for r, w in families.items()}
        atom_family = {}
        atom_span = {}
        for key, cid, p, q in atoms:
            atom_family[key] = fam_index[find(key)]
            atom_span[key] = (cid, p, q)
        for key, cid, p, q in atoms:
            for b in attach[cid]:
                o0 = b.base0.offset
                if o0 <= p and q <= o0 + b.width:
                    other = atom_at[(b.base1.component, p - o0 + b.base1.offset)]
                    img = {"L": {se_of[(cid, p, b.id)]: 1}, "R": {se_of[(cid, q, b.id)]: 1}}
                    new_edge(_Edge("fe", "", length_of(b), [key, other], atom_family[key], img))

        self._edges = edges
        self._inc = inc
        self._atom_family = atom_family
        # atom -> its two endpoint vertices (transverse direction is intrinsic)
        self._sides = {key: {"L": ("p", cid, p), "R": ("p", cid, q)} for key, (cid, p, q) in atom_span.items()}
        self._smooth()

    # smoothing -------------------------------------------------------------

    def _point_smoothable(self, v) -> bool:
        ids = self._inc[v]
        if len(ids) != 2 or ids[0] == ids[1]:
            return False
        labels = sorted(self._edges[i].label for i in ids)
        if labels == ["int", "int"]:
            return True
        # bands in series: smooth only where the support ends on that side
        if labels == ["L", "L"]:
            return v not in self._left_atom
        if labels == ["R", "R"]:
            return v not in self._right_atom
        return False

    def _smooth(self) -> None:
        self._left_atom = {s["R"]: a for a, s in self._sides.items()}
        self._right_atom = {s["L"]: a for a, s in self._sides.items()}
        self._alias = {}
        self._next = max(self._edges, default=-1) + 1
        changed = True
        while changed:
            changed = False
            for v in sorted(self._inc, key=str):
                ids = self._inc.get(v)
                if ids is None:
                    continue
                ok = len(ids) == 2 if v[0] == "a" else self._point_smoothable(v)
                if ok:
                    self._merge_at(v)
                    changed = True

    def _merge_at(self, v) -> None:
        edges, inc = self._edges, self._inc
        i, j = inc.pop(v)
        ei, ej = edges[i], edges[j]
        if i == j:
            ei.ends = []
            if ei.kind == "se":
                self._alias[v] = i
            return
        other_i = list(ei.ends)
        other_i.remove(v)
        other_j = list(ej.ends)
        other_j.remove(v)
        ends = [other_i[0], other_j[0]]
        length = None if ei.length is None else ei.length + ej.length
        img = None
        if ei.kind == "fe":
            img = {s: dict(ei.img[s]) for s in "LR"}
            for s in "LR":
                for k, n in ej.img[s].items():
                    img[s][k] = img[s].get(k, 0) + n
        k = self._next
        self._next += 1
        edges[k] = _Edge(ei.kind, ei.label, length, ends, ei.family, img, ei.pieces + ej.pieces)
        del edges[i], edges[j]
        for u in set(ends):
            inc[u] = [x for x in inc[u] if x not in (i, j)]
        for u in ends:
            inc[u].append(k)
        if ei.kind == "se":
            for e in edges.values():
                if e.kind == "fe":
                    for s in "LR":
                        n = e.img[s].pop(i, 0) + e.img[s].pop(j, 0)
                        if n:
                            e.img[s][k] = e.img[s].get(k, 0) + n
            for p, old in self._alias.items():
                if old in (i, j):
                    self._alias[p] = k
            self._alias[v] = k

    # graph export ----------------------------------------------------------

    def graph(self) -> nx.Graph:
        g = nx.Graph()

        def fmt(q):
            return "-" if q is None else format_fraction(q)

        for f, w in self.family_width.items():
            g.add_node(("F", f), label=f"F|{format_fraction(w)}")
        for v in self._inc:
            g.add_node(v, label="av" if v[0] == "a" else "pv")
            if v[0] == "a":
                g.add_edge(v, ("F", self._atom_family[v]), t="member")
                for side in "LR":
                    p = self._sides[v][side]
                    target = p if p in self._inc else ("e", self._alias[p])
                    g.add_edge(v, target, t="side" + side)
        for k, e in self._edges.items():
            node = ("e", k)
            g.add_node(node, label=f"{e.kind}|{e.label}|{fmt(e.length)}")
            counts = defaultdict(int)
            for u in e.ends:
                counts[u] += 1
            for u, n in counts.items():
                g.add_edge(node, u, t=f"end{n}")
            if e.kind == "fe":
                g.add_edge(node, ("F", e.family), t="member")
                for s in "LR":
                    for se, n in e.img[s].items():
                        g.add_edge(node, ("e", se), t=f"img{s}{n // self._edges[se].pieces}")
        return g


def skeleton_graph(c: BandComplex, budget: int = 200_000, scale=1) -> nx.Graph:
    return Skeleton(c, budget, scale).graph()


def skeleton_hash(g: nx.Graph) -> str:
    return nx.weisfeiler_lehman_graph_hash(g, node_attr="label", edge_attr="t", iterations=4)


def _matcher(ga: nx.Graph, gb: nx.Graph) -> GraphMatcher:
    return GraphMatcher(ga, gb, node_match=lambda x, y: x["label"] == y["label"],
                        edge_match=lambda x, y: x["t"] == y["t"])


def graph_isomorphism(ga: nx.Graph, gb: nx.Graph) -> dict | None:
    if ga.number_of_nodes() != gb.number_of_nodes() or ga.number_of_edges() != gb.number_of_edges():
        return None
    gm = _matcher(ga, gb)
    return dict(gm.mapping) if gm.is_isomorphic() else None


def graphs_isomorphic(ga: nx.Graph, gb: nx.Graph) -> bool:
    return graph_isomorphism(ga, gb) is not None


def equivalence(a: BandComplex, b: BandComplex, scale=1, budget: int = 200_000) -> dict | None:
    """A graph isomorphism between the skeletons of ``a`` (rescaled) and ``b``, or None."""
    if a.enhanced != b.enhanced:
        return None
    ga = skeleton_graph(a, budget, scale)
    gb = skeleton_graph(b, budget)
    if skeleton_hash(ga) != skeleton_hash(gb):
        return None
    return graph_isomorphism(ga, gb)


def equivalent(a: BandComplex, b: BandComplex, scale=1, budget: int = 200_000) -> bool:
    """Whether ``a`` rescaled by ``scale`` and ``b`` are isomorphic as foliated complexes."""
    return equivalence(a, b, scale, budget) is not None
