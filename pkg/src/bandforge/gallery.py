"""The two-parameter family Z(w, l) and its Rips-machine renormalization.

Widths are column 5-vectors, lengths are row 3-vectors.  One Rips stage
with parameters (m, n) takes ``Z(B(m,n) w', l)`` to ``Z(w', l A(m,n))``.
Everything here is exact; only :func:`projective_fixed_widths` is numeric.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    BandComplex,
    as_fraction,
    excess,
    format_fraction,
    invariant_key,
    isomorphism,
    make_complex,
    solid_part,
)
from .rips import collapse, free_arcs
from .skeleton import graph_isomorphism, skeleton_graph, skeleton_hash


class NonPositiveParameter(ValueError):
    pass


class InvalidWidths(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


Matrix = list[list[int]]


def _check(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise NonPositiveParameter(f"m and n must be >= 1, got m={m}, n={n}")


def matrix_A(m: int, n: int) -> Matrix:
    _check(m, n)
    return [
        [m + 3, m + 3, (m + 3) * (n + 1) - 1],
        [0, 1, 1],
        [m + 2, m + 1, (m + 2) * (n + 1)],
    ]


def matrix_B(m: int, n: int) -> Matrix:
    _check(m, n)
    return [
        [n + 3, 2 * n + 5, 2 * n + 6, n + 3, n + 3],
        [1, 3, 4, 2, 1],
        [1, 1, 0, 0, 0],
        [n + 2, 2 * n + 4, 2 * n + 5, n + 2, n + 2],
        [m * (n + 5), m * (2 * n + 9) - 1, 2 * m * (n + 5) - 1, m * (n + 5), m * (n + 4)],
    ]


def matrix_Bprime(m: int, n: int) -> Matrix:
    _check(m, n)
    return [
        [n + 1, n, 0, 1, 0],
        [0, 1, 0, 0, 1],
        [0, 0, 1, 0, 0],
        [n, n, 0, 1, 0],
        [m * (n + 1), m * (n + 1) - 1, m, m, m],
    ]


def matrix_Bsecond() -> Matrix:
    return [
        [1, 1, 1, 1, 1],
        [0, 1, 1, 0, 0],
        [1, 1, 0, 0, 0],
        [2, 4, 5, 2, 2],
        [1, 2, 3, 2, 1],
    ]


def matrix_C() -> Matrix:
    return [
        [2, 1, 1, 1, 1],
        [0, 1, 1, 0, 0],
        [1, 1, 1, 1, 1],
    ]


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def matvec(a, v):
    return [sum(a[i][k] * v[k] for k in range(len(v))) for i in range(len(a))]


def vecmat(v, a):
    return [sum(v[k] * a[k][j] for k in range(len(v))) for j in range(len(a[0]))]


# ---------------------------------------------------------------------------
# the complex Z(w, l)

def _widths(w) -> list[Fraction]:
    w = [as_fraction(x) for x in w]
    if len(w) != 5 or any(x <= 0 for x in w):
        raise InvalidWidths(f"need five positive widths, got {w}")
    return w


def _lengths(ell) -> list[Fraction]:
    ell = [as_fraction(x) for x in ell]
    if len(ell) != 3 or any(x < 0 for x in ell) or not any(ell):
        raise InvalidWidths(f"need three non-negative lengths, not all zero, got {ell}")
    return ell


def three_band_intervals(w) -> list[tuple[Fraction, Fraction, Fraction]]:
    """``(width, left offset, right offset)`` of the three partial isometries on [0, |D|]."""
    w1, w2, w3, w4, w5 = _widths(w)
    total = 2 * w1 + 2 * w2 + 2 * w3 + w4 + w5
    return [
        (w1, Fraction(0), w1 + 2 * w2 + 2 * w3 + w4 + w5),
        (w2 + w3, w1 + w2, w1 + w2 + w3 + w4),
        (w1 + w2 + w3 + w4 + w5, Fraction(0), w1 + w2 + w3),
    ], total


def build_Z(w, ell=(1, 1, 1), presentation: str = "three_band") -> BandComplex:
    """Enhanced union of bands Z(w, l).

    ``four_band`` is Z itself: B4 (width w1+...+w5, length l1) joins
    ``D[0, |B3|]`` to a second interval ``E``, B3 runs from ``E`` back to
    ``D`` and one base of B2 sits on ``E``.  Gluing ``E`` onto ``D`` along
    B4 gives ``three_band``, the partial-isometry system on ``[0, |D|]``.
    That gluing is not an isomorphism (the B2 base moves), so the Rips
    step is checked on ``four_band``.  In ``three_band`` B3 carries
    length l1 + l3 so that both presentations have area l C w.
    """
    w = _widths(w)
    l1, l2, l3 = _lengths(ell)
    (a, b, c), total = three_band_intervals(w)
    if presentation == "three_band":
        return make_complex(
            {"D": total},
            [("B1", a[0], ("D", a[1]), ("D", a[2])),
             ("B2", b[0], ("D", b[1]), ("D", b[2])),
             ("B3", c[0], ("D", c[1]), ("D", c[2]))],
            {"B1": l1, "B2": l2, "B3": l1 + l3},
        )
    if presentation == "four_band":
        return make_complex(
            {"D": total, "E": c[0]},
            [("B1", a[0], ("D", a[1]), ("D", a[2])),
             ("B2", b[0], ("E", b[1]), ("D", b[2])),
             ("B3", c[0], ("E", 0), ("D", c[2])),
             ("B4", c[0], ("D", c[1]), ("E", 0))],
            {"B1": l1, "B2": l2, "B3": l3, "B4": l1},
        )
    raise ValueError(f"unknown presentation {presentation!r}")


def area_formula(w, ell) -> Fraction:
    """l . C . w, the total area of Z(w, l) with B4 counted."""
    return sum(x * y for x, y in zip(vecmat(_lengths(ell), matrix_C()), _widths(w)))


# ---------------------------------------------------------------------------
# gallery specs

@dataclass(frozen=True)
class GallerySpec:
    m: tuple[int, ...]
    n: tuple[int, ...]
    K: int
    seed: tuple[Fraction, ...] = (Fraction(1),) * 5
    ell0: tuple[Fraction, ...] = (Fraction(1),) * 3
    presentation: str = "three_band"

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        object.__setattr__(self, "n", tuple(int(x) for x in self.n))
        object.__setattr__(self, "seed", tuple(_widths(self.seed)))
        object.__setattr__(self, "ell0", tuple(_lengths(self.ell0)))
        if self.K < 0 or len(self.m) < self.K or len(self.n) < self.K:
            raise ValueError(f"need at least K={self.K} entries in m and n")
        if any(x < 1 for x in self.m + self.n):
            raise NonPositiveParameter("all m_k, n_k must be >= 1")

    @property
    def two_ended_regime(self) -> bool:
        """m_k = n_k <= m_{k+1} / 2 on the available range."""
        k_max = min(len(self.m), len(self.n))
        if any(self.m[k] != self.n[k] for k in range(k_max)):
            return False
        return all(2 * self.m[k] <= self.m[k + 1] for k in range(len(self.m) - 1))

    @classmethod
    def from_dict(cls, d: dict) -> GallerySpec:
        return cls(d["m"], d["n"], int(d["K"]), tuple(d.get("seed", [1] * 5)),
                   tuple(d.get("ell0", [1, 1, 1])), d.get("presentation", "three_band"))

    def to_dict(self) -> dict:
        return {"m": list(self.m), "n": list(self.n), "K": self.K,
                "seed": [format_fraction(x) for x in self.seed],
                "ell0": [format_fraction(x) for x in self.ell0],
                "presentation": self.presentation}

    @classmethod
    def constant(cls, m: int, n: int, K: int, **kw) -> GallerySpec:
        return cls((m,) * K, (n,) * K, K, **kw)

    @classmethod
    def doubling(cls, K: int, start: int = 1, **kw) -> GallerySpec:
        m = tuple(start * 2 ** k for k in range(K))
        return cls(m, m, K, **kw)


def truncated_widths(spec: GallerySpec) -> list[list[Fraction]]:
    """w_0 .. w_K with w_K = seed and w_k = B(m_k, n_k) w_{k+1}."""
    ws = [list(spec.seed)]
    for k in reversed(range(spec.K)):
        ws.append(matvec(matrix_B(spec.m[k], spec.n[k]), ws[-1]))
    ws.reverse()
    return ws


def length_sequence(spec: GallerySpec) -> list[list[Fraction]]:
    """l_0 .. l_K with l_{k+1} = l_k A(m_k, n_k)."""
    ls = [list(spec.ell0)]
    for k in range(spec.K):
        ls.append(vecmat(ls[-1], matrix_A(spec.m[k], spec.n[k])))
    return ls


@dataclass(frozen=True)
class GalleryState:
    k: int
    w: tuple[Fraction, ...]
    ell: tuple[Fraction, ...]
    area: Fraction

    def complex(self, presentation="four_band") -> BandComplex:
        return build_Z(self.w, self.ell, presentation)


def gallery_states(spec: GallerySpec) -> list[GalleryState]:
    ws, ls = truncated_widths(spec), length_sequence(spec)
    return [GalleryState(k, tuple(w), tuple(l), area_formula(w, l)) for k, (w, l) in enumerate(zip(ws, ls))]


def gallery_complex(spec: GallerySpec) -> BandComplex:
    """Z(w_0, l_0) for the truncated spec."""
    return build_Z(truncated_widths(spec)[0], spec.ell0, spec.presentation)


# ---------------------------------------------------------------------------
# areas

@dataclass(frozen=True)
class AreaVerdict:
    k: int
    S_k: Fraction
    S_next: Fraction | None
    factor: Fraction | None
    inequality: bool | None
    certificate: bool | None
    certificate_min_entry: Fraction | None = None
    raw_inequality: bool | None = None      # the bare comparison, also at k = K-1


def certificate_matrix(m_k: int, m_next: int) -> list[list[Fraction]]:
    """m_k (A_k C - (1 - 2/m_k) C B_k) B_{k+1} with n_k = m_k, n_{k+1} = m_{k+1}."""
    A, B, Bn, C = matrix_A(m_k, m_k), matrix_B(m_k, m_k), matrix_B(m_next, m_next), matrix_C()
    f = 1 - Fraction(2, m_k)
    AC, CB = matmul(A, C), matmul(C, B)
    inner = [[AC[i][j] - f * CB[i][j] for j in range(5)] for i in range(3)]
    return [[m_k * x for x in row] for row in matmul(inner, Bn)]


def area_sequence(spec: GallerySpec) -> list[AreaVerdict]:
    """Exact S_k = l_k C w_k with the two-ended-regime checks.

    For each k <= K-2: whether S_{k+1} > (1 - 2/m_k) S_k and whether the
    certificate matrix has only positive entries.  Both need
    w_{k+1} = B_{k+1} w_{k+2}, which fails at k = K-1 where w_K is the
    seed; there only ``raw_inequality`` is filled in.  Outside the regime
    m_k = n_k <= m_{k+1}/2 the verdicts are None.
    """
    states = gallery_states(spec)
    regime = spec.two_ended_regime
    out = []
    for k, st in enumerate(states):
        if k == spec.K:
            out.append(AreaVerdict(k, st.area, None, None, None, None))
            break
        nxt = states[k + 1].area
        factor = 1 - Fraction(2, spec.m[k])
        raw = nxt > factor * st.area
        ineq = cert = low = None
        if regime and k + 1 < spec.K:
            ineq = raw
            mat = certificate_matrix(spec.m[k], spec.m[k + 1])
            low = min(x for row in mat for x in row)
            cert = low > 0
        out.append(AreaVerdict(k, st.area, nxt, factor, ineq, cert, low, raw))
    return out


# ---------------------------------------------------------------------------
# projective fixed point

def _eta(B: np.ndarray, v: np.ndarray) -> np.ndarray:
    u = B @ v
    return u / np.linalg.norm(u)


def projective_distance(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(u / np.linalg.norm(u) - v / np.linalg.norm(v))))


def hilbert_distance(u, v) -> float:
    """Hilbert projective metric on the open positive cone."""
    r = np.asarray(u, dtype=float) / np.asarray(v, dtype=float)
    return float(np.log(r.max() / r.min()))


def projective_fixed_widths(m, n, tol: float = 1e-12, start=None, max_iter: int = 100_000) -> np.ndarray:
    """Unit positive vector w_0 of the infinite renormalization sequence.

    ``m`` and ``n`` are eventually periodic: either ints (constant) or a
    pair ``(prefix, period)`` of tuples.  Iterates
    v <- eta_{B_0} o ... o eta_{B_{N-1}} (v) for growing depth N until two
    successive results agree to ``tol`` in the max norm.
    """
    ms, ns = _expand(m), _expand(n)
    v0 = np.ones(5) if start is None else np.asarray(start, dtype=float)
    if np.any(v0 <= 0):
        raise ValueError("starting vector must be positive")
    prev = v0 / np.linalg.norm(v0)
    for depth in range(1, max_iter + 1):
        v = v0 / np.linalg.norm(v0)
        for k in reversed(range(depth)):
            v = _eta(np.array(matrix_B(ms(k), ns(k)), dtype=float), v)
        if np.max(np.abs(v - prev)) < tol:
            return v
        prev = v
    raise NonConvergence(f"no convergence to {tol} within {max_iter} iterations")


def _expand(seq):
    if isinstance(seq, int):
        return lambda k: seq
    prefix, period = seq
    prefix, period = tuple(prefix), tuple(period)
    return lambda k: prefix[k] if k < len(prefix) else period[(k - len(prefix)) % len(period)]


# ---------------------------------------------------------------------------
# one Rips stage, found by search

class SearchExhausted(RuntimeError):
    pass


@dataclass
class StepWitness:
    m: int
    n: int
    schedule: list
    start: BandComplex
    reached: BandComplex
    target: BandComplex
    isomorphism: dict
    explored: int
    excess_ledger: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "m": self.m, "n": self.n, "status": "verified",
            "collapses": len(self.schedule),
            "schedule": [a.describe() for a in self.schedule],
            "explored_states": self.explored,
            "isomorphism": self.isomorphism,
            "excess": [format_fraction(x) for x in self.excess_ledger],
        }


def _node_name(v) -> str:
    return ":".join(format_fraction(x) if isinstance(x, Fraction) else str(x) for x in v)


def verify_rips_step(m: int, n: int, w_prime=(1, 1, 1, 1, 1), ell=(1, 1, 1),
                     budget: int = 200_000) -> StepWitness:
    """Find collapses taking Z(B(m,n) w', l) to a complex isomorphic to Z(w', l A(m,n)).

    Exhaustive over collapse sequences that keep the area at least the
    target's: area is an isomorphism invariant and never grows under a
    collapse.  States come off the queue smallest area first, so the
    target is met early.  Duplicates are dropped only up to isomorphism
    of presentations: a collapse removes a whole band strip, so two
    presentations of one foliated complex can have different futures.
    Candidates are compared with the target on their solid parts.
    """
    _check(m, n)
    w_prime = _widths(w_prime)
    ell = _lengths(ell)
    start = build_Z(matvec(matrix_B(m, n), w_prime), ell, "four_band")
    target = build_Z(w_prime, vecmat(ell, matrix_A(m, n)), "four_band")
    target_area = target.area
    target_graph = skeleton_graph(target)
    target_hash = skeleton_hash(target_graph)

    seen: dict[tuple, list[BandComplex]] = {}

    def remember(c: BandComplex) -> bool:
        bucket = seen.setdefault(invariant_key(c), [])
        if any(isomorphism(c, d) is not None for d in bucket):
            return False
        bucket.append(c)
        return True

    remember(start)
    tick = itertools.count()
    heap = [(start.area, next(tick), start, [])]
    explored = 0
    while heap:
        area, _, c, schedule = heapq.heappop(heap)
        explored += 1
        if explored > budget:
            raise SearchExhausted(f"no schedule found within {budget} states")
        if area == target_area:
            g = skeleton_graph(solid_part(c))
            if skeleton_hash(g) == target_hash:
                mapping = graph_isomorphism(g, target_graph)
                if mapping is not None:
                    ledger = [excess(start)]
                    cur = start
                    for arc in schedule:
                        cur = collapse(cur, arc)
                        ledger.append(excess(cur))
                    named = {_node_name(u): _node_name(v) for u, v in sorted(mapping.items(), key=str)}
                    return StepWitness(m, n, schedule, start, c, target, named, explored, ledger)
            continue
        for arc in free_arcs(c):
            nxt = collapse(c, arc)
            if nxt.area >= target_area and remember(nxt):
                heapq.heappush(heap, (nxt.area, next(tick), nxt, schedule + [arc]))
    raise SearchExhausted("search space exhausted without reaching the target")


def step_substitution(m: int, n: int, w_prime=(1, 1, 1, 1, 1), ell=(1, 1, 1)):
    """The length substitution of one Rips stage, read off a search witness.

    B4 always has the length of B1, so it is tied to B1 and the result is
    a 3x3 matrix directly comparable with :func:`matrix_A`.
    """
    from .spectral import substitution_matrix

    w = verify_rips_step(m, n, w_prime, ell)
    sub = substitution_matrix(w.start, w.schedule, w.target, tied={"B4": "B1"})
    sub.notes.append(f"{len(w.schedule)} collapses")
    return sub
