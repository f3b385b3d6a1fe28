"""Perron-Frobenius data of self-similar unions of bands.

Lengths are row vectors acted on from the right, ``l' = l A``, so ``A[i][j]``
is the number of times long band ``j`` of the small complex runs through
band ``i`` of the big one.  Widths shrink by ``lambda``; lengths grow by
``mu``.  The limit set then has Hausdorff dimension ``1 + log mu / log lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from networkx.algorithms.isomorphism import GraphMatcher

from .core import BandComplex, format_fraction, solid_part
from .rips import collapse
from .skeleton import Skeleton


class NonConvergence(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class HypothesisViolated(ValueError):
    pass


class NotSelfSimilar(ValueError):
    pass


def pf_eigen(M, tol: float = 1e-12, max_iter: int = 100_000):
    """Perron-Frobenius eigenvalue and positive eigenvector by power iteration.

    Returns ``(mu, v, residual)`` with ``v`` normalized to sum 1 and
    ``residual = max|Mv - mu v|``.  Iterating ``(M + I)`` instead of ``M``
    keeps the spectrum's dominant term unique for periodic matrices.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("need a square matrix")
    if np.any(M < 0):
        raise ValueError("matrix has negative entries")
    if np.any(M.sum(axis=1) <= 0):
        raise ValueError("matrix has a zero row")
    k = M.shape[0]
    shifted = M + np.eye(k)
    v = np.full(k, 1.0 / k)
    residual = math.inf
    for _ in range(max_iter):
        u = shifted @ v
        u /= u.sum()
        Mu = M @ u
        mu = float(Mu.sum())
        residual = float(np.max(np.abs(Mu - mu * u)))
        if residual <= tol and np.max(np.abs(u - v)) <= tol:
            return mu, u, residual
        v = u
    raise NonConvergence(f"power iteration did not reach {tol} in {max_iter} steps", residual)


def hausdorff_dimension(mu: float, lam: float) -> float:
    if not mu > 1:
        raise HypothesisViolated(f"need mu > 1, got {mu}")
    if not mu < lam:
        raise HypothesisViolated(f"need mu < lambda, got mu={mu}, lambda={lam}")
    d = 1 + math.log(mu) / math.log(lam)
    assert 1 < d < 2, d
    return d


@dataclass
class SubstitutionData:
    A: list[list[int]]
    lam: Fraction | float
    mu: float
    residual: float
    eigenvector: list[float] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if any(sum(row) <= 0 for row in self.A):
            raise ValueError("every row of A needs a positive sum")

    @classmethod
    def from_matrix(cls, A, lam, tol: float = 1e-12) -> SubstitutionData:
        A = [[int(x) for x in row] for row in A]
        mu, v, res = pf_eigen(np.array(A, dtype=float).T, tol)
        return cls(A, lam, mu, res, [float(x) for x in v])

    def dimension(self) -> float:
        if self.lam is None:
            raise HypothesisViolated("no width shrink factor recorded")
        return hausdorff_dimension(self.mu, float(self.lam))

    def report(self) -> dict:
        checks = {"mu>1": self.mu > 1}
        if self.lam is not None:
            checks["mu<lambda"] = self.mu < float(self.lam)
        dim = self.dimension() if self.lam is not None and all(checks.values()) else None
        if isinstance(self.lam, float):
            lam = round(self.lam, 12)
        elif self.lam is None:
            lam = None
        else:
            lam = format_fraction(Fraction(self.lam))
        return {
            "lambda": lam,
            "mu": round(self.mu, 12),
            "residual": self.residual,
            "dimension": None if dim is None else round(dim, 12),
            "hypothesis_checks": checks,
            "A": self.A,
            "notes": self.notes,
        }


def area_shrink_check(Y: BandComplex, Yp: BandComplex, lam, mu, tol: float = 1e-9) -> bool:
    """Both area claims: ``area(Y') = mu/lambda area(Y)`` and ``area(Y') < area(Y)``.

    The lengths of ``Y`` should be the PF eigenvector of the substitution.
    """
    a, ap = float(Y.area), float(Yp.area)
    return abs(ap - mu / float(lam) * a) <= tol * a and ap < a


def area_ratio(sub: SubstitutionData, widths_big, widths_small, area_matrix) -> tuple[float, float]:
    """Areas of a pair when lengths are the PF eigenvector: ``(area(Y), area(Y'))``.

    ``area_matrix`` maps (lengths, widths) to area bilinearly: ``l M w``.
    """
    ell = np.array(sub.eigenvector)
    ellp = ell @ np.array(sub.A, dtype=float)
    M = np.array(area_matrix, dtype=float)
    return float(ell @ M @ np.asarray(widths_big, float)), float(ellp @ M @ np.asarray(widths_small, float))


# ---------------------------------------------------------------------------
# substitution matrices from a collapse schedule

def _origin(band_id: str) -> str:
    return band_id.split(".")[0]


def _solve_exact(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """The unique exact solution of an overdetermined system, or None."""
    n = len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    piv_row = 0
    pivots = []
    for col in range(n):
        r = next((i for i in range(piv_row, len(aug)) if aug[i][col] != 0), None)
        if r is None:
            return None
        aug[piv_row], aug[r] = aug[r], aug[piv_row]
        p = aug[piv_row][col]
        aug[piv_row] = [x / p for x in aug[piv_row]]
        for i in range(len(aug)):
            if i != piv_row and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[piv_row])]
        pivots.append(piv_row)
        piv_row += 1
    if any(row[-1] != 0 for row in aug[piv_row:]):
        return None
    return [aug[i][-1] for i in pivots]


def _edge_counts(sk: Skeleton, base: int, width: int) -> dict:
    """Skeleton edge node -> digit vector of its (base-encoded) length."""
    out = {}
    for k, e in sk._edges.items():
        x = int(e.length)
        digits = []
        for _ in range(width):
            x, d = divmod(x, base)
            digits.append(Fraction(d))
        out[("e", k)] = digits
    return out


def _replay(Y: BandComplex, schedule) -> BandComplex:
    if hasattr(schedule, "collapses"):
        schedule = schedule.collapses
    cur = Y.forget_lengths()
    for arc in schedule:
        cur = collapse(cur, arc)
    return solid_part(cur)


def whole_bands(Y: BandComplex, schedule) -> list[str]:
    """Bands of ``Y`` whose full width survives the schedule.

    The area argument for self-similar pairs assumes there are none.
    """
    left: dict[str, Fraction] = {}
    for b in _replay(Y, schedule).bands:
        left[_origin(b.id)] = left.get(_origin(b.id), Fraction(0)) + b.width
    return [b.id for b in Y.bands if left.get(b.id, 0) >= b.width]


def traversal_matrix(Y: BandComplex, schedule, model: BandComplex, budget: int = 200_000):
    """Band traversal counts of the complex reached from ``Y`` by ``schedule``.

    ``model`` is a complex isomorphic to the reached one whose bands are the
    long bands of interest.  Returns ``(y_bands, model_bands, T)`` with
    ``T[i][j]`` the number of times long band ``j`` runs through band ``i``
    of ``Y``.  Every band id of ``Y`` must be free of dots, since collapse
    fragments are traced back by id prefix.
    """
    y_ids = [b.id for b in Y.bands]
    m_ids = [b.id for b in model.bands]
    if any("." in b for b in y_ids):
        raise ValueError("band ids of Y must not contain '.'")
    cur = _replay(Y, schedule)
    base = max(len(cur.bands), len(model.bands)) + 2

    # lengths base**i encode per-band crossing counts in the digits
    reached = cur.with_lengths({b.id: base ** y_ids.index(_origin(b.id)) for b in cur.bands})
    tagged = model.with_lengths({b: base ** j for j, b in enumerate(m_ids)})
    sk_r, sk_m = Skeleton(reached, budget), Skeleton(tagged, budget)
    plain_r = Skeleton(reached.forget_lengths(), budget).graph()
    plain_m = Skeleton(tagged.forget_lengths(), budget).graph()
    r_counts = _edge_counts(sk_r, base, len(y_ids))
    m_counts = _edge_counts(sk_m, base, len(m_ids))

    gm = GraphMatcher(plain_r, plain_m, node_match=lambda a, b: a["label"] == b["label"],
                      edge_match=lambda a, b: a["t"] == b["t"])
    for mapping in gm.isomorphisms_iter():
        edges = [v for v in plain_r if v in r_counts]
        lhs = [m_counts[mapping[v]] for v in edges]
        T = []
        for i in range(len(y_ids)):
            sol = _solve_exact(lhs, [r_counts[v][i] for v in edges])
            if sol is None or any(x < 0 or x.denominator != 1 for x in sol):
                break
            T.append([int(x) for x in sol])
        else:
            return y_ids, m_ids, T
    raise NotSelfSimilar("the reached complex is not isomorphic to the model")


def substitution_matrix(Y: BandComplex, schedule, model: BandComplex, lam=None,
                        tied: dict | None = None, tol: float = 1e-12) -> SubstitutionData:
    """Length substitution ``l' = l A`` along a collapse schedule.

    ``tied`` maps band ids to a shared length variable (bands listed there
    always carry the same length as the band they point to); rows are
    summed and columns must agree.  Variables are ordered as the bands of
    ``Y`` that are not tied to another band.
    """
    y_ids, m_ids, T = traversal_matrix(Y, schedule, model)
    tied = dict(tied or {})
    if set(y_ids) != set(m_ids):
        raise NotSelfSimilar("model bands must carry the same ids as the bands of Y")
    names = [b for b in y_ids if b not in tied]
    var = {b: names.index(tied.get(b, b)) for b in y_ids}
    A = [[0] * len(names) for _ in names]
    for j, b in enumerate(m_ids):
        col = [0] * len(names)
        for i, a in enumerate(y_ids):
            col[var[a]] += T[i][j]
        if b not in tied:
            for r in range(len(names)):
                A[r][var[b]] = col[r]
    for b, t in tied.items():
        j = m_ids.index(b)
        col = [0] * len(names)
        for i, a in enumerate(y_ids):
            col[var[a]] += T[i][j]
        if col != [A[r][var[t]] for r in range(len(names))]:
            raise NotSelfSimilar(f"tied band {b!r} gets a different length than {t!r}")
    sub = SubstitutionData.from_matrix(A, lam, tol)
    sub.notes.append("variables: " + ", ".join(names))
    whole = whole_bands(Y, schedule)
    if whole:
        sub.notes.append("bands lying wholly in the small complex: " + ", ".join(whole))
    return sub
