"""Acceptance criteria 1-9, one test each.

Golden values were produced by the oracles named next to them, then frozen.
"""
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from bandforge.core import excess, total_width
from bandforge.gallery import (
    GallerySpec,
    area_sequence,
    gallery_complex,
    matmul,
    matrix_A,
    matrix_B,
    matrix_Bprime,
    matrix_Bsecond,
    matrix_C,
    projective_distance,
    projective_fixed_widths,
    step_substitution,
    truncated_widths,
    verify_rips_step,
)
from bandforge.leaves import CALIBRATED_LADDER, CALIBRATED_RADIUS, end_statistics
from bandforge.rips import cut_component, imanishi
from bandforge.skeleton import equivalent
from bandforge.spectral import hausdorff_dimension, pf_eigen

from conftest import random_complex, random_move

PAIRS = [(1, 1), (1, 2), (2, 1), (2, 2)]

# power iteration, cross-checked against numpy.linalg.eigvals, then frozen
GOLDEN_MU_11 = 9.966803276449
GOLDEN_LAMBDA_11 = 15.704491212260
GOLDEN_DIM_11 = 1.834896284780


def _within(t0, seconds):
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"took {elapsed:.1f}s, budget {seconds}s"


def test_criterion_1_matrix_fidelity():
    t0 = time.perf_counter()
    assert matrix_C() == [[2, 1, 1, 1, 1], [0, 1, 1, 0, 0], [1, 1, 1, 1, 1]]
    for m in range(1, 6):
        for n in range(1, 6):
            A, B = matrix_A(m, n), matrix_B(m, n)
            assert A[0] == [m + 3, m + 3, (m + 3) * (n + 1) - 1]
            assert A[2] == [m + 2, m + 1, (m + 2) * (n + 1)]
            assert B[4] == [m * (n + 5), m * (2 * n + 9) - 1, 2 * m * (n + 5) - 1, m * (n + 5), m * (n + 4)]
            assert matmul(matrix_Bprime(m, n), matrix_Bsecond()) == B
    _within(t0, 1)


def test_criterion_2_excess_conservation():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    sequences = 0
    while sequences < 1000:
        c = random_complex(rng)
        e = excess(c)
        for _ in range(rng.randint(1, 6)):
            c = random_move(c, rng)
            assert excess(c) == e
        comp = rng.choice(c.components)
        added = sum(b.width for b, _ in c.attachments(comp.id)) - comp.length
        assert excess(c) - excess(cut_component(c, comp.id)) == added
        sequences += 1
    _within(t0, 30)


def test_criterion_3_imanishi_identity():
    t0 = time.perf_counter()
    rng = random.Random(3)
    definite = 0
    for _ in range(300):
        c = random_complex(rng)
        rep = imanishi(c, budget=20_000)
        if rep.annulus_free != "yes":
            continue
        definite += 1
        assert rep.compact_leaf_measure == -excess(c)
    assert definite >= 50
    _within(t0, 60)


@pytest.mark.parametrize("m,n", PAIRS)
def test_criterion_4_rips_step(m, n):
    t0 = time.perf_counter()
    w = verify_rips_step(m, n, (1,) * 5, (1, 1, 1))
    assert w.target.enhanced and w.reached.enhanced
    assert all(e == 0 for e in w.excess_ledger)
    # independent re-check of the witness: replay, then compare skeletons
    assert equivalent(w.reached, w.target)
    expected_lengths = [sum(x * a for x, a in zip((1, 1, 1), col)) for col in zip(*matrix_A(m, n))]
    got = {b.id: b.length for b in w.target.bands}
    assert [got["B1"], got["B2"], got["B3"]] == expected_lengths and got["B4"] == got["B1"]
    _within(t0, 600)


def test_criterion_5_two_ended_area_bound():
    t0 = time.perf_counter()
    spec = GallerySpec((1, 2, 4, 8, 16, 32), (1, 2, 4, 8, 16, 32), 6)
    verdicts = area_sequence(spec)
    # the argument needs w_{k+1} = B_{k+1} w_{k+2}, i.e. k <= K-2
    checked = [v for v in verdicts if v.k <= spec.K - 2]
    assert len(checked) == 5
    for v in checked:
        assert v.S_next > (1 - Fraction(2, spec.m[v.k])) * v.S_k
        assert v.inequality is True and v.certificate is True and v.certificate_min_entry > 0
    _within(t0, 10)


def test_criterion_6_self_similar_dimension():
    t0 = time.perf_counter()
    mu, _, res_mu = pf_eigen(np.array(matrix_A(1, 1), dtype=float).T)
    lam, _, res_lam = pf_eigen(matrix_B(1, 1))
    assert res_mu <= 1e-10 and res_lam <= 1e-10
    assert mu == pytest.approx(GOLDEN_MU_11, abs=1e-9)
    assert lam == pytest.approx(GOLDEN_LAMBDA_11, abs=1e-9)
    assert mu < lam
    d = hausdorff_dimension(mu, lam)
    assert d == pytest.approx(GOLDEN_DIM_11, abs=1e-9)
    assert 1.01 < d < 1.99
    assert d == pytest.approx(1 + math.log(mu) / math.log(lam))
    _within(t0, 1)


def test_criterion_7_fixed_point_consistency():
    t0 = time.perf_counter()
    v = projective_fixed_widths(1, 1)
    gaps = [projective_distance(truncated_widths(GallerySpec.constant(1, 1, K))[0], v) for K in range(2, 11)]
    assert all(b < a for a, b in zip(gaps, gaps[1:])), gaps
    assert gaps[-1] < 1e-6
    _within(t0, 5)


def test_criterion_8_end_statistics_contrast():
    t0 = time.perf_counter()
    const = gallery_complex(GallerySpec.constant(1, 1, 6))
    doubling = gallery_complex(GallerySpec.doubling(6))
    ladder = list(CALIBRATED_LADDER)
    hc = end_statistics(const, 500, CALIBRATED_RADIUS, seed=0, ladder=ladder)
    hd = end_statistics(doubling, 500, CALIBRATED_RADIUS, seed=0, ladder=ladder)
    assert hd.fraction("2") > hc.fraction("2")
    assert hc.fraction("1") > hd.fraction("1")
    _within(t0, 600)


@pytest.mark.parametrize("m,n", PAIRS)
def test_criterion_9_substitution_lock(m, n):
    t0 = time.perf_counter()
    assert step_substitution(m, n).A == matrix_A(m, n)
    _within(t0, 60)
