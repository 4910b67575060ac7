"""Perron-Frobenius machinery against brute-force eigenvalues."""

import numpy as np
import pytest

from errorfloor.graphs import Multigraph, multigraph_to_digraph
from errorfloor.spectral import (
    approx_spectral_radius,
    frobenius_bounds,
    is_irreducible,
    is_primitive,
    spectral_summary,
)

CYCLE4 = np.roll(np.eye(4), 1, axis=1)  # permutation: period 4


def random_nonneg(rng, m, density=0.5):
    M = rng.random((m, m)) * (rng.random((m, m)) < density)
    return M


def test_irreducibility_classics():
    assert is_irreducible(CYCLE4)
    block = np.zeros((4, 4))
    block[:2, :2] = 1
    block[2:, 2:] = 1
    assert not is_irreducible(block)
    upper = np.triu(np.ones((3, 3)), k=1)
    assert not is_irreducible(upper)


def test_primitivity_classics():
    assert not is_primitive(CYCLE4)  # irreducible but periodic
    loop = CYCLE4.copy()
    loop[0, 0] = 1  # self loop breaks the period
    assert is_primitive(loop)
    assert is_primitive(np.ones((3, 3)))
    assert not is_primitive(np.triu(np.ones((3, 3)), k=1))


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        spectral_summary(np.ones((2, 3)))
    with pytest.raises(ValueError):
        spectral_summary(np.array([[1.0, -0.1], [0.2, 0.3]]))
    with pytest.raises(ValueError, match="nilpotent"):
        spectral_summary(np.triu(np.ones((3, 3)), k=1))


def test_radius_matches_eig_on_random_irreducible():
    rng = np.random.default_rng(0)
    for _ in range(25):
        m = int(rng.integers(2, 9))
        M = random_nonneg(rng, m) + 0.01  # strictly positive: primitive
        s = spectral_summary(M)
        r_ref = np.abs(np.linalg.eigvals(M)).max()
        assert s.r == pytest.approx(r_ref, rel=1e-9)
        assert s.irreducible and s.primitive and s.h == 1
        # left Perron vector: w1 M = r w1, normalized to unit L1
        assert s.w1 @ M == pytest.approx(s.r * s.w1, rel=1e-8)
        assert s.w1.sum() == pytest.approx(1.0)
        lo, hi = frobenius_bounds(M)
        assert lo - 1e-12 <= s.r <= hi + 1e-12


def test_radius_on_reducible():
    rng = np.random.default_rng(1)
    for _ in range(10):
        m1, m2 = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        M = np.zeros((m1 + m2, m1 + m2))
        M[:m1, :m1] = random_nonneg(rng, m1) + 0.01
        M[m1:, m1:] = random_nonneg(rng, m2) + 0.01
        M[0, m1] = 0.5  # one-way coupling keeps it reducible
        s = spectral_summary(M)
        r_ref = np.abs(np.linalg.eigvals(M)).max()
        assert not s.irreducible
        assert s.r == pytest.approx(r_ref, rel=1e-9)


def test_permutation_cycle_case():
    # 4-cycle multigraph: state digraph is two disjoint directed 4-cycles
    D = multigraph_to_digraph(Multigraph(4, [(0, 1), (1, 2), (2, 3), (0, 3)]))
    s = spectral_summary(D.arcs.T.astype(float))
    assert s.reducible_cycle_case
    assert s.r == 1.0 and s.h == 4
    assert s.w1 == pytest.approx(np.full(8, 1 / 8))


def test_period_detection():
    s = spectral_summary(CYCLE4)
    assert s.h == 4 and s.r == pytest.approx(1.0)
    # bipartite-like period 2
    M = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]], dtype=float)
    assert spectral_summary(M).h == 2


def test_approx_radius_lower_bound():
    for (a, b, d_v, r) in [(3, 1, 3, 1.6956), (4, 2, 3, 1.5214), (4, 0, 3, 2.0)]:
        est = approx_spectral_radius(a, b, d_v)
        assert est <= r + 5e-4
        assert est == pytest.approx(d_v - 1 - b / a)
