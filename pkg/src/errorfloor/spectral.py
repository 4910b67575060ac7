"""Nonnegative-matrix spectral analysis for state-update matrices.

The quantities that matter downstream: spectral radius r (asymptotic
per-iteration gain), index of imprimitivity h, and the left Perron
vector w1 used to project the model onto its dominant mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("square matrix required")
    if np.any(M < 0):
        raise ValueError("matrix must be nonnegative")
    return M


def _bool_power_positive(B: np.ndarray, p: int) -> bool:
    """True when B**p (boolean arithmetic) has no zero entry."""
    result = np.eye(len(B), dtype=bool)
    base = B.copy()
    while p:
        if p & 1:
            result = (result.astype(np.uint8) @ base.astype(np.uint8)) > 0
        base = (base.astype(np.uint8) @ base.astype(np.uint8)) > 0
        p >>= 1
    return bool(result.all())


def is_irreducible(M) -> bool:
    """Frobenius test: (I + M)^(m-1) strictly positive."""
    M = _as_square(M)
    m = len(M)
    B = (M > 0) | np.eye(m, dtype=bool)
    return _bool_power_positive(B, m - 1)


def is_primitive(M) -> bool:
    """Wielandt test: M^p > 0 for p = (m-1)m + 1.

    Reducible matrices are never primitive; the exponent bound is sharp
    so no smaller power needs checking.
    """
    M = _as_square(M)
    if not is_irreducible(M):
        return False
    m = len(M)
    return _bool_power_positive(M > 0, (m - 1) * m + 1)


def frobenius_bounds(M) -> tuple[float, float]:
    """Row-sum bounds enclosing the spectral radius."""
    M = _as_square(M)
    s = M.sum(axis=1)
    return float(s.min()), float(s.max())


def approx_spectral_radius(a: int, b: int, d_v: int) -> float:
    """Degree-averaged estimate d_v - 1 - b/a; never above the true r."""
    return d_v - 1 - b / a


def _sccs(B: np.ndarray) -> list[list[int]]:
    """Kosaraju strongly-connected components (iterative)."""
    n = len(B)
    adj = [np.flatnonzero(B[i]).tolist() for i in range(n)]
    radj = [np.flatnonzero(B[:, i]).tolist() for i in range(n)]
    seen = [False] * n
    order = []
    for s in range(n):
        if seen[s]:
            continue
        stack = [(s, iter(adj[s]))]
        seen[s] = True
        while stack:
            v, it = stack[-1]
            advanced = False
            for w in it:
                if not seen[w]:
                    seen[w] = True
                    stack.append((w, iter(adj[w])))
                    advanced = True
                    break
            if not advanced:
                order.append(v)
                stack.pop()
    comp = [-1] * n
    comps = []
    for s in reversed(order):
        if comp[s] != -1:
            continue
        group = [s]
        comp[s] = len(comps)
        stack = [s]
        while stack:
            v = stack.pop()
            for w in radj[v]:
                if comp[w] == -1:
                    comp[w] = len(comps)
                    group.append(w)
                    stack.append(w)
        comps.append(group)
    return comps


def _period(B: np.ndarray, nodes: list[int]) -> int:
    """gcd of directed cycle lengths within one strongly connected part."""
    sub = {v: i for i, v in enumerate(nodes)}
    dist = {nodes[0]: 0}
    frontier = [nodes[0]]
    g = 0
    while frontier:
        nxt = []
        for u in frontier:
            for w in np.flatnonzero(B[u]):
                w = int(w)
                if w not in sub:
                    continue
                if w in dist:
                    g = math.gcd(g, dist[u] + 1 - dist[w])
                else:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    # sweep once more: cross arcs between settled nodes carry the gcd
    for u in nodes:
        for w in np.flatnonzero(B[u]):
            w = int(w)
            if w in sub:
                g = math.gcd(g, dist[u] + 1 - dist[w])
    return abs(g) if g else 1


def _power_iteration(M: np.ndarray, tol: float = 1e-13, max_iter: int = 500_000):
    """Left power iteration on M + I (shift keeps imprimitive cases
    convergent); returns (radius of M, L1-normalized left vector)."""
    m = len(M)
    B = M + np.eye(m)
    w = np.full(m, 1.0 / m)
    lam = 0.0
    for _ in range(max_iter):
        nxt = w @ B
        s = nxt.sum()
        if s == 0:
            return 0.0, w
        nxt /= s
        if abs(s - lam) < tol * max(1.0, abs(s)) and np.abs(nxt - w).sum() < tol:
            return float(s - 1.0), nxt
        lam, w = s, nxt
    return float(lam - 1.0), w


@dataclass
class SpectralSummary:
    r: float
    h: int
    w1: np.ndarray
    irreducible: bool
    primitive: bool
    reducible_cycle_case: bool


def spectral_summary(M) -> SpectralSummary:
    """Spectral radius, period, and left Perron vector of a state-update
    matrix.

    A permutation matrix (the two disjoint directed cycles produced by a
    cycle multigraph) is recognized exactly: r = 1, h = cycle length,
    uniform w1.  Reducible inputs with leaves fall back to per-component
    analysis; r and h come from the dominant component while w1 is taken
    on the full matrix, where leaf states split into zero and positive
    entries.
    """
    M = _as_square(M)
    m = len(M)
    B = M > 0

    row = M.sum(axis=1)
    col = M.sum(axis=0)
    if np.all(row == 1) and np.all(col == 1) and np.all((M == 0) | (M == 1)):
        comps = _sccs(B)
        if all(len(c) > 1 for c in comps) and not is_irreducible(M):
            h = max(len(c) for c in comps)
            return SpectralSummary(1.0, h, np.full(m, 1.0 / m), False, False, True)

    irr = is_irreducible(M)
    if irr:
        r, w1 = _power_iteration(M)
        h = _period(B, list(range(m)))
        return SpectralSummary(r, h, w1, True, is_primitive(M), False)

    # reducible: dominant component carries r and h
    comps = _sccs(B)
    best_r, best_nodes = 0.0, None
    for nodes in comps:
        if len(nodes) == 1 and not B[nodes[0], nodes[0]]:
            continue
        sub = M[np.ix_(nodes, nodes)]
        r_c, _ = _power_iteration(sub)
        if r_c > best_r:
            best_r, best_nodes = r_c, nodes
    if best_nodes is None:
        raise ValueError("nilpotent matrix: no directed cycle, spectral radius 0")
    _, w1 = _power_iteration(M)
    h = _period(B, best_nodes)
    return SpectralSummary(best_r, h, w1, False, False, False)
