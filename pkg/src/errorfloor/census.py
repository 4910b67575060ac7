"""Census of connected simple graphs that collapse from absorbing sets.

For variable degree d_v, an (a, b) elementary absorbing set collapses to
a connected simple graph of order a, size (a*d_v - b)/2, with every
vertex degree strictly above d_v/2 (the strict-majority condition) and
at most d_v.  Graphs are generated by vertex augmentation with
canonical-certificate deduplication at every level; each class is then
ranked by the spectral radius of its state digraph.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .graphs import Multigraph, multigraph_to_digraph
from .spectral import frobenius_bounds, spectral_summary


def _refine(adj, colors):
    """Iterated neighbourhood refinement; returns stable integer colors."""
    n = len(adj)
    while True:
        sigs = [(colors[v], tuple(sorted(colors[w] for w in adj[v]))) for v in range(n)]
        mapping = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = tuple(mapping[s] for s in sigs)
        if new == colors:
            return colors
        colors = new


def canonical_cert(adj) -> tuple:
    """Canonical form of a simple graph given as neighbour lists.

    Refinement plus backtracking individualization: every member of the
    first non-singleton color class is individualized in turn and the
    lexicographically smallest adjacency encoding over all discrete
    colorings wins.  Equal certificates reconstruct equal graphs, so the
    certificate is sound and complete.
    """
    n = len(adj)
    best = None

    def emit(colors):
        nonlocal best
        perm = sorted(range(n), key=colors.__getitem__)
        pos = {v: i for i, v in enumerate(perm)}
        cert = tuple(tuple(sorted(pos[w] for w in adj[v])) for v in perm)
        if best is None or cert < best:
            best = cert

    def rec(colors):
        groups: dict = {}
        for v, c in enumerate(colors):
            groups.setdefault(c, []).append(v)
        target = None
        for c in sorted(groups):
            if len(groups[c]) > 1:
                target = groups[c]
                break
        if target is None:
            emit(colors)
            return
        for v in target:
            split = list(colors)
            split[v] = -1
            rec(_refine(adj, tuple(split)))

    rec(_refine(adj, (0,) * n))
    return best


def _cert_of_edges(n, edges) -> tuple:
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return canonical_cert(adj)


_CENSUS_CACHE: dict = {}


def _augmented_census(a: int, d_v: int) -> list:
    """All simple graphs of order `a` (as edge tuples, one per iso
    class) with max degree <= d_v and min degree at least the
    strict-majority bound d_v//2 + 1."""
    key = (a, d_v)
    if key in _CENSUS_CACHE:
        return _CENSUS_CACHE[key]
    dmin = d_v // 2 + 1
    level = {(): ()}  # cert -> edges, starts from the 1-vertex graph
    for k in range(1, a):
        nxt: dict = {}
        for edges in level.values():
            deg = [0] * k
            for u, v in edges:
                deg[u] += 1
                deg[v] += 1
            free = [v for v in range(k) if deg[v] < d_v]
            future = a - (k + 1)
            for subset in _subsets(free, d_v):
                new_edges = edges + tuple((v, k) for v in subset)
                ndeg = deg + [len(subset)]
                for v in subset:
                    ndeg[v] += 1
                # each remaining vertex can feed one simple edge per
                # deficient vertex and d_v edge endpoints in total
                if any(dmin - d > future for d in ndeg):
                    continue
                if sum(max(0, dmin - d) for d in ndeg) > future * d_v:
                    continue
                cert = _cert_of_edges(k + 1, new_edges)
                if cert not in nxt:
                    nxt[cert] = new_edges
        level = nxt
    out = list(level.values())
    _CENSUS_CACHE[key] = out
    return out


def _subsets(pool, kmax):
    for r in range(0, min(len(pool), kmax) + 1):
        yield from itertools.combinations(pool, r)


def generate_classes(d_v: int, a: int, b: int) -> list[Multigraph]:
    """Non-isomorphic candidates for (a, b) absorbing sets at degree d_v."""
    if a < 2:
        raise ValueError("need a >= 2")
    if (a * d_v - b) % 2:
        raise ValueError("a*d_v - b must be even")
    size = (a * d_v - b) // 2
    if size < 0:
        raise ValueError("negative size")
    dmin = d_v // 2 + 1
    out = []
    for edges in _augmented_census(a, d_v):
        if len(edges) != size:
            continue
        G = Multigraph(a, edges)
        deg = G.degrees()
        if deg.min() < dmin or deg.max() > d_v:
            continue
        if G.connected():
            out.append(G)
    return out


@dataclass(frozen=True)
class ClassSpectrum:
    """Spectral detail for one equivalence class."""

    graph: Multigraph
    r: float
    h: int
    irreducible: bool
    primitive: bool
    frob_low: float
    frob_high: float


def spectrum_of(G: Multigraph) -> ClassSpectrum:
    D = multigraph_to_digraph(G)
    A = D.arcs.T.astype(float)
    s = spectral_summary(A)
    lo, hi = frobenius_bounds(A)
    return ClassSpectrum(G, s.r, s.h, s.irreducible, s.primitive, lo, hi)


@dataclass(frozen=True)
class ClassRow:
    """One table row: all classes sharing (a, b) at a given d_v."""

    d_v: int
    a: int
    b: int
    count: int
    h_max: int
    r_min: float
    r_max: float

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("negative count")
        if self.count and self.r_min > self.r_max:
            raise ValueError("r_min > r_max")


def class_spectra(classes, d_v: int) -> ClassRow:
    """Aggregate row over one (a, b) family of classes."""
    if not classes:
        raise ValueError("no classes to aggregate")
    a = classes[0].n
    size = classes[0].size
    if any(G.n != a or G.size != size for G in classes):
        raise ValueError("classes mix different (a, b)")
    b = a * d_v - 2 * size
    spectra = [spectrum_of(G) for G in classes]
    return ClassRow(
        d_v,
        a,
        b,
        len(classes),
        max(s.h for s in spectra),
        min(s.r for s in spectra),
        max(s.r for s in spectra),
    )


def emit_table(d_v: int, a_max: int, r_cutoff: float | None = None) -> list[ClassRow]:
    """Census rows for all feasible (a, b) with a <= a_max, sorted by
    (a, b); when r_cutoff is given only rows with r_max above it stay."""
    dmin = d_v // 2 + 1
    rows = []
    for a in range(2, a_max + 1):
        b_start = (a * d_v) % 2
        for b in range(b_start, a * (d_v - dmin) + 1, 2):
            classes = generate_classes(d_v, a, b)
            if not classes:
                continue
            row = class_spectra(classes, d_v)
            if r_cutoff is not None and not row.r_max > r_cutoff:
                continue
            rows.append(row)
    return rows


def table_to_csv(rows, fh) -> None:
    """CSV layout mirroring the published census tables."""
    w = csv.writer(fh)
    w.writerow(["a", "b", "count", "h_max", "r_min", "r_max"])
    for row in rows:
        w.writerow([row.a, row.b, row.count, row.h_max, f"{row.r_min:.6g}", f"{row.r_max:.6g}"])
