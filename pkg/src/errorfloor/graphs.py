"""Multigraph view of elementary subgraphs and the derived state digraph.

An elementary subgraph collapses to a multigraph G on its variables:
degree-2 checks become edges (4-cycles become parallel edges), degree-1
checks are dropped.  Message flow lives on the directed edges of G; the
state digraph D has one vertex per direction of each edge and an arc for
every non-backtracking continuation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tanner import InducedSubgraph


class Multigraph:
    """Loop-free multigraph; parallel edges are separate entries."""

    def __init__(self, n_vertices: int, edges):
        self.n = int(n_vertices)
        self.edges = []
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError("self-loop not allowed")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError("vertex index out of range")
            self.edges.append((min(u, v), max(u, v)))
        self.edges.sort()

    @property
    def size(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return d

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            A[u, v] += 1
            A[v, u] += 1
        return A

    def connected(self) -> bool:
        if self.n == 0:
            return False
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def __repr__(self):
        return f"Multigraph(n={self.n}, size={self.size})"


def subgraph_to_multigraph(sub: InducedSubgraph) -> Multigraph:
    """Collapse an elementary induced subgraph onto its variable set."""
    pos = {int(v): j for j, v in enumerate(sub.variables)}
    edges = []
    for c, d in zip(sub.checks, sub.check_degrees):
        if d not in (1, 2):
            raise ValueError(f"check {c} has degree {d} in the subgraph; not elementary")
        if d == 2:
            u, v = (pos[int(x)] for x in sub.host.chk_vars[c] if int(x) in pos)
            edges.append((u, v))
    return Multigraph(sub.a, edges)


def multigraph_submatrix(G: Multigraph, d_v: int) -> np.ndarray:
    """Dense H_S of the elementary subgraph that collapses to G: one
    degree-2 row per edge plus (d_v - deg) degree-1 rows per vertex."""
    deg = G.degrees()
    if np.any(deg > d_v):
        raise ValueError("vertex degree exceeds d_v")
    rows = []
    for u, v in G.edges:
        r = np.zeros(G.n, dtype=np.uint8)
        r[u] = r[v] = 1
        rows.append(r)
    for v in range(G.n):
        for _ in range(d_v - int(deg[v])):
            r = np.zeros(G.n, dtype=np.uint8)
            r[v] = 1
            rows.append(r)
    return np.array(rows, dtype=np.uint8)


def strip_leaves(G: Multigraph):
    """Iteratively delete degree-<=1 vertices.

    Returns (core, kept) where `kept` maps core vertex ids back to the
    originals.  Raises on tree input (nothing survives).
    """
    alive = set(range(G.n))
    edges = list(G.edges)
    while True:
        deg = {}
        for u, v in edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        drop = {v for v in alive if deg.get(v, 0) <= 1}
        if not drop:
            break
        alive -= drop
        edges = [(u, v) for u, v in edges if u not in drop and v not in drop]
    if not alive:
        raise ValueError("tree input: no 2-core")
    kept = sorted(alive)
    remap = {v: i for i, v in enumerate(kept)}
    core = Multigraph(len(kept), [(remap[u], remap[v]) for u, v in edges])
    return core, np.asarray(kept, dtype=np.int64)


@dataclass
class StateDigraph:
    """Directed-edge states of a multigraph and their adjacency.

    `states[k] = (tail, head, edge_id)`; `arcs[i, j]` is 1 when state j
    continues state i (head of i = tail of j) without backtracking, and
    `reverse[k]` is the opposite direction of the same edge.
    """

    states: list
    arcs: np.ndarray
    reverse: np.ndarray

    @property
    def order(self) -> int:
        return len(self.states)

    @property
    def n_arcs(self) -> int:
        return int(self.arcs.sum())


def multigraph_to_digraph(G: Multigraph) -> StateDigraph:
    """Build the state digraph D of G.

    D is the line digraph of the complete biorientation of G with the
    backtracking arc pairs removed; every k-cycle of G yields two directed
    k-cycles in D.
    """
    if not G.connected():
        raise ValueError("multigraph is not connected")
    by_tail = {t: [] for t in range(G.n)}
    for eid, (u, v) in enumerate(G.edges):
        by_tail[u].append((v, eid))
        by_tail[v].append((u, eid))
    states = []
    for t in range(G.n):
        for head, eid in sorted(by_tail[t]):
            states.append((t, head, eid))
    index = {s: k for k, s in enumerate(states)}
    m = len(states)
    rev = np.array([index[(h, t, e)] for (t, h, e) in states], dtype=np.int64)
    arcs = np.zeros((m, m), dtype=np.int64)
    for i, (_, h, _) in enumerate(states):
        for head2, eid2 in by_tail[h]:
            j = index[(h, head2, eid2)]
            if j != rev[i]:
                arcs[i, j] = 1
    return StateDigraph(states, arcs, rev)


def save_multigraph(G: Multigraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# order {G.n}\n")
        for u, v in G.edges:
            fh.write(f"{u} {v}\n")


def load_multigraph(path) -> Multigraph:
    """Edge-list text: one `u v` pair per line, '#' comments.  A header
    comment `# order N` pins the vertex count (isolated tails)."""
    n = None
    edges = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "order":
                    n = int(parts[1])
                continue
            if not line:
                continue
            u, v = (int(t) for t in line.split())
            edges.append((u, v))
    if n is None:
        n = 1 + max((max(u, v) for u, v in edges), default=-1)
    return Multigraph(n, edges)
