"""Graph container, edge-list I/O, synthetic generators and centralities.

Graphs are stored in CSR form: ``indptr``/``indices``/``weights`` with each
neighbor list sorted ascending.  Undirected graphs hold both directions.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, InsufficientDataError, ParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Graph:
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    directed: bool = False
    node_names: tuple[str, ...] | None = None
    # filled by generators so reports can show the resolved parameters
    meta: dict = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        arcs = len(self.indices)
        return arcs if self.directed else arcs // 2

    @property
    def density(self) -> float:
        n = self.node_count
        if n < 2:
            return 0.0
        pairs = n * (n - 1) if self.directed else n * (n - 1) / 2
        return self.edge_count / pairs

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def neighbor_weights(self, u: int) -> np.ndarray:
        return self.weights[self.indptr[u]:self.indptr[u + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return bool(i < len(nbrs) and nbrs[i] == v)

    def edges(self) -> np.ndarray:
        """(E, 2) array of edges; undirected edges listed once with u < v."""
        src = np.repeat(np.arange(self.node_count), self.degrees())
        pairs = np.column_stack([src, self.indices])
        if not self.directed:
            pairs = pairs[pairs[:, 0] < pairs[:, 1]]
        return pairs

    def edge_weights(self) -> np.ndarray:
        if self.directed:
            return self.weights.copy()
        src = np.repeat(np.arange(self.node_count), self.degrees())
        return self.weights[src < self.indices]

    def to_scipy(self) -> sp.csr_matrix:
        n = self.node_count
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(n, n))

    def undirected(self) -> Graph:
        if not self.directed:
            return self
        e = self.edges()
        return Graph.from_edges(self.node_count, e, self.weights, directed=False,
                                node_names=self.node_names)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(b"directed" if self.directed else b"undirected")
        for arr in (self.indptr, self.indices, self.weights):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]

    @classmethod
    def from_edges(cls, n: int, edges, weights=None, directed: bool = False,
                   node_names=None, meta=None) -> Graph:
        """Build from an edge array.  Duplicates are summed, self-loops dropped."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if weights is None:
            weights = np.ones(len(edges))
        weights = np.asarray(weights, dtype=np.float64)
        keep = edges[:, 0] != edges[:, 1]
        edges, weights = edges[keep], weights[keep]
        if not directed:
            edges = np.vstack([edges, edges[:, ::-1]])
            weights = np.concatenate([weights, weights])
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        m = sp.coo_matrix((weights, (edges[:, 0], edges[:, 1])), shape=(n, n)).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(
            indptr=m.indptr.astype(np.int64),
            indices=m.indices.astype(np.int64),
            weights=m.data.astype(np.float64),
            directed=directed,
            node_names=tuple(node_names) if node_names is not None else None,
            meta=dict(meta or {}),
        )


@dataclass(frozen=True)
class NodeLabels:
    label_count: int
    assignments: tuple[frozenset[int], ...]
    multi_label: bool

    @property
    def node_count(self) -> int:
        return len(self.assignments)

    def labeled_nodes(self) -> np.ndarray:
        return np.array([i for i, a in enumerate(self.assignments) if a], dtype=np.int64)

    def indicator(self, nodes=None) -> np.ndarray:
        nodes = range(self.node_count) if nodes is None else nodes
        out = np.zeros((len(nodes), self.label_count), dtype=np.float64)
        for row, u in enumerate(nodes):
            for lab in self.assignments[u]:
                out[row, lab] = 1.0
        return out

    def classes(self, nodes) -> np.ndarray:
        """Class id per node for single-label data (-1 for unlabeled)."""
        return np.array([min(self.assignments[u]) if self.assignments[u] else -1
                         for u in nodes], dtype=np.int64)


@dataclass(frozen=True)
class CentralityScores:
    kind: str
    values: np.ndarray
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class NodePairSample:
    category: str
    pairs: list[tuple[int, int]]
    complete: bool = True


# ---------------------------------------------------------------- ingestion

def _data_lines(source: TextIO):
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def load_edge_list(source: TextIO, directed: bool = False, weighted: bool = False) -> Graph:
    ids: dict[str, int] = {}
    src, dst, wts = [], [], []
    self_loops = 0
    for lineno, fields in _data_lines(source):
        if len(fields) not in (2, 3) or (len(fields) == 3 and not weighted):
            raise ParseError(f"expected 'u v{' w' if weighted else ''}', got {len(fields)} fields",
                             lineno)
        w = 1.0
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"non-numeric weight {fields[2]!r}", lineno) from None
            if not (w > 0 and math.isfinite(w)):
                raise ParseError(f"weight must be positive and finite, got {fields[2]}", lineno)
        u = ids.setdefault(fields[0], len(ids))
        v = ids.setdefault(fields[1], len(ids))
        if u == v:
            self_loops += 1
            continue
        src.append(u)
        dst.append(v)
        wts.append(w)
    if self_loops:
        log.warning("dropped %d self-loop(s)", self_loops)
    n = len(ids)
    names = tuple(ids)
    edges = np.column_stack([np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64)])
    if not directed and len(edges):
        # collapse (u,v)/(v,u) duplicates before mirroring
        lo = edges.min(axis=1)
        hi = edges.max(axis=1)
        edges = np.column_stack([lo, hi])
    g = Graph.from_edges(n, edges, np.array(wts), directed=directed, node_names=names,
                         meta={"self_loops_dropped": self_loops})
    return g


def write_edge_list(g: Graph, sink: TextIO, weighted: bool | None = None) -> None:
    if weighted is None:
        weighted = not np.all(g.weights == 1.0)
    for key, value in g.meta.items():
        sink.write(f"# {key}: {value}\n")
    e = g.edges()
    w = g.edge_weights()
    if weighted:
        for (u, v), x in zip(e.tolist(), w.tolist()):
            sink.write(f"{u} {v} {x!r}\n")
    else:
        sink.write("".join(f"{u} {v}\n" for u, v in e.tolist()))


def load_labels(source: TextIO, multi_label: bool, graph: Graph | None = None,
                node_count: int | None = None) -> NodeLabels:
    """Read ``node_id label [label ...]`` lines.

    Node ids are resolved through ``graph.node_names`` when the graph came
    from an edge list, otherwise they must be integers below the node count.
    """
    if graph is not None:
        node_count = graph.node_count
        lookup = ({name: i for i, name in enumerate(graph.node_names)}
                  if graph.node_names is not None else None)
    else:
        lookup = None
    sets: dict[int, set[int]] = {}
    for lineno, fields in _data_lines(source):
        if len(fields) < 2:
            raise ParseError("expected 'node_id label_id [label_id ...]'", lineno)
        token = fields[0]
        if lookup is not None:
            if token not in lookup:
                raise ParseError(f"unknown node id {token!r}", lineno)
            u = lookup[token]
        else:
            try:
                u = int(token)
            except ValueError:
                raise ParseError(f"unknown node id {token!r}", lineno) from None
            if u < 0 or (node_count is not None and u >= node_count):
                raise ParseError(f"unknown node id {token!r}", lineno)
        try:
            labs = [int(x) for x in fields[1:]]
        except ValueError:
            raise ParseError("label ids must be integers", lineno) from None
        if any(lab < 0 for lab in labs):
            raise ParseError("label ids must be non-negative", lineno)
        cur = sets.setdefault(u, set())
        cur.update(labs)
        if not multi_label and len(cur) > 1:
            raise ParseError(f"node {token!r} has {len(cur)} labels in single-label mode", lineno)
    if node_count is None:
        node_count = max(sets) + 1 if sets else 0
    label_count = max((max(s) for s in sets.values()), default=-1) + 1
    assignments = tuple(frozenset(sets.get(u, ())) for u in range(node_count))
    return NodeLabels(label_count, assignments, multi_label)


# --------------------------------------------------------------- generators

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def ba_attachment_count(n: int, target_density: float) -> int:
    return _round_half_up(target_density * (n - 1) / 2)


def ws_ring_degree(n: int, target_density: float) -> int:
    return 2 * _round_half_up(target_density * (n - 1) / 2)


def generate_barabasi_albert(n: int, target_density: float, seed: int) -> Graph:
    m = ba_attachment_count(n, target_density)
    if n < 2 or not 1 <= m < n:
        raise ConfigurationError(
            f"Barabasi-Albert: resolved attachment count m={m} infeasible for n={n}, "
            f"density={target_density}")
    rng = np.random.default_rng(seed)
    n_edges = m * (m + 1) // 2 + (n - m - 1) * m
    edges = np.empty((n_edges, 2), dtype=np.int64)
    # every endpoint once per incident edge: uniform draws are degree-proportional
    endpoints = np.empty(2 * n_edges, dtype=np.int64)
    e = 0
    for u in range(m + 1):
        for v in range(u + 1, m + 1):
            edges[e] = (u, v)
            endpoints[2 * e], endpoints[2 * e + 1] = u, v
            e += 1
    filled = 2 * e
    for v in range(m + 1, n):
        chosen: list[int] = []
        seen: set[int] = set()
        while len(chosen) < m:
            for t in endpoints[rng.integers(0, filled, size=2 * m)].tolist():
                if t not in seen:
                    seen.add(t)
                    chosen.append(t)
                    if len(chosen) == m:
                        break
        for t in chosen:
            edges[e] = (t, v)
            e += 1
        endpoints[filled:filled + m] = chosen
        endpoints[filled + m:filled + 2 * m] = v
        filled += 2 * m
    meta = {"model": "barabasi_albert", "n": n, "target_density": target_density,
            "m": m, "seed": seed}
    g = Graph.from_edges(n, edges, directed=False, meta=meta)
    g.meta["realized_density"] = g.density
    return g


def generate_watts_strogatz(n: int, target_density: float, rewire_p: float, seed: int) -> Graph:
    k_ring = ws_ring_degree(n, target_density)
    if not 2 <= k_ring < n:
        raise ConfigurationError(
            f"Watts-Strogatz: resolved ring degree k_ring={k_ring} infeasible for n={n}, "
            f"density={target_density}")
    if not 0.0 <= rewire_p <= 1.0:
        raise ConfigurationError(f"rewire_p must lie in [0, 1], got {rewire_p}")
    rng = np.random.default_rng(seed)
    half = k_ring // 2
    adj = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, half + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    coins = rng.random((half, n))
    for j in range(1, half + 1):
        row = coins[j - 1]
        for u in range(n):
            if row[u] >= rewire_p:
                continue
            v = (u + j) % n
            if v not in adj[u] or len(adj[u]) >= n - 1:
                continue
            while True:
                w = int(rng.integers(0, n))
                if w != u and w not in adj[u]:
                    break
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    edges = np.array([(u, v) for u in range(n) for v in adj[u] if u < v], dtype=np.int64)
    meta = {"model": "watts_strogatz", "n": n, "target_density": target_density,
            "k_ring": k_ring, "rewire_p": rewire_p, "seed": seed}
    g = Graph.from_edges(n, edges, directed=False, meta=meta)
    g.meta["realized_density"] = g.density
    return g


def generate_planted_partition(sizes: Iterable[int], p_in: float, p_out: float,
                               seed: int) -> tuple[Graph, NodeLabels]:
    """Stochastic block model with the block index as node label."""
    sizes = list(sizes)
    rng = np.random.default_rng(seed)
    block = np.repeat(np.arange(len(sizes)), sizes)
    n = len(block)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    edges = np.column_stack([iu[keep], ju[keep]])
    meta = {"model": "planted_partition", "sizes": sizes, "p_in": p_in, "p_out": p_out,
            "seed": seed}
    g = Graph.from_edges(n, edges, directed=False, meta=meta)
    labels = NodeLabels(len(sizes), tuple(frozenset([int(b)]) for b in block), False)
    return g, labels


# --------------------------------------------------------------- centrality

def degree_centrality(g: Graph) -> CentralityScores:
    return CentralityScores("degree", g.degrees().astype(np.float64))


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-10,
             max_iter: int = 200) -> CentralityScores:
    n = g.node_count
    if n < 1:
        raise InsufficientDataError("pagerank needs at least one node")
    rows = np.repeat(np.arange(n), np.diff(g.indptr))
    out_w = np.bincount(rows, weights=g.weights, minlength=n)
    dangling = out_w == 0
    inv = np.divide(1.0, out_w, out=np.zeros(n), where=~dangling)
    # column-stochastic transpose: x_new[v] = sum_u x[u] * w(u,v) / out_w(u)
    pt = sp.diags(inv) @ g.to_scipy()
    pt = pt.T.tocsr()
    x = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = damping * (pt @ x) + (damping * x[dangling].sum() + (1.0 - damping)) / n
        new /= new.sum()
        delta = np.abs(new - x).sum()
        x = new
        if delta < tol:
            converged = True
            break
    if not converged:
        log.warning("pagerank did not converge in %d iterations", max_iter)
    return CentralityScores("pagerank", x, converged=converged, iterations=it)


def coreness(g: Graph) -> CentralityScores:
    """k-core numbers by bucket-ordered minimum-degree peeling."""
    g = g.undirected()
    n = g.node_count
    deg = g.degrees().astype(np.int64).tolist()
    max_deg = max(deg, default=0)
    buckets: list[set[int]] = [set() for _ in range(max_deg + 1)]
    for u, d in enumerate(deg):
        buckets[d].add(u)
    core = [0] * n
    removed = [False] * n
    indptr, indices = g.indptr, g.indices.tolist()
    current = 0
    d = 0
    for _ in range(n):
        d = min(d, max_deg)
        while not buckets[d]:
            d += 1
        u = buckets[d].pop()
        current = max(current, d)
        core[u] = current
        removed[u] = True
        for v in indices[indptr[u]:indptr[u + 1]]:
            if not removed[v] and deg[v] > 0:
                buckets[deg[v]].discard(v)
                deg[v] -= 1
                buckets[deg[v]].add(v)
        d = max(d - 1, 0)
    return CentralityScores("coreness", np.array(core, dtype=np.float64))


# ------------------------------------------------------------ pair sampling

PAIR_CATEGORIES = ("one_hop", "two_hop", "distant")


def bounded_distance(g: Graph, u: int, v: int, max_depth: int = 3) -> int:
    """Shortest-path distance from u to v, capped at ``max_depth``."""
    if u == v:
        return 0
    seen = {u}
    frontier = deque([(u, 0)])
    while frontier:
        x, d = frontier.popleft()
        if d + 1 > max_depth:
            break
        for y in g.neighbors(x).tolist():
            if y == v:
                return d + 1
            if y not in seen:
                seen.add(y)
                frontier.append((y, d + 1))
    return max_depth


def sample_node_pairs(g: Graph, count_per_category: int,
                      seed: int) -> tuple[NodePairSample, NodePairSample, NodePairSample]:
    """Uniform rejection sampling of node pairs split by hop distance.

    Candidate pairs are drawn uniformly over unordered pairs and classified
    by a BFS capped at depth 3.  A category that is still short after
    ``1000 * count_per_category`` attempts comes back with ``complete=False``.
    """
    n = g.node_count
    rng = np.random.default_rng(seed)
    found: dict[str, list[tuple[int, int]]] = {c: [] for c in PAIR_CATEGORIES}
    seen: set[tuple[int, int]] = set()
    total_pairs = n * (n - 1) // 2
    budget = 1000 * count_per_category
    attempts = 0
    batch = max(64, 4 * count_per_category)
    while attempts < budget and len(seen) < total_pairs:
        if all(len(found[c]) >= count_per_category for c in PAIR_CATEGORIES):
            break
        cand = rng.integers(0, n, size=(batch, 2))
        for u, v in cand.tolist():
            if attempts >= budget:
                break
            attempts += 1
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            if key in seen:
                continue
            seen.add(key)
            dist = bounded_distance(g, key[0], key[1], max_depth=3)
            cat = PAIR_CATEGORIES[min(dist, 3) - 1]
            if len(found[cat]) < count_per_category:
                found[cat].append(key)
    out = []
    for cat in PAIR_CATEGORIES:
        complete = len(found[cat]) >= count_per_category
        if not complete:
            log.warning("pair category %s filled %d/%d", cat, len(found[cat]),
                        count_per_category)
        out.append(NodePairSample(cat, found[cat], complete))
    return tuple(out)
