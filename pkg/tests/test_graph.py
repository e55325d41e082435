import io
import logging
from collections import deque

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from embstab.errors import ConfigurationError, InsufficientDataError, ParseError
from embstab.graph import (Graph, NodeLabels, ba_attachment_count, bounded_distance, coreness,
                           degree_centrality, generate_barabasi_albert,
                           generate_planted_partition, generate_watts_strogatz, load_edge_list,
                           load_labels, pagerank, sample_node_pairs, write_edge_list, ws_ring_degree)
from embstab.downstream import make_split


def graph(n, edges, directed=False):
    return Graph.from_edges(n, np.array(edges, dtype=np.int64).reshape(-1, 2), directed=directed)


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return graph(n, np.column_stack([iu[keep], ju[keep]]))


# ------------------------------------------------------------------ ingestion

def test_path_edge_list():
    g = load_edge_list(io.StringIO("0 1\n1 2\n"))
    assert g.node_count == 3 and g.edge_count == 2
    assert set(g.neighbors(1).tolist()) == {0, 2}


def test_duplicate_weights_collapse():
    g = load_edge_list(io.StringIO("a b 2\na b 3\n"), weighted=True)
    assert g.edge_count == 1
    assert g.edge_weights().tolist() == [5.0]
    assert g.node_names == ("a", "b")


def test_reversed_duplicate_collapses_undirected():
    g = load_edge_list(io.StringIO("0 1 1\n1 0 2\n"), weighted=True)
    assert g.edge_count == 1 and g.edge_weights().tolist() == [3.0]


def test_self_loop_dropped(caplog):
    with caplog.at_level(logging.WARNING):
        g = load_edge_list(io.StringIO("0 0\n0 1\n"))
    assert g.node_count == 2 and g.edge_count == 1
    assert g.meta["self_loops_dropped"] == 1
    assert sum("self-loop" in r.message for r in caplog.records) == 1


def test_first_appearance_remap():
    g = load_edge_list(io.StringIO("# comment\n\n10 7\n7 3\n"))
    assert g.node_names == ("10", "7", "3")
    assert g.has_edge(0, 1) and g.has_edge(1, 2) and not g.has_edge(0, 2)


@pytest.mark.parametrize("text,weighted,line", [
    ("0 1\n0 1 2 3\n", True, 2),
    ("0 1\n1\n", False, 2),
    ("0 1 x\n", True, 1),
    ("0 1 1\n1 2 0\n", True, 2),
    ("0 1 -1\n", True, 1),
    ("0 1 2\n", False, 1),
])
def test_malformed_lines(text, weighted, line):
    with pytest.raises(ParseError) as exc:
        load_edge_list(io.StringIO(text), weighted=weighted)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_directed_keeps_orientation():
    g = load_edge_list(io.StringIO("0 1\n1 2\n"), directed=True)
    assert g.has_edge(0, 1) and not g.has_edge(1, 0)
    assert g.edge_count == 2


def test_write_roundtrip():
    g = generate_watts_strogatz(60, 0.1, 0.2, seed=3)
    buf = io.StringIO()
    write_edge_list(g, buf)
    h = load_edge_list(io.StringIO(buf.getvalue()))
    # first-appearance remap is a relabeling; compare through names
    names = [int(x) for x in h.node_names]
    mapped = {tuple(sorted((names[u], names[v]))) for u, v in h.edges().tolist()}
    assert mapped == {tuple(e) for e in g.edges().tolist()}


# --------------------------------------------------------------------- labels

def test_single_label_file():
    lab = load_labels(io.StringIO("0 1\n1 0\n"), multi_label=False)
    assert lab.label_count == 2
    assert lab.labeled_nodes().tolist() == [0, 1]


def test_multi_label_file():
    lab = load_labels(io.StringIO("0 1 3\n"), multi_label=True)
    assert lab.assignments[0] == frozenset({1, 3})
    assert lab.label_count == 4


def test_empty_label_file_insufficient():
    lab = load_labels(io.StringIO(""), multi_label=False)
    assert len(lab.labeled_nodes()) == 0
    with pytest.raises(InsufficientDataError):
        make_split(lab, 0.75, seed=0)


def test_label_errors():
    g = graph(3, [(0, 1), (1, 2)])
    with pytest.raises(ParseError):
        load_labels(io.StringIO("5 0\n"), multi_label=False, graph=g)
    with pytest.raises(ParseError):
        load_labels(io.StringIO("0 0 1\n"), multi_label=False)


def test_labels_resolve_names():
    g = load_edge_list(io.StringIO("x y\ny z\n"))
    lab = load_labels(io.StringIO("z 1\nx 0\n"), multi_label=False, graph=g)
    assert lab.assignments[2] == {1} and lab.assignments[0] == {0}
    assert lab.assignments[1] == frozenset()


# ----------------------------------------------------------------- generators

def test_ba_closed_form_large():
    g = generate_barabasi_albert(8000, 0.01, seed=0)
    assert ba_attachment_count(8000, 0.01) == 40
    assert g.edge_count == 319_180 == 40 * 41 // 2 + (8000 - 41) * 40
    assert g.meta["m"] == 40


def test_ba_smallest():
    g = generate_barabasi_albert(3, 0.5, seed=1)
    assert g.meta["m"] == 1
    assert g.edge_count == 2


def test_ba_sparse_tree():
    g = generate_barabasi_albert(8000, 0.00025, seed=0)
    assert g.meta["m"] == 1
    assert g.edge_count == 7999
    seen = np.zeros(g.node_count, bool)
    stack = [0]
    seen[0] = True
    while stack:
        for v in g.neighbors(stack.pop()).tolist():
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    assert seen.all()


def test_ba_out_of_range():
    with pytest.raises(ConfigurationError, match="m=0"):
        generate_barabasi_albert(100, 0.001, seed=0)


def test_ws_closed_form_large():
    g = generate_watts_strogatz(8000, 0.01, 0.1, seed=0)
    assert ws_ring_degree(8000, 0.01) == 80
    assert g.edge_count == 320_000


def test_ws_ring_lattice():
    g = generate_watts_strogatz(200, 0.05, 0.0, seed=0)
    k = g.meta["k_ring"]
    assert np.all(g.degrees() == k)
    for u in range(200):
        assert set(g.neighbors(u).tolist()) == {(u + j) % 200 for j in range(-k // 2, k // 2 + 1)
                                                if j}


def test_ws_full_rewire_preserves_edges():
    density = 10 / 999
    variances = []
    for seed in range(20):
        g = generate_watts_strogatz(1000, density, 1.0, seed=seed)
        assert g.meta["k_ring"] == 10
        assert g.edge_count == 5000
        variances.append(g.degrees().var())
    assert min(variances) > 0


def test_ws_out_of_range():
    with pytest.raises(ConfigurationError):
        generate_watts_strogatz(100, 0.001, 0.1, seed=0)


@settings(max_examples=15, deadline=None)
@given(n=st.integers(20, 300), density=st.floats(0.02, 0.3), seed=st.integers(0, 2**32 - 1))
def test_generators_deterministic(n, density, seed):
    assume(1 <= ba_attachment_count(n, density) < n)
    a = generate_barabasi_albert(n, density, seed)
    b = generate_barabasi_albert(n, density, seed)
    assert a.digest() == b.digest()
    m = a.meta["m"]
    assert a.edge_count == m * (m + 1) // 2 + (n - m - 1) * m
    if ws_ring_degree(n, density) < n - 1:
        c = generate_watts_strogatz(n, density, 0.3, seed)
        d = generate_watts_strogatz(n, density, 0.3, seed)
        assert c.digest() == d.digest()
        assert c.edge_count == n * c.meta["k_ring"] // 2


def test_planted_partition_labels():
    g, lab = generate_planted_partition([30, 30, 40], 0.3, 0.01, seed=2)
    assert g.node_count == 100 and lab.label_count == 3
    assert lab.classes(np.arange(100)).tolist() == [0] * 30 + [1] * 30 + [2] * 40


# ----------------------------------------------------------------- centrality

def test_pagerank_cycle():
    pr = pagerank(graph(3, [(0, 1), (1, 2), (2, 0)]))
    np.testing.assert_allclose(pr.values, 1 / 3, atol=1e-9)
    assert pr.converged


def test_pagerank_single_edge():
    np.testing.assert_allclose(pagerank(graph(2, [(0, 1)])).values, 0.5, atol=1e-9)


def google_matrix_oracle(n, edges, damping):
    a = np.zeros((n, n))
    for u, v in edges:
        a[u, v] = 1.0
    out = a.sum(axis=1)
    p = np.where(out[:, None] > 0, a / np.maximum(out, 1)[:, None], 1.0 / n)
    gm = damping * p + (1 - damping) / n
    vals, vecs = np.linalg.eig(gm.T)
    x = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    return x / x.sum()


def test_pagerank_directed_star_matches_eigen_oracle():
    edges = [(1, 0), (2, 0), (3, 0)]
    pr = pagerank(graph(4, edges, directed=True))
    oracle = google_matrix_oracle(4, edges, 0.85)
    np.testing.assert_allclose(pr.values, oracle, atol=1e-9)
    # closed form: hub = (0.15/4 + 0.85 h/4 + 0.85*3 l) / 1 with l = (0.15 + 0.85 h)/4
    assert pr.values[0] == pytest.approx(0.541985, abs=1e-5)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(5, 60))
def test_pagerank_sum_and_permutation(seed, n):
    g = random_graph(n, 0.15, seed)
    pr = pagerank(g).values
    assert pr.sum() == pytest.approx(1.0, abs=1e-6)
    perm = np.random.default_rng(seed).permutation(n)
    h = Graph.from_edges(n, perm[g.edges()], directed=False)
    np.testing.assert_allclose(pagerank(h).values[perm], pr, atol=1e-8)


def test_pagerank_nonconvergence_flag():
    g = random_graph(50, 0.2, 0)
    pr = pagerank(g, max_iter=2)
    assert not pr.converged and pr.iterations == 2


def test_coreness_examples():
    k4 = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    assert coreness(graph(4, k4)).values.tolist() == [3] * 4
    assert coreness(graph(5, [(i, i + 1) for i in range(4)])).values.tolist() == [1] * 5
    assert coreness(graph(5, k4 + [(3, 4)])).values.tolist() == [3, 3, 3, 3, 1]


def coreness_oracle(g):
    n = g.node_count
    adj = [set(g.neighbors(u).tolist()) for u in range(n)]
    core = [0] * n
    alive = set(range(n))
    k = 0
    while alive:
        k += 1
        # delete until every remaining node has >= k neighbours among the living
        changed = True
        while changed:
            changed = False
            for u in list(alive):
                if len(adj[u] & alive) < k:
                    alive.discard(u)
                    core[u] = k - 1
                    changed = True
    return core


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 200), p=st.floats(0.0, 0.2))
def test_coreness_matches_oracle(seed, n, p):
    g = random_graph(n, p, seed)
    c = coreness(g).values
    assert np.all(c >= 0) and np.all(c == np.round(c))
    assert c.tolist() == coreness_oracle(g)


def test_degree_matches_neighbors():
    g = random_graph(40, 0.2, 1)
    d = degree_centrality(g).values
    assert d.tolist() == [len(g.neighbors(u)) for u in range(40)]


# --------------------------------------------------------------- pair sampling

def test_triangle_pairs():
    g = graph(3, [(0, 1), (1, 2), (0, 2)])
    one, two, far = sample_node_pairs(g, 3, seed=0)
    assert sorted(one.pairs) == [(0, 1), (0, 2), (1, 2)] and one.complete
    assert two.pairs == [] and not two.complete
    assert far.pairs == [] and not far.complete


def test_path_distances():
    g = graph(5, [(i, i + 1) for i in range(4)])
    assert bounded_distance(g, 0, 4) == 3
    assert bounded_distance(g, 0, 2) == 2
    _, two, far = sample_node_pairs(g, 10, seed=0)
    assert (0, 2) in two.pairs and (0, 4) in far.pairs


def bfs_all(g, s):
    dist = {s: 0}
    q = deque([s])
    while q:
        x = q.popleft()
        for y in g.neighbors(x).tolist():
            if y not in dist:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_pair_categories_match_bfs(seed):
    g = generate_watts_strogatz(400, 0.02, 0.1, seed)
    samples = sample_node_pairs(g, 30, seed)
    seen = set()
    for s in samples:
        for u, v in s.pairs:
            assert (u, v) not in seen and u < v
            seen.add((u, v))
            d = bfs_all(g, u).get(v, np.inf)
            assert {"one_hop": d == 1, "two_hop": d == 2, "distant": d >= 3}[s.category]


def test_pair_sampling_deterministic():
    g = generate_watts_strogatz(300, 0.03, 0.1, 1)
    assert sample_node_pairs(g, 20, 5) == sample_node_pairs(g, 20, 5)


def test_node_labels_indicator():
    lab = NodeLabels(3, (frozenset({0}), frozenset(), frozenset({1, 2})), True)
    assert lab.indicator(np.array([0, 2])).tolist() == [[1, 0, 0], [0, 1, 1]]
