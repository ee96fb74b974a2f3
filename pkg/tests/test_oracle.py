import networkx as nx
import pytest

from unavoid.core import (Tournament, antidirected_path, directed_path, out_star, paley,
                          random_tournament, rotational, transitive, verify_embedding)
from unavoid.errors import PreconditionError
from unavoid.median import check_m2
from unavoid.oracle import (CapExceeded, brute_force_embed, contains, contains_all,
                            grunbaum_checks, median_classes, oriented_trees,
                            tournament_from_code, unvd_exact)


def digraph(t):
    return nx.DiGraph([(u, v) for u in range(t.n) for v in range(t.n) if t.has_arc(u, v)])


def test_grunbaum_exceptions():
    checks = grunbaum_checks()
    assert len(checks) == 6 and all(c["ok"] for c in checks)
    assert not contains(antidirected_path(3), rotational(3, {1}))
    assert not contains(antidirected_path(5), rotational(5, {1, 2}))
    assert not contains(antidirected_path(7), paley(7))


def test_brute_force_returns_valid_embeddings():
    for seed in range(30):
        t = random_tournament(8, seed)
        for tree in (directed_path(8), antidirected_path(6), out_star(5)):
            phi = brute_force_embed(tree, t)
            if phi is not None:
                assert verify_embedding(tree, t, phi) == []
    assert brute_force_embed(directed_path(4), transitive(3)) is None


def test_code_convention():
    t = tournament_from_code(3, 0b001)
    assert t.has_arc(0, 1) and t.has_arc(2, 0) and t.has_arc(2, 1)


def test_directed_p3_everywhere():
    rep = contains_all(directed_path(3), 3)
    assert rep.total == 8 and rep.unavoidable


def test_out_star_fails_only_on_cycles():
    rep = contains_all(out_star(3), 3)
    codes = [c for c, _ in rep.failures]
    assert len(codes) == 2
    for c in codes:
        assert nx.is_isomorphic(digraph(tournament_from_code(3, c)), nx.cycle_graph(3, nx.DiGraph))


def test_antidirected_p5_fails_exactly_on_regular_five():
    rt5 = digraph(rotational(5, {1, 2}))
    rep = contains_all(antidirected_path(5), 5)
    codes = {c for c, _ in rep.failures}
    iso = {c for c in range(1 << 10) if nx.is_isomorphic(digraph(tournament_from_code(5, c)), rt5)}
    assert len(iso) == 24
    assert codes == iso


def test_parallel_sweep_matches_serial(monkeypatch):
    tree = antidirected_path(5)
    serial = contains_all(tree, 6, workers=1)
    monkeypatch.setenv("UNAVOID_THREADS", "2")
    parallel = contains_all(tree, 6)
    assert parallel.failures == serial.failures and parallel.unavoidable


def test_sweep_cap():
    with pytest.raises(PreconditionError):
        contains_all(directed_path(3), 9, cap_bits=30)


def test_unvd_values():
    assert unvd_exact(directed_path(3)) == 3
    assert unvd_exact(antidirected_path(3)) == 4
    assert unvd_exact(out_star(3)) == 4
    assert unvd_exact(directed_path(4)) == 4
    assert unvd_exact(out_star(4)) == 6


def test_unvd_cap():
    with pytest.raises(CapExceeded):
        unvd_exact(out_star(4), cap=5)


KNOWN_COUNTS = [1, 1, 3, 8, 27, 91, 350, 1376, 5743]


@pytest.mark.parametrize("n", range(1, 10))
def test_oriented_tree_counts(n):
    trees = list(oriented_trees(n))
    assert len(trees) == KNOWN_COUNTS[n - 1]
    for t in trees:
        assert t.n == n and len(t.arcs) == n - 1
        assert n == 1 or nx.is_tree(nx.Graph(list(t.arcs)))


@pytest.mark.parametrize("n", range(2, 8))
def test_oriented_trees_pairwise_distinct(n):
    graphs = [nx.DiGraph(list(t.arcs)) for t in oriented_trees(n)]
    seen = {}
    for g in graphs:
        h = nx.weisfeiler_lehman_graph_hash(g)
        for other in seen.get(h, []):
            assert not nx.is_isomorphic(g, other)
        seen.setdefault(h, []).append(g)


@pytest.mark.parametrize("n,expected", [(3, 2), (4, 4), (5, 12)])
def test_median_classes_cover_everything(n, expected):
    classes = median_classes(n)
    assert sum(classes.values()) == 1 << (n * (n - 1) // 2)
    assert len(classes) >= expected
    for rows in classes:
        # representatives are relabelled so the identity is a local median order
        assert check_m2(Tournament(n, rows), range(n)) == []
