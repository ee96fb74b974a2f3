import pytest
from hypothesis import given, settings, strategies as st

from unavoid.core import (OrientedTree, Tournament, antidirected_path, directed_path,
                          leaf_count, leaf_partition, out_star, random_tournament, random_tree,
                          rooted, rotational, tournament_from_code, tree_metrics,
                          verify_embedding)
from unavoid.embed_arbo import arbo_leaf_count, embed_out_arborescence
from unavoid.embed_tree import (PhasePlan, best_bound, bi_arborescence_bound,
                                choose_root_few_leaves, clusters, embed_auto,
                                embed_bi_arborescence, embed_few_leaves, embed_many_leaves,
                                embed_root_source, embed_with, equivalent_arborescence,
                                few_leaves_bound, forests, gamma, gamma_all_roots,
                                many_leaves_bound, min_gamma)
from unavoid.errors import NoGuarantee, PreconditionError
from unavoid.median import check_m2
from unavoid.oracle import median_classes, oriented_trees


def slow_gamma(a, r):
    """Component sums straight from the definition, one root at a time."""
    rt = rooted(a, r)
    ups, downs = [], []
    for s in rt.order[1:]:
        f = rt.father[s]
        (ups if a.has_arc(f, s) else downs).append((f, s) if a.has_arc(f, s) else (s, f))

    def total(arcs, out):
        if not arcs:
            return 0
        nodes = {u for e in arcs for u in e}
        parent = {u: u for u in nodes}

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x
        for u, v in arcs:
            parent[find(u)] = find(v)
        comps = {}
        for u in nodes:
            comps.setdefault(find(u), set()).add(u)
        s = 0
        for c in comps.values():
            ca = [(u, v) for u, v in arcs if u in c]
            outdeg = {u: 0 for u in c}
            indeg = {u: 0 for u in c}
            for u, v in ca:
                outdeg[u] += 1
                indeg[v] += 1
            if out:
                leaves = sum(1 for u in c if indeg[u] == 1 and outdeg[u] == 0)
            else:
                leaves = sum(1 for u in c if outdeg[u] == 1 and indeg[u] == 0)
            s += len(c) + leaves - 2
        return s

    return total(ups, True), total(downs, False)


def all_trees(lo, hi):
    for n in range(lo, hi + 1):
        yield from oriented_trees(n)


# ------------------------------------------------------------------ gamma

def test_gamma_examples():
    m = gamma(directed_path(5), 0)
    assert m.gamma_down == 0
    arc = gamma(OrientedTree(2, ((0, 1),)), 0)
    assert (arc.gamma_up, arc.gamma_down) == (1, 0)


def test_gamma_matches_definition_small_trees():
    for a in all_trees(1, 8):
        fast = gamma_all_roots(a)
        k = leaf_count(a)
        for r in range(a.n):
            assert fast[r] == slow_gamma(a, r)
            g = gamma(a, r)
            assert (g.gamma_up, g.gamma_down) == fast[r]
            if a.n >= 2:
                assert sum(fast[r]) <= a.n + k - 2


def test_gamma_components_positive():
    for seed in range(50):
        a = random_tree(15, seed)
        ups, downs = forests(rooted(a, seed % 15))
        for c in ups + downs:
            assert c.size >= 2


def test_choose_root_directed_path():
    assert choose_root_few_leaves(directed_path(6)) == (0, False)
    assert gamma(directed_path(6), 0).gamma_down == 0


@given(st.integers(2, 12), st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_choose_root_is_exhaustive_minimum(n, seed):
    a = random_tree(n, seed)
    r, rev = choose_root_few_leaves(a)
    b = a.reversed() if rev else a
    assert not b.in_adj[r]
    best = min(min(slow_gamma(a, x)) for x in range(n))
    assert gamma(b, r).gamma_down == best == min_gamma(a)
    assert 2 * best <= n + leaf_count(a) - 2


def test_antidirected_minimum_is_at_most_half():
    # the general inequality holds on every antidirected tree
    count = 0
    for a in all_trees(2, 10):
        if all(not a.in_adj[u] or not a.out_adj[u] for u in range(a.n)):
            count += 1
            assert 2 * min_gamma(a) <= a.n + leaf_count(a) - 2
    assert count > 300
    # equality fails as soon as the antidirected tree is a star
    star = out_star(6)
    assert min_gamma(star) == 0 < (6 + 5) / 2 - 1


# ------------------------------------------------- equivalent arborescence

def test_equivalent_identity_without_downward_arcs():
    a = OrientedTree(5, ((0, 1), (0, 2), (2, 3), (2, 4)))
    a2, emap = equivalent_arborescence(rooted(a, 0))
    assert sorted(a2.tree.arcs) == sorted(a.arcs) and emap.components == []


def test_equivalent_small_example():
    a = OrientedTree(3, ((0, 1), (2, 1)))
    a2, emap = equivalent_arborescence(rooted(a, 0))
    assert sorted(a2.tree.arcs) == [(0, 1), (0, 2)]
    assert emap.fathers == [0] and emap.in_leaves == [1] and emap.new_nodes == [[]]


def test_equivalent_rejects_root_with_in_arc():
    with pytest.raises(PreconditionError):
        equivalent_arborescence(rooted(OrientedTree(2, ((1, 0),)), 0))


def equivalent_identities(a, r):
    rt = rooted(a, r)
    a2, emap = equivalent_arborescence(rt)
    _, downs = forests(rt)
    sum_k = sum(k - 1 for k in emap.in_leaves)
    sum_n = sum(len(c.nodes) - 1 for c in downs)
    assert a2.is_out_arborescence()
    assert a2.n == a.n + sum_k
    assert arbo_leaf_count(a2) <= leaf_count(a) + sum_n
    return a2


def test_equivalent_identities_small_trees():
    for a in all_trees(2, 9):
        for r in range(a.n):
            if not a.in_adj[r]:
                equivalent_identities(a, r)


# ---------------------------------------------- root-source and few leaves

def test_root_source_equals_greedy_on_arborescence():
    a = OrientedTree(6, ((0, 1), (0, 2), (1, 3), (1, 4), (2, 5)))
    for seed in range(20):
        t = random_tournament(8, seed)
        assert embed_root_source(rooted(a, 0), t) == embed_out_arborescence(a, t).embedding


def test_root_source_small_example():
    a = OrientedTree(3, ((0, 1), (2, 1)))
    for seed in range(100):
        t = random_tournament(5, seed)
        assert verify_embedding(a, t, embed_root_source(rooted(a, 0), t)) == []


@pytest.fixture(scope="module")
def classes():
    return {n: [Tournament(n, key) for key in median_classes(n)] for n in range(1, 7)}


def test_classes_cover_labelled_tournaments():
    for n in range(1, 6):
        cl = median_classes(n)
        assert sum(cl.values()) == 1 << (n * (n - 1) // 2)
        for key in cl:
            assert check_m2(Tournament(n, key), range(n)) == []


def test_root_source_exhaustive_small(classes):
    runs = 0
    for a in all_trees(2, 5):
        for r in range(a.n):
            if a.in_adj[r]:
                continue
            m = a.n + leaf_count(a) - 1 + gamma(a, r).gamma_down
            if m > 6:
                continue
            for t in classes[m]:
                assert verify_embedding(a, t, embed_root_source(rooted(a, r), t, range(m))) == []
                runs += 1
    assert runs > 1000


def test_few_leaves_exhaustive_small(classes):
    for a in all_trees(2, 5):
        m = few_leaves_bound(a)
        if m > 6:
            continue
        for t in classes[m]:
            assert verify_embedding(a, t, embed_few_leaves(a, t, range(m))) == []


@given(st.integers(2, 40), st.integers(0, 10**6))
@settings(max_examples=80, deadline=None)
def test_few_leaves_random_at_bound(n, seed):
    a = random_tree(n, seed)
    t = random_tournament(few_leaves_bound(a), seed)
    assert verify_embedding(a, t, embed_few_leaves(a, t)) == []


def test_few_leaves_path_slack():
    # two leaves and gamma 0 give n + 1, one more than the path needs
    assert few_leaves_bound(directed_path(7)) == 8
    for seed in range(20):
        t = random_tournament(7, seed)
        assert verify_embedding(directed_path(7), t, embed_auto(directed_path(7), t)) == []


def test_few_leaves_too_small():
    a = random_tree(10, 1)
    with pytest.raises(PreconditionError):
        embed_few_leaves(a, random_tournament(few_leaves_bound(a) - 1, 0))


# ---------------------------------------------------------------- clusters

def test_clusters_reject_bi_arborescence():
    a = OrientedTree(4, ((0, 1), (1, 2), (3, 1)))
    assert tree_metrics(a).is_bi_arborescence
    with pytest.raises(PreconditionError):
        clusters(a)


def test_clusters_one_sided_example():
    # a -> b <- c with two out-leaves on each of a and c
    a = OrientedTree(7, ((0, 1), (2, 1), (0, 3), (0, 4), (2, 5), (2, 6)))
    cs = clusters(a)
    assert cs.s_minus == set() and cs.s_plus == {3, 4, 5, 6}
    assert sorted(cs.heart_nodes) == [0, 1, 2] and cs.n_H == 3 and cs.k_H == 2


def test_clusters_grow_through_inner_nodes():
    # 0 -> 1 <- 2, 1 -> 3 -> {4, 5}, 6 -> 0 <- 7, and 2 -> 8 so no root is monotone
    a = OrientedTree(9, ((0, 1), (2, 1), (1, 3), (3, 4), (3, 5), (6, 0), (7, 0), (2, 8)))
    cs = clusters(a)
    assert cs.s_plus == {3, 4, 5, 8}
    assert cs.s_minus == {0, 6, 7}
    assert sorted(cs.heart_nodes) == [1, 2]


@given(st.integers(4, 12), st.integers(0, 10**6))
@settings(max_examples=150, deadline=None)
def test_cluster_sizes(n, seed):
    a = random_tree(n, seed)
    if tree_metrics(a).is_bi_arborescence:
        return
    cs = clusters(a)
    assert not cs.s_minus & cs.s_plus
    h = cs.heart
    lp = leaf_partition(h) if h.n > 1 else None
    if lp is not None:
        assert len(cs.s_minus) >= len(lp.out_leaves)
        assert len(cs.s_plus) >= len(lp.in_leaves)


# ------------------------------------------------------------ many leaves

def test_many_leaves_delegates_bi_arborescence():
    a = OrientedTree(5, ((0, 1), (0, 2), (3, 0), (4, 0)))
    assert bi_arborescence_bound(a) == a.n + leaf_count(a) - 2
    for seed in range(50):
        t = random_tournament(a.n + leaf_count(a) - 2, seed)
        assert verify_embedding(a, t, embed_bi_arborescence(a, t)) == []


def test_many_leaves_one_sided_budget():
    a = OrientedTree(7, ((0, 1), (2, 1), (0, 3), (0, 4), (2, 5), (2, 6)))
    cs = clusters(a)
    need = 4 * cs.n_H + 2 * len(cs.s_plus) - 3
    assert need == 4 * a.n - 2 * len(cs.s_plus) - 3 <= 4 * a.n - 2 * leaf_count(a) - 3
    assert need <= many_leaves_bound(a)
    for seed in range(100):
        t = random_tournament(many_leaves_bound(a), seed)
        assert verify_embedding(a, t, embed_many_leaves(a, t)) == []


@pytest.mark.parametrize("n", [4, 5, 6])
def test_many_leaves_small_trees(n):
    trees = [a for a in oriented_trees(n) if any(a.degree(u) > 2 for u in range(n))]
    for i, a in enumerate(trees):
        m = many_leaves_bound(a)
        for seed in range(500 // len(trees) + 1):
            t = random_tournament(m, 1000 * i + seed)
            assert verify_embedding(a, t, embed_many_leaves(a, t)) == []


def test_many_leaves_phase_plan_discipline():
    seen = 0
    for seed in range(300):
        a = random_tree(14, seed)
        if tree_metrics(a).is_path or tree_metrics(a).is_bi_arborescence:
            continue
        cs = clusters(a)
        if not cs.s_minus or not cs.s_plus:
            continue
        t = random_tournament(many_leaves_bound(a), seed)
        plans = []
        phi = embed_many_leaves(a, t, plan_out=plans)
        assert verify_embedding(a, t, phi) == []
        plan = plans[0]
        assert isinstance(plan, PhasePlan) and plan.ell >= 1 and plan.p <= plan.m
        for j in plan.phase1:
            assert plan.ell <= j < plan.p
        for j, anchor in plan.phase3:
            assert j < anchor
        seen += 1
    assert seen > 20


def test_many_leaves_rejects_small_hosts():
    with pytest.raises(PreconditionError):
        embed_many_leaves(directed_path(2), random_tournament(5, 0))
    a = random_tree(12, 3)
    with pytest.raises(PreconditionError):
        embed_many_leaves(a, random_tournament(many_leaves_bound(a) - 1, 0))


# ------------------------------------------------------- bi-arborescences

def test_bi_arborescence_directed_p3():
    a = OrientedTree(3, ((1, 0), (0, 2)))
    assert bi_arborescence_bound(a) == 3
    for code in range(8):
        t = tournament_from_code(3, code)
        assert verify_embedding(a, t, embed_bi_arborescence(a, t)) == []


def test_bi_arborescence_pure_out():
    a = out_star(5)
    assert bi_arborescence_bound(a) == a.n + 4 - 1


def random_bi_arborescence(n, seed):
    a = random_tree(n, seed)
    rt = rooted(a, 0)
    side = {}
    arcs = []
    for s in rt.order[1:]:
        f = rt.father[s]
        d = side.get(f, hash((seed, s)) % 2)
        side[s] = d
        arcs.append((f, s) if d == 0 else (s, f))
    return OrientedTree(n, tuple(arcs))


@given(st.integers(2, 10), st.integers(0, 10**6))
@settings(max_examples=200, deadline=None)
def test_bi_arborescence_random(n, seed):
    a = random_bi_arborescence(n, seed)
    assert tree_metrics(a).is_bi_arborescence
    t = random_tournament(bi_arborescence_bound(a), seed)
    assert verify_embedding(a, t, embed_bi_arborescence(a, t)) == []


def test_bi_arborescence_rejects_other_trees():
    with pytest.raises(PreconditionError):
        embed_bi_arborescence(antidirected_path(4), random_tournament(10, 0))


# ---------------------------------------------------------------- bounds

def test_best_bound_out_star():
    rep = best_bound(out_star(3))
    assert rep.bounds["arbo"] == 4 and rep.minimum == 4


def test_best_bound_directed_path():
    rep = best_bound(directed_path(5))
    assert rep.minimum == 5 and rep.chosen == "arbo"
    assert rep.bounds["few"] == 6


@given(st.integers(2, 20), st.integers(0, 10**6))
@settings(max_examples=150, deadline=None)
def test_best_bound_below_universal(n, seed):
    rep = best_bound(random_tree(n, seed))
    assert rep.minimum <= rep.universal
    assert rep.bounds["few"] <= rep.public_few


def test_auto_examples():
    c3 = rotational(3, {1})
    p3 = directed_path(3)
    assert verify_embedding(p3, c3, embed_auto(p3, c3)) == []
    with pytest.raises(NoGuarantee):
        embed_auto(out_star(3), c3)


@given(st.integers(2, 25), st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_auto_at_minimum(n, seed):
    a = random_tree(n, seed)
    t = random_tournament(best_bound(a).minimum, seed)
    assert verify_embedding(a, t, embed_auto(a, t)) == []


def test_embed_with_unknown_algorithm():
    with pytest.raises(PreconditionError):
        embed_with("nope", directed_path(3), random_tournament(3, 0))
