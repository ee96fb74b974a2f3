"""One test per acceptance criterion; each records a PASS/FAIL summary line."""

import random
import time

from helpers import all_types, independent_stump_cases, random_bi_arborescence
from unavoid.core import (Tournament, antidirected_path, directed_path, leaf_count,
                          leaf_partition, out_star, paley, random_tournament, random_tree,
                          rooted, rotational, tournament_from_code, tree_metrics,
                          verify_embedding)
from unavoid.embed_arbo import arbo_leaf_count, as_rooted, embed_out_arborescence
from unavoid.embed_tree import (bi_arborescence_bound, embed_bi_arborescence, embed_few_leaves,
                                embed_many_leaves, equivalent_arborescence, few_leaves_bound,
                                gamma_all_roots, many_leaves_bound)
from unavoid.median import check_m2, local_median_order
from unavoid.oracle import brute_force_embed, median_classes, oriented_trees, unvd_exact
from unavoid.stub import (StubStats, embed_very_few_leaves, rebuild_tree, reduce_to_stubs,
                          stump_type, very_few_bound)


def finish(report, number, ok, started, limit, detail):
    took = time.perf_counter() - started
    within = took < limit
    report(number, ok and within, f"{detail}; {took:.1f}s (limit {limit:.0f}s)")
    assert ok, detail
    assert within, f"took {took:.1f}s, limit {limit}s"


def labelled(n):
    for code in range(1 << (n * (n - 1) // 2)):
        yield tournament_from_code(n, code)


def test_criterion_1_directed_paths(report):
    started = time.perf_counter()
    runs = bad = 0
    for n in range(1, 7):
        path = directed_path(n)
        for t in labelled(n):
            trace = embed_out_arborescence(path, t, local_median_order(t), check=False)
            if trace.failed or verify_embedding(path, t, trace.embedding):
                bad += 1
            runs += 1
    finish(report, 1, bad == 0, started, 30,
           f"{runs - bad}/{runs} directed paths placed on every tournament of order <= 6")


def test_criterion_2_out_arborescences(report):
    started = time.perf_counter()
    trees = {}
    for n in range(2, 7):
        for a in oriented_trees(n):
            if not tree_metrics(a).is_out_arborescence:
                continue
            m = n + arbo_leaf_count(as_rooted(a, kind="out")) - 1
            if m <= 6:
                trees.setdefault(m, []).append(a)
    runs = bad = 0
    for m, group in trees.items():
        for t in labelled(m):
            order = local_median_order(t)
            for a in group:
                k = arbo_leaf_count(as_rooted(a, kind="out"))
                trace = embed_out_arborescence(a, t, order, check=False)
                root = as_rooted(a, kind="out").root
                ok = (not verify_embedding(a, t, trace.embedding)
                      and trace.embedding[root] == order[0] and len(trace.failed) <= k - 1)
                bad += not ok
                runs += 1
    count = sum(len(g) for g in trees.values())
    finish(report, 2, bad == 0, started, 600,
           f"{runs - bad}/{runs} runs over {count} out-arborescences with n+k-1 <= 6")


def test_criterion_3_grunbaum(report):
    started = time.perf_counter()
    got = [
        brute_force_embed(antidirected_path(3), rotational(3, {1})) is None,
        brute_force_embed(antidirected_path(5), rotational(5, {1, 2})) is None,
        brute_force_embed(antidirected_path(7), paley(7)) is None,
        unvd_exact(antidirected_path(3)) == 4,
        unvd_exact(out_star(3)) == 4,
        unvd_exact(directed_path(4)) == 4,
    ]
    finish(report, 3, all(got), started, 60, f"{sum(got)}/6 exceptions and exact values match")


def test_criterion_4_few_leaves(report):
    started = time.perf_counter()
    rng = random.Random(4)
    bad = 0
    for i in range(1000):
        n = rng.randint(2, 40)
        a = random_tree(n, rng.randrange(10**9))
        t = random_tournament(few_leaves_bound(a), rng.randrange(10**9))
        bad += bool(verify_embedding(a, t, embed_few_leaves(a, t)))
    # every labelled tournament of order m is a relabelling of one class
    # representative whose identity order is the computed local median order
    reps = {m: [Tournament(m, key) for key in median_classes(m)] for m in range(1, 8)}
    sweep = trees = 0
    for n in range(1, 8):
        for a in oriented_trees(n):
            m = few_leaves_bound(a)
            if m > 7:
                continue
            trees += 1
            for t in reps[m]:
                bad += bool(verify_embedding(a, t, embed_few_leaves(a, t, range(m))))
                sweep += 1
    finish(report, 4, bad == 0, started, 900,
           f"1000 random trees plus {trees} trees with bound <= 7 over {sweep} class runs, "
           f"{bad} failures")


def test_criterion_5_many_leaves(report):
    started = time.perf_counter()
    rng = random.Random(5)
    bad = done = 0
    while done < 500:
        n = rng.randint(4, 25)
        a = random_tree(n, rng.randrange(10**9), leaves=rng.randint(3, n - 1))
        if all(a.degree(u) <= 2 for u in range(n)):
            continue
        t = random_tournament(many_leaves_bound(a), rng.randrange(10**9))
        bad += bool(verify_embedding(a, t, embed_many_leaves(a, t)))
        done += 1
    bi = 0
    while bi < 200:
        n = rng.randint(3, 25)
        a = random_bi_arborescence(n, rng.randrange(10**9))
        lp = leaf_partition(a)
        if not (lp.in_leaves and lp.out_leaves):
            continue
        m = bi_arborescence_bound(a)
        assert m == n + leaf_count(a) - 2
        t = random_tournament(m, rng.randrange(10**9))
        bad += bool(verify_embedding(a, t, embed_bi_arborescence(a, t)))
        bi += 1
    finish(report, 5, bad == 0, started, 900,
           f"500 many-leaves trees and 200 bi-arborescences at n+k-2, {bad} failures")


def test_criterion_6_very_few_leaves(report):
    started = time.perf_counter()
    rng = random.Random(6)
    bad = 0
    worst = 0
    for k, count, nmax, extra in ((3, 25, 30, 580), (4, 10, 20, 1308)):
        done = 0
        while done < count:
            n = rng.randint(k + 2, nmax)
            a = random_tree(n, rng.randrange(10**9), leaves=k)
            if leaf_count(a) != k:
                continue
            assert very_few_bound(n, k) == n + extra
            t = random_tournament(n + extra, rng.randrange(10**9))
            stats = StubStats()
            phi = embed_very_few_leaves(a, t, stats=stats)
            bad += bool(verify_embedding(a, t, phi))
            worst = max(worst, stats.max_forbidden)
            done += 1
    finish(report, 6, bad == 0, started, 1800,
           f"25 trees with k=3 and 10 with k=4, {bad} failures, largest forbidden set {worst}")


def test_criterion_7_median_orders(report):
    started = time.perf_counter()
    rng = random.Random(7)
    bad = intervals = 0
    for _ in range(1000):
        n = rng.randint(1, 200)
        t = random_tournament(n, rng.randrange(10**9))
        order = local_median_order(t)
        bad += bool(check_m2(t, order))
        for _ in range(100):
            i = rng.randrange(n)
            j = rng.randrange(i, n)
            sub = list(order[i:j + 1])
            bad += bool(check_m2(t.relabel(sub), range(len(sub))))
            intervals += 1
    finish(report, 7, bad == 0, started, 300,
           f"1000 tournaments and {intervals} sub-intervals, {bad} violations")


def test_criterion_8_structural_identities(report):
    started = time.perf_counter()
    bad = trees = roots = reductions = 0
    for n in range(2, 13):
        for a in oriented_trees(n):
            trees += 1
            k = leaf_count(a)
            for r, (gu, gd) in enumerate(gamma_all_roots(a)):
                bad += gu + gd > n + k - 2
                if a.in_adj[r]:
                    continue
                rt = rooted(a, r)
                a2, emap = equivalent_arborescence(rt)
                sum_k = sum(x - 1 for x in emap.in_leaves)
                # downward forest size, as the number of arcs pointing at the root side
                sum_n = sum(1 for s, f in rt.father.items() if a.has_arc(s, f))
                bad += not a2.is_out_arborescence() or len(a2.order) != a2.n
                bad += len(a2.tree.arcs) != a2.n - 1
                bad += a2.n != n + sum_k
                bad += arbo_leaf_count(a2) > k + sum_n
                roots += 1
            if k >= 3:
                red = reduce_to_stubs(a)
                bad += sorted(rebuild_tree(red).arcs) != sorted(a.arcs)
                reductions += 1
    types = 0
    for tau in all_types(10):
        if tau.length < 2:
            continue
        hits = independent_stump_cases(tau)
        bad += len(hits) != 1 or stump_type(tau)[1] != hits[0]
        types += 1
    finish(report, 8, bad == 0, started, 600,
           f"{trees} trees, {roots} source roots, {reductions} reductions, "
           f"{types} path types, {bad} mismatches")
