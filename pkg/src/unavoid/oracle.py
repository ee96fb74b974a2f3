"""Brute-force ground truth: containment search, labelled sweeps, exact
unavoidability for tiny trees, the classical counterexamples, and an
enumerator of oriented trees up to isomorphism."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

from .core import (OrientedTree, Tournament, antidirected_path, directed_path, out_star,
                   paley, rotational, tournament_from_code)
from .errors import PreconditionError

DEFAULT_CAP_BITS = 28


def search_order(tree: OrientedTree) -> tuple[list[int], list[int | None], list[bool]]:
    """BFS from a maximum-degree node (smallest id on ties).

    Returns the node order, each node's already-placed neighbour, and whether
    the arc goes from that neighbour to the node.
    """
    start = max(range(tree.n), key=lambda u: (tree.degree(u), -u))
    order, parent, forward = [start], [None], [True]
    seen = {start}
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for w in tree.nbrs[u]:
            if w not in seen:
                seen.add(w)
                order.append(w)
                parent.append(u)
                forward.append(tree.has_arc(u, w))
    return order, parent, forward


def brute_force_embed(tree: OrientedTree, t: Tournament, _plan=None):
    """Backtracking search for a copy of tree in t; None proves there is none."""
    if tree.n > t.n:
        return None
    order, parent, forward = _plan or search_order(tree)
    rows, ins = t.rows, t.in_rows
    n = tree.n
    idx = {u: i for i, u in enumerate(order)}
    par_idx = [None if p is None else idx[p] for p in parent]
    img = [0] * n
    full = (1 << t.n) - 1

    def rec(i, used):
        if i == n:
            return True
        if i == 0:
            cand = full
        else:
            x = img[par_idx[i]]
            cand = rows[x] if forward[i] else ins[x]
        cand &= ~used
        while cand:
            low = cand & -cand
            cand ^= low
            img[i] = low.bit_length() - 1
            if rec(i + 1, used | low):
                return True
        return False

    if not rec(0, 0):
        return None
    return {order[i]: img[i] for i in range(n)}


def contains(tree: OrientedTree, t: Tournament) -> bool:
    return brute_force_embed(tree, t) is not None


@dataclass
class SweepReport:
    n: int
    total: int
    failures: list = field(default_factory=list)   # (tournament code, tree text)

    @property
    def unavoidable(self) -> bool:
        return not self.failures


def _sweep_range(args):
    tree, n, lo, hi = args
    plan = search_order(tree)
    bad = []
    for code in range(lo, hi):
        if brute_force_embed(tree, tournament_from_code(n, code), plan) is None:
            bad.append(code)
    return bad


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("UNAVOID_THREADS", "1")))
    except ValueError:
        return 1


def contains_all(tree: OrientedTree, n: int, cap_bits: int = DEFAULT_CAP_BITS,
                 workers: int | None = None) -> SweepReport:
    """Check every labelled tournament of order n (bit t of the code orients the
    t-th lexicographic pair u<v as u -> v)."""
    bits = n * (n - 1) // 2
    if bits > cap_bits:
        raise PreconditionError(f"order {n} needs 2^{bits} tournaments, above the cap 2^{cap_bits}")
    total = 1 << bits
    workers = worker_count() if workers is None else workers
    if workers <= 1 or total < 4096:
        bad = _sweep_range((tree, n, 0, total))
    else:
        step = -(-total // (workers * 4))
        chunks = [(tree, n, lo, min(total, lo + step)) for lo in range(0, total, step)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            bad = [c for part in ex.map(_sweep_range, chunks) for c in part]
    return SweepReport(n, total, [(c, tree.to_text()) for c in bad])


class CapExceeded(PreconditionError):
    pass


def unvd_exact(tree: OrientedTree, cap: int = 8) -> int:
    """Smallest order n >= |tree| such that every tournament of order n contains tree."""
    for n in range(tree.n, cap + 1):
        if contains_all(tree, n).unavoidable:
            return n
    raise CapExceeded(f"unavoidability exceeds the cap {cap}")


def grunbaum_checks() -> list[dict]:
    """The classical exceptions plus three small exact unavoidability values."""
    report = []
    for name, tree, host in [("antidirected P3 in C3", antidirected_path(3), rotational(3, {1})),
                             ("antidirected P5 in RT5", antidirected_path(5), rotational(5, {1, 2})),
                             ("antidirected P7 in Paley7", antidirected_path(7), paley(7))]:
        found = brute_force_embed(tree, host)
        report.append({"check": name, "expected": "none",
                       "got": "none" if found is None else "found", "ok": found is None})
    for name, tree in [("unvd antidirected P3", antidirected_path(3)),
                       ("unvd out-star S+3", out_star(3)),
                       ("unvd directed P4", directed_path(4))]:
        got = unvd_exact(tree, cap=6)
        report.append({"check": name, "expected": 4, "got": got, "ok": got == 4})
    return report


# --------------------------------------------------- oriented tree enumeration

@lru_cache(maxsize=None)
def _rooted(size: int) -> tuple:
    """Canonical rooted oriented trees of the given size.

    Each entry is the arc list of a tree on nodes 0..size-1 rooted at 0.  A
    tree is the multiset of its child items (child size, direction, index);
    generating multisets as non-increasing item sequences makes every tree
    appear once.
    """
    if size == 1:
        return ((),)
    return tuple(arcs for arcs in _compose(size - 1, size - 1))


def _items(max_size: int) -> list[tuple[int, int, int]]:
    out = []
    for s in range(1, max_size + 1):
        for d in (0, 1):
            for i in range(len(_rooted(s))):
                out.append((s, d, i))
    return out


def _compose(total: int, max_child: int):
    """Arc lists of a root 0 with children of total size `total`, each <= max_child."""
    items = _items(min(max_child, total))

    def rec(rem, hi):
        if rem == 0:
            yield []
            return
        for j in range(hi, -1, -1):
            s = items[j][0]
            if s <= rem:
                for rest in rec(rem - s, j):
                    yield [items[j]] + rest

    for choice in rec(total, len(items) - 1):
        arcs = []
        off = 1
        for s, d, i in choice:
            arcs.append((0, off) if d == 0 else (off, 0))
            arcs.extend((u + off, v + off) for u, v in _rooted(s)[i])
            off += s
        yield tuple(arcs)


def oriented_trees(n: int):
    """Every oriented tree on n nodes exactly once up to isomorphism.

    Unicentroidal trees are rooted at the centroid (all branches smaller than
    n/2); bicentroidal trees join two halves of order n/2 by one arc.
    """
    if n == 1:
        yield OrientedTree(1, ())
        return
    for arcs in _compose(n - 1, (n - 1) // 2):
        yield OrientedTree(n, arcs)
    if n % 2 == 0:
        h = n // 2
        halves = _rooted(h)
        for i, x in enumerate(halves):
            for j in range(i, len(halves)):
                y = tuple((u + h, v + h) for u, v in halves[j])
                for d in ((0, 1),) if i == j else ((0, 1), (1, 0)):
                    arc = (0, h) if d == (0, 1) else (h, 0)
                    yield OrientedTree(n, x + y + (arc,))


# -------------------------------------------------- relabelled-host classes

def median_classes(n: int, progress=None) -> dict:
    """Group all labelled tournaments of order n by the tournament obtained
    after relabelling along the computed local median order.

    Every position-space procedure behaves identically on the members of a
    class, so checking one representative per class covers all labelled
    tournaments.  Values are the number of labelled tournaments per class.
    """
    from .median import local_median_order
    classes: dict = {}
    total = 1 << (n * (n - 1) // 2)
    for code in range(total):
        t = tournament_from_code(n, code)
        order = local_median_order(t)
        key = t.relabel(list(order)).rows
        classes[key] = classes.get(key, 0) + 1
        if progress is not None and code % 65536 == 0:
            progress(code, total)
    return classes
