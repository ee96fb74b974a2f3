"""Greedy embedding of arborescences along a local median order.

Everything here works in position space: position i of an ordered host is
the i-th vertex of the ordering.  The greedy engine walks the positions in
order; whenever it reaches a vertex hosting a node with sons it gives those
sons the first not-yet-hit out-neighbours of that vertex.  Walking backwards
and using in-neighbours gives the dual procedure for in-arborescences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .core import (RootedTree, Tournament, interval_mask, iter_bits,
                   iter_bits_desc, rooted, verify_embedding)
from .errors import EmbeddingFailure, PreconditionError
from .median import (OrderedHost, check_m2, check_permutation, local_median_order)


# ------------------------------------------------------------------ helpers

def as_rooted(a, root=None, kind="out") -> RootedTree:
    if isinstance(a, RootedTree):
        return a
    if root is None:
        if kind == "out":
            cands = [u for u in range(a.n) if not a.in_adj[u]]
        else:
            cands = [u for u in range(a.n) if not a.out_adj[u]]
        if len(cands) != 1:
            raise PreconditionError(f"not an {kind}-arborescence")
        root = cands[0]
    return rooted(a, root)


def arbo_leaf_count(rt: RootedTree) -> int:
    """Leaves of an arborescence away from its root; a lone root counts as one."""
    if rt.n == 1:
        return 1
    return sum(1 for u in rt.order if not rt.sons[u])


def default_son_order(rt: RootedTree) -> dict:
    """Sons by decreasing subtree size, ties by node id."""
    size = rt.subtree_sizes()
    return {u: sorted(rt.sons[u], key=lambda s: (-size[s], s)) for u in rt.order}


def _get_host(t: Tournament, order, check: bool) -> OrderedHost:
    if order is None:
        order = local_median_order(t)
    else:
        order = tuple(order)
        check_permutation(t, order)
        if check and check_m2(t, order):
            raise PreconditionError("ordering is not a local median order")
    return OrderedHost(t, tuple(order))


def _dump(tree, t, order, **extra):
    d = {"tree": tree.to_text() if tree is not None else None,
         "tournament": t.to_text() if t is not None else None,
         "ordering": list(order) if order is not None else None}
    d.update(extra)
    return d


def sigma_forward(positions, hi: int) -> bool:
    """Every terminal interval [j, hi) holds fewer than |I|/2 + 1 images."""
    cnt = 0
    for j in sorted(positions, reverse=True):
        cnt += 1
        # the tightest interval containing these images starts at j
        if 2 * cnt >= (hi - j) + 2:
            return False
    return True


def sigma_backward(positions, lo: int) -> bool:
    cnt = 0
    for j in sorted(positions):
        cnt += 1
        if 2 * cnt >= (j - lo + 1) + 2:
            return False
    return True


def nice_violations(positions, forbidden, lo: int, hi: int,
                    occupied_only: bool = False) -> list[tuple[int, int]]:
    """Intervals of [lo, hi] (inclusive) breaking the sigma-F-nice inequality.

    Checks every terminal interval [j, hi] and initial interval [lo, j]:
    |phi & I| < |I|/2 - |F & I| + 1.  An end interval packed with forbidden
    vertices and no image breaks this for any embedding, so with
    occupied_only=True only intervals containing an image are checked.
    """
    img = set(positions)
    fb = set(forbidden)
    bad = []
    c_img = c_f = 0
    for j in range(hi, lo - 1, -1):
        c_img += j in img
        c_f += j in fb
        if (c_img or not occupied_only) and 2 * c_img >= (hi - j + 1) - 2 * c_f + 2:
            bad.append((j, hi))
    c_img = c_f = 0
    for j in range(lo, hi + 1):
        c_img += j in img
        c_f += j in fb
        if (c_img or not occupied_only) and 2 * c_img >= (j - lo + 1) - 2 * c_f + 2:
            bad.append((lo, j))
    return bad


# ------------------------------------------------------------- greedy engine

class GreedyStuck(Exception):
    def __init__(self, node, position, need, got):
        super().__init__(f"node {node} at position {position} needs {need} free "
                         f"neighbours, found {got}")
        self.node, self.position = node, position


@dataclass
class GreedyRun:
    pos: dict                       # node -> position
    failed: list                    # positions reached while not hit
    dummies: list                   # positions absorbed by dummy leaves (forbidden)
    log: list = field(default_factory=list)


def run_greedy(out_rows: Sequence[int], in_rows: Sequence[int], sons: Mapping, placed: Mapping,
               lo: int, hi: int, *, direction: int = 1, blocked: int = 0,
               forbidden: set | None = None, policy: Callable | None = None,
               on_place: Callable | None = None, log: bool = False) -> GreedyRun:
    """The arborescence greedy over positions lo..hi-1.

    `sons[a]` lists the sons of a in preference order (the first son takes the
    earliest vertex).  With direction=-1 the walk goes from hi-1 down to lo and
    sons take in-neighbours, latest first.  Positions in `forbidden` that would
    be handed to a son are instead absorbed by a dummy leaf of the same father
    (the re-run-with-a-dummy construction done in one pass).  `policy(a, sons,
    picks)` may remap sons to the picked positions; `on_place(node, pos)` is
    called (with the current hit mask) once all sons of a father are placed,
    and may grow `forbidden`.
    """
    pos = dict(placed)
    at = {p: a for a, p in pos.items()}
    hit = blocked
    for p in at:
        hit |= 1 << p
    failed, dummies, entries = [], [], []
    if forbidden is None:
        forbidden = set()
    rng = range(lo, hi) if direction == 1 else range(hi - 1, lo - 1, -1)
    for i in rng:
        a = at.get(i)
        if a is None:
            if not (hit >> i) & 1:
                failed.append(i)
            continue
        ss = sons.get(a)
        if not ss:
            continue
        need = len(ss)
        if direction == 1:
            cand = out_rows[i] & ~hit & interval_mask(i + 1, hi)
            it = iter_bits(cand)
        else:
            cand = in_rows[i] & ~hit & interval_mask(lo, i)
            it = iter_bits_desc(cand)
        picks = []
        for j in it:
            if j in forbidden:
                dummies.append(j)
                hit |= 1 << j
                continue
            picks.append(j)
            hit |= 1 << j
            if len(picks) == need:
                break
        if len(picks) < need:
            raise GreedyStuck(a, i, need, len(picks))
        if policy is None:
            assign = dict(zip(ss, picks))
        else:
            assign = policy(a, ss, picks)
        if log:
            entries.append((i, a, tuple(picks)))
        for s, j in assign.items():
            pos[s] = j
            at[j] = s
            hit |= 1 << j
        if on_place is not None:
            for s, j in assign.items():
                on_place(s, j, hit)
    return GreedyRun(pos, failed, dummies, entries)


# ------------------------------------------------------ out-arborescences

@dataclass
class GreedyTrace:
    embedding: dict                 # node -> vertex
    failed: list                    # failed vertices in ordering order
    leaf_injection: dict            # failed vertex -> out-leaf
    active_log: list | None = None
    order: tuple = ()


def _injection(rt: RootedTree, pos: dict, failed_pos: list) -> dict:
    """Map each failed position to an unclaimed out-leaf placed before it."""
    leaves = sorted(u for u in rt.order if not rt.sons[u] and u != rt.root)
    claimed = set()
    inj = {}
    for f in failed_pos:
        for leaf in leaves:
            if leaf not in claimed and pos[leaf] < f:
                claimed.add(leaf)
                inj[f] = leaf
                break
        else:
            return None
    return inj


def embed_out_arborescence(a, t: Tournament, order=None, *, son_order: Mapping | None = None,
                           check: bool = True, log: bool = False) -> GreedyTrace:
    """Embed an out-arborescence with its root at order[0].

    Runs the greedy on the first n + k - 1 vertices of the ordering, k being
    the number of out-leaves.
    """
    rt = as_rooted(a, kind="out")
    if not rt.is_out_arborescence():
        raise PreconditionError("tree is not an out-arborescence from the given root")
    k = arbo_leaf_count(rt)
    m = rt.n + k - 1
    if t.n < m:
        raise PreconditionError(f"tournament of order {t.n} is smaller than n+k-1 = {m}")
    host = _get_host(t, order, check)
    sons = son_order if son_order is not None else default_son_order(rt)
    try:
        run = run_greedy(host.out, host.inn, sons, {rt.root: 0}, 0, m, log=log)
    except GreedyStuck as exc:
        raise EmbeddingFailure(f"greedy arborescence embedding failed: {exc}",
                               _dump(rt.tree, t, host.order, root=rt.root)) from None
    inj = _injection(rt, run.pos, run.failed)
    if inj is None or len(run.failed) > k - 1:
        raise EmbeddingFailure("failed vertices admit no injection into earlier out-leaves",
                               _dump(rt.tree, t, host.order, root=rt.root))
    phi = host.to_vertices(run.pos)
    if verify_embedding(rt.tree, t, phi):
        raise EmbeddingFailure("greedy produced an invalid embedding", _dump(rt.tree, t, host.order))
    return GreedyTrace(phi, [host.order[f] for f in run.failed],
                       {host.order[f]: leaf for f, leaf in inj.items()},
                       run.log if log else None, host.order)


def embed_in_arborescence(a, t: Tournament, order=None, *, check: bool = True) -> GreedyTrace:
    """Dual of embed_out_arborescence: reverse the tree, the tournament and the ordering."""
    rt = as_rooted(a, kind="in")
    if not rt.is_in_arborescence():
        raise PreconditionError("tree is not an in-arborescence to the given root")
    if order is None:
        order = local_median_order(t)
    rev_tree = rooted(rt.tree.reversed(), rt.root)
    tr = embed_out_arborescence(rev_tree, t.reversed(), tuple(reversed(order)), check=check)
    tr.order = tuple(order)
    return tr


# --------------------------------------------------------- leaf extension

def extend_out_leaf(a: RootedTree, leaf: int, t: Tournament, order, phi: Mapping,
                    *, check: bool = True) -> dict:
    """Extend a forward embedding of A - leaf to A, leaf going to the first
    free out-neighbour of its father's image later in the ordering."""
    rt = a
    order = tuple(order)
    check_permutation(t, order)
    if check and check_m2(t, order):
        raise PreconditionError("ordering is not a local median order")
    b = _attached(rt, leaf)
    if not rt.tree.has_arc(b, leaf):
        raise PreconditionError(f"node {leaf} is not an out-leaf")
    host = OrderedHost(t, order)
    m = t.n
    pos = {u: host.position[x] for u, x in phi.items() if u != leaf}
    if len(pos) != rt.n - 1:
        raise PreconditionError("phi must embed every node except the leaf")
    if any(p >= m - 2 for p in pos.values()):
        raise PreconditionError("phi uses one of the last two vertices")
    if not sigma_forward(pos.values(), m - 2):
        raise PreconditionError("phi is not forward on the ordering minus its last two vertices")
    j = extend_leaf_positions(host.out, host.inn, pos, b, 0, m, out=True)
    if j is None:
        raise EmbeddingFailure("no free out-neighbour for the new leaf",
                               _dump(rt.tree, t, order, phi=dict(phi), leaf=leaf))
    pos[leaf] = j
    if not sigma_forward(pos.values(), m):
        raise EmbeddingFailure("extension is not forward", _dump(rt.tree, t, order))
    res = host.to_vertices(pos)
    if verify_embedding(rt.tree, t, res):
        raise EmbeddingFailure("extension produced an invalid embedding", _dump(rt.tree, t, order))
    return res


def _attached(rt: RootedTree, leaf: int) -> int:
    nb = rt.tree.nbrs[leaf]
    if len(nb) != 1 or leaf == rt.root:
        raise PreconditionError(f"node {leaf} is not a non-root leaf")
    return nb[0]


def extend_leaf_positions(out_rows, in_rows, pos: Mapping, b: int, lo: int, hi: int, *,
                          out: bool, forbidden=frozenset(), blocked: int = 0) -> int | None:
    """First free out-neighbour of pos[b] after it (out=True), or last free
    in-neighbour before it (out=False), inside [lo, hi)."""
    hit = blocked
    for p in pos.values():
        hit |= 1 << p
    i = pos[b]
    if out:
        cand = out_rows[i] & ~hit & interval_mask(i + 1, hi)
        it = iter_bits(cand)
    else:
        cand = in_rows[i] & ~hit & interval_mask(lo, i)
        it = iter_bits_desc(cand)
    for j in it:
        if j not in forbidden:
            return j
    return None


# -------------------------------------------------------- nice embeddings

def _removal_sequence(rt: RootedTree) -> list[tuple[int, int]]:
    """(leaf, neighbour) pairs, removing the highest-id non-root leaf each time."""
    tree = rt.tree
    deg = [tree.degree(u) for u in range(tree.n)]
    alive = set(range(tree.n))
    seq = []
    import heapq
    heap = [-u for u in range(tree.n) if deg[u] == 1 and u != rt.root]
    heapq.heapify(heap)
    while len(alive) > 1:
        u = -heapq.heappop(heap)
        if u not in alive or deg[u] != 1:
            continue
        (w,) = [x for x in tree.nbrs[u] if x in alive]
        seq.append((u, w))
        alive.discard(u)
        deg[w] -= 1
        if deg[w] == 1 and w != rt.root:
            heapq.heappush(heap, -w)
    return seq


def nice_radius(n: int, f: int) -> int:
    """Half-width of the window used for a tree of order n with f forbidden vertices."""
    return 2 * n + 2 * f - 2


def nice_positions(out_rows, in_rows, rt: RootedTree, center: int, radius: int,
                   forbidden, *, blocked: int = 0, dump=None) -> dict:
    """Nice embedding around `center` inside [center-radius, center+radius].

    Leaves are removed one at a time (highest id first); the window for the
    smaller tree is the least fixed point of p = 2t + 2|F in window(p)| - 4.
    Leaves are then put back, an out-leaf on the first free non-forbidden
    out-neighbour after its neighbour's image and an in-leaf on the last free
    non-forbidden in-neighbour before it.
    """
    fb = set(forbidden)
    seq = _removal_sequence(rt)
    n = rt.n

    def f_in(r):
        return sum(1 for x in fb if center - r <= x <= center + r)

    radii = [radius]          # radii[i] for the tree with n - i nodes
    t = n
    for _ in seq:
        p = 2 * t - 4
        iters = 0
        while True:
            nxt = 2 * t + 2 * f_in(p) - 4
            iters += 1
            if nxt == p:
                break
            if nxt < p:
                raise EmbeddingFailure("window fixed point decreased", dump)
            p = nxt
        if iters > len(fb) + 1:
            raise EmbeddingFailure("window fixed point took too many steps", dump)
        if p > radii[-1] - 2:
            raise EmbeddingFailure(f"window radius {p} does not fit in {radii[-1]}", dump)
        radii.append(p)
        t -= 1
    if center in fb:
        raise PreconditionError("center vertex is forbidden")
    pos = {rt.root: center}
    # re-insert leaves in reverse removal order; the tree with t nodes uses radii[n - t]
    for idx in range(len(seq) - 1, -1, -1):
        leaf, b = seq[idx]
        r = radii[idx]
        lo, hi = center - r, center + r + 1
        is_out = rt.tree.has_arc(b, leaf)
        j = extend_leaf_positions(out_rows, in_rows, pos, b, lo, hi, out=is_out,
                                  forbidden=fb, blocked=blocked)
        if j is None:
            raise EmbeddingFailure(f"no free neighbour for leaf {leaf} in window radius {r}", dump)
        pos[leaf] = j
    return pos


def embed_sigma_F_nice(a, t: Tournament, order, forbidden=(), f: int | None = None,
                       *, check: bool = True, root: int | None = None) -> dict:
    """Embedding with the root at the middle vertex of the ordering, avoiding
    `forbidden`, for a tournament of order exactly 4n + 4f - 3."""
    rt = a if isinstance(a, RootedTree) else rooted(a, 0 if root is None else root)
    fset = set(forbidden)
    if f is None:
        f = len(fset)
    if len(fset) > f:
        raise PreconditionError(f"{len(fset)} forbidden vertices exceed capacity {f}")
    need = 4 * rt.n + 4 * f - 3
    if t.n != need:
        raise PreconditionError(f"tournament order must be 4n+4f-3 = {need}, got {t.n}")
    host = _get_host(t, order, check)
    center = (t.n - 1) // 2
    fpos = {host.position[x] for x in fset}
    if center in fpos:
        raise PreconditionError("the middle vertex of the ordering is forbidden")
    dump = _dump(rt.tree, t, host.order, forbidden=sorted(fset), f=f)
    pos = nice_positions(host.out, host.inn, rt, center, nice_radius(rt.n, f), fpos, dump=dump)
    phi = host.to_vertices(pos)
    if verify_embedding(rt.tree, t, phi) or set(phi.values()) & fset:
        raise EmbeddingFailure("nice embedding is invalid or uses a forbidden vertex", dump)
    if nice_violations(pos.values(), fpos, 0, t.n - 1, occupied_only=True):
        raise EmbeddingFailure("nice embedding breaks the niceness inequality", dump)
    return phi


# ------------------------------------------------------ forests at roots

def _combine_forest(arbs: Sequence[RootedTree]):
    """Disjoint union with node ids shifted; returns (sons, roots, back-map)."""
    sons, roots, back = {}, [], {}
    off = 0
    for q, rt in enumerate(arbs):
        so = default_son_order(rt)
        for u in rt.order:
            sons[u + off] = [s + off for s in so[u]]
            back[u + off] = (q, u)
        roots.append(rt.root + off)
        off += rt.n
    return sons, roots, back, off


def forest_greedy(out_rows, in_rows, arbs: Sequence, roots_at: Sequence[int], lo: int, hi: int, *,
                  direction: int = 1, forbidden: set | None = None, blocked: int = 0,
                  on_place=None, sons_override=None) -> GreedyRun:
    """Greedy for several arborescences whose roots are already pinned.

    This is what the augmented-tournament construction reduces to once the
    added prefix has been processed: the pinned roots are hit, everything
    else in the range is processed by the usual greedy.
    """
    if sons_override is not None:
        sons, roots = sons_override
    else:
        sons, roots, _, _ = _combine_forest(arbs)
    placed = dict(zip(roots, roots_at))
    return run_greedy(out_rows, in_rows, sons, placed, lo, hi, direction=direction,
                      blocked=blocked, forbidden=forbidden, on_place=on_place)


def embed_forest_at_roots(arbs: Sequence, t: Tournament, order, forbidden=(), positions=(),
                          *, s: int | None = None, f: int | None = None, check: bool = True,
                          on_place=None) -> list[dict]:
    """Embed out-arborescences with root q pinned at order[positions[q]].

    Builds the augmented tournament (a transitive block of s - p + 2 vertices
    in front of the ordering, one of which dominates exactly the pinned
    vertices and the vertices after position s) and runs the greedy on the
    augmented arborescence.  Forbidden vertices met by the greedy are given
    to dummy leaves.  `on_place(q, node, vertex)` may add vertices to the
    forbidden set while the greedy runs.  Returns one embedding per tree.
    """
    rts = [as_rooted(x, kind="out") for x in arbs]
    for rt in rts:
        if not rt.is_out_arborescence():
            raise PreconditionError("every tree must be an out-arborescence")
    p = len(rts)
    positions = list(positions)
    if len(positions) != p or any(b <= a for a, b in zip(positions, positions[1:])):
        raise PreconditionError("need one strictly increasing position per tree")
    fset = set(forbidden)
    if f is None:
        f = len(fset)
    total = sum(rt.n + arbo_leaf_count(rt) - 1 for rt in rts)
    if s is None:
        s = t.n - total - 2 * f + 1
    if s <= p:
        raise PreconditionError(f"need s > p (s={s}, p={p})")
    if t.n < s + total + 2 * f - 1:
        raise PreconditionError(f"tournament order {t.n} < s + sum(n+k-1) + 2f - 1 = "
                                f"{s + total + 2 * f - 1}")
    if positions and (positions[0] < 0 or positions[-1] >= s):
        raise PreconditionError("pinned positions must lie among the first s vertices")
    host = _get_host(t, order, check)
    if any(host.order[i] in fset for i in positions):
        raise PreconditionError("a pinned vertex is forbidden")

    m = t.n
    extra = s - p + 2
    # augmented positions: 0 = b, 1 = a, 2.. = dummies a_1..a_{s-p}, then T shifted by extra
    pinned = {i + extra for i in positions}
    big = m + extra
    out_rows = [0] * big
    in_rows = [0] * big
    for x in range(extra):
        for y in range(x + 1, extra):
            out_rows[x] |= 1 << y
    for i in range(m):
        out_rows[i + extra] = host.out[i] << extra
    for x in range(extra):
        if x == 1:
            continue
        out_rows[x] |= interval_mask(extra, big)
    special = 0
    for i in range(m):
        y = i + extra
        if y in pinned or i >= s:
            special |= 1 << y
        else:
            out_rows[y] |= 1 << 1
    out_rows[1] |= special
    for x in range(big):
        for y in iter_bits(out_rows[x]):
            in_rows[y] |= 1 << x

    sons, roots, back, nb = _combine_forest(rts)
    b_node, a_node = nb, nb + 1
    dummy_nodes = list(range(nb + 2, nb + 2 + s - p))
    sons[b_node] = [a_node] + dummy_nodes
    sons[a_node] = list(roots)
    fpos = {host.position[x] + extra for x in fset}

    def hook(node, j, hit):
        if on_place is None or node not in back:
            return
        q, u = back[node]
        new = on_place(q, u, host.order[j - extra])
        for x in new or ():
            px = host.position[x] + extra
            fpos.add(px)

    dump = _dump(None, t, host.order, positions=positions, s=s, forbidden=sorted(fset))
    try:
        run = run_greedy(out_rows, in_rows, sons, {b_node: 0}, 0, big, forbidden=fpos,
                         on_place=hook)
    except GreedyStuck as exc:
        raise EmbeddingFailure(f"augmented greedy failed: {exc}", dump) from None
    if run.pos[a_node] != 1 or any(run.pos[r] != i + extra for r, i in zip(roots, positions)):
        raise EmbeddingFailure("augmented greedy did not pin the roots", dump)
    out = [dict() for _ in rts]
    for node, (q, u) in back.items():
        j = run.pos[node] - extra
        if not 0 <= j < m:
            raise EmbeddingFailure("forest node landed in the augmented block", dump)
        out[q][u] = host.order[j]
    final_f = {host.order[j - extra] for j in fpos}
    for q, rt in enumerate(rts):
        if verify_embedding(rt.tree, t, out[q]) or set(out[q].values()) & final_f:
            raise EmbeddingFailure("forest embedding invalid or uses a forbidden vertex", dump)
    used = [x for e in out for x in e.values()]
    if len(used) != len(set(used)):
        raise EmbeddingFailure("forest embeddings overlap", dump)
    return out


def augmented_order_is_median(t: Tournament, order, positions, s: int) -> bool:
    """Rebuild the augmented tournament as a Tournament and check M2 on it."""
    p = len(positions)
    m = t.n
    extra = s - p + 2
    host = OrderedHost(t, tuple(order))
    n2 = m + extra
    rows = [0] * n2
    pinned = {i + extra for i in positions}
    for x in range(extra):
        for y in range(x + 1, extra):
            rows[x] |= 1 << y
        if x != 1:
            rows[x] |= interval_mask(extra, n2)
    for i in range(m):
        rows[i + extra] |= host.out[i] << extra
        y = i + extra
        if y in pinned or i >= s:
            rows[1] |= 1 << y
        else:
            rows[y] |= 1 << 1
    aug = Tournament(n2, tuple(rows))
    aug.validate()
    return not check_m2(aug, list(range(n2)))
