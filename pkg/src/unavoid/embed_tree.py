"""Embedding general oriented trees: few leaves (root choice plus the
equivalent arborescence), many leaves (leaf clusters, heart, three phases),
bi-arborescences, and the dispatcher over all available bounds."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .core import (OrientedTree, RootedTree, Tournament, interval_mask, leaf_count,
                   leaf_partition, rooted, tree_metrics, verify_embedding)
from .embed_arbo import (GreedyStuck, _dump, _get_host, arbo_leaf_count, default_son_order,
                         extend_leaf_positions, nice_positions, nice_radius, run_greedy,
                         sigma_forward)
from .errors import EmbeddingFailure, NoGuarantee, PreconditionError
from .median import OrderedHost, local_median_order


# ------------------------------------------------------------------ metrics

@dataclass
class Component:
    top: int                 # node closest to the root
    nodes: list
    arcs: list

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass
class RootMetrics:
    root: int
    gamma_up: int
    gamma_down: int
    beta_up: int
    beta_down: int
    components_up: list
    components_down: list


def forests(rt: RootedTree) -> tuple[list[Component], list[Component]]:
    """Components of the upward and downward forests of a rooted tree."""
    arcs = rt.tree.arc_set
    father = rt.father
    up_top, down_top = {}, {}
    ups, downs = {}, {}
    for s in rt.order[1:]:
        f = father[s]
        if (f, s) in arcs:
            top = up_top.get(f, f)
            up_top[s] = top
            comp = ups.setdefault(top, Component(top, [top], []))
            comp.nodes.append(s)
            comp.arcs.append((f, s))
        else:
            top = down_top.get(f, f)
            down_top[s] = top
            comp = downs.setdefault(top, Component(top, [top], []))
            comp.nodes.append(s)
            comp.arcs.append((s, f))
    return list(ups.values()), list(downs.values())


def _comp_leaves(comp: Component, out: bool) -> int:
    """Out-leaves (out=True) or in-leaves of a component, counted inside it."""
    indeg, outdeg = {}, {}
    for u, v in comp.arcs:
        outdeg[u] = outdeg.get(u, 0) + 1
        indeg[v] = indeg.get(v, 0) + 1
    if out:
        return sum(1 for u in comp.nodes if indeg.get(u, 0) == 1 and outdeg.get(u, 0) == 0)
    return sum(1 for u in comp.nodes if outdeg.get(u, 0) == 1 and indeg.get(u, 0) == 0)


def gamma(a: OrientedTree, r: int) -> RootMetrics:
    if not 0 <= r < a.n:
        raise PreconditionError(f"root {r} is not a node")
    rt = rooted(a, r)
    ups, downs = forests(rt)
    g_up = sum(c.size + _comp_leaves(c, True) - 2 for c in ups)
    g_down = sum(c.size + _comp_leaves(c, False) - 2 for c in downs)
    lp = leaf_partition(a)
    b_up = sum(3 * c.size - 3 for c in ups) + 2 * len(lp.out_leaves)
    b_down = sum(3 * c.size - 3 for c in downs) + 2 * len(lp.in_leaves)
    return RootMetrics(r, g_up, g_down, b_up, b_down, ups, downs)


def gamma_all_roots(a: OrientedTree) -> list[tuple[int, int]]:
    """(gamma_up, gamma_down) for every root, in O(n) overall.

    For a forest U of arcs, sum over components of |V(C)| + |L(C)| - 2 equals
    2|U| - |V(U)| + |L(U)|, which only needs per-node degree counts.  Moving
    the root across one arc flips that arc between the two forests and
    nothing else, so a walk over the tree updates the counts in O(1) per step.
    """
    n = a.n
    if n == 1:
        return [(0, 0)]
    in_u = [0] * n
    out_u = [0] * n
    in_d = [0] * n
    out_d = [0] * n
    rt = rooted(a, 0)
    for s in rt.order[1:]:
        f = rt.father[s]
        if a.has_arc(f, s):
            out_u[f] += 1
            in_u[s] += 1
        else:
            out_d[s] += 1
            in_d[f] += 1

    def contrib(v):
        cu = 0
        du = in_u[v] + out_u[v]
        if du:
            cu -= 1
            if in_u[v] == 1 and out_u[v] == 0:
                cu += 1
        cd = 0
        dd = in_d[v] + out_d[v]
        if dd:
            cd -= 1
            if out_d[v] == 1 and in_d[v] == 0:
                cd += 1
        return cu, cd

    n_up = sum(out_u)
    g_up = 2 * n_up
    g_down = 2 * (n - 1 - n_up)
    for v in range(n):
        cu, cd = contrib(v)
        g_up += cu
        g_down += cd
    res = [None] * n
    res[0] = (g_up, g_down)

    def flip(tail, head, to_up):
        nonlocal g_up, g_down
        for v in (tail, head):
            cu, cd = contrib(v)
            g_up -= cu
            g_down -= cd
        if to_up:
            out_d[tail] -= 1
            in_d[head] -= 1
            out_u[tail] += 1
            in_u[head] += 1
            g_up += 2
            g_down -= 2
        else:
            out_u[tail] -= 1
            in_u[head] -= 1
            out_d[tail] += 1
            in_d[head] += 1
            g_up -= 2
            g_down += 2
        for v in (tail, head):
            cu, cd = contrib(v)
            g_up += cu
            g_down += cd

    # iterative DFS over roots; crossing f -> s the arc between them flips
    stack = [(0, iter(rt.sons[0]))]
    while stack:
        u, it = stack[-1]
        s = next(it, None)
        if s is None:
            stack.pop()
            if stack:
                f = stack[-1][0]
                # move back from u to f
                if a.has_arc(f, u):
                    flip(f, u, True)
                else:
                    flip(u, f, False)
            continue
        # move root from u to s: the arc between them changes side
        if a.has_arc(u, s):
            flip(u, s, False)
        else:
            flip(s, u, True)
        res[s] = (g_up, g_down)
        stack.append((s, iter(rt.sons[s])))
    return res


def choose_root_few_leaves(a: OrientedTree) -> tuple[int, bool]:
    """Root minimising min(gamma_up, gamma_down); reversed=True when the
    minimum is a gamma_up, in which case the tree is to be reversed."""
    if a.n < 2:
        raise PreconditionError("need at least two nodes")
    vals = gamma_all_roots(a)
    best = min(((min(gu, gd), r, 0 if gd <= gu else 1) for r, (gu, gd) in enumerate(vals)))
    _, r, rev = best
    tree = a.reversed() if rev else a
    if tree.in_adj[r]:
        raise EmbeddingFailure("minimising root has an in-neighbour", {"tree": a.to_text(), "root": r})
    return r, bool(rev)


def min_gamma(a: OrientedTree) -> int:
    return min(min(g) for g in gamma_all_roots(a))


# -------------------------------------------------- equivalent arborescence

@dataclass
class EquivalentMap:
    """Record of the equivalent-arborescence construction."""
    fathers: list            # f_i
    components: list         # node lists of C_i (top first)
    tops: list               # c_i, the component roots
    new_nodes: list          # N_i (lists of new node ids)
    in_leaves: list          # k_i

    def group(self, i) -> list:
        return self.components[i] + self.new_nodes[i]


def equivalent_arborescence(rt: RootedTree) -> tuple[RootedTree, EquivalentMap]:
    """Replace every downward component C_i by arcs from the father of its
    top to each of its nodes, plus k_i - 1 new leaves of that father."""
    a = rt.tree
    if a.in_adj[rt.root]:
        raise PreconditionError("the root must have in-degree 0")
    ups, downs = forests(rt)
    down_arcs = set()
    for c in downs:
        down_arcs.update(c.arcs)
    arcs = [x for x in a.arcs if x not in down_arcs]
    nxt = a.n
    emap = EquivalentMap([], [], [], [], [])
    for c in downs:
        f = rt.father[c.top]
        k_i = _comp_leaves(c, False)
        news = list(range(nxt, nxt + k_i - 1))
        nxt += k_i - 1
        arcs.extend((f, u) for u in c.nodes if u != c.top)
        arcs.extend((f, u) for u in news)
        emap.fathers.append(f)
        emap.components.append(list(c.nodes))
        emap.tops.append(c.top)
        emap.new_nodes.append(news)
        emap.in_leaves.append(k_i)
    a2 = OrientedTree.unchecked(nxt, arcs)
    return rooted(a2, rt.root), emap


def _sub_tournament(out_rows, positions) -> Tournament:
    rows = []
    for p in positions:
        r = out_rows[p]
        row = 0
        for j, q in enumerate(positions):
            if (r >> q) & 1:
                row |= 1 << j
        rows.append(row)
    return Tournament(len(positions), tuple(rows))


def root_source_positions(out_rows, in_rows, rt: RootedTree, lo: int, hi: int, dump=None):
    """Root-source procedure on positions [lo, hi).

    Runs the arborescence greedy on the equivalent arborescence; when the
    father f_i of a downward component receives its image set, the group
    S_i = C_i + N_i is re-embedded: C_i goes into T<phi(S_i)> by the dual
    greedy along a fresh local median order of that subtournament, the new
    nodes take the remaining vertices.  Returns (positions of every node of
    the equivalent arborescence, the map record, the greedy run).
    """
    a2, emap = equivalent_arborescence(rt)
    base = default_son_order(a2)
    comp_of_father = {}
    for i, f in enumerate(emap.fathers):
        comp_of_father.setdefault(f, []).append(i)
    in_comp = set()
    for i in range(len(emap.components)):
        in_comp.update(emap.components[i])
    sons = {}
    for u in a2.order:
        groups = comp_of_father.get(u, [])
        grouped = set()
        for i in groups:
            grouped.update(emap.group(i))
        plain = [s for s in base.get(u, []) if s not in grouped]
        lst = plain[:]
        for i in groups:
            lst.extend(emap.group(i))
        if lst:
            sons[u] = lst

    def policy(f, ss, picks):
        groups = comp_of_father.get(f)
        if not groups:
            return dict(zip(ss, picks))
        grouped = set()
        for i in groups:
            grouped.update(emap.group(i))
        plain = [s for s in ss if s not in grouped]
        assign = dict(zip(plain, picks[:len(plain)]))
        rest = picks[len(plain):]
        for i in groups:
            grp = emap.group(i)
            w = sorted(rest[:len(grp)])
            rest = rest[len(grp):]
            assign.update(_embed_component(out_rows, rt, emap, i, w, dump))
        return assign

    size = a2.n + arbo_leaf_count(a2) - 1
    if hi - lo < size:
        raise EmbeddingFailure(f"interval of {hi - lo} vertices is shorter than the equivalent "
                               f"arborescence needs ({size})", dump)
    try:
        run = run_greedy(out_rows, in_rows, sons, {rt.root: lo}, lo, hi, policy=policy)
    except GreedyStuck as exc:
        raise EmbeddingFailure(f"equivalent-arborescence greedy failed: {exc}", dump) from None
    return run.pos, emap, run, a2


def _embed_component(out_rows, rt: RootedTree, emap: EquivalentMap, i: int, w: list, dump):
    """Embed C_i (an in-arborescence to its top) inside positions w."""
    comp = emap.components[i]
    top = emap.tops[i]
    sub = _sub_tournament(out_rows, w)
    order = local_median_order(sub)
    host = OrderedHost(sub, order)
    # sons in the in-arborescence: nodes whose arc points at their father
    cset = set(comp)
    sons = {}
    size = {}
    for u in reversed(comp):
        size[u] = 1 + sum(size[s] for s in rt.sons[u] if s in cset)
    for u in comp:
        ss = [s for s in rt.sons[u] if s in cset]
        if ss:
            sons[u] = sorted(ss, key=lambda s: (-size[s], s))
    m = len(w)
    try:
        run = run_greedy(host.out, host.inn, sons, {top: m - 1}, 0, m, direction=-1)
    except GreedyStuck as exc:
        raise EmbeddingFailure(f"component re-embedding failed: {exc}", dump) from None
    used = set()
    assign = {}
    for u in comp:
        q = run.pos[u]
        j = w[host.order[q]]
        assign[u] = j
        used.add(j)
    free = [j for j in w if j not in used]
    for u, j in zip(emap.new_nodes[i], free):
        assign[u] = j
    return assign


def embed_root_source(a: RootedTree, t: Tournament, order=None, *, check: bool = True) -> dict:
    """Embed a tree rooted at an in-degree-0 node in n + k - 1 + gamma_down vertices."""
    rt = a
    if rt.tree.in_adj[rt.root]:
        raise PreconditionError("root must have in-degree 0")
    gd = gamma(rt.tree, rt.root).gamma_down
    need = rt.n + leaf_count(rt.tree) - 1 + gd
    if t.n < need:
        raise PreconditionError(f"tournament of order {t.n} below n+k-1+gamma = {need}")
    host = _get_host(t, order, check)
    dump = _dump(rt.tree, t, host.order, root=rt.root)
    pos, _, _, _ = root_source_positions(host.out, host.inn, rt, 0, need, dump)
    phi = {u: host.order[pos[u]] for u in range(rt.n)}
    if verify_embedding(rt.tree, t, phi):
        raise EmbeddingFailure("root-source embedding is invalid", dump)
    return phi


def few_leaves_bound(a: OrientedTree) -> int:
    return a.n + leaf_count(a) - 1 + min_gamma(a)


def embed_few_leaves(a: OrientedTree, t: Tournament, order=None) -> dict:
    if a.n == 1:
        if t.n < 1:
            raise PreconditionError("empty tournament")
        return {0: 0}
    need = few_leaves_bound(a)
    if t.n < need:
        raise PreconditionError(f"tournament of order {t.n} below n+k-1+min gamma = {need}")
    r, rev = choose_root_few_leaves(a)
    tree = a.reversed() if rev else a
    host_t = t.reversed() if rev else t
    if order is None:
        order = local_median_order(t)
    host_order = tuple(reversed(order)) if rev else tuple(order)
    phi = embed_root_source(rooted(tree, r), host_t, host_order, check=False)
    if verify_embedding(a, t, phi):
        raise EmbeddingFailure("few-leaves embedding is invalid", _dump(a, t, order))
    return phi


# ------------------------------------------------------------ bi-arborescence

def bi_arborescence_roots(a: OrientedTree) -> list[int]:
    """Every node from which each path is directed (away or toward it)."""
    res = []
    for r in range(a.n):
        rt = rooted(a, r)
        ok = True
        sign = {r: 0}
        for s in rt.order[1:]:
            f = rt.father[s]
            d = 1 if a.has_arc(f, s) else -1
            if sign[f] not in (0, d):
                ok = False
                break
            sign[s] = d
        if ok:
            res.append(r)
    return res


def _bi_parts(a: OrientedTree, r: int):
    rt = rooted(a, r)
    in_nodes = [r] + [s for s in rt.order[1:] if _towards(a, rt, s)]
    out_nodes = [r] + [s for s in rt.order[1:] if not _towards(a, rt, s)]
    return rt, in_nodes, out_nodes


def _towards(a, rt, s):
    return a.has_arc(s, rt.father[s])


def _part_leaves(rt, nodes):
    nodes_set = set(nodes)
    if len(nodes) == 1:
        return 1
    return sum(1 for u in nodes[1:] if not any(s in nodes_set for s in rt.sons[u]))


def bi_arborescence_bound(a: OrientedTree) -> int | None:
    roots = bi_arborescence_roots(a)
    if not roots:
        return None
    lp = leaf_partition(a)
    k = leaf_count(a)
    if lp.in_leaves and lp.out_leaves:
        return a.n + k - 2
    return a.n + k - 1


def embed_bi_arborescence(a: OrientedTree, t: Tournament, order=None) -> dict:
    roots = bi_arborescence_roots(a)
    if not roots:
        raise PreconditionError("not a bi-arborescence")
    need = bi_arborescence_bound(a)
    if t.n < need:
        raise PreconditionError(f"tournament of order {t.n} below the bi-arborescence bound {need}")
    best = None
    for r in roots:
        rt, ins, outs = _bi_parts(a, r)
        if len(ins) > 1 and len(outs) > 1:
            best = (r, rt, ins, outs)
            break
    if best is None:
        r = roots[0]
        best = (r,) + _bi_parts(a, r)
    r, rt, ins, outs = best
    if order is None:
        order = local_median_order(t)
    host = OrderedHost(t, tuple(order))
    dump = _dump(a, t, host.order, root=r)
    ins_set, outs_set = set(ins), set(outs)
    size = rt.subtree_sizes()
    n1, k1 = len(ins), _part_leaves(rt, ins)
    n2, k2 = len(outs), _part_leaves(rt, outs)
    l1 = n1 + k1 - 1 if n1 > 1 else 1
    pos = {}
    if n1 > 1:
        sons = {u: sorted([s for s in rt.sons[u] if s in ins_set], key=lambda s: (-size[s], s))
                for u in ins}
        try:
            run = run_greedy(host.out, host.inn, sons, {r: l1 - 1}, 0, l1, direction=-1)
        except GreedyStuck as exc:
            raise EmbeddingFailure(f"in-part greedy failed: {exc}", dump) from None
        pos.update(run.pos)
    else:
        pos[r] = 0
    start = pos[r]
    if n2 > 1:
        hi = start + n2 + k2 - 1
        sons = {u: sorted([s for s in rt.sons[u] if s in outs_set], key=lambda s: (-size[s], s))
                for u in outs}
        try:
            run = run_greedy(host.out, host.inn, sons, {r: start}, start, hi)
        except GreedyStuck as exc:
            raise EmbeddingFailure(f"out-part greedy failed: {exc}", dump) from None
        pos.update(run.pos)
    phi = {u: host.order[p] for u, p in pos.items()}
    if verify_embedding(a, t, phi):
        raise EmbeddingFailure("bi-arborescence embedding is invalid", dump)
    return phi


# --------------------------------------------------------- clusters / heart

@dataclass
class ClusterSplit:
    s_minus: frozenset
    s_plus: frozenset
    heart: OrientedTree
    heart_nodes: list        # heart id -> node of A
    n_H: int
    k_H: int

    def to_heart(self) -> dict:
        return {u: i for i, u in enumerate(self.heart_nodes)}


def _cluster(a: OrientedTree, out: bool) -> set:
    ins = a.in_adj if out else a.out_adj
    outs = a.out_adj if out else a.in_adj
    s = set()
    changed = True
    while changed:
        changed = False
        for u in range(a.n):
            if u in s:
                continue
            if len(ins[u]) == 1 and all(w in s for w in outs[u]):
                s.add(u)
                changed = True
    return s


def clusters(a: OrientedTree) -> ClusterSplit:
    if a.n >= 2 and bi_arborescence_roots(a):
        raise PreconditionError("bi-arborescence: leaf clusters are not defined")
    sp = _cluster(a, True)
    sm = _cluster(a, False)
    if sp & sm:
        raise EmbeddingFailure("leaf clusters intersect on a non-bi-arborescence", {"tree": a.to_text()})
    heart_nodes = [u for u in range(a.n) if u not in sp and u not in sm]
    idx = {u: i for i, u in enumerate(heart_nodes)}
    arcs = [(idx[u], idx[v]) for u, v in a.arcs if u in idx and v in idx]
    heart = OrientedTree(len(heart_nodes), tuple(arcs))
    return ClusterSplit(frozenset(sm), frozenset(sp), heart, heart_nodes, heart.n, leaf_count(heart))


# ------------------------------------------------------------ many leaves

def many_leaves_bound(a: OrientedTree) -> int:
    n, k = a.n, leaf_count(a)
    return math.ceil((9 * n - 5 * k - 9) / 2)


@dataclass
class PhasePlan:
    ell: int
    p: int
    m: int
    root: int
    reversed: bool
    phase1: list = field(default_factory=list)
    phase2: list = field(default_factory=list)
    phase3: list = field(default_factory=list)


def _reverse_host(host: OrderedHost) -> OrderedHost:
    return OrderedHost(host.t.reversed(), tuple(reversed(host.order)))


def embed_many_leaves(a: OrientedTree, t: Tournament, order=None, plan_out: list | None = None) -> dict:
    if a.n < 3:
        raise PreconditionError("need at least three nodes")
    m = many_leaves_bound(a)
    if t.n < m:
        raise PreconditionError(f"tournament of order {t.n} below ceil(9n/2-5k/2-9/2) = {m}")
    if order is None:
        order = local_median_order(t)
    if bi_arborescence_roots(a):
        return embed_bi_arborescence(a, t, order)
    host = OrderedHost(t, tuple(order))
    cs = clusters(a)
    dump = _dump(a, t, host.order)
    if not cs.s_minus or not cs.s_plus:
        if cs.s_plus and not cs.s_minus:
            pos = _many_one_sided(a, cs, host.out, host.inn, m, dump)
        else:
            ra = a.reversed()
            rh = _reverse_host(host)
            pos = _many_one_sided(ra, clusters(ra), rh.out, rh.inn, m, dump)
            pos = {u: host.n - 1 - p for u, p in pos.items()}
    else:
        r, rev = _heart_root(cs)
        if rev:
            ra = a.reversed()
            rh = _reverse_host(host)
            rcs = clusters(ra)
            pos, plan = _three_phases(ra, rcs, r, rh.out, rh.inn, m, dump)
            pos = {u: host.n - 1 - p for u, p in pos.items()}
        else:
            pos, plan = _three_phases(a, cs, r, host.out, host.inn, m, dump)
        plan.reversed = rev
        if plan_out is not None:
            plan_out.append(plan)
    phi = {u: host.order[p] for u, p in pos.items()}
    if verify_embedding(a, t, phi):
        raise EmbeddingFailure("many-leaves embedding is invalid", dump)
    return phi


def _many_one_sided(a, cs: ClusterSplit, out_rows, in_rows, m, dump) -> dict:
    """S- empty: nice embedding of the heart on the first 4n_H - 3 vertices,
    then out-leaf extensions on prefixes growing by two."""
    h = cs.heart
    nh = h.n
    width = 4 * nh - 3
    center = 2 * nh - 2
    hr = rooted(h, 0)
    hpos = nice_positions(out_rows, in_rows, hr, center, nice_radius(nh, 0), (), dump=dump)
    pos = {cs.heart_nodes[u]: p for u, p in hpos.items()}
    # S+ nodes in BFS order from the heart, father first
    order = []
    seen = set(pos)
    frontier = list(pos)
    while frontier:
        nxt = []
        for u in frontier:
            for w in a.out_adj[u]:
                if w in cs.s_plus and w not in seen:
                    seen.add(w)
                    order.append((w, u))
                    nxt.append(w)
        frontier = nxt
    if len(order) != len(cs.s_plus):
        raise EmbeddingFailure("out-leaf cluster not reachable from the heart", dump)
    hi = width
    for w, u in order:
        hi += 2
        if hi > m:
            raise EmbeddingFailure("prefix exceeds the tournament", dump)
        if not sigma_forward(pos.values(), hi - 2):
            raise EmbeddingFailure("embedding lost forwardness before an extension", dump)
        j = extend_leaf_positions(out_rows, in_rows, pos, u, 0, hi, out=True)
        if j is None:
            raise EmbeddingFailure(f"no free out-neighbour for cluster node {w}", dump)
        pos[w] = j
    return pos


def _heart_root(cs: ClusterSplit) -> tuple[int, bool]:
    """Heart root minimising min(beta_down, beta_up), walked back to an
    in-degree-0 node of the heart; returns (node of A, reverse flag)."""
    h = cs.heart
    lp = leaf_partition(h)
    best = None
    for r in range(h.n):
        rt = rooted(h, r)
        ups, downs = forests(rt)
        bd = sum(3 * c.size - 3 for c in downs) + 2 * len(lp.in_leaves)
        bu = sum(3 * c.size - 3 for c in ups) + 2 * len(lp.out_leaves)
        key = (min(bd, bu), r, 0 if bd <= bu else 1)
        if best is None or key < best:
            best = key
    _, r, rev = best
    hh = h.reversed() if rev else h
    # walk to an in-degree-0 node; beta_down never increases along in-arcs
    seen = {r}
    while hh.in_adj[r]:
        r = hh.in_adj[r][0]
        if r in seen:
            raise EmbeddingFailure("cycle while walking to a heart source", {})
        seen.add(r)
    return cs.heart_nodes[r], bool(rev)


def _three_phases(a: OrientedTree, cs: ClusterSplit, root: int, out_rows, in_rows, m, dump):
    h = cs.heart
    to_h = cs.to_heart()
    hr = rooted(h, to_h[root])
    if h.in_adj[hr.root]:
        raise EmbeddingFailure("heart root has an in-neighbour", dump)
    ups, downs = forests(hr)
    lp = leaf_partition(h)
    n_h, k_h = cs.n_H, cs.k_H
    down_arcs = sum(c.size - 1 for c in downs)
    g_down = sum(c.size + _comp_leaves(c, False) - 2 for c in downs)
    ell = n_h - k_h - 1 + down_arcs + 2 * len(lp.in_leaves) + 2 * len(cs.s_minus)
    p = ell + n_h + k_h - 1 + g_down
    plan = PhasePlan(ell, p, m, root, False)
    if ell < 1 or p > m:
        raise EmbeddingFailure(f"phase interval [{ell}, {p}) does not fit in {m}", dump)

    # Phase 1: heart via the equivalent arborescence on positions [ell, p)
    hpos, emap, _, _ = root_source_positions(out_rows, in_rows, hr, ell, p, dump)
    pos = {}
    hit = 0
    dummies = []
    for u, j in hpos.items():
        if not ell <= j < p:
            raise EmbeddingFailure("phase-1 image outside its interval", dump)
        hit |= 1 << j
        if u < h.n:
            pos[cs.heart_nodes[u]] = j
            plan.phase1.append(j)
        else:
            dummies.append(j)

    # Phase 2: out-leaf cluster, smallest anchor first, first free out-neighbour
    sp = cs.s_plus
    pending = {}
    heap = []

    def push_out(u):
        ws = [w for w in a.out_adj[u] if w in sp and w not in pos]
        if ws:
            pending[u] = ws
            heapq.heappush(heap, (pos[u], u))

    for u in list(pos):
        push_out(u)
    while heap:
        i, u = heapq.heappop(heap)
        ws = pending.get(u)
        if not ws:
            continue
        cand = out_rows[i] & ~hit & interval_mask(i + 1, m)
        if not cand:
            raise EmbeddingFailure(f"phase 2: no free out-neighbour after position {i}", dump)
        j = (cand & -cand).bit_length() - 1
        w = ws.pop(0)
        pos[w] = j
        hit |= 1 << j
        plan.phase2.append(j)
        if j < ell:
            raise EmbeddingFailure("phase-2 image before the heart interval", dump)
        if ws:
            heapq.heappush(heap, (i, u))
        push_out(w)
    if any(w not in pos for w in sp):
        raise EmbeddingFailure("phase 2 left cluster nodes unembedded", dump)
    for j in dummies:
        hit &= ~(1 << j)

    # Phase 3: in-leaf cluster, largest anchor first, last free in-neighbour
    sm = cs.s_minus
    pending = {}
    heap = []

    def push_in(u):
        ws = [w for w in a.in_adj[u] if w in sm and w not in pos]
        if ws:
            pending[u] = ws
            heapq.heappush(heap, (-pos[u], u))

    for u in list(pos):
        push_in(u)
    while heap:
        negi, u = heapq.heappop(heap)
        i = -negi
        ws = pending.get(u)
        if not ws:
            continue
        cand = in_rows[i] & ~hit & interval_mask(0, i)
        if not cand:
            hit_before = (hit & interval_mask(0, i)).bit_count()
            bound = (i) / 2 - len(a.in_adj[u]) + 1
            raise EmbeddingFailure(
                f"phase 3: no free in-neighbour before position {i} "
                f"(hit={hit_before}, lower bound {bound})", dict(dump, ell=ell, p=p))
        j = cand.bit_length() - 1
        w = ws.pop(0)
        pos[w] = j
        hit |= 1 << j
        plan.phase3.append((j, i))
        if ws:
            heapq.heappush(heap, (-i, u))
        push_in(w)
    if len(pos) != a.n:
        raise EmbeddingFailure("phase 3 left nodes unembedded", dump)
    return pos, plan


# ------------------------------------------------------------ dispatcher

def very_few_bound(a: OrientedTree) -> int | None:
    k = leaf_count(a)
    if all(a.degree(u) <= 2 for u in range(a.n)):
        return None
    return a.n + 144 * k * k - 280 * k + 124


def arborescence_bound(a: OrientedTree) -> int | None:
    tm = tree_metrics(a)
    if tm.is_out_arborescence:
        return a.n + max(1, tm.n_out_leaves if a.n > 1 else 1) - 1
    if tm.is_in_arborescence:
        return a.n + max(1, tm.n_in_leaves if a.n > 1 else 1) - 1
    return None


def _arbo_k(a, out):
    rt = rooted(a, [u for u in range(a.n) if not (a.in_adj[u] if out else a.out_adj[u])][0])
    return arbo_leaf_count(rt)


@dataclass
class BoundReport:
    n: int
    k: int
    bounds: dict             # algorithm -> bound
    minimum: int
    chosen: str
    public_few: int          # ceil(3(n+k)/2) - 2
    universal: int           # ceil(21n/8 - 47/16)


ALG_PREFERENCE = ("arbo", "bi", "few", "many", "veryfew")


def best_bound(a: OrientedTree) -> BoundReport:
    if a.n < 2:
        raise PreconditionError("need at least two nodes")
    n, k = a.n, leaf_count(a)
    tm = tree_metrics(a)
    b = {}
    if tm.is_out_arborescence:
        b["arbo"] = n + _arbo_k(a, True) - 1
    elif tm.is_in_arborescence:
        b["arbo"] = n + _arbo_k(a, False) - 1
    bi = bi_arborescence_bound(a)
    if bi is not None:
        b["bi"] = bi
    b["few"] = n + k - 1 + min_gamma(a)
    if n >= 3:
        b["many"] = many_leaves_bound(a)
    vf = very_few_bound(a)
    if vf is not None:
        b["veryfew"] = vf
    chosen = min(b, key=lambda x: (b[x], ALG_PREFERENCE.index(x)))
    return BoundReport(n, k, b, b[chosen], chosen, math.ceil(3 * (n + k) / 2) - 2,
                       math.ceil(21 * n / 8 - 47 / 16))


def embed_with(alg: str, a: OrientedTree, t: Tournament, order=None) -> dict:
    from .embed_arbo import embed_in_arborescence, embed_out_arborescence
    if alg == "arbo":
        tm = tree_metrics(a)
        if tm.is_out_arborescence:
            rt = rooted(a, tm.arborescence_root)
            need = a.n + arbo_leaf_count(rt) - 1
            if t.n < need:
                raise PreconditionError(f"tournament of order {t.n} below n+k-1 = {need}")
            return embed_out_arborescence(rt, t, order, check=False).embedding
        if tm.is_in_arborescence:
            return embed_in_arborescence(rooted(a, tm.arborescence_root), t, order,
                                         check=False).embedding
        raise PreconditionError("not an arborescence")
    if alg == "bi":
        return embed_bi_arborescence(a, t, order)
    if alg == "few":
        return embed_few_leaves(a, t, order)
    if alg == "many":
        return embed_many_leaves(a, t, order)
    if alg == "veryfew":
        from .stub import embed_very_few_leaves
        return embed_very_few_leaves(a, t)
    if alg == "stub":
        from .stub import embed_stub
        return embed_stub(a, t, order)
    if alg == "auto":
        return embed_auto(a, t)
    raise PreconditionError(f"unknown algorithm {alg!r}")


def embed_auto(a: OrientedTree, t: Tournament) -> dict:
    if a.n == 1:
        if t.n < 1:
            raise NoGuarantee("empty tournament")
        return {0: 0}
    rep = best_bound(a)
    usable = sorted((b, ALG_PREFERENCE.index(alg), alg) for alg, b in rep.bounds.items() if b <= t.n)
    if not usable:
        raise NoGuarantee(f"tournament of order {t.n} is below every bound (best {rep.minimum} "
                          f"via {rep.chosen})")
    alg = usable[0][2]
    phi = embed_with(alg, a, t)
    if verify_embedding(a, t, phi):
        raise EmbeddingFailure(f"{alg} returned an invalid embedding", _dump(a, t, None))
    return phi
