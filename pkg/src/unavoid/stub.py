"""Trees with very few leaves: segments and path types, stump types and
forks, reduction to stubs, the island layout used to embed a stub, directed
2-out-path harvesting, and path searches with prescribed end sets used to
rebuild the broken segments."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import networkx as nx

from .core import (OrientedTree, Tournament, interval_mask, iter_bits, iter_bits_desc,
                   leaf_count, rooted, verify_embedding)
from .embed_arbo import GreedyStuck, _dump, nice_positions, run_greedy
from .errors import EmbeddingFailure, NoGuarantee, PreconditionError
from .median import OrderedHost, check_m2, check_permutation, local_median_order

DEFAULT_PATH_CAP = 24


# ----------------------------------------------------------------- path types

@dataclass(frozen=True)
class PathType:
    sign: int                 # +1 for an out-path, -1 for an in-path
    blocks: tuple

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise PreconditionError("sign must be +1 or -1")
        if not self.blocks or any(b < 1 for b in self.blocks):
            raise PreconditionError("block lengths must be positive")

    @property
    def length(self) -> int:
        return sum(self.blocks)

    @property
    def order(self) -> int:
        return self.length + 1

    def directions(self) -> list[int]:
        """+1 when arc i goes forward along the path, -1 otherwise."""
        out, s = [], self.sign
        for b in self.blocks:
            out.extend([s] * b)
            s = -s
        return out

    def reversed(self) -> "PathType":
        """Type of the same path read from its terminus."""
        d = self.directions()[::-1]
        return PathType.from_directions([-x for x in d])

    @staticmethod
    def from_directions(dirs) -> "PathType":
        dirs = list(dirs)
        if not dirs:
            raise PreconditionError("a path type needs at least one arc")
        blocks = [1]
        for a, b in zip(dirs, dirs[1:]):
            if a == b:
                blocks[-1] += 1
            else:
                blocks.append(1)
        return PathType(dirs[0], tuple(blocks))

    @staticmethod
    def of_nodes(tree: OrientedTree, seq) -> "PathType":
        arcs = tree.arc_set
        if len(seq) < 2:
            raise PreconditionError("a path type needs at least one arc")
        first = (seq[0], seq[1]) in arcs
        blocks, fwd = [1], first
        for i in range(1, len(seq) - 1):
            d = (seq[i], seq[i + 1]) in arcs
            if d == fwd:
                blocks[-1] += 1
            else:
                blocks.append(1)
                fwd = d
        return PathType(1 if first else -1, tuple(blocks))

    @staticmethod
    def parse(text: str) -> "PathType":
        text = text.strip()
        if text[0] not in "+-" or text[1] != "(" or text[-1] != ")":
            raise PreconditionError(f"cannot parse path type {text!r}")
        return PathType(1 if text[0] == "+" else -1, tuple(int(x) for x in text[2:-1].split(",")))

    def __str__(self) -> str:
        return ("+" if self.sign == 1 else "-") + "(" + ",".join(map(str, self.blocks)) + ")"


def path_tree(tau: PathType) -> OrientedTree:
    arcs = []
    for i, d in enumerate(tau.directions()):
        arcs.append((i, i + 1) if d == 1 else (i + 1, i))
    return OrientedTree(tau.order, tuple(arcs))


def is_path_type(t: Tournament, seq, tau: PathType) -> bool:
    if len(seq) != tau.order or len(set(seq)) != len(seq):
        return False
    return all(t.has_arc(a, b) if d == 1 else t.has_arc(b, a)
               for (a, b), d in zip(zip(seq, seq[1:]), tau.directions()))


# ------------------------------------------------------------------ segments

@dataclass
class Segment:
    nodes: tuple
    kind: str                 # "inner" or "outer"
    type: PathType

    @property
    def origin(self) -> int:
        return self.nodes[0]

    @property
    def terminus(self) -> int:
        return self.nodes[-1]

    @property
    def length(self) -> int:
        return len(self.nodes) - 1


def _require_non_path(a: OrientedTree):
    if all(a.degree(u) <= 2 for u in range(a.n)):
        raise PreconditionError("the tree is a path (no branch node)")


def segments(a: OrientedTree) -> list[Segment]:
    """Every segment from every branch node; inner segments appear with both orientations."""
    _require_non_path(a)
    res = []
    deg, nbrs = a.degrees, a.nbrs
    for x in range(a.n):
        if deg[x] < 3:
            continue
        for y in nbrs[x]:
            seq = [x, y]
            while deg[seq[-1]] == 2:
                u, v = nbrs[seq[-1]]
                seq.append(v if u == seq[-2] else u)
            kind = "inner" if deg[seq[-1]] >= 3 else "outer"
            res.append(Segment(tuple(seq), kind, PathType.of_nodes(a, seq)))
    return res


def _unbreakable(tau: PathType) -> bool:
    b = tau.blocks
    if len(b) == 1:
        return True
    if len(b) == 2:
        return 1 in b
    if len(b) == 3:
        return b[0] == 1 and b[2] == 1
    return False


def is_stub(a: OrientedTree) -> tuple[bool, str]:
    for s in segments(a):
        if s.kind == "outer" and s.length != 1:
            return False, f"(ii) outer segment {list(s.nodes)} has length {s.length}"
        if s.kind == "inner" and not _unbreakable(s.type):
            return False, f"(i) inner segment {list(s.nodes)} has type {s.type}"
    return True, "stub"


# ------------------------------------------------------- stump types, forks

def stump_type(p: PathType) -> tuple[PathType, str]:
    if p.length < 2:
        raise PreconditionError("stump type needs a path of length at least 2")
    b, s = p.blocks, p.sign
    plus_p1q = s == 1 and len(b) == 3 and b[0] >= 2 and b[1] == 1 and b[2] >= 2
    if b[0] >= 2 and not plus_p1q:
        return PathType(s, (b[0] - 1,)), "i"
    if plus_p1q:
        return PathType(s, (b[0],)), "ii"
    special = (len(b) == 4 and b[:3] == (1, 1, 1) and b[3] >= 2) or (s == 1 and b == (1, 1, 1, 1, 1))
    if b[0] == 1 and len(b) >= 2 and b[1] == 1:
        if special:
            return PathType(s, (1, 1)), "iv"
        return PathType(s, (1,)), "iii"
    if b[0] == 1 and b[1] >= 2:
        return PathType(s, (1, b[1] - 1)), "v"
    raise EmbeddingFailure(f"no stump case applies to {p}", {"type": str(p)})


@dataclass
class Fork:
    tree: OrientedTree
    origin: int
    points: tuple


def make_fork(tau: PathType) -> Fork:
    """Path of type tau from node 0 whose last node is doubled into two points."""
    base = path_tree(tau)
    last = tau.length
    twin = last + 1
    prev = last - 1
    arcs = list(base.arcs)
    arcs.append((prev, twin) if base.has_arc(prev, last) else (twin, prev))
    return Fork(OrientedTree(tau.order + 1, tuple(arcs)), 0, (last, twin))


# ----------------------------------------------------------------- reduction

def _end_set_ok(r: PathType) -> bool:
    return (len(r.blocks) >= 2 and r.blocks[0] == 1 and r.blocks[-1] == 1
            and r.blocks != (1, 1, 1))


def inner_fork_types(tau: PathType) -> tuple[PathType, str, PathType, str]:
    """Fork types at both ends of a breakable inner segment.

    The stump types are used when the remainder between them satisfies the
    end-set path theorem (non-directed, end blocks of length 1, not
    +-(1,1,1)).  For some types, e.g. +(1,2,1,2), the stump types leave a
    remainder of type +-(1,1,1); then the closest pair of prefix lengths whose
    remainder qualifies and whose fork stems stay unbreakable is used
    (case "adj").
    """
    dirs = tau.directions()
    L = len(dirs)
    t1, c1 = stump_type(tau)
    t2, c2 = stump_type(tau.reversed())
    if t1.length + t2.length <= L - 2:
        r = PathType.from_directions(dirs[t1.length:L - t2.length])
        if _end_set_ok(r):
            return t1, c1, t2, c2
    back = [-d for d in dirs[::-1]]

    def stem_ok(ds, ln):
        return ln == 1 or _unbreakable(PathType.from_directions(ds[:ln - 1]))

    best = None
    for l1 in range(1, L - 2):
        for l2 in range(1, L - 1 - l1):
            r = PathType.from_directions(dirs[l1:L - l2])
            if not _end_set_ok(r) or not stem_ok(dirs, l1) or not stem_ok(back, l2):
                continue
            key = (abs(l1 - t1.length) + abs(l2 - t2.length), l1, l2)
            if best is None or key < best:
                best = key
    if best is None:
        raise EmbeddingFailure(f"no fork pair fits the inner segment type {tau}", {"type": str(tau)})
    _, l1, l2 = best
    return (PathType.from_directions(dirs[:l1]), "adj",
            PathType.from_directions(back[:l2]), "adj")


@dataclass
class ForkRecord:
    segment: tuple            # nodes of the broken segment, from the fork's origin
    tau: PathType
    case: str
    prefix: tuple             # s_1 .. s_a (s_a is the kept point)
    twin: int                 # id of the second point in B


@dataclass
class Remainder:
    kind: str                 # "inner" or "outer"
    nodes: tuple              # s_a .. s_b of the original tree
    type: PathType
    start: int                # fork index at the origin end
    end: int | None           # fork index at the terminus end (inner only)


@dataclass
class Reduction:
    tree: OrientedTree
    b_arcs: tuple             # arcs of the forest B over ids 0..n_b-1
    n_b: int
    live: frozenset           # B ids in use (original survivors plus twins)
    components: list          # node lists of the components of B
    forks: list
    remainders: list
    b: int                    # number of breakable inner segments

    def component_tree(self, i: int) -> tuple[OrientedTree, list]:
        nodes = self.components[i]
        idx = {u: j for j, u in enumerate(nodes)}
        arcs = tuple((idx[u], idx[v]) for u, v in self.b_arcs if u in idx)
        return OrientedTree.unchecked(len(nodes), arcs), nodes

    @property
    def size(self) -> int:
        return len(self.live)

    def to_text(self) -> str:
        lines = [f"b {self.b}", f"components {len(self.components)}", f"forest_nodes {self.size}"]
        for i, f in enumerate(self.forks):
            lines.append(f"fork {i} origin {f.prefix[0]} type {f.tau} case {f.case} "
                         f"points {f.prefix[-1]} {f.twin}")
        for r in self.remainders:
            ends = f"{r.start}" if r.end is None else f"{r.start} {r.end}"
            lines.append(f"remainder {r.kind} type {r.type} nodes {' '.join(map(str, r.nodes))} "
                         f"forks {ends}")
        return "\n".join(lines) + "\n"


def reduce_to_stubs(a: OrientedTree) -> Reduction:
    _require_non_path(a)
    k = leaf_count(a)
    if k < 3:
        raise PreconditionError("need at least three leaves")
    segs = segments(a)
    removed_nodes: set = set()
    removed_arcs: set = set()
    added_arcs: list = []
    forks: list[ForkRecord] = []
    rems: list[Remainder] = []
    nxt = a.n
    b = 0

    def add_fork(seq, tau, case):
        nonlocal nxt
        a_len = tau.length + 1
        prefix = tuple(seq[:a_len])
        twin = nxt
        nxt += 1
        u, v = prefix[-2], prefix[-1]
        added_arcs.append((u, twin) if a.has_arc(u, v) else (twin, u))
        forks.append(ForkRecord(tuple(seq), tau, case, prefix, twin))
        return len(forks) - 1

    def drop_path(seq):
        for x, y in zip(seq, seq[1:]):
            removed_arcs.add((x, y) if a.has_arc(x, y) else (y, x))

    for s in segs:
        if s.kind == "outer" and s.length >= 2:
            tau, case = stump_type(s.type)
            fi = add_fork(s.nodes, tau, case)
            sa = tau.length
            rest = s.nodes[sa:]
            drop_path(rest)
            removed_nodes.update(rest[1:])
            rems.append(Remainder("outer", tuple(rest), PathType.of_nodes(a, rest), fi, None))
        elif s.kind == "inner" and s.origin < s.terminus and not _unbreakable(s.type):
            b += 1
            back = tuple(reversed(s.nodes))
            tau1, c1, tau2, c2 = inner_fork_types(s.type)
            f1 = add_fork(s.nodes, tau1, c1)
            f2 = add_fork(back, tau2, c2)
            lo = tau1.length
            hi = len(s.nodes) - 1 - tau2.length
            if hi - lo < 2:
                raise EmbeddingFailure(f"forks overlap on segment {list(s.nodes)}", {"tree": a.to_text()})
            rest = s.nodes[lo:hi + 1]
            drop_path(rest)
            removed_nodes.update(rest[1:-1])
            rt = PathType.of_nodes(a, rest)
            if (len(rt.blocks) < 2 or rt.blocks[0] != 1 or rt.blocks[-1] != 1
                    or rt.blocks == (1, 1, 1)):
                raise EmbeddingFailure(f"inner remainder of type {rt} breaks the end-set theorem "
                                       f"hypotheses", {"tree": a.to_text()})
            rems.append(Remainder("inner", tuple(rest), rt, f1, f2))
    b_arcs = tuple([x for x in a.arcs if x not in removed_arcs] + added_arcs)
    live = frozenset(set(range(nxt)) - removed_nodes)
    # components of B
    adj = {u: [] for u in live}
    for u, v in b_arcs:
        adj[u].append(v)
        adj[v].append(u)
    comps, seen = [], set()
    for u in sorted(live):
        if u in seen:
            continue
        comp, dq = [], deque([u])
        seen.add(u)
        while dq:
            x = dq.popleft()
            comp.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    dq.append(y)
        comps.append(sorted(comp))
    red = Reduction(a, b_arcs, nxt, live, comps, forks, rems, b)
    if len(comps) != b + 1:
        raise EmbeddingFailure(f"forest has {len(comps)} components, expected {b + 1}",
                               {"tree": a.to_text()})
    if red.size > a.n + b:
        raise EmbeddingFailure("forest larger than |A| + b", {"tree": a.to_text()})
    for i in range(len(comps)):
        ct, _ = red.component_tree(i)
        ok, why = is_stub(ct)
        if not ok:
            raise EmbeddingFailure(f"component {i} is not a stub: {why}", {"tree": a.to_text()})
        if leaf_count(ct) > 2 * k - 2 * b:
            raise EmbeddingFailure(f"component {i} has more than 2k-2b leaves", {"tree": a.to_text()})
    return red


def rebuild_tree(red: Reduction) -> OrientedTree:
    """Undo the reduction abstractly: drop the twins, put the remainders back."""
    twins = {f.twin for f in red.forks}
    arcs = {x for x in red.b_arcs if x[0] not in twins and x[1] not in twins}
    a = red.tree
    for r in red.remainders:
        for x, y in zip(r.nodes, r.nodes[1:]):
            arcs.add((x, y) if a.has_arc(x, y) else (y, x))
    nodes = {u for x in arcs for u in x}
    idx = {u: i for i, u in enumerate(sorted(nodes))}
    return OrientedTree(len(nodes), tuple(sorted((idx[u], idx[v]) for u, v in arcs)))


# ---------------------------------------------------------- path searches

def _path_search(t: Tournament, verts, tau: PathType, origins, termini, cap: int):
    """Backtracking search for a path of type tau inside verts."""
    if tau.length > cap:
        raise PreconditionError(f"path length {tau.length} above the search cap {cap}")
    vmask = 0
    for v in verts:
        vmask |= 1 << v
    omask = 0
    for v in origins:
        omask |= 1 << v
    tmask = vmask
    if termini is not None:
        tmask = 0
        for v in termini:
            tmask |= 1 << v
    dirs = tau.directions()
    rows, ins = t.rows, t.in_rows
    L = len(dirs)
    dead = set()
    seq = []

    def rec(i, cur, used):
        if i == L:
            return True
        key = (i, cur, used)
        if key in dead:
            return False
        cand = (rows[cur] if dirs[i] == 1 else ins[cur]) & vmask & ~used
        if i == L - 1:
            cand &= tmask
        else:
            cand &= ~(tmask & ~vmask)
        for v in iter_bits(cand):
            seq.append(v)
            if rec(i + 1, v, used | (1 << v)):
                return True
            seq.pop()
        dead.add(key)
        return False

    for o in iter_bits(omask & vmask):
        seq[:] = [o]
        if rec(0, o, 1 << o):
            return list(seq)
    return None


def find_path_origin_set(t: Tournament, x, tau: PathType, vertices=None, cap: int = DEFAULT_PATH_CAP):
    """A path of type tau with origin in x, inside `vertices` (all of T by default)."""
    verts = list(range(t.n)) if vertices is None else list(vertices)
    x = list(x)
    if len(verts) < tau.order + 1:
        raise NoGuarantee(f"need {tau.order + 1} vertices for a path of order {tau.order}")
    if len(set(x)) < tau.blocks[0] + 1 or not set(x) <= set(verts):
        raise NoGuarantee(f"origin set must hold b1+1 = {tau.blocks[0] + 1} vertices of the host")
    res = _path_search(t, verts, tau, x, None, cap)
    if res is None:
        raise EmbeddingFailure(f"no path of type {tau} with origin in the given set",
                               {"tournament": t.to_text(), "type": str(tau), "x": x})
    return res


def find_path_between_sets(t: Tournament, x, y, tau: PathType, vertices=None,
                           cap: int = DEFAULT_PATH_CAP):
    """A path of type tau from x to y, inside `vertices` (all of T by default)."""
    verts = list(range(t.n)) if vertices is None else list(vertices)
    x, y = set(x), set(y)
    if len(tau.blocks) < 2 or tau.blocks[0] != 1 or tau.blocks[-1] != 1:
        raise NoGuarantee("type must be non-directed with first and last block of length 1")
    if tau.blocks == (1, 1, 1):
        raise NoGuarantee("types +(1,1,1) and -(1,1,1) are excluded")
    if x & y or len(x) < 2 or len(y) < 2 or not (x | y) <= set(verts):
        raise NoGuarantee("end sets must be disjoint, of size at least 2, inside the host")
    if len(verts) < tau.order + 2:
        raise NoGuarantee(f"need {tau.order + 2} vertices for a path of order {tau.order}")
    res = _path_search(t, verts, tau, sorted(x), sorted(y), cap)
    if res is None:
        raise EmbeddingFailure(f"no path of type {tau} between the given sets",
                               {"tournament": t.to_text(), "type": str(tau),
                                "x": sorted(x), "y": sorted(y)})
    return res


# --------------------------------------------------------- 2-out-paths

def _two_paths(rows, seq, k: int):
    """k internally disjoint directed 2-paths from seq[0] with distinct
    termini among the last 4k-1 entries of seq (rows give the direction)."""
    m = len(seq)
    if m < 4 * k:
        raise PreconditionError(f"need at least 4k = {4 * k} vertices, got {m}")
    v1 = seq[0]
    r1 = rows[v1]
    used = set()
    paths = []
    for j in range(1, k + 1):
        s_idx = range(m - 4 * j + 1, m - 1)
        dom = [i for i in s_idx if (r1 >> seq[i]) & 1]
        if len(dom) >= j:
            cands = [(seq[i], seq[i + 1]) for i in dom]
        else:
            t = seq[m - 4 * j + 1]
            cands = [(seq[i], t) for i in range(1, m - 4 * j + 1)
                     if (r1 >> seq[i]) & 1 and (rows[seq[i]] >> t) & 1]
        for w, t in cands:
            if w not in used and t not in used and w != t and (rows[w] >> t) & 1:
                paths.append((v1, w, t))
                used.update((w, t))
                break
        else:
            return _two_paths_matching(rows, seq, k)
    return paths


def _two_paths_matching(rows, seq, k):
    v1 = seq[0]
    r1 = rows[v1]
    suffix = set(seq[len(seq) - 4 * k + 1:])
    g = nx.Graph()
    for w in seq[1:]:
        if not (r1 >> w) & 1:
            continue
        for t in suffix:
            if t != w and (rows[w] >> t) & 1:
                g.add_edge(w, t)
    match = nx.max_weight_matching(g, maxcardinality=True)
    paths = []
    for u, v in match:
        if (r1 >> u) & 1 and v in suffix and (rows[u] >> v) & 1:
            paths.append((v1, u, v))
        else:
            paths.append((v1, v, u))
    if len(paths) < k:
        raise EmbeddingFailure(f"only {len(paths)} disjoint 2-out-paths, expected {k}", {})
    return sorted(paths)[:k]


def two_out_paths(t: Tournament, order, k: int, *, check: bool = True) -> list[tuple]:
    order = tuple(order)
    check_permutation(t, order)
    if check and check_m2(t, order):
        raise PreconditionError("ordering is not a local median order")
    return _two_paths(t.rows, list(order), k)


# ------------------------------------------------------------- islands

@dataclass
class IslandArc:
    tail: int                 # island index (layout order)
    head: int
    path: tuple               # P(e): directed out-path from tail to head


@dataclass
class IslandLayout:
    islands: list             # node lists, layout order C_1..C_r
    island_of: dict
    arcs: list
    father: list
    e_plus: list              # per island: arc indices to out-sons
    e_minus: list             # per island: arc indices from in-sons
    roots: list               # a_p
    spc: list
    base: list                # first position of R_p
    alpha: list
    bfs: list                 # island indices in processing order
    k: int
    m: int

    def q_nodes(self, p: int, ei: int) -> tuple:
        """Q(e) for an arc at island p: P(e) (or its reverse) minus its last two nodes."""
        path = self.arcs[ei].path
        if self.arcs[ei].tail == p:
            return path[:-2]
        return tuple(reversed(path))[:-2]

    def middle(self, p: int) -> tuple[int, int]:
        lo = self.base[p] + self.alpha[p]
        return lo, lo + 16 * self.k - 58

    def region(self, p: int) -> tuple[int, int]:
        return self.base[p], self.base[p] + self.spc[p]


def stub_bound(n: int, k: int) -> int:
    return n + 36 * k * k - 140 * k + 124


def islands_layout(a: OrientedTree, k: int | None = None, m: int | None = None) -> IslandLayout:
    ok, why = is_stub(a)
    if not ok:
        raise PreconditionError(f"not a stub: {why}")
    k = leaf_count(a) if k is None else k
    if k < 6 or k < leaf_count(a):
        raise PreconditionError("need k >= 6 and at least the leaf count")
    need = stub_bound(a.n, k)
    if m is not None and m < need:
        raise PreconditionError(f"tournament order {m} below n+36k^2-140k+124 = {need}")
    # remove long directed blocks of the segments
    removed_arcs, removed_nodes, paths = set(), set(), []
    for s in segments(a):
        if s.kind != "inner" or s.origin > s.terminus:
            continue
        seq, dirs = s.nodes, s.type.directions()
        i = 0
        for blen in s.type.blocks:
            if blen >= 3:
                piece = seq[i:i + blen + 1]
                if dirs[i] == -1:
                    piece = piece[::-1]
                for x, y in zip(piece, piece[1:]):
                    removed_arcs.add((x, y))
                removed_nodes.update(piece[1:-1])
                paths.append(tuple(piece))
            i += blen
    keep = [u for u in range(a.n) if u not in removed_nodes]
    g = nx.Graph()
    g.add_nodes_from(keep)
    g.add_edges_from(x for x in a.arcs if x not in removed_arcs)
    comps = sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0])
    cid = {u: i for i, c in enumerate(comps) for u in c}
    raw_arcs = [(cid[p[0]], cid[p[-1]], p) for p in paths]
    r = len(comps)
    indeg = [0] * r
    nb = [[] for _ in range(r)]
    for ai, (x, y, _) in enumerate(raw_arcs):
        indeg[y] += 1
        nb[x].append(ai)
        nb[y].append(ai)
    root = min(i for i in range(r) if indeg[i] == 0)
    # root the island tree; layout = in-son subtrees, self, out-son subtrees
    father = [None] * r
    sons = [[] for _ in range(r)]
    seen = {root}
    dq = deque([root])
    while dq:
        c = dq.popleft()
        for ai in sorted(nb[c], key=lambda ai: raw_arcs[ai][0] + raw_arcs[ai][1] - c):
            x, y, _ = raw_arcs[ai]
            d = y if x == c else x
            if d not in seen:
                seen.add(d)
                father[d] = (c, ai)
                sons[c].append((d, ai))
                dq.append(d)
    if len(seen) != r:
        raise EmbeddingFailure("island graph is not connected", {"tree": a.to_text()})
    layout = []

    def place(c):
        ins = [d for d, ai in sons[c] if raw_arcs[ai][1] == c]
        outs = [d for d, ai in sons[c] if raw_arcs[ai][0] == c]
        for d in ins:
            place(d)
        layout.append(c)
        for d in outs:
            place(d)

    place(root)
    new = {c: i for i, c in enumerate(layout)}
    islands = [comps[c] for c in layout]
    island_of = {u: new[cid[u]] for u in keep}
    arcs = [IslandArc(new[x], new[y], p) for x, y, p in raw_arcs]
    fath = [None] * r
    e_plus = [[] for _ in range(r)]
    e_minus = [[] for _ in range(r)]
    for c in range(r):
        if father[c] is not None:
            f, ai = father[c]
            fath[new[c]] = new[f]
            if arcs[ai].tail == new[f]:
                e_plus[new[f]].append(ai)
            else:
                e_minus[new[f]].append(ai)
    roots = [None] * r
    roots[0] = islands[0][0]
    for p in range(1, r):
        f = fath[p]
        ai = next(ai for ai in e_plus[f] + e_minus[f]
                  if arcs[ai].head == p or arcs[ai].tail == p)
        path = arcs[ai].path
        roots[p] = path[-1] if arcs[ai].head == p else path[0]
    lay = IslandLayout(islands, island_of, arcs, fath, e_plus, e_minus, roots, [], [], [], [], k,
                       m if m is not None else need)
    base = 0
    for p in range(r):
        extra = sum(len(lay.q_nodes(p, ai)) + 1 for ai in e_plus[p] + e_minus[p])
        spc = 12 * len(islands[p]) + 36 * k - 124 + extra
        alpha = sum(len(lay.q_nodes(p, ai)) + 1 for ai in e_minus[p]) + 6 * len(islands[p]) + 10 * k - 29
        lay.spc.append(spc)
        lay.base.append(base)
        lay.alpha.append(alpha)
        base += spc
    if base > need:
        raise EmbeddingFailure(f"total space {base} exceeds n+36k^2-140k+124 = {need}",
                               {"tree": a.to_text()})
    # BFS over islands, sons by layout index
    order, dq = [], deque([0])
    kids = [[] for _ in range(r)]
    for p in range(1, r):
        kids[fath[p]].append(p)
    while dq:
        p = dq.popleft()
        order.append(p)
        dq.extend(sorted(kids[p]))
    lay.bfs = order
    _check_layout(lay)
    return lay


def _check_layout(lay: IslandLayout):
    r = len(lay.islands)
    for e in lay.arcs:
        if lay.father[e.tail] != e.head and lay.father[e.head] != e.tail:
            raise EmbeddingFailure("island arc not between father and son", {})
    for e in lay.arcs:
        if not e.tail <= e.head:
            raise EmbeddingFailure("island ordering violates the arc direction property", {})
    # descendants form intervals
    desc = [{p} for p in range(r)]
    for p in sorted(range(r), key=lambda p: -_depth(lay, p)):
        if lay.father[p] is not None:
            desc[lay.father[p]] |= desc[p]
    for p in range(r):
        if max(desc[p]) - min(desc[p]) + 1 != len(desc[p]):
            raise EmbeddingFailure("descendants of an island do not form an interval", {})


def _depth(lay, p):
    d = 0
    while lay.father[p] is not None:
        p = lay.father[p]
        d += 1
    return d


# ------------------------------------------------------------ embed stub

@dataclass
class StubStats:
    max_forbidden: int = 0
    splice_fallbacks: int = 0
    regions: list = field(default_factory=list)


def embed_stub(a: OrientedTree, t: Tournament, order=None, *, k: int | None = None,
               check: bool = True, stats: StubStats | None = None) -> dict:
    """Embed a stub along a local median order, island by island."""
    k = leaf_count(a) if k is None else k
    m = stub_bound(a.n, k)
    if t.n < m:
        raise PreconditionError(f"tournament of order {t.n} below n+36k^2-140k+124 = {m}")
    lay = islands_layout(a, k, t.n)
    if order is None:
        order = local_median_order(t)
    else:
        order = tuple(order)
        check_permutation(t, order)
        if check and check_m2(t, order):
            raise PreconditionError("ordering is not a local median order")
    host = OrderedHost(t, tuple(order))
    out, inn = host.out, host.inn
    dump = _dump(a, t, host.order, k=k)
    st = stats if stats is not None else StubStats()
    pos: dict = {}
    hit = 0
    forb: set = set()
    root_pos = set()

    def put(u, j):
        nonlocal hit
        if (hit >> j) & 1:
            raise EmbeddingFailure(f"position {j} used twice", dump)
        pos[u] = j
        hit |= 1 << j

    def splice(p, ei, j_last, cur_hit):
        """Splice step: from the image of the last node of Q(e) to the middle of the son."""
        e = lay.arcs[ei]
        q = e.head if e.tail == p else e.tail
        mlo, mhi = lay.middle(q)
        kk = 4 * k - 15
        if len(forb) > k - 4:
            raise EmbeddingFailure(f"forbidden set of size {len(forb)} above k-4", dump)
        if e.tail == p:
            seq = list(range(j_last, mhi))
            rows = out
        else:
            seq = list(range(j_last, mlo - 1, -1))
            rows = inn
        full = cur_hit | hit

        def usable(w, x):
            return (w not in forb and x not in forb and w not in root_pos and x not in root_pos
                    and not (full >> w) & 1 and not (full >> x) & 1 and mlo <= x < mhi)

        try:
            paths = _two_paths(rows, seq, kk)
        except EmbeddingFailure:
            paths = []
        cands = [(w, x) for _, w, x in paths if usable(w, x)]
        if not cands:
            st.splice_fallbacks += 1
            r1 = rows[j_last]
            cands = [(w, x) for w in iter_bits(r1 & ~full) for x in iter_bits(rows[w] & ~full)
                     if w != x and usable(w, x)]
        if not cands:
            raise EmbeddingFailure(f"no usable 2-path from position {j_last} into the middle "
                                   f"of island {q}", dump)
        w, x = min(cands) if e.tail == p else max(cands)
        path = e.path if e.tail == p else tuple(reversed(e.path))
        forb.add(w)
        st.max_forbidden = max(st.max_forbidden, len(forb))
        if len(forb) > k - 3:
            raise EmbeddingFailure("forbidden set above k-3", dump)
        put(path[-2], w)
        put(path[-1], x)
        root_pos.add(x)
        return w

    put(lay.roots[0], lay.alpha[0])
    root_pos.add(lay.alpha[0])
    for p in lay.bfs:
        cp = lay.islands[p]
        ap = lay.roots[p]
        i = pos[ap]
        rlo, rhi = lay.region(p)
        mlo, mhi = lay.middle(p)
        if not mlo <= i < mhi:
            raise EmbeddingFailure(f"root of island {p} outside its middle", dump)
        nc = len(cp)
        # Step 1: nice embedding of the island inside I_p avoiding F
        rad = 2 * nc + 2 * k - 5
        idx = {u: j for j, u in enumerate(cp)}
        ct = OrientedTree(nc, tuple((idx[u], idx[v]) for u, v in a.arcs if u in idx and v in idx))
        ipos = nice_positions(out, inn, rooted(ct, idx[ap]), i, rad, forb,
                              blocked=hit & ~(1 << i), dump=dump)
        for lu, j in ipos.items():
            u = cp[lu]
            if u == ap:
                continue
            if not i - rad <= j <= i + rad:
                raise EmbeddingFailure("island node outside its interval", dump)
            put(u, j)
        # Step 2: second node of every path to a son
        jp_lo, jp_hi = i + 2 * nc + 2 * k - 4, i + 6 * nc + 2 * len(lay.e_plus[p]) + 8 * k - 21
        jm_lo, jm_hi = i - 6 * nc - 2 * len(lay.e_minus[p]) - 8 * k + 21, i - 2 * nc - 2 * k + 4
        for ei in lay.e_plus[p]:
            qn = lay.q_nodes(p, ei)
            x1 = pos[qn[0]]
            cand = out[x1] & ~hit & interval_mask(jp_lo, rhi)
            j = next((j for j in iter_bits(cand) if j not in forb), None)
            if j is None or j > jp_hi:
                raise EmbeddingFailure(f"step 2: no out-neighbour in J+ for island {p}", dump)
            put(qn[1], j)
        for ei in lay.e_minus[p]:
            qn = lay.q_nodes(p, ei)
            x1 = pos[qn[0]]
            cand = inn[x1] & ~hit & interval_mask(rlo, jm_hi + 1)
            j = next((j for j in iter_bits_desc(cand) if j not in forb), None)
            if j is None or j < jm_lo:
                raise EmbeddingFailure(f"step 2: no in-neighbour in J- for island {p}", dump)
            put(qn[1], j)
        # Step 3: the rest of Q(e) by the pinned-roots greedy, then the 2-path splice
        for arcs_, direction in ((lay.e_plus[p], 1), (lay.e_minus[p], -1)):
            if not arcs_:
                continue
            sons, placed, last_of = {}, {}, {}
            for ei in arcs_:
                qn = lay.q_nodes(p, ei)
                tail = qn[1:]
                for u, v in zip(tail, tail[1:]):
                    sons[u] = [v]
                placed[tail[0]] = pos[tail[0]]
                last_of[tail[-1]] = ei
            for u, ei in list(last_of.items()):
                if u in placed:
                    splice(p, ei, pos[u], 0)
            pending = {}

            def hook(node, j, cur_hit, _last=last_of, _pend=pending):
                if node in _last:
                    pos[node] = j
                    _pend[node] = True
                    splice(p, _last[node], j, cur_hit | (1 << j))

            lo, hi = (jp_lo, rhi) if direction == 1 else (rlo, jm_hi + 1)
            try:
                run = run_greedy(out, inn, sons, placed, lo, hi, direction=direction,
                                 blocked=hit & ~_mask(placed.values()), forbidden=forb,
                                 on_place=hook)
            except GreedyStuck as exc:
                raise EmbeddingFailure(f"step 3 greedy failed on island {p}: {exc}", dump) from None
            for u, j in run.pos.items():
                if u in placed:
                    continue
                if not rlo <= j < rhi:
                    raise EmbeddingFailure("path node outside its region", dump)
                if u in pending:
                    hit |= 1 << j
                    continue
                put(u, j)
        st.regions.append((p, rlo, rhi))
    if len(pos) != a.n:
        raise EmbeddingFailure(f"embedded {len(pos)} of {a.n} nodes", dump)
    phi = host.to_vertices(pos)
    if verify_embedding(a, t, phi):
        raise EmbeddingFailure("stub embedding is invalid", dump)
    return phi


def _mask(ps) -> int:
    m = 0
    for p in ps:
        m |= 1 << p
    return m


# ------------------------------------------------------------ very few leaves

def very_few_bound(n: int, k: int) -> int:
    return n + 144 * k * k - 280 * k + 124


def rebuild(red: Reduction, phi_b: dict, t: Tournament, cap: int | None = None) -> dict:
    """Reconstruct the broken segments around an embedding of the forest B."""
    a = red.tree
    used = set(phi_b.values())
    img = dict(phi_b)
    free_iter = [v for v in range(t.n) if v not in used]
    fresh = deque(free_iter)

    def take(cnt):
        out = []
        while len(out) < cnt:
            v = fresh.popleft()
            if v not in used:
                out.append(v)
        return out

    def settle(fork, first):
        pa, tw = img[fork.prefix[-1]], img[fork.twin]
        drop = tw if first == pa else pa
        used.discard(drop)
        fresh.append(drop)
        del img[fork.twin]

    order = [r for r in red.remainders if r.kind == "inner"] + \
            [r for r in red.remainders if r.kind == "outer"]
    for r in order:
        f1 = red.forks[r.start]
        x = [img[f1.prefix[-1]], img[f1.twin]]
        c = cap if cap is not None else max(DEFAULT_PATH_CAP, r.type.length)
        if r.kind == "inner":
            f2 = red.forks[r.end]
            y = [img[f2.prefix[-1]], img[f2.twin]]
            u = take(len(r.nodes) - 2)
            path = find_path_between_sets(t, x, y, r.type, u + x + y, cap=c)
            settle(f1, path[0])
            settle(f2, path[-1])
        else:
            u = take(len(r.nodes) - 1)
            path = find_path_origin_set(t, x, r.type, u + x, cap=c)
            settle(f1, path[0])
        for node, v in zip(r.nodes, path):
            img[node] = v
            used.add(v)
        for v in u:
            if v not in path:
                fresh.append(v)
    phi = {u: img[u] for u in range(a.n)}
    return phi


def embed_very_few_leaves(a: OrientedTree, t: Tournament, *, cap: int | None = None,
                          stats: StubStats | None = None) -> dict:
    if all(a.degree(u) <= 2 for u in range(a.n)):
        raise PreconditionError("paths are handled by the few-leaves embedding")
    n, k = a.n, leaf_count(a)
    if k < 3:
        raise PreconditionError("need at least three leaves")
    need = very_few_bound(n, k)
    if t.n < need:
        raise PreconditionError(f"tournament of order {t.n} below n+144k^2-280k+124 = {need}")
    red = reduce_to_stubs(a)
    kk = 2 * k - 2 * red.b
    phi_b = {}
    used = set()
    for ci in range(len(red.components)):
        ct, nodes = red.component_tree(ci)
        rest = [v for v in range(t.n) if v not in used]
        sub = t.relabel(rest)
        sub_phi = embed_stub(ct, sub, k=kk, check=False, stats=stats)
        for lu, v in sub_phi.items():
            phi_b[nodes[lu]] = rest[v]
            used.add(rest[v])
    phi = rebuild(red, phi_b, t, cap)
    if verify_embedding(a, t, phi):
        raise EmbeddingFailure("very-few-leaves embedding is invalid", _dump(a, t, None))
    return phi
