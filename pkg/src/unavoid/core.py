"""Tournaments, oriented trees, embeddings, generators and file formats.

Adjacency is kept as one Python int per vertex: bit v of ``rows[u]`` is set
iff u -> v.  Interval domination counts are then ``(row & mask).bit_count()``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import FormatError, IncompleteEmbedding, PreconditionError

Embedding = dict  # node -> vertex


def iter_bits(x: int):
    """Yield the indices of the set bits of x in increasing order."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def iter_bits_desc(x: int):
    """Yield the indices of the set bits of x in decreasing order."""
    while x:
        b = x.bit_length() - 1
        yield b
        x ^= 1 << b


def interval_mask(lo: int, hi: int) -> int:
    """Bits lo..hi-1 (empty when hi <= lo)."""
    if hi <= lo:
        return 0
    return ((1 << (hi - lo)) - 1) << lo


def _rows_from_bool(mat: np.ndarray) -> tuple[int, ...]:
    packed = np.packbits(np.ascontiguousarray(mat, dtype=bool), axis=1,
                         bitorder="little")
    return tuple(int.from_bytes(r.tobytes(), "little") for r in packed)


# ---------------------------------------------------------------- tournaments

@dataclass(frozen=True)
class Tournament:
    """A tournament on vertices 0..n-1 stored as out-neighbour bit rows."""

    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.n:
            raise PreconditionError("row count differs from n")

    @classmethod
    def from_bool_matrix(cls, mat, check: bool = True) -> "Tournament":
        mat = np.asarray(mat, dtype=bool)
        n = mat.shape[0]
        if check:
            _check_matrix(mat)
        return cls(n, _rows_from_bool(mat))

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[tuple[int, int]]) -> "Tournament":
        rows = [0] * n
        for u, v in arcs:
            rows[u] |= 1 << v
        t = cls(n, tuple(rows))
        t.validate()
        return t

    def validate(self):
        _check_matrix(self.matrix)

    def has_arc(self, u: int, v: int) -> bool:
        return (self.rows[u] >> v) & 1 == 1

    def out_degree(self, u: int) -> int:
        return self.rows[u].bit_count()

    def out_neighbors(self, u: int) -> list[int]:
        return list(iter_bits(self.rows[u]))

    @cached_property
    def in_rows(self) -> tuple[int, ...]:
        if self.n > 64:
            return _rows_from_bool(self.matrix.T)
        ins = [0] * self.n
        for u, r in enumerate(self.rows):
            bit = 1 << u
            for v in iter_bits(r):
                ins[v] |= bit
        return tuple(ins)

    @cached_property
    def matrix(self) -> np.ndarray:
        """n x n boolean adjacency matrix (read-only)."""
        n = self.n
        out = np.zeros((n, n), dtype=bool)
        if n == 0:
            return out
        width = (n + 7) // 8
        buf = b"".join(r.to_bytes(width, "little") for r in self.rows)
        bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8).reshape(n, width),
                             axis=1, bitorder="little")
        out = bits[:, :n].astype(bool)
        out.setflags(write=False)
        return out

    def relabel(self, order: list[int]) -> "Tournament":
        """Tournament whose vertex i is ``order[i]`` of self (order may be partial)."""
        m = len(order)
        if m > 64:
            idx = np.asarray(order, dtype=np.intp)
            return Tournament(m, _rows_from_bool(self.matrix[np.ix_(idx, idx)]))
        rows = []
        for u in order:
            r = self.rows[u]
            row = 0
            for j, v in enumerate(order):
                if (r >> v) & 1:
                    row |= 1 << j
            rows.append(row)
        return Tournament(m, tuple(rows))

    induced = relabel

    def reversed(self) -> "Tournament":
        return Tournament(self.n, self.in_rows)

    def to_text(self) -> str:
        lines = [str(self.n)]
        for r in self.rows:
            lines.append("".join("1" if (r >> v) & 1 else "0" for v in range(self.n)))
        return "\n".join(lines) + "\n"


def _check_matrix(mat: np.ndarray):
    n = mat.shape[0]
    if mat.ndim != 2 or mat.shape[1] != n:
        raise FormatError("matrix is not square")
    diag = np.flatnonzero(np.diag(mat))
    if diag.size:
        u = int(diag[0])
        raise FormatError(f"diagonal cell ({u},{u}) is 1")
    bad = np.argwhere(np.triu(mat == mat.T, 1))
    if bad.size:
        u, v = (int(x) for x in bad[0])
        kind = "both 1" if mat[u, v] else "both 0"
        raise FormatError(f"cells ({u},{v}) and ({v},{u}) are {kind}: not antisymmetric")


def tournament_from_matrix(text: str) -> Tournament:
    """Parse n rows of n characters '0'/'1' (no header)."""
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    return _parse_rows(rows, first_line=1)


def _parse_rows(rows: list[str], first_line: int) -> Tournament:
    n = len(rows)
    for i, r in enumerate(rows):
        if len(r) != n:
            raise FormatError(f"row {i} has {len(r)} cells, expected {n}: matrix is not square",
                              first_line + i)
        if set(r) - {"0", "1"}:
            raise FormatError(f"row {i} has a character other than 0/1", first_line + i)
    mat = np.array([[c == "1" for c in r] for r in rows], dtype=bool).reshape(n, n)
    return Tournament.from_bool_matrix(mat)


def load_tournament(text: str) -> Tournament:
    """Parse the tournament file format: a line with n, then n matrix rows."""
    lines = [ln.strip() for ln in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise FormatError("empty tournament file", 1)
    try:
        n = int(lines[0])
    except ValueError:
        raise FormatError(f"expected vertex count, got {lines[0]!r}", 1) from None
    if n < 0:
        raise FormatError("negative vertex count", 1)
    rows = lines[1:]
    if len(rows) != n:
        raise FormatError(f"expected {n} matrix rows, found {len(rows)}", len(lines))
    return _parse_rows(rows, first_line=2)


def transitive(n: int) -> Tournament:
    return Tournament(n, tuple(interval_mask(u + 1, n) for u in range(n)))


def rotational(n: int, residues: Iterable[int]) -> Tournament:
    """u -> v iff (v - u) mod n lies in the residue set."""
    s = {r % n for r in residues}
    if n < 1 or len(s) != (n - 1) // 2 or (n - 1) % 2 or 0 in s:
        raise PreconditionError(f"residue set {sorted(s)} does not define a tournament of order {n}")
    if any((-r) % n in s for r in s):
        raise PreconditionError(f"residue set {sorted(s)} meets its negative mod {n}")
    rows = []
    for u in range(n):
        row = 0
        for r in s:
            row |= 1 << ((u + r) % n)
        rows.append(row)
    return Tournament(n, tuple(rows))


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    f = 2
    while f * f <= p:
        if p % f == 0:
            return False
        f += 1
    return True


def paley(p: int) -> Tournament:
    if not _is_prime(p) or p % 4 != 3:
        raise PreconditionError(f"Paley tournament needs a prime = 3 mod 4, got {p}")
    return rotational(p, {(x * x) % p for x in range(1, p)})


def random_tournament(n: int, seed=0) -> Tournament:
    """One seeded coin per pair u<v in lexicographic order; heads orients u -> v."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    rows = [0] * n
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < 0.5:
                rows[u] |= 1 << v
            else:
                rows[v] |= 1 << u
    return Tournament(n, tuple(rows))


def tournament_from_code(n: int, code: int) -> Tournament:
    """Bit t of code orients the t-th pair (lexicographic u<v) as u -> v."""
    rows = [0] * n
    t = 0
    for u in range(n):
        for v in range(u + 1, n):
            if (code >> t) & 1:
                rows[u] |= 1 << v
            else:
                rows[v] |= 1 << u
            t += 1
    return Tournament(n, tuple(rows))


def generate(kind: str, n: int, params=None) -> Tournament:
    if kind == "transitive":
        return transitive(n)
    if kind == "rotational":
        if params is None:
            raise PreconditionError("rotational needs a residue set")
        return rotational(n, params)
    if kind == "paley":
        return paley(n)
    if kind == "random":
        return random_tournament(n, 0 if params is None else params)
    raise PreconditionError(f"unknown tournament kind {kind!r}")


# -------------------------------------------------------------------- trees

@dataclass(frozen=True)
class OrientedTree:
    """An oriented tree on nodes 0..n-1; arc (u, v) means u -> v."""

    n: int
    arcs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        arcs = tuple((int(u), int(v)) for u, v in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        if self.n < 1:
            raise PreconditionError("a tree needs at least one node")
        if len(arcs) != self.n - 1:
            raise PreconditionError(f"{self.n} nodes need {self.n - 1} arcs, got {len(arcs)}")
        n = self.n
        for u, v in arcs:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise PreconditionError(f"bad arc ({u},{v})")
        # n - 1 arcs on n nodes form a tree iff they connect everything
        nbrs = self.nbrs
        seen = [False] * n
        seen[0] = True
        stack, reached = [0], 1
        while stack:
            for w in nbrs[stack.pop()]:
                if not seen[w]:
                    seen[w] = True
                    reached += 1
                    stack.append(w)
        if reached != n:
            raise PreconditionError("arcs close a cycle or repeat a pair")

    @classmethod
    def unchecked(cls, n: int, arcs) -> "OrientedTree":
        """Build from arcs already known to form a tree, skipping validation."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "arcs", tuple(arcs))
        return obj

    @cached_property
    def out_adj(self) -> tuple[tuple[int, ...], ...]:
        adj = [[] for _ in range(self.n)]
        for u, v in self.arcs:
            adj[u].append(v)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def in_adj(self) -> tuple[tuple[int, ...], ...]:
        adj = [[] for _ in range(self.n)]
        for u, v in self.arcs:
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def nbrs(self) -> tuple[tuple[int, ...], ...]:
        adj = [[] for _ in range(self.n)]
        for u, v in self.arcs:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def arc_set(self) -> frozenset:
        return frozenset(self.arcs)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        deg = [0] * self.n
        for u, v in self.arcs:
            deg[u] += 1
            deg[v] += 1
        return tuple(deg)

    def degree(self, u: int) -> int:
        return self.degrees[u]

    def has_arc(self, u: int, v: int) -> bool:
        return (u, v) in self.arc_set

    def reversed(self) -> "OrientedTree":
        return OrientedTree(self.n, tuple((v, u) for u, v in self.arcs))

    def relabel(self, mapping: Mapping[int, int]) -> "OrientedTree":
        return OrientedTree(self.n, tuple((mapping[u], mapping[v]) for u, v in self.arcs))

    def to_text(self) -> str:
        return "\n".join([str(self.n)] + [f"{u} {v}" for u, v in self.arcs]) + "\n"


def tree_from_arcs(arcs: Iterable[tuple[int, int]], n: int | None = None) -> OrientedTree:
    arcs = tuple(arcs)
    if n is None:
        n = 1 + max((max(a) for a in arcs), default=0)
    return OrientedTree(n, arcs)


def load_tree(text: str) -> OrientedTree:
    lines = [ln.strip() for ln in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise FormatError("empty tree file", 1)
    try:
        n = int(lines[0])
    except ValueError:
        raise FormatError(f"expected node count, got {lines[0]!r}", 1) from None
    if n < 1:
        raise FormatError("a tree needs at least one node", 1)
    if len(lines) - 1 != n - 1:
        raise FormatError(f"expected {n - 1} arc lines, found {len(lines) - 1}", len(lines))
    arcs = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise FormatError(f"expected 'u v', got {ln!r}", i)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"non-integer node in {ln!r}", i) from None
        if not (0 <= u < n and 0 <= v < n):
            raise FormatError(f"node out of range 0..{n - 1} in {ln!r}", i)
        arcs.append((u, v))
    try:
        return OrientedTree(n, tuple(arcs))
    except PreconditionError as exc:
        raise FormatError(f"not a tree: {exc}") from None


def directed_path(n: int) -> OrientedTree:
    return OrientedTree(n, tuple((i, i + 1) for i in range(n - 1)))


def antidirected_path(n: int) -> OrientedTree:
    """0 -> 1 <- 2 -> 3 <- ... (starts with a forward arc)."""
    arcs = [(i, i + 1) if i % 2 == 0 else (i + 1, i) for i in range(n - 1)]
    return OrientedTree(n, tuple(arcs))


def out_star(n: int) -> OrientedTree:
    """Centre 0 dominating nodes 1..n-1."""
    return OrientedTree(n, tuple((0, i) for i in range(1, n)))


def path_from_signs(signs: Iterable[bool]) -> OrientedTree:
    """Path 0 - 1 - ... where arc i is forward (i -> i+1) iff signs[i]."""
    signs = list(signs)
    arcs = [(i, i + 1) if s else (i + 1, i) for i, s in enumerate(signs)]
    return OrientedTree(len(signs) + 1, tuple(arcs))


def _prufer_decode(seq: list[int], n: int) -> list[tuple[int, int]]:
    import heapq
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def random_tree(n: int, seed=0, leaves: int | None = None) -> OrientedTree:
    """Random oriented tree via a Pruefer sequence; optionally with exactly `leaves` leaves."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    if n == 1:
        return OrientedTree(1, ())
    if n == 2:
        return OrientedTree(2, ((0, 1),) if rng.random() < 0.5 else ((1, 0),))
    if leaves is None:
        seq = [rng.randrange(n) for _ in range(n - 2)]
    else:
        if not 2 <= leaves <= n - 1:
            raise PreconditionError(f"a tree on {n} nodes cannot have {leaves} leaves")
        inner = rng.sample(range(n), n - leaves)
        seq = inner + [rng.choice(inner) for _ in range(leaves - 2)]
        rng.shuffle(seq)
    edges = _prufer_decode(seq, n)
    arcs = tuple((u, v) if rng.random() < 0.5 else (v, u) for u, v in edges)
    return OrientedTree(n, arcs)


def random_out_arborescence(n: int, seed=0) -> OrientedTree:
    """Random tree with every arc directed away from node 0."""
    t = random_tree(n, seed)
    rt = rooted(t, 0)
    return OrientedTree(n, tuple((rt.father[s], s) for s in rt.order[1:]))


@dataclass(frozen=True)
class RootedTree:
    tree: OrientedTree
    root: int
    father: dict = field(compare=False)
    sons: dict = field(compare=False)
    order: tuple = field(compare=False)  # BFS order from the root

    @property
    def n(self) -> int:
        return self.tree.n

    def is_out_arborescence(self) -> bool:
        return all(self.tree.has_arc(f, s) for s, f in self.father.items())

    def is_in_arborescence(self) -> bool:
        return all(self.tree.has_arc(s, f) for s, f in self.father.items())

    def subtree_sizes(self) -> dict:
        size = {u: 1 for u in self.order}
        for u in reversed(self.order):
            f = self.father.get(u)
            if f is not None:
                size[f] += size[u]
        return size


def rooted(tree: OrientedTree, root: int) -> RootedTree:
    if not 0 <= root < tree.n:
        raise PreconditionError(f"root {root} is not a node")
    nbrs = tree.nbrs
    father, sons = {}, {u: [] for u in range(tree.n)}
    order = [root]
    seen = [False] * tree.n
    seen[root] = True
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        su = sons[u]
        for w in nbrs[u]:
            if not seen[w]:
                seen[w] = True
                father[w] = u
                su.append(w)
                order.append(w)
    return RootedTree(tree, root, father, sons, tuple(order))


@dataclass(frozen=True)
class LeafPartition:
    in_leaves: frozenset
    out_leaves: frozenset
    trivial: bool = False

    @property
    def k(self) -> int:
        return len(self.in_leaves) + len(self.out_leaves)


def leaf_partition(tree: OrientedTree) -> LeafPartition:
    if tree.n == 1:
        return LeafPartition(frozenset(), frozenset(), trivial=True)
    ins = frozenset(u for u in range(tree.n)
                    if len(tree.out_adj[u]) == 1 and not tree.in_adj[u])
    outs = frozenset(u for u in range(tree.n)
                     if len(tree.in_adj[u]) == 1 and not tree.out_adj[u])
    return LeafPartition(ins, outs)


def leaf_count(tree: OrientedTree) -> int:
    """Number of leaves; a single node counts as one leaf."""
    if tree.n == 1:
        return 1
    return sum(1 for u in range(tree.n) if tree.degree(u) == 1)


def verify_embedding(tree: OrientedTree, t: Tournament, phi: Mapping[int, int]) -> list[str]:
    """Return one message per violated arc or collision; empty iff phi embeds tree in t."""
    missing = [u for u in range(tree.n) if u not in phi]
    if missing:
        raise IncompleteEmbedding(f"nodes without image: {missing[:10]}")
    problems = []
    seen = {}
    for u in range(tree.n):
        x = phi[u]
        if not 0 <= x < t.n:
            problems.append(f"node {u} mapped outside the tournament ({x})")
            continue
        if x in seen:
            problems.append(f"collision: nodes {seen[x]} and {u} both map to {x}")
        else:
            seen[x] = u
    for u, v in tree.arcs:
        x, y = phi[u], phi[v]
        if 0 <= x < t.n and 0 <= y < t.n and x != y and not t.has_arc(x, y):
            problems.append(f"arc {u}->{v} maps to {x},{y} but {y}->{x} in the tournament")
    return problems


def is_embedding(tree: OrientedTree, t: Tournament, phi: Mapping[int, int]) -> bool:
    return not verify_embedding(tree, t, phi)


@dataclass(frozen=True)
class TreeMetrics:
    n: int
    k: int
    n_in_leaves: int
    n_out_leaves: int
    is_path: bool
    is_out_arborescence: bool
    is_in_arborescence: bool
    is_bi_arborescence: bool
    arborescence_root: int | None
    bi_root: int | None

    @property
    def is_arborescence(self) -> bool:
        return self.is_out_arborescence or self.is_in_arborescence


def _monotone_root(tree: OrientedTree) -> int | None:
    """A node from which every path to another node is directed (smallest id)."""
    for r in range(tree.n):
        # direction of the first arc on each root path must persist
        ok = True
        sign = {r: 0}
        stack = [r]
        while stack and ok:
            u = stack.pop()
            for w in tree.out_adj[u]:
                if w in sign:
                    continue
                s = 1 if u == r else sign[u]
                if s != 1:
                    ok = False
                    break
                sign[w] = 1
                stack.append(w)
            if not ok:
                break
            for w in tree.in_adj[u]:
                if w in sign:
                    continue
                s = -1 if u == r else sign[u]
                if s != -1:
                    ok = False
                    break
                sign[w] = -1
                stack.append(w)
        if ok:
            return r
    return None


def tree_metrics(tree: OrientedTree) -> TreeMetrics:
    n = tree.n
    lp = leaf_partition(tree)
    k = leaf_count(tree)
    is_path = all(tree.degree(u) <= 2 for u in range(n))
    sources = [u for u in range(n) if not tree.in_adj[u]]
    sinks = [u for u in range(n) if not tree.out_adj[u]]
    out_arb = len(sources) == 1 and all(len(tree.in_adj[u]) == 1 for u in range(n) if u != sources[0])
    in_arb = len(sinks) == 1 and all(len(tree.out_adj[u]) == 1 for u in range(n) if u != sinks[0])
    arb_root = sources[0] if out_arb else (sinks[0] if in_arb else None)
    bi_root = _monotone_root(tree)
    return TreeMetrics(n, k, len(lp.in_leaves), len(lp.out_leaves), is_path, out_arb, in_arb,
                       bi_root is not None, arb_root, bi_root)


# --------------------------------------------------------------- embeddings

def embedding_to_text(phi: Mapping[int, int]) -> str:
    return "".join(f"{u} {phi[u]}\n" for u in sorted(phi))


def load_embedding(text: str) -> Embedding:
    phi = {}
    for i, ln in enumerate(text.splitlines(), start=1):
        ln = ln.strip()
        if not ln:
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise FormatError(f"expected 'node vertex', got {ln!r}", i)
        try:
            u, x = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"non-integer entry in {ln!r}", i) from None
        if u in phi:
            raise FormatError(f"node {u} listed twice", i)
        phi[u] = x
    return phi


def reverse(x):
    """Reverse every arc of a tournament or an oriented tree."""
    if isinstance(x, (Tournament, OrientedTree)):
        return x.reversed()
    raise TypeError(f"cannot reverse {type(x).__name__}")
