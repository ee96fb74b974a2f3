"""Tree generators shared by the test modules."""

import itertools
import random

from unavoid.core import OrientedTree, random_tree, rooted
from unavoid.stub import PathType


def random_stub(seed, branches=None, maxlen=7) -> OrientedTree:
    """Branch nodes joined by unbreakable inner segments, with length-1 legs."""
    rnd = random.Random(seed)
    nb = branches or rnd.randint(2, 4)
    arcs, n = [], nb
    for v in range(1, nb):
        u = rnd.randrange(v)
        kind = rnd.choice(["dir", "dir", "two", "three"])
        s = rnd.choice([1, -1])
        if kind == "dir":
            dirs = [s] * rnd.randint(1, maxlen)
        elif kind == "two":
            x, y = rnd.randint(1, maxlen), 1
            if rnd.random() < 0.5:
                x, y = y, x
            dirs = [s] * x + [-s] * y
        else:
            dirs = [s] + [-s] * rnd.randint(1, maxlen) + [s]
        seq = [u] + list(range(n, n + len(dirs) - 1)) + [v]
        n += len(dirs) - 1
        for (x, y), d in zip(zip(seq, seq[1:]), dirs):
            arcs.append((x, y) if d == 1 else (y, x))
    deg = [0] * n
    for x, y in arcs:
        deg[x] += 1
        deg[y] += 1
    for v in range(nb):
        for _ in range(max(0, 3 - deg[v]) + rnd.randint(0, 1)):
            arcs.append((v, n) if rnd.random() < 0.5 else (n, v))
            n += 1
    return OrientedTree(n, tuple(arcs))


def random_bi_arborescence(n, seed) -> OrientedTree:
    """Random tree whose root branches are each entirely out- or in-directed."""
    rnd = random.Random(seed)
    rt = rooted(random_tree(n, seed), 0)
    side, arcs = {}, []
    for s in rt.order[1:]:
        f = rt.father[s]
        d = side.get(f, rnd.randrange(2))
        side[s] = d
        arcs.append((f, s) if d == 0 else (s, f))
    return OrientedTree(n, tuple(arcs))


def double_star(left, right) -> OrientedTree:
    """Arc 0 -> 1 with `left` out-legs on 0 and `right` out-legs on 1."""
    arcs, n = [(0, 1)], 2
    for c, cnt in ((0, left), (1, right)):
        for _ in range(cnt):
            arcs.append((c, n))
            n += 1
    return OrientedTree(n, tuple(arcs))


def independent_stump_cases(p: PathType) -> list[str]:
    """Which of the five listed cases match, with (ii) read as p, q >= 2."""
    b, s = p.blocks, p.sign
    p1q = s == 1 and len(b) == 3 and b[0] >= 2 and b[1] == 1 and b[2] >= 2
    special = (len(b) == 4 and b[:3] == (1, 1, 1) and b[3] >= 2) or (s == 1 and b == (1,) * 5)
    hits = []
    if b[0] >= 2 and not p1q:
        hits.append("i")
    if p1q:
        hits.append("ii")
    if len(b) >= 2 and b[0] == 1 and b[1] == 1 and not special:
        hits.append("iii")
    if special:
        hits.append("iv")
    if len(b) >= 2 and b[0] == 1 and b[1] >= 2:
        hits.append("v")
    return hits


def all_types(max_len):
    for length in range(1, max_len + 1):
        for dirs in itertools.product((1, -1), repeat=length):
            yield PathType.from_directions(dirs)
