"""Local median orders (property M2) and tournaments seen through an ordering."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import Tournament, iter_bits
from .errors import PreconditionError

Ordering = tuple  # tuple of vertex ids; position i holds v_i

_NUMPY_FROM = 48


def check_permutation(t: Tournament, order: Sequence[int]):
    if len(order) != t.n or sorted(order) != list(range(t.n)):
        raise PreconditionError("ordering is not a permutation of the tournament's vertices")


def forward_arcs(t: Tournament, order: Sequence[int]) -> int:
    pos = [0] * t.n
    for i, v in enumerate(order):
        pos[v] = i
    total = 0
    for u in range(t.n):
        for v in iter_bits(t.rows[u]):
            if pos[u] < pos[v]:
                total += 1
    return total


def _best_move_py(rows, order, i):
    """Best insertion target for order[i]: (gain, j) with the nearest j among maxima."""
    v = order[i]
    rv = rows[v]
    best, best_j = 0, i
    g = 0
    for j in range(i + 1, len(order)):
        g += 1 if (rows[order[j]] >> v) & 1 else -1
        if g > best:
            best, best_j = g, j
    g = 0
    for j in range(i - 1, -1, -1):
        g += 1 if (rv >> order[j]) & 1 else -1
        if g > best or (g == best and best > 0 and i - j < abs(best_j - i)):
            best, best_j = g, j
    return best, best_j


def _best_move_np(sgn, order_arr, i):
    v = order_arr[i]
    best, best_j = 0, i
    n = len(order_arr)
    if i + 1 < n:
        right = np.cumsum(sgn[v, order_arr[i + 1:]])
        a = int(np.argmax(right))
        if right[a] > 0:
            best, best_j = int(right[a]), i + 1 + a
    if i > 0:
        left = np.cumsum(-sgn[v, order_arr[i - 1::-1]])
        a = int(np.argmax(left))
        g = int(left[a])
        if g > best or (g == best and best > 0 and a + 1 < best_j - i):
            best, best_j = g, i - 1 - a
    return best, best_j


def local_median_order(t: Tournament, start: Sequence[int] | None = None,
                       trace: list | None = None) -> Ordering:
    """An ordering satisfying M2, obtained by improving single-vertex moves.

    Starting from `start` (identity by default), every vertex in turn is moved
    to the position that gains the most forward arcs, as long as some move
    gains anything.  A vertex v_i that dominates fewer than half of
    v_{i+1}..v_j gains by moving behind v_j, and symmetrically, so the fixed
    point has no M2 violation.  If `trace` is a list, the forward-arc count is
    appended after every move.
    """
    n = t.n
    order = list(range(n)) if start is None else list(start)
    if start is not None:
        check_permutation(t, order)
    if n <= 1:
        return tuple(order)
    use_np = n >= _NUMPY_FROM
    if use_np:
        m = t.matrix
        # sgn[v, w] = +1 when w -> v: the gain of moving v behind w
        sgn = np.where(m.T, 1, -1).astype(np.int32)
    rows = t.rows
    fwd = forward_arcs(t, order) if trace is not None else 0
    changed = True
    while changed:
        changed = False
        for v in list(order):
            i = order.index(v)
            if use_np:
                gain, j = _best_move_np(sgn, np.asarray(order, dtype=np.intp), i)
            else:
                gain, j = _best_move_py(rows, order, i)
            if gain > 0:
                order.pop(i)
                order.insert(j, v)
                changed = True
                if trace is not None:
                    fwd += gain
                    trace.append(fwd)
    return tuple(order)


def m2_violations(t: Tournament, order: Sequence[int]) -> list[tuple[int, int]]:
    return check_m2(t, order)


def check_m2(t: Tournament, order: Sequence[int]) -> list[tuple[int, int]]:
    """Position pairs (i, j), i < j, where v_i dominates fewer than half of
    v_{i+1}..v_j or v_j is dominated by fewer than half of v_i..v_{j-1}.

    Sorted by (i, j - i).  An empty list certifies a local median order.
    """
    check_permutation(t, order)
    n = t.n
    if n < 2:
        return []
    idx = np.asarray(order, dtype=np.intp)
    p = t.matrix[np.ix_(idx, idx)]
    up = np.triu(p, 1).astype(np.int32)
    # out_cnt[i, j] = |N+(v_i) & {v_{i+1}..v_j}|
    out_cnt = np.cumsum(up, axis=1)
    # in_cnt[i, j] = |N-(v_j) & {v_i..v_{j-1}}|
    in_cnt = np.cumsum(up[::-1, :], axis=0)[::-1, :]
    ii, jj = np.indices((n, n))
    span = jj - ii
    upper = span > 0
    bad = upper & ((2 * out_cnt < span) | (2 * in_cnt < span))
    pairs = [(int(i), int(j)) for i, j in zip(*np.nonzero(bad))]
    pairs.sort(key=lambda ij: (ij[0], ij[1] - ij[0]))
    return pairs


def is_local_median(t: Tournament, order: Sequence[int]) -> bool:
    return not check_m2(t, order)


@dataclass(frozen=True)
class OrderedHost:
    """A tournament relabelled along an ordering: position i is vertex order[i].

    ``out[i]`` / ``inn[i]`` are bit rows over positions.  Every embedding
    procedure works on positions so that its behaviour depends only on the
    relabelled tournament.
    """

    t: Tournament
    order: tuple

    @cached_property
    def pos_tournament(self) -> Tournament:
        return self.t.relabel(list(self.order))

    @property
    def n(self) -> int:
        return self.t.n

    @cached_property
    def out(self) -> tuple:
        return self.pos_tournament.rows

    @cached_property
    def inn(self) -> tuple:
        return self.pos_tournament.in_rows

    def vertex(self, i: int) -> int:
        return self.order[i]

    @cached_property
    def position(self) -> dict:
        return {v: i for i, v in enumerate(self.order)}

    def to_vertices(self, phi_pos: dict) -> dict:
        return {a: self.order[i] for a, i in phi_pos.items()}

    def sub(self, positions: Sequence[int]) -> tuple["OrderedHost", list[int]]:
        """Induced host on the given positions with a fresh local median order.

        The induced tournament is labelled by increasing position, so the
        result again depends only on the relabelled tournament.
        """
        positions = sorted(positions)
        st = self.pos_tournament.relabel(positions)
        sub_order = local_median_order(st)
        return OrderedHost(st, sub_order), positions


def host_for(t: Tournament, order: Sequence[int] | None = None) -> OrderedHost:
    if order is None:
        order = local_median_order(t)
    return OrderedHost(t, tuple(order))


def position_tournament(t: Tournament, order: Sequence[int]) -> Tournament:
    return t.relabel(list(order))
