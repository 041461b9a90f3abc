"""Reference matchings over space-time detection events.

Events sit on the 3-D lattice of ancilla positions ``(r, c)`` and rounds
``t``. Each event is either paired with another event at cost
``|dr| + |dc| + |dt|`` or sent to the nearer open boundary at cost
``c + 1`` (west) or ``(d - 1) - c`` (east).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .lattice import H, V, Lattice

MAX_EXACT_EVENTS = 20


class Event(NamedTuple):
    r: int
    c: int
    t: int


class Side(str, enum.Enum):
    WEST = "west"
    EAST = "east"


class OracleOverflow(ValueError):
    """Too many events for the exact subset DP."""


@dataclass(frozen=True)
class Matching:
    pairs: tuple = ()
    boundary_matches: tuple = ()
    weight: int = 0

    def events(self) -> list[Event]:
        out = [e for pair in self.pairs for e in pair]
        out.extend(e for e, _ in self.boundary_matches)
        return out


def pair_weight(e1: Sequence[int], e2: Sequence[int]) -> int:
    return abs(e1[0] - e2[0]) + abs(e1[1] - e2[1]) + abs(e1[2] - e2[2])


def boundary_weight(e: Sequence[int], side: Side | str, d: int) -> int:
    side = Side(side)
    c = e[1]
    return c + 1 if side is Side.WEST else (d - 1) - c


def nearest_boundary(e: Sequence[int], d: int) -> tuple[Side, int]:
    """Cheaper boundary for ``e``; west on a tie."""
    w, east = boundary_weight(e, Side.WEST, d), boundary_weight(e, Side.EAST, d)
    return (Side.WEST, w) if w <= east else (Side.EAST, east)


def _canonical(events: Iterable[Sequence[int]]) -> list[Event]:
    evs = sorted(Event(*map(int, e)) for e in events)
    if len(set(evs)) != len(evs):
        raise ValueError("duplicate events")
    return evs


def _build(pairs, bounds, d) -> Matching:
    pairs = tuple(sorted(tuple(sorted(p)) for p in pairs))
    bounds = tuple(sorted(bounds))
    w = sum(pair_weight(a, b) for a, b in pairs) + sum(boundary_weight(e, s, d) for e, s in bounds)
    return Matching(pairs, bounds, w)


def brute_force_matching(events: Iterable[Sequence[int]], d: int) -> Matching:
    """Minimum weight by enumerating every assignment; for small instances only."""
    evs = _canonical(events)
    best: list = [None, None]

    def rec(rest: tuple, pairs: list, bounds: list, w: int) -> None:
        if best[0] is not None and w >= best[0]:
            return
        if not rest:
            best[0], best[1] = w, (list(pairs), list(bounds))
            return
        e, others = rest[0], rest[1:]
        for side in (Side.WEST, Side.EAST):
            bounds.append((e, side))
            rec(others, pairs, bounds, w + boundary_weight(e, side, d))
            bounds.pop()
        for k, f in enumerate(others):
            pairs.append((e, f))
            rec(others[:k] + others[k + 1 :], pairs, bounds, w + pair_weight(e, f))
            pairs.pop()

    rec(tuple(evs), [], [], 0)
    pairs, bounds = best[1]
    return _build(pairs, bounds, d)


def all_matching_weights(events: Iterable[Sequence[int]], d: int) -> list[int]:
    """Weights of every assignment (each event to a partner or either boundary)."""
    evs = _canonical(events)
    out: list[int] = []

    def rec(rest: tuple, w: int) -> None:
        if not rest:
            out.append(w)
            return
        e, others = rest[0], rest[1:]
        rec(others, w + boundary_weight(e, Side.WEST, d))
        rec(others, w + boundary_weight(e, Side.EAST, d))
        for k, f in enumerate(others):
            rec(others[:k] + others[k + 1 :], w + pair_weight(e, f))

    rec(tuple(evs), 0)
    return out


def _components(n: int, edges: dict) -> list[list[int]]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def exact_min_weight_matching(
    events: Iterable[Sequence[int]], d: int, max_events: int = MAX_EXACT_EVENTS
) -> Matching:
    """Globally minimal matching by subset DP, split into independent clusters.

    A pair whose cost is no less than sending both events to their own
    boundaries is never needed, so such edges are dropped before the
    events are split into connected clusters. Ties resolve toward the
    boundary option first, then toward the lowest-index partner.
    """
    evs = _canonical(events)
    n = len(evs)
    if n > max_events:
        raise OracleOverflow(f"{n} events exceed the exact-matching limit of {max_events}")
    if n == 0:
        return Matching()
    bnd = [nearest_boundary(e, d) for e in evs]
    edges = {}
    for i, j in itertools.combinations(range(n), 2):
        w = pair_weight(evs[i], evs[j])
        if w < bnd[i][1] + bnd[j][1]:
            edges[(i, j)] = w

    pairs, bounds = [], []
    for comp in _components(n, edges):
        k = len(comp)
        local_edges = [[None] * k for _ in range(k)]
        for a, b in itertools.combinations(range(k), 2):
            w = edges.get((comp[a], comp[b]))
            local_edges[a][b] = local_edges[b][a] = w

        @lru_cache(maxsize=None)
        def best(mask: int) -> tuple[int, int]:
            # returns (cost, choice); choice -1 is the boundary, else partner index
            if mask == 0:
                return 0, -2
            i = (mask & -mask).bit_length() - 1
            rest = mask & ~(1 << i)
            cost = bnd[comp[i]][1] + best(rest)[0]
            choice = -1
            for j in range(i + 1, k):
                w = local_edges[i][j]
                if w is not None and rest >> j & 1:
                    c = w + best(rest & ~(1 << j))[0]
                    if c < cost:
                        cost, choice = c, j
            return cost, choice

        mask = (1 << k) - 1
        while mask:
            i = (mask & -mask).bit_length() - 1
            _, choice = best(mask)
            mask &= ~(1 << i)
            if choice == -1:
                bounds.append((evs[comp[i]], bnd[comp[i]][0]))
            else:
                pairs.append((evs[comp[i]], evs[comp[choice]]))
                mask &= ~(1 << choice)
        best.cache_clear()
    return _build(pairs, bounds, d)


def greedy_matching(
    events: Iterable[Sequence[int]],
    d: int,
    hop_schedule: Iterable[int] | None = None,
    boundary_delay: int = 1,
) -> Matching:
    """Nearest-partner matching with a growing hop limit.

    Events take turns in (t, r, c) order, as the decoder's Token visits
    base depths and then Units in raster order. At hop limit ``C`` an
    event accepts the closest unmatched partner within ``C`` hops; a
    boundary costs ``boundary_delay`` extra hops to reach, so equally
    distant partners win.
    """
    evs = sorted(_canonical(events), key=lambda e: (e.t, e.r, e.c))
    if hop_schedule is None:
        hop_schedule = itertools.count(1)
    unmatched = list(evs)
    pairs, bounds = [], []
    for hop in hop_schedule:
        if not unmatched:
            break
        k = 0
        while k < len(unmatched):
            e = unmatched[k]
            side, bw = nearest_boundary(e, d)
            best_w, best_f = bw + boundary_delay, None
            for f in unmatched:
                if f is e:
                    continue
                w = pair_weight(e, f)
                if w < best_w or (w == best_w and best_f is None):
                    best_w, best_f = w, f
            if best_w > hop:
                k += 1
                continue
            if best_f is None:
                bounds.append((e, side))
                unmatched.pop(k)
            else:
                pairs.append((e, best_f))
                j = unmatched.index(best_f)
                unmatched.pop(k)
                unmatched.remove(best_f)
                if j < k:
                    k -= 1
    if unmatched:
        raise ValueError("hop schedule ended with unmatched events")
    return _build(pairs, bounds, d)


def path_qubits(d: int, a: Sequence[int], b: Sequence[int]) -> list:
    """Row segment along ``a``'s row, then column segment along ``b``'s column."""
    (r1, c1), (r2, c2) = (a[0], a[1]), (b[0], b[1])
    out = []
    lo, hi = sorted((c1, c2))
    out.extend(H(r1, x) for x in range(lo + 1, hi + 1))
    lo, hi = sorted((r1, r2))
    out.extend(V(y, c2) for y in range(lo, hi))
    return out


def boundary_path_qubits(d: int, e: Sequence[int], side: Side | str) -> list:
    r, c = e[0], e[1]
    if Side(side) is Side.WEST:
        return [H(r, x) for x in range(0, c + 1)]
    return [H(r, x) for x in range(c + 1, d)]


def corrections_from_matching(lattice: Lattice, matching: Matching) -> np.ndarray:
    """Data-qubit flip mask realising a matching; time offsets flip nothing."""
    qs = []
    for a, b in matching.pairs:
        first, second = sorted((a, b), key=lambda e: (e.r, e.c))
        qs.extend(path_qubits(lattice.d, first, second))
    for e, side in matching.boundary_matches:
        qs.extend(boundary_path_qubits(lattice.d, e, side))
    return lattice.mask(qs)


def matching_from_records(records: np.ndarray, d: int) -> Matching:
    """Convert decoder match records ``(t1, r1, c1, kind, t2, r2, c2)`` to a :class:`Matching`."""
    pairs, bounds = [], []
    for t1, r1, c1, kind, t2, r2, c2 in np.asarray(records).reshape(-1, 7).tolist():
        if kind == 0:
            pairs.append((Event(r1, c1, t1), Event(r2, c2, t2)))
        else:
            bounds.append((Event(r1, c1, t1), Side.WEST if kind == 1 else Side.EAST))
    return _build(pairs, bounds, d)
