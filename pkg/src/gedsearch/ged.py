"""Exact graph edit distance under unit costs.

Six primitive operations (insert/delete/substitute a vertex or an edge),
every operation costs 1 except substitution between identical labels,
which costs 0.

`ged_exact` is a best-first search over partial vertex mappings with an
admissible label-count heuristic; `ged_brute` is a deliberately plain
exhaustive search used as its test oracle on small graphs.
"""

from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .graphs import LabeledGraph

__all__ = ["GedStatus", "GedResult", "ged_brute", "ged_exact", "verify"]

DEFAULT_BUDGET = 10_000_000

BRUTE_LIMIT = 8  # factorial search; anything bigger is a caller bug


class GedStatus(Enum):
    EXACT = "exact"
    ABOVE_CUTOFF = "above_cutoff"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class GedResult:
    status: GedStatus
    distance: int | None = None

    @property
    def exact(self) -> bool:
        return self.status is GedStatus.EXACT


def ged_brute(g: LabeledGraph, h: LabeledGraph) -> int:
    """Exhaustive exact edit distance for small graphs.

    Walks every injective mapping of h's vertices onto g's vertices or
    onto nothing (deletion), charging each edge at the step its later
    endpoint resolves. The only shortcut is abandoning branches that
    already cost at least as much as the best complete mapping found.
    """
    n_g, n_h = g.n_vertices, h.n_vertices
    if max(n_g, n_h) > BRUTE_LIMIT:
        raise ValueError(f"ged_brute is for graphs with <= {BRUTE_LIMIT} vertices")

    used = [False] * n_g
    mapping: list[int | None] = [None] * n_h
    # delete all of h, insert all of g: always a valid edit path
    best = n_h + h.n_edges + n_g + g.n_edges

    def completion(cost: int) -> int:
        cost += sum(1 for u in used if not u)
        for a, b, _ in g.edges:
            if not used[a] or not used[b]:
                cost += 1
        return cost

    def extend(i: int, cost: int) -> None:
        nonlocal best
        if cost >= best:
            return
        if i == n_h:
            best = min(best, completion(cost))
            return
        for w in range(n_g):
            if used[w]:
                continue
            c = cost + (0 if h.vertex_labels[i] == g.vertex_labels[w] else 1)
            for j in range(i):
                lbl_h = h.edge_label(i, j)
                wj = mapping[j]
                if wj is None:
                    if lbl_h is not None:
                        c += 1
                else:
                    lbl_g = g.edge_label(w, wj)
                    if lbl_h is None:
                        if lbl_g is not None:
                            c += 1
                    elif lbl_g is None or lbl_g != lbl_h:
                        c += 1
            used[w] = True
            mapping[i] = w
            extend(i + 1, c)
            used[w] = False
            mapping[i] = None
        # delete vertex i together with its edges to already-resolved vertices
        c = cost + 1 + sum(1 for j in range(i) if h.edge_label(i, j) is not None)
        extend(i + 1, c)

    extend(0, 0)
    return best


def _mapping_order(h: LabeledGraph) -> list[int]:
    # high-degree vertices first: their edges constrain the search earliest
    return sorted(range(h.n_vertices), key=lambda v: (-h.degrees[v], v))


def _suffix_label_counters(h: LabeledGraph, order: Sequence[int]):
    """Per-step Counters of the not-yet-mapped part of h.

    rem_v[k] counts vertex labels of order[k:]; rem_e[k] counts labels of
    edges whose later-resolving endpoint is at position >= k (exactly the
    edges not yet charged after k mapping steps).
    """
    n = len(order)
    pos = [0] * n
    for k, v in enumerate(order):
        pos[v] = k
    rem_v: list[Counter] = [Counter() for _ in range(n + 1)]
    rem_e: list[Counter] = [Counter() for _ in range(n + 1)]
    for k in range(n - 1, -1, -1):
        rem_v[k] = rem_v[k + 1].copy()
        rem_v[k][h.vertex_labels[order[k]]] += 1
    for a, b, lbl in h.edges:
        charge = max(pos[a], pos[b])
        for k in range(charge + 1):
            rem_e[k][lbl] += 1
    return rem_v, rem_e


def ged_exact(
    g: LabeledGraph,
    h: LabeledGraph,
    *,
    cutoff: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> GedResult:
    """Exact edit distance via best-first mapping search.

    h's vertices are mapped in descending-degree order onto distinct
    vertices of g or deleted; the heuristic is the label-count bound
    restricted to the unmapped remainder of both graphs, which never
    overestimates. States form a tree, so the first completed mapping
    popped is optimal.

    With a ``cutoff``, branches whose optimistic total exceeds it are
    dropped; an exhausted frontier then proves ged > cutoff. ``budget``
    caps node expansions; exceeding it returns BUDGET_EXCEEDED and the
    caller must treat the pair as undecided.
    """
    n_g, n_h = g.n_vertices, h.n_vertices
    order = _mapping_order(h)
    rem_hv, rem_he = _suffix_label_counters(h, order)
    rem_hv_total = [sum(c.values()) for c in rem_hv]
    rem_he_total = [sum(c.values()) for c in rem_he]

    g_vlabels = g.vertex_labels

    def heuristic(k: int, used: int) -> int:
        gv = Counter()
        for w in range(n_g):
            if not used >> w & 1:
                gv[g_vlabels[w]] += 1
        ge = Counter()
        for a, b, lbl in g.edges:
            if not used >> a & 1 or not used >> b & 1:
                ge[lbl] += 1
        hv, he = rem_hv[k], rem_he[k]
        common_v = sum(min(c, gv[l]) for l, c in hv.items())
        common_e = sum(min(c, ge[l]) for l, c in he.items())
        n_gv = n_g - used.bit_count()
        return (
            max(rem_hv_total[k], n_gv)
            - common_v
            + max(rem_he_total[k], sum(ge.values()))
            - common_e
        )

    start_h = heuristic(0, 0)
    if cutoff is not None and start_h > cutoff:
        return GedResult(GedStatus.ABOVE_CUTOFF)

    tie = itertools.count()
    # entries: (f, tie, k, gcost, used bitmask, mapping tuple)
    heap = [(start_h, next(tie), 0, 0, 0, ())]
    expansions = 0

    while heap:
        f, _, k, gcost, used, mapping = heapq.heappop(heap)
        if k == n_h:
            # heuristic degenerates to the exact completion cost here
            return GedResult(GedStatus.EXACT, f)
        expansions += 1
        if expansions > budget:
            return GedResult(GedStatus.BUDGET_EXCEEDED)

        i = order[k]
        for w in range(-1, n_g):  # -1 encodes deletion of vertex i
            if w >= 0 and used >> w & 1:
                continue
            if w < 0:
                c = gcost + 1
            else:
                c = gcost + (0 if h.vertex_labels[i] == g_vlabels[w] else 1)
            for j_pos in range(k):
                j = order[j_pos]
                lbl_h = h.edge_label(i, j)
                wj = mapping[j_pos]
                if w < 0 or wj < 0:
                    if lbl_h is not None:
                        c += 1
                else:
                    lbl_g = g.edge_label(w, wj)
                    if lbl_h is None:
                        if lbl_g is not None:
                            c += 1
                    elif lbl_g is None or lbl_g != lbl_h:
                        c += 1
            new_used = used if w < 0 else used | 1 << w
            nf = c + heuristic(k + 1, new_used)
            if cutoff is not None and nf > cutoff:
                continue
            heapq.heappush(
                heap, (nf, next(tie), k + 1, c, new_used, mapping + (w,))
            )

    return GedResult(GedStatus.ABOVE_CUTOFF)


def verify(
    candidates: Sequence[LabeledGraph],
    h: LabeledGraph,
    tau: int,
    *,
    budget: int = DEFAULT_BUDGET,
) -> tuple[list[int], list[int]]:
    """Split candidates into verified answers and budget casualties.

    Returns (answer ids, unverified ids), both in candidate order. A
    candidate whose search proves ged > tau is silently dropped; one whose
    search ran out of budget lands in the unverified list so callers can
    report it instead of guessing.
    """
    answers: list[int] = []
    unverified: list[int] = []
    for g in candidates:
        res = ged_exact(g, h, cutoff=tau, budget=budget)
        if res.status is GedStatus.EXACT and res.distance <= tau:
            answers.append(g.id)
        elif res.status is GedStatus.BUDGET_EXCEEDED:
            unverified.append(g.id)
    return answers, unverified
