"""Lower-bound filters for graph edit distance.

Every function here computes a cheap lower bound on ged(g, h); a pair can
be discarded for threshold tau as soon as any bound exceeds tau. Bounds are
stated directly on graphs via multiset intersections, which coincide with
the positionwise-minimum form used over vocabulary vectors inside the index
traversal.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .graphs import LabeledGraph, degree_qgrams, degree_sequence, label_qgrams

__all__ = [
    "FilterVerdict",
    "dist_number",
    "dist_label",
    "label_qgram_bound",
    "label_qgram_filter",
    "degree_qgram_bound",
    "degree_qgram_filter",
    "delta",
    "lambda_edge_deletions",
    "degree_sequence_bound",
    "degree_sequence_filter",
    "filter_cascade",
]

# Enumerating vertex-deleted subgraphs of the query is binomial in the size
# gap; past this gap the edge term falls back to 0, which keeps the bound
# valid (just looser).
MAX_DELETION_GAP = 3


@dataclass(frozen=True)
class FilterVerdict:
    """Outcome of one filter: ``passed`` plus the lower bound it proved."""

    passed: bool
    bound: int


def _sizes(g) -> tuple[int, int]:
    return g.n_vertices, g.n_edges


def dist_number(g, h) -> int:
    """|#vertices difference| + |#edges difference|.

    Accepts anything exposing n_vertices/n_edges (graphs, profiles).
    """
    gv, ge = _sizes(g)
    hv, he = _sizes(h)
    return abs(gv - hv) + abs(ge - he)


def _common(a: Counter, b: Counter) -> int:
    return sum((a & b).values())


def dist_label(g: LabeledGraph, h: LabeledGraph) -> int:
    """Label-count lower bound with vertex and edge labels kept apart."""
    v = max(g.n_vertices, h.n_vertices) - _common(
        g.vertex_label_counts, h.vertex_label_counts
    )
    e = max(g.n_edges, h.n_edges) - _common(g.edge_label_counts, h.edge_label_counts)
    return v + e


def label_qgram_bound(g: LabeledGraph, h: LabeledGraph) -> int:
    """Bound from the merged vertex+edge label multisets.

    Weaker than dist_label (a vertex label may match an edge label), but
    it is exactly what the tree traversal can evaluate from stored counts.
    """
    common = _common(Counter(label_qgrams(g)), Counter(label_qgrams(h)))
    bound = max(g.n_vertices, h.n_vertices) + max(g.n_edges, h.n_edges) - common
    return max(bound, 0)


def label_qgram_filter(g: LabeledGraph, h: LabeledGraph, tau: int) -> FilterVerdict:
    bound = label_qgram_bound(g, h)
    return FilterVerdict(bound <= tau, bound)


def degree_qgram_bound(g: LabeledGraph, h: LabeledGraph) -> int:
    """Bound from common degree-q-grams.

    One vertex edit breaks at most its own q-gram plus one per incident
    edge, and one edge edit breaks both endpoint q-grams, so tau edits
    leave at least 2*max(|V|) - |common vertex labels| - 2*tau q-grams
    intact; solving for tau gives the bound below.
    """
    common = _common(Counter(degree_qgrams(g)), Counter(degree_qgrams(h)))
    shared_vlabels = _common(g.vertex_label_counts, h.vertex_label_counts)
    raw = 2 * max(g.n_vertices, h.n_vertices) - shared_vlabels - common
    return max(-(-raw // 2), 0)  # ceil(raw / 2)


def degree_qgram_filter(g: LabeledGraph, h: LabeledGraph, tau: int) -> FilterVerdict:
    bound = degree_qgram_bound(g, h)
    return FilterVerdict(bound <= tau, bound)


def delta(x: Sequence[int], y: Sequence[int]) -> int:
    """Edit-aware distance between two equal-length degree vectors.

    Positive and negative positionwise differences are summed separately
    and each halved rounding up: one edge edit moves two degree units down
    or up, so the two directions bound independent edit counts.
    """
    if len(x) != len(y):
        raise ValueError("degree vectors must have equal length")
    up = sum(a - b for a, b in zip(x, y) if a > b)
    down = sum(b - a for a, b in zip(x, y) if b > a)
    return -(-up // 2) + -(-down // 2)


def _induced_degree_sequences(h: LabeledGraph, keep: int):
    """Degree sequences (desc) and edge counts of all induced subgraphs of h
    on ``keep`` vertices."""
    n = h.n_vertices
    for kept in itertools.combinations(range(n), keep):
        kept_set = set(kept)
        degs = []
        edge_cnt = 0
        for v in kept:
            d = sum(1 for u, _ in h.adjacency[v] if u in kept_set)
            degs.append(d)
            edge_cnt += d
        yield tuple(sorted(degs, reverse=True)), edge_cnt // 2


def lambda_edge_deletions(
    sigma_g: Sequence[int], h: LabeledGraph, *, debug: bool = False
):
    """Edge-edit term of the degree-sequence bound.

    ``sigma_g`` is the data graph's degree sequence (descending). When the
    query h has at most |sigma_g| vertices its sequence is padded with
    zeros; otherwise every way of deleting |V_h| - |sigma_g| query vertices
    is tried (induced subgraphs) and the cheapest completion is kept, since
    each deleted vertex drags its incident edges with it.

    With ``debug=True`` also returns the variant that charges the full
    degree sum instead of the edge count; that variant overestimates and is
    never used for pruning.
    """
    sigma_g = tuple(sigma_g)
    sigma_h = degree_sequence(h)
    n_g, n_h = len(sigma_g), len(sigma_h)

    if n_h <= n_g:
        padded = sigma_h + (0,) * (n_g - n_h)
        lam = delta(sigma_g, padded)
        return (lam, lam) if debug else lam

    k = n_h - n_g
    if k > MAX_DELETION_GAP:
        return (0, 0) if debug else 0

    best = None
    best_raw = None
    for sigma_h1, edges_h1 in _induced_degree_sequences(h, n_g):
        d = delta(sigma_g, sigma_h1)
        cand = h.n_edges - edges_h1 + d
        raw = h.n_edges - 2 * edges_h1 + d
        best = cand if best is None else min(best, cand)
        best_raw = raw if best_raw is None else min(best_raw, raw)
    return (best, best_raw) if debug else best


def degree_sequence_bound(g: LabeledGraph, h: LabeledGraph) -> int:
    """Vertex-label deficit plus the degree-sequence edge term."""
    shared_vlabels = _common(g.vertex_label_counts, h.vertex_label_counts)
    lam = lambda_edge_deletions(degree_sequence(g), h)
    return max(g.n_vertices, h.n_vertices) - shared_vlabels + lam


def degree_sequence_filter(g: LabeledGraph, h: LabeledGraph, tau: int) -> FilterVerdict:
    bound = degree_sequence_bound(g, h)
    return FilterVerdict(bound <= tau, bound)


def _number_filter(g: LabeledGraph, h: LabeledGraph, tau: int) -> FilterVerdict:
    bound = dist_number(g, h)
    return FilterVerdict(bound <= tau, bound)


# Cheapest first; each stage only runs if all earlier ones passed.
_CASCADE = (
    _number_filter,
    label_qgram_filter,
    degree_qgram_filter,
    degree_sequence_filter,
)


def filter_cascade(g: LabeledGraph, h: LabeledGraph, tau: int) -> FilterVerdict:
    """Run all filters in fixed cheap-to-expensive order.

    Returns the verdict of the first stage that prunes, or the last
    stage's verdict if everything passes.
    """
    verdict = FilterVerdict(True, 0)
    for stage in _CASCADE:
        verdict = stage(g, h, tau)
        if not verdict.passed:
            return verdict
    return verdict
