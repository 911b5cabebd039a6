"""Index construction and query processing.

The index partitions the database by (vertex count, edge count) into 2D
cells, builds one balanced q-gram tree per cell, and stores each tree in
the succinct form. A threshold query maps to a rectangle of cells, prunes
tree branches with count bounds evaluated straight off the compressed
vectors, and hands surviving leaves to the exact verifier.
"""

from __future__ import annotations

import itertools
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .filters import MAX_DELETION_GAP
from .ged import DEFAULT_BUDGET, GedStatus, ged_exact
from .graphs import (
    LabeledGraph,
    LabelInterner,
    QGramProfile,
    Vocabulary,
    build_vocabularies,
    degree_sequence,
    encode_profile,
)
from .partition import PartitionParams, RegionId, query_region, subregion_of
from .qtree import TreeNode, build_tree
from .succinct import SuccinctTree

__all__ = [
    "IndexParams",
    "GraphIndex",
    "QueryContext",
    "QueryResult",
    "build_index",
    "prepare_query",
    "search_tree",
    "search_tree_reference",
    "search",
    "query",
]

DEFAULT_REGION_LENGTH = 4
DEFAULT_BLOCK_SIZE = 16
DEFAULT_FANOUT = 8


@dataclass(frozen=True)
class IndexParams:
    x0: int
    y0: int
    region_length: int = DEFAULT_REGION_LENGTH
    block_size: int = DEFAULT_BLOCK_SIZE
    fanout: int = DEFAULT_FANOUT

    @property
    def partition(self) -> PartitionParams:
        return PartitionParams(self.x0, self.y0, self.region_length)


@dataclass
class GraphIndex:
    """Everything a query needs: parameters, vocabularies, the database
    graphs (for verification) and one succinct tree per populated cell."""

    params: IndexParams
    interner: LabelInterner
    vocab_d: Vocabulary
    vocab_l: Vocabulary
    graphs: tuple[LabeledGraph, ...]
    regions: dict[RegionId, SuccinctTree] = field(repr=False)

    @cached_property
    def degree_table(self) -> np.ndarray:
        return np.array([q.degree for q in self.vocab_d.entries], dtype=np.int64)

    @cached_property
    def vlabel_table(self) -> np.ndarray:
        return np.array([q.vertex_label for q in self.vocab_d.entries], dtype=np.int64)

    @property
    def n_graphs(self) -> int:
        return len(self.graphs)


def _region_leaves(
    graphs: Sequence[LabeledGraph],
    profiles: Sequence[QGramProfile],
    partition: PartitionParams,
) -> dict[RegionId, list[TreeNode]]:
    buckets: dict[RegionId, list[int]] = defaultdict(list)
    for g in graphs:
        buckets[subregion_of(g.n_vertices, g.n_edges, partition)].append(g.id)
    out: dict[RegionId, list[TreeNode]] = {}
    for rid in sorted(buckets):
        ids = sorted(
            buckets[rid],
            key=lambda i: (graphs[i].n_vertices, graphs[i].n_edges, i),
        )
        out[rid] = [TreeNode(profiles[i], graph_id=i) for i in ids]
    return out


def build_index(
    graphs: Sequence[LabeledGraph],
    interner: LabelInterner,
    *,
    region_length: int = DEFAULT_REGION_LENGTH,
    block_size: int = DEFAULT_BLOCK_SIZE,
    fanout: int = DEFAULT_FANOUT,
    origin: tuple[int, int] | None = None,
    vocabularies: tuple[Vocabulary, Vocabulary] | None = None,
) -> GraphIndex:
    """Build the full index over a database.

    Graphs must be numbered 0..n-1 (the parser guarantees that). The
    origin defaults to the database minima so cell indices start near
    zero. ``vocabularies`` overrides the frequency-built ones; any q-gram
    of a database graph must still be covered.
    """
    graphs = tuple(graphs)
    if not graphs:
        raise ValueError("cannot index an empty database")
    if [g.id for g in graphs] != list(range(len(graphs))):
        raise ValueError("graphs must be numbered consecutively from 0")

    if vocabularies is None:
        vocab_d, vocab_l = build_vocabularies(graphs, interner)
    else:
        vocab_d, vocab_l = vocabularies

    profiles: list[QGramProfile] = []
    for g in graphs:
        profile, unmatched_d, unmatched_l = encode_profile(g, vocab_d, vocab_l)
        if unmatched_d or unmatched_l:
            raise ValueError(
                f"graph {g.id} has q-grams outside the vocabulary; "
                "vocabularies must cover the database"
            )
        profiles.append(profile)

    if origin is None:
        origin = (
            min(g.n_vertices for g in graphs),
            min(g.n_edges for g in graphs),
        )
    params = IndexParams(origin[0], origin[1], region_length, block_size, fanout)

    regions: dict[RegionId, SuccinctTree] = {}
    for rid, leaves in _region_leaves(graphs, profiles, params.partition).items():
        root = build_tree(leaves, fanout)
        regions[rid] = SuccinctTree.from_tree(root, block_size)
    return GraphIndex(params, interner, vocab_d, vocab_l, graphs, regions)


# ---------------------------------------------------------------------------
# query side


def _case2_table(h: LabeledGraph, gap: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Degree sequences of all ``gap``-vertex-deleted subgraphs of h.

    Returns (rows, losses): each row a descending degree sequence of one
    subgraph, ``losses`` the matching edge-removal counts. None when the
    gap passes the shared enumeration limit (the caller then uses 0 for
    the edge term, same as the scalar filter).
    """
    n = h.n_vertices
    if gap > MAX_DELETION_GAP:
        return None
    deg = np.asarray(h.degrees, dtype=np.int64)
    adj = np.zeros((n, n), dtype=np.int64)
    for u, v, _ in h.edges:
        adj[u, v] = adj[v, u] = 1
    combos = np.array(
        list(itertools.combinations(range(n), gap)), dtype=np.int64
    )  # (runs, gap)
    reduced = deg[None, :] - adj[combos].sum(axis=1)
    keep = np.ones((combos.shape[0], n), dtype=bool)
    np.put_along_axis(keep, combos, False, axis=1)
    rows = -np.sort(-reduced[keep].reshape(combos.shape[0], n - gap), axis=1)
    inside = adj[combos[:, :, None], combos[:, None, :]].sum(axis=(1, 2)) // 2
    losses = deg[combos].sum(axis=1) - inside
    # identical degree sequences need only their cheapest edge loss; on
    # symmetric graphs this collapses thousands of deletions to a handful
    rows, inverse = np.unique(rows, axis=0, return_inverse=True)
    best = np.full(rows.shape[0], np.iinfo(np.int64).max)
    np.minimum.at(best, inverse, losses)
    return rows, best


@dataclass(frozen=True)
class QueryContext:
    """Query graph digested against an index's vocabularies.

    ``qd``/``ql`` are the query's frequency vectors padded dense to the
    vocabulary sizes; ``vlabel_dense`` counts the query's vertex labels
    over the interner's id space. Dense forms keep the per-node work in
    the traversal vectorized.
    """

    h: LabeledGraph
    n_vh: int
    n_eh: int
    qd: np.ndarray
    ql: np.ndarray
    sigma_h: np.ndarray
    vlabel_dense: np.ndarray
    degree_table: np.ndarray
    vlabel_table: np.ndarray
    unmatched_d: int
    unmatched_l: int
    _case2: dict = field(default_factory=dict, repr=False)

    def case2_table(self, gap: int) -> tuple[np.ndarray, np.ndarray] | None:
        """Cached per-gap subgraph tables; shared by all leaves of a query."""
        if gap not in self._case2:
            self._case2[gap] = _case2_table(self.h, gap)
        return self._case2[gap]


def prepare_query(index: GraphIndex, h: LabeledGraph) -> QueryContext:
    profile, unmatched_d, unmatched_l = encode_profile(h, index.vocab_d, index.vocab_l)
    qd = np.zeros(len(index.vocab_d.entries), dtype=np.int64)
    qd[: profile.degree_freq.size] = profile.degree_freq
    ql = np.zeros(len(index.vocab_l.entries), dtype=np.int64)
    ql[: profile.label_freq.size] = profile.label_freq
    n_labels = max(len(index.interner), max(h.vertex_labels, default=-1) + 1)
    vlabel_dense = np.bincount(
        np.asarray(h.vertex_labels, dtype=np.int64), minlength=n_labels
    )
    return QueryContext(
        h=h,
        n_vh=h.n_vertices,
        n_eh=h.n_edges,
        qd=qd,
        ql=ql,
        sigma_h=np.asarray(degree_sequence(h), dtype=np.int64),
        vlabel_dense=vlabel_dense,
        degree_table=index.degree_table,
        vlabel_table=index.vlabel_table,
        unmatched_d=unmatched_d,
        unmatched_l=unmatched_l,
    )


def _node_bounds_pass(
    c_l: int, c_d: int, n_vw: int, n_ew: int, ctx: QueryContext, tau: int
) -> bool:
    """Subtree pruning tests on the common-count sums.

    A node's vector dominates every leaf below it and its size counters
    are minima, so failing either bound rules out the whole subtree.
    """
    if c_l < max(n_vw, ctx.n_vh) + max(n_ew, ctx.n_eh) - tau:
        return False
    if c_d < max(n_vw, ctx.n_vh) - 2 * tau:
        return False
    return True


def _leaf_survives(
    ids: np.ndarray,
    vals: np.ndarray,
    n_vw: int,
    c_d: int,
    ctx: QueryContext,
    tau: int,
) -> bool:
    """Leaf-only checks: full degree-q-gram bound, then degree-sequence.

    The vocabulary stores each degree q-gram's vertex label and degree, so
    the leaf's exact vertex-label multiset and degree sequence come back
    out of its compressed vector; no graph access needed while filtering.
    ``ids``/``vals`` are the leaf's nonzero degree-q-gram entries.
    """
    labels = np.repeat(ctx.vlabel_table[ids], vals)
    counts = np.bincount(labels, minlength=ctx.vlabel_dense.size)
    common_vl = int(np.minimum(counts, ctx.vlabel_dense).sum())
    if c_d < 2 * max(n_vw, ctx.n_vh) - common_vl - 2 * tau:
        return False
    sigma_w = np.sort(np.repeat(ctx.degree_table[ids], vals))[::-1]
    if ctx.n_vh <= n_vw:
        padded = np.zeros(n_vw, dtype=np.int64)
        padded[: ctx.n_vh] = ctx.sigma_h
        diff = sigma_w - padded
        up = int(diff[diff > 0].sum())
        down = int(-diff[diff < 0].sum())
        lam = (up + 1) // 2 + (down + 1) // 2
    else:
        table = ctx.case2_table(ctx.n_vh - n_vw)
        if table is None:
            lam = 0
        else:
            rows, losses = table
            diff = sigma_w[None, :] - rows
            up = np.where(diff > 0, diff, 0).sum(axis=1)
            down = np.where(diff < 0, -diff, 0).sum(axis=1)
            lam = int((losses + (up + 1) // 2 + (down + 1) // 2).min())
    return max(n_vw, ctx.n_vh) - common_vl + lam <= tau


def search_tree(tree: SuccinctTree, ctx: QueryContext, tau: int) -> list[int]:
    """Candidate graph ids of one region tree, in leaf order.

    Per node the label-count bound is evaluated first and alone decides
    most prunings; the degree side is only decoded for nodes that survive
    it. Values come off the block cache, positions off the select
    directory, so a visit costs a couple of slices and a min-sum.
    """
    out: list[int] = []
    records = tree.records
    psi_l, psi_d = tree.psi_l, tree.psi_d
    first_l, count_l, ones_l = tree.first_l, tree.count_l, tree.ones_l
    first_d, count_d, ones_d = tree.first_d, tree.count_d, tree.ones_d
    ql, qd = ctx.ql, ctx.qd
    n_vh, n_eh = ctx.n_vh, ctx.n_eh

    stack = [0]
    while stack:
        node = stack.pop()
        rec = records[node]
        n_vw = rec.n_vertices
        f = first_l[node]
        c = count_l[node]
        l_vals = psi_l.decode_range(f, f + c)
        c_l = np.minimum(l_vals, ql[ones_l[f : f + c]]).sum()
        big_v = n_vw if n_vw > n_vh else n_vh
        big_e = rec.n_edges if rec.n_edges > n_eh else n_eh
        if c_l < big_v + big_e - tau:
            continue
        f = first_d[node]
        c = count_d[node]
        d_ids = ones_d[f : f + c]
        d_vals = psi_d.decode_range(f, f + c)
        c_d = np.minimum(d_vals, qd[d_ids]).sum()
        if c_d < big_v - 2 * tau:
            continue
        if rec.children:
            stack.extend(reversed(rec.children))
        elif _leaf_survives(d_ids, d_vals, n_vw, int(c_d), ctx, tau):
            out.append(rec.graph_id)
    return out


def search_tree_reference(root: TreeNode, ctx: QueryContext, tau: int) -> list[int]:
    """Same traversal over the plain in-memory tree (differential testing)."""
    out: list[int] = []

    def common(vec: np.ndarray, dense: np.ndarray) -> int:
        return int(np.minimum(vec, dense[: vec.size]).sum())

    def visit(node: TreeNode) -> None:
        p = node.profile
        c_l = common(p.label_freq, ctx.ql)
        c_d = common(p.degree_freq, ctx.qd)
        if not _node_bounds_pass(c_l, c_d, p.n_vertices, p.n_edges, ctx, tau):
            return
        if not node.is_leaf:
            for child in node.children:
                visit(child)
            return
        ids = np.nonzero(p.degree_freq)[0]
        if _leaf_survives(ids, p.degree_freq[ids], p.n_vertices, c_d, ctx, tau):
            out.append(node.graph_id)

    visit(root)
    return out


def search(index: GraphIndex, h: LabeledGraph, tau: int) -> list[int]:
    """Filtering phase: candidate ids over all relevant cells, ascending."""
    ctx = prepare_query(index, h)
    i1, i2, j1, j2 = query_region(
        h.n_vertices, h.n_edges, tau, index.params.partition
    )
    out: list[int] = []
    for rid in sorted(index.regions):
        if i1 <= rid[0] <= i2 and j1 <= rid[1] <= j2:
            out.extend(search_tree(index.regions[rid], ctx, tau))
    return sorted(out)


@dataclass(frozen=True)
class QueryResult:
    candidates: tuple[int, ...]
    answers: tuple[int, ...]
    unverified: tuple[int, ...]
    filter_seconds: float
    verify_seconds: float


def query(
    index: GraphIndex,
    h: LabeledGraph,
    tau: int,
    *,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
) -> QueryResult:
    """Full pipeline: filter, then verify each candidate exactly.

    Candidates whose verification exhausts the expansion budget are
    reported as unverified rather than guessed either way.
    """
    t0 = time.perf_counter()
    candidates = search(index, h, tau)
    t1 = time.perf_counter()

    def check(gid: int):
        return gid, ged_exact(index.graphs[gid], h, cutoff=tau, budget=budget)

    if threads > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(check, candidates))
    else:
        results = [check(gid) for gid in candidates]
    answers = [
        gid
        for gid, res in results
        if res.status is GedStatus.EXACT and res.distance <= tau
    ]
    unverified = [
        gid for gid, res in results if res.status is GedStatus.BUDGET_EXCEEDED
    ]
    t2 = time.perf_counter()
    return QueryResult(
        tuple(candidates), tuple(answers), tuple(unverified), t1 - t0, t2 - t1
    )
