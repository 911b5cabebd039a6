"""Balanced summary tree over q-gram profiles.

Leaves are database graphs; an internal node stores, per q-gram id, the
maximum frequency among its descendants (and the minimum vertex/edge
counts), so a node's vector dominates every leaf below it. A query bound
that fails against the node therefore fails against all of them, which is
what makes subtree pruning sound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import QGramProfile

__all__ = ["TreeNode", "union_profiles", "build_tree"]


@dataclass(frozen=True)
class TreeNode:
    profile: QGramProfile
    children: tuple["TreeNode", ...] = ()
    graph_id: int | None = None  # set on leaves only

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __post_init__(self):
        assert self.is_leaf == (self.graph_id is not None)


def _max_merge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.size < b.size:
        a, b = b, a
    # positionwise max over the overlap; the longer tail carries over as-is
    out = a.copy()
    np.maximum(out[: b.size], b, out=out[: b.size])
    return out


def union_profiles(a: QGramProfile, b: QGramProfile) -> QGramProfile:
    """Dominating summary of two profiles.

    Frequency vectors take positionwise maxima, the size counters take
    minima (the loosest values any descendant can have, which keeps the
    size-based pruning bounds valid for every leaf underneath).
    """
    return QGramProfile(
        _max_merge(a.degree_freq, b.degree_freq),
        _max_merge(a.label_freq, b.label_freq),
        min(a.n_vertices, b.n_vertices),
        min(a.n_edges, b.n_edges),
    )


def _summarize(nodes: Sequence[TreeNode]) -> QGramProfile:
    acc = nodes[0].profile
    for n in nodes[1:]:
        acc = union_profiles(acc, n.profile)
    return acc


def build_tree(leaves: Sequence[TreeNode], fanout: int) -> TreeNode:
    """Build a balanced tree with at most ``fanout`` children per node.

    Leaf order is preserved left to right. The leaf list splits into at
    most ``fanout`` contiguous chunks of near-equal size, recursively; a
    singleton chunk passes its node up unchanged, so no chain nodes appear
    and all leaf depths stay within one of each other.
    """
    if fanout < 2:
        raise ValueError("fanout must be >= 2")
    if not leaves:
        raise ValueError("cannot build a tree with no leaves")
    if len(leaves) == 1:
        return leaves[0]
    if len(leaves) <= fanout:
        return TreeNode(_summarize(leaves), tuple(leaves))

    chunk = -(-len(leaves) // fanout)  # ceil
    parts = [leaves[i : i + chunk] for i in range(0, len(leaves), chunk)]
    children = tuple(build_tree(p, fanout) for p in parts)
    return TreeNode(_summarize(children), children)
