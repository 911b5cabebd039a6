"""Scikit-learn style front end.

`GraphSimilaritySearch` wraps the functional engine in the familiar
fit/query shape: ``fit(graphs)`` builds the index, ``predict`` returns the
ids within the configured edit-distance threshold for each query graph,
and ``transform`` exposes the fitted q-gram vocabularies as a count-matrix
featurizer for downstream pipelines.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .engine import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_FANOUT,
    DEFAULT_REGION_LENGTH,
    QueryResult,
    build_index,
    query,
    search,
)
from .ged import DEFAULT_BUDGET
from .graphs import LabeledGraph, LabelInterner, encode_profile, validate_graph

__all__ = ["GraphSimilaritySearch", "check_graph_list"]


def check_graph_list(X) -> list[LabeledGraph]:
    """Validate estimator input: a non-empty sequence of LabeledGraphs.

    Structural invariants are checked per graph; ids are renumbered by
    position when they are not already 0..n-1, so slicing a database and
    fitting on the slice just works.
    """
    if isinstance(X, LabeledGraph):
        raise TypeError("expected a sequence of graphs, got a single graph")
    graphs = list(X)
    if not graphs:
        raise ValueError("X must contain at least one graph")
    for g in graphs:
        if not isinstance(g, LabeledGraph):
            raise TypeError(f"expected LabeledGraph, got {type(g).__name__}")
        validate_graph(g)
    if [g.id for g in graphs] != list(range(len(graphs))):
        graphs = [
            LabeledGraph(i, g.vertex_labels, g.edges) for i, g in enumerate(graphs)
        ]
    return graphs


def _default_interner(graphs: Sequence[LabeledGraph]) -> LabelInterner:
    top = 0
    for g in graphs:
        top = max([top, *g.vertex_labels, *(lbl for _, _, lbl in g.edges)])
    return LabelInterner(str(k) for k in range(top + 1))


class GraphSimilaritySearch(BaseEstimator):
    """Threshold similarity search over labeled graphs.

    Parameters mirror the index knobs: ``threshold`` is the default edit
    distance bound for queries, ``region_length`` the 2D cell side,
    ``block_size`` the compressed-block length, ``fanout`` the tree arity,
    ``verify_budget`` the exact-verifier expansion cap and ``n_threads``
    the verification parallelism.
    """

    def __init__(
        self,
        threshold: int = 1,
        region_length: int = DEFAULT_REGION_LENGTH,
        block_size: int = DEFAULT_BLOCK_SIZE,
        fanout: int = DEFAULT_FANOUT,
        origin: tuple[int, int] | None = None,
        verify_budget: int = DEFAULT_BUDGET,
        n_threads: int = 1,
    ):
        self.threshold = threshold
        self.region_length = region_length
        self.block_size = block_size
        self.fanout = fanout
        self.origin = origin
        self.verify_budget = verify_budget
        self.n_threads = n_threads

    def fit(self, X, y=None, interner: LabelInterner | None = None):
        """Index the database ``X`` (a sequence of LabeledGraphs).

        Graphs parsed by :func:`gedsearch.parse_dataset` share an
        interner; pass it along to keep label strings attached. Without
        one, labels are named by their integer value.
        """
        graphs = check_graph_list(X)
        if interner is None:
            interner = _default_interner(graphs)
        self.index_ = build_index(
            graphs,
            interner,
            region_length=self.region_length,
            block_size=self.block_size,
            fanout=self.fanout,
            origin=self.origin,
        )
        return self

    def candidates(self, h: LabeledGraph, threshold: int | None = None) -> list[int]:
        """Filtering phase only: ids surviving every index-side bound."""
        check_is_fitted(self, "index_")
        tau = self.threshold if threshold is None else threshold
        return search(self.index_, h, tau)

    def query(self, h: LabeledGraph, threshold: int | None = None) -> QueryResult:
        """Filter and verify one query graph."""
        check_is_fitted(self, "index_")
        tau = self.threshold if threshold is None else threshold
        return query(
            self.index_,
            h,
            tau,
            budget=self.verify_budget,
            threads=self.n_threads,
        )

    def predict(self, X) -> list[list[int]]:
        """Answer ids within the fitted threshold, one list per query."""
        check_is_fitted(self, "index_")
        return [list(self.query(h).answers) for h in X]

    def transform(self, X) -> np.ndarray:
        """Encode graphs as q-gram count vectors over the fitted
        vocabularies (degree-q-gram columns first, then label columns).
        Unindexed q-grams simply contribute nothing."""
        check_is_fitted(self, "index_")
        idx = self.index_
        nd, nl = len(idx.vocab_d), len(idx.vocab_l)
        out = np.zeros((len(X), nd + nl), dtype=np.int64)
        for row, g in enumerate(X):
            profile, _, _ = encode_profile(g, idx.vocab_d, idx.vocab_l)
            fd, fl = profile.degree_freq, profile.label_freq
            out[row, : len(fd)] = fd
            out[row, nd : nd + len(fl)] = fl
        return out

    def fit_transform(self, X, y=None, **fit_params) -> np.ndarray:
        return self.fit(X, y, **fit_params).transform(X)
