"""Labeled graphs, q-gram extraction, and vocabulary encoding.

Graphs are simple undirected labeled graphs: every vertex carries a label,
every edge carries a label, no self loops, no parallel edges. Labels are
interned to small integers at parse time; everything downstream works on
the integer ids and only the :class:`LabelInterner` remembers the strings.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "LabelInterner",
    "LabeledGraph",
    "DegreeQGram",
    "QGramProfile",
    "Vocabulary",
    "ParseError",
    "parse_dataset",
    "load_dataset",
    "validate_graph",
    "degree_qgrams",
    "label_qgrams",
    "degree_sequence",
    "build_vocabularies",
    "encode_profile",
]

DEFAULT_EDGE_LABEL = "_"


class ParseError(ValueError):
    """Raised on malformed dataset text; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class LabelInterner:
    """Bidirectional string<->int label table.

    Ids are assigned in first-seen order, so parsing the same file twice
    yields the same ids. Query-side labels unknown to an index simply get
    fresh ids past the vocabulary and never match anything, which is the
    intended behavior.
    """

    def __init__(self, labels: Iterable[str] = ()):
        self._strings: list[str] = []
        self._ids: dict[str, int] = {}
        for s in labels:
            self.intern(s)

    def intern(self, label: str) -> int:
        lid = self._ids.get(label)
        if lid is None:
            lid = len(self._strings)
            self._ids[label] = lid
            self._strings.append(label)
        return lid

    def string(self, lid: int) -> str:
        return self._strings[lid]

    @property
    def strings(self) -> tuple[str, ...]:
        return tuple(self._strings)

    def __len__(self) -> int:
        return len(self._strings)

    def __contains__(self, label: str) -> bool:
        return label in self._ids


@dataclass(frozen=True)
class LabeledGraph:
    """Immutable labeled graph.

    ``vertex_labels[i]`` is the label id of vertex ``i``; ``edges`` holds
    ``(u, v, label)`` triples with ``u < v``. Derived views (adjacency,
    degrees, label counters) are cached on first use.
    """

    id: int
    vertex_labels: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def _edge_map(self) -> dict[tuple[int, int], int]:
        return {(u, v): lbl for u, v, lbl in self.edges}

    def edge_label(self, u: int, v: int) -> int | None:
        """Label of edge {u, v}, or None if the edge is absent."""
        if u > v:
            u, v = v, u
        return self._edge_map.get((u, v))

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per-vertex tuple of (neighbor, edge label) pairs."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.vertex_labels]
        for u, v, lbl in self.edges:
            adj[u].append((v, lbl))
            adj[v].append((u, lbl))
        return tuple(tuple(a) for a in adj)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.adjacency)

    @cached_property
    def vertex_label_counts(self) -> Counter:
        return Counter(self.vertex_labels)

    @cached_property
    def edge_label_counts(self) -> Counter:
        return Counter(lbl for _, _, lbl in self.edges)


def validate_graph(g: LabeledGraph) -> LabeledGraph:
    """Check structural invariants; returns the graph for chaining.

    Rejects self loops, parallel edges, out-of-range endpoints and
    unnormalized (u >= v) edge triples.
    """
    n = g.n_vertices
    seen: set[tuple[int, int]] = set()
    for u, v, _ in g.edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"graph {g.id}: edge ({u},{v}) out of range")
        if u == v:
            raise ValueError(f"graph {g.id}: self loop at vertex {u}")
        if u > v:
            raise ValueError(f"graph {g.id}: edge ({u},{v}) not normalized")
        if (u, v) in seen:
            raise ValueError(f"graph {g.id}: duplicate edge ({u},{v})")
        seen.add((u, v))
    return g


# ---------------------------------------------------------------------------
# dataset text format
#
#   t # <id>        starts a graph
#   v <i> <label>   vertex i (0-based, declared in order)
#   e <u> <v> [lbl] edge; label defaults to "_"
#
# "#" alone starts a comment line; blank lines are skipped.


def parse_dataset(
    text: str | Iterable[str],
    interner: LabelInterner | None = None,
) -> list[LabeledGraph]:
    """Parse transaction-format text into graphs.

    Graphs are numbered by position, starting at 0; the id written after
    ``t #`` is ignored. Pass the interner of an existing index to keep
    label ids aligned when parsing query files.
    """
    if interner is None:
        interner = LabelInterner()
    lines = text.splitlines() if isinstance(text, str) else text

    graphs: list[LabeledGraph] = []
    labels: list[int] = []
    edges: list[tuple[int, int, int]] = []
    open_graph = False

    def close(lineno: int) -> None:
        nonlocal open_graph
        if not open_graph:
            return
        g = LabeledGraph(len(graphs), tuple(labels), tuple(edges))
        try:
            validate_graph(g)
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        graphs.append(g)
        open_graph = False

    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "t":
            close(lineno)
            labels, edges = [], []
            open_graph = True
        elif kind == "v":
            if not open_graph:
                raise ParseError(lineno, "vertex outside of a graph record")
            if len(tok) != 3:
                raise ParseError(lineno, f"expected 'v <i> <label>', got {line!r}")
            try:
                idx = int(tok[1])
            except ValueError:
                raise ParseError(lineno, f"bad vertex index {tok[1]!r}") from None
            if idx != len(labels):
                raise ParseError(
                    lineno, f"vertex index {idx} out of order (expected {len(labels)})"
                )
            labels.append(interner.intern(tok[2]))
        elif kind == "e":
            if not open_graph:
                raise ParseError(lineno, "edge outside of a graph record")
            if len(tok) not in (3, 4):
                raise ParseError(lineno, f"expected 'e <u> <v> [label]', got {line!r}")
            try:
                u, v = int(tok[1]), int(tok[2])
            except ValueError:
                raise ParseError(lineno, f"bad edge endpoints in {line!r}") from None
            if not (0 <= u < len(labels) and 0 <= v < len(labels)):
                raise ParseError(lineno, f"edge ({u},{v}) references undeclared vertex")
            if u == v:
                raise ParseError(lineno, f"self loop at vertex {u}")
            if u > v:
                u, v = v, u
            lbl = interner.intern(tok[3] if len(tok) == 4 else DEFAULT_EDGE_LABEL)
            if any(e[0] == u and e[1] == v for e in edges):
                raise ParseError(lineno, f"duplicate edge ({u},{v})")
            edges.append((u, v, lbl))
        else:
            raise ParseError(lineno, f"unknown record type {kind!r}")
    close(lineno + 1)
    return graphs


def load_dataset(path, interner: LabelInterner | None = None) -> list[LabeledGraph]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh, interner)


# ---------------------------------------------------------------------------
# q-grams


@dataclass(frozen=True, order=True)
class DegreeQGram:
    """Star-shaped q-gram of one vertex: its label, the multiset of labels on
    its incident edges (sorted tuple), and its degree."""

    vertex_label: int
    edge_labels: tuple[int, ...]
    degree: int

    def __post_init__(self):
        assert self.degree == len(self.edge_labels)


def degree_qgrams(g: LabeledGraph) -> tuple[DegreeQGram, ...]:
    """One q-gram per vertex, in vertex order (a multiset, not a set)."""
    out = []
    for v, nbrs in enumerate(g.adjacency):
        elabels = tuple(sorted(lbl for _, lbl in nbrs))
        out.append(DegreeQGram(g.vertex_labels[v], elabels, len(elabels)))
    return tuple(out)


def label_qgrams(g: LabeledGraph) -> tuple[int, ...]:
    """Multiset union of vertex labels and edge labels, as a sorted tuple."""
    return tuple(sorted(list(g.vertex_labels) + [lbl for _, _, lbl in g.edges]))


def degree_sequence(g: LabeledGraph) -> tuple[int, ...]:
    """Vertex degrees in non-increasing order."""
    return tuple(sorted(g.degrees, reverse=True))


# ---------------------------------------------------------------------------
# vocabulary and frequency vectors


@dataclass(frozen=True)
class Vocabulary:
    """Q-gram ids ordered by descending total frequency in the database.

    Ties break on a canonical serialization of the q-gram so rebuilds are
    byte-identical. ``entries[i]`` is the q-gram with id ``i``.
    """

    entries: tuple
    index: dict = field(repr=False)

    @classmethod
    def from_counts(cls, counts: Counter, canon_key) -> "Vocabulary":
        order = sorted(counts, key=lambda q: (-counts[q], canon_key(q)))
        return cls(tuple(order), {q: i for i, q in enumerate(order)})

    @classmethod
    def from_entries(cls, entries: Sequence) -> "Vocabulary":
        """Explicit id assignment (entry order = id order)."""
        entries = tuple(entries)
        return cls(entries, {q: i for i, q in enumerate(entries)})

    def id_of(self, qgram) -> int | None:
        return self.index.get(qgram)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator:
        return iter(self.entries)


def build_vocabularies(
    graphs: Sequence[LabeledGraph], interner: LabelInterner
) -> tuple[Vocabulary, Vocabulary]:
    """Degree-q-gram and label-q-gram vocabularies for a database.

    The canonical tie-break key serializes q-grams through their label
    strings, so the ordering does not depend on interner id assignment.
    """
    d_counts: Counter = Counter()
    l_counts: Counter = Counter()
    for g in graphs:
        d_counts.update(degree_qgrams(g))
        l_counts.update(label_qgrams(g))

    def d_key(q: DegreeQGram):
        # edge tuples are sorted by label id; spell them sorted by string
        # so the tie-break is a pure function of the label strings
        return (
            interner.string(q.vertex_label),
            tuple(sorted(interner.string(e) for e in q.edge_labels)),
            q.degree,
        )

    vocab_d = Vocabulary.from_counts(d_counts, d_key)
    vocab_l = Vocabulary.from_counts(l_counts, interner.string)
    return vocab_d, vocab_l


@dataclass(frozen=True, eq=False)
class QGramProfile:
    """Frequency-vector summary of a graph (or of a tree node).

    ``degree_freq[i]`` counts occurrences of degree-q-gram id ``i``,
    ``label_freq[i]`` of label-q-gram id ``i``; both are int64 arrays
    trimmed of trailing zeros. ``n_vertices``/``n_edges`` are exact for
    a graph and minima over descendants for an internal tree node.
    """

    degree_freq: np.ndarray
    label_freq: np.ndarray
    n_vertices: int
    n_edges: int

    def __post_init__(self):
        # accept any sequence; store trimmed int64 arrays
        for name in ("degree_freq", "label_freq"):
            vec = np.asarray(getattr(self, name), dtype=np.int64)
            object.__setattr__(self, name, np.trim_zeros(vec, "b"))

    def __eq__(self, other):
        if not isinstance(other, QGramProfile):
            return NotImplemented
        return (
            self.n_vertices == other.n_vertices
            and self.n_edges == other.n_edges
            and np.array_equal(self.degree_freq, other.degree_freq)
            and np.array_equal(self.label_freq, other.label_freq)
        )


def _freq_vector(ids: Sequence[int]) -> np.ndarray:
    if not ids:
        return np.zeros(0, dtype=np.int64)
    return np.bincount(np.asarray(ids, dtype=np.int64))


def encode_profile(
    g: LabeledGraph, vocab_d: Vocabulary, vocab_l: Vocabulary
) -> tuple[QGramProfile, int, int]:
    """Encode a graph against fixed vocabularies.

    Returns (profile, unmatched_degree, unmatched_label); the unmatched
    tallies count q-grams absent from the vocabulary, so a query from
    outside the indexed database still encodes cleanly.
    """
    d_ids, unmatched_d = [], 0
    for q in degree_qgrams(g):
        i = vocab_d.id_of(q)
        if i is None:
            unmatched_d += 1
        else:
            d_ids.append(i)
    l_ids, unmatched_l = [], 0
    for q in label_qgrams(g):
        i = vocab_l.id_of(q)
        if i is None:
            unmatched_l += 1
        else:
            l_ids.append(i)
    profile = QGramProfile(
        _freq_vector(d_ids), _freq_vector(l_ids), g.n_vertices, g.n_edges
    )
    return profile, unmatched_d, unmatched_l
