"""Threshold similarity search over labeled graphs under edit distance.

Build an index once, then answer "every database graph within edit
distance tau of this query" with a cascade of lower-bound filters over a
compressed q-gram tree, and exact verification of whatever survives.
"""

from .engine import (
    GraphIndex,
    IndexParams,
    QueryResult,
    build_index,
    query,
    search,
)
from .estimator import GraphSimilaritySearch, check_graph_list
from .filters import filter_cascade
from .ged import GedResult, GedStatus, ged_brute, ged_exact, verify
from .graphs import (
    DegreeQGram,
    LabeledGraph,
    LabelInterner,
    ParseError,
    QGramProfile,
    Vocabulary,
    build_vocabularies,
    encode_profile,
    load_dataset,
    parse_dataset,
    validate_graph,
)
from .storage import IndexFormatError, load_index, save_index

__version__ = "0.1.0"

__all__ = [
    "GraphIndex",
    "IndexParams",
    "QueryResult",
    "build_index",
    "query",
    "search",
    "GraphSimilaritySearch",
    "check_graph_list",
    "filter_cascade",
    "GedResult",
    "GedStatus",
    "ged_brute",
    "ged_exact",
    "verify",
    "DegreeQGram",
    "LabeledGraph",
    "LabelInterner",
    "ParseError",
    "QGramProfile",
    "Vocabulary",
    "build_vocabularies",
    "encode_profile",
    "load_dataset",
    "parse_dataset",
    "validate_graph",
    "IndexFormatError",
    "load_index",
    "save_index",
    "__version__",
]
