"""Shared fixtures: a tiny hand-checkable database and its vocabulary.

The three toy molecules and the cycle query are small enough that every
filter bound, edit distance and compressed bit pattern can be worked out
by hand. Expected values frozen into the tests were computed that way and
cross-checked against the brute-force oracle.
"""

from types import SimpleNamespace

import pytest

from gedsearch.engine import build_index
from gedsearch.graphs import DegreeQGram, LabelInterner, Vocabulary, parse_dataset

# g0: path C-A-A, g1: star with C center and three A leaves,
# g2: diamond over C,A,C,B (4 edges). All edges share one label.
TOY_DB = """\
t # 0
v 0 C
v 1 A
v 2 A
e 0 1 _
e 1 2 _
t # 1
v 0 C
v 1 A
v 2 A
v 3 A
e 0 1 _
e 0 2 _
e 0 3 _
t # 2
v 0 C
v 1 A
v 2 C
v 3 B
e 0 1 _
e 1 2 _
e 1 3 _
e 2 3 _
"""

# 4-cycle A-A-C-B; distances to the database graphs are 3, 4, 3.
TOY_QUERY = """\
t # 0
v 0 A
v 1 A
v 2 C
v 3 B
e 0 1 _
e 1 2 _
e 2 3 _
e 3 0 _
"""


def toy_vocabularies(interner: LabelInterner):
    """The hand-assigned q-gram id order all frozen expectations use.

    Degree side: (A,1) (A,2) (A,3) (B,2) (C,1) (C,2) (C,3), every incident
    edge carrying the shared edge label. Label side: edge label first,
    then A, B, C.
    """
    a = interner.intern("A")
    b = interner.intern("B")
    c = interner.intern("C")
    e = interner.intern("_")

    def dq(label, degree):
        return DegreeQGram(label, (e,) * degree, degree)

    vocab_d = Vocabulary.from_entries(
        [dq(a, 1), dq(a, 2), dq(a, 3), dq(b, 2), dq(c, 1), dq(c, 2), dq(c, 3)]
    )
    vocab_l = Vocabulary.from_entries([e, a, b, c])
    return vocab_d, vocab_l


@pytest.fixture(scope="session")
def toy():
    interner = LabelInterner()
    graphs = parse_dataset(TOY_DB, interner)
    (h,) = parse_dataset(TOY_QUERY, interner)
    vocab_d, vocab_l = toy_vocabularies(interner)
    return SimpleNamespace(
        interner=interner,
        graphs=graphs,
        g1=graphs[0],
        g2=graphs[1],
        g3=graphs[2],
        h=h,
        vocab_d=vocab_d,
        vocab_l=vocab_l,
    )


@pytest.fixture(scope="session")
def toy_files(tmp_path_factory):
    base = tmp_path_factory.mktemp("data")
    dataset = base / "toy.txt"
    dataset.write_text(TOY_DB)
    queries = base / "query.txt"
    queries.write_text(TOY_QUERY)
    return SimpleNamespace(dataset=dataset, queries=queries)


@pytest.fixture(scope="session")
def toy_index(toy):
    # fanout 2 and block size 4 give the exact tree shape and bit layout
    # the frozen succinct expectations were derived for; the default
    # origin (database minima) keeps all three graphs in one region
    return build_index(
        toy.graphs,
        toy.interner,
        vocabularies=(toy.vocab_d, toy.vocab_l),
        block_size=4,
        fanout=2,
    )
