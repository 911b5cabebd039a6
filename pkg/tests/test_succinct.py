"""Bit-level storage: gamma codes, rank bitmaps, hybrid sequences, flat trees."""

import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gedsearch.graphs import build_vocabularies, encode_profile
from gedsearch.qtree import TreeNode, build_tree
from gedsearch.succinct import (
    BitWriter,
    HybridSequence,
    RankBitVector,
    SuccinctTree,
    _BitData,
    _decode_gammas,
    encoding_costs,
    gamma_bit_length,
    gamma_decode_loop,
)

import synth


# -- independent oracles ----------------------------------------------------


def gamma_bits(value):
    """Gamma code of value as a 0/1 list in stream order.

    n zeros, then the binary digits of value most significant first, where
    n = floor(log2 value). Built from string formatting so it shares no
    arithmetic with the writer under test.
    """
    n = value.bit_length() - 1
    return [0] * n + [int(c) for c in format(value, "b")]


def pack_lsb(bits):
    out = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            out[i >> 3] |= 1 << (i & 7)
    return bytes(out)


def ones_prefix(bits):
    """rank oracle: ones strictly before each position, plus the total."""
    acc = [0]
    for b in bits:
        acc.append(acc[-1] + b)
    return acc


# -- gamma coding -----------------------------------------------------------


def test_gamma_writer_matches_string_oracle():
    values = [1, 2, 3, 4, 5, 7, 8, 15, 16, 100, 255, 256, 65535, 65536]
    writer = BitWriter()
    expected = []
    for v in values:
        writer.write_gamma(v)
        expected.extend(gamma_bits(v))
    assert writer.bit_length == len(expected)
    assert writer.getvalue() == pack_lsb(expected)


def test_gamma_bit_length_formula():
    for v in range(1, 2000):
        assert gamma_bit_length(v) == len(gamma_bits(v))
        assert gamma_bit_length(v) == 2 * (v.bit_length() - 1) + 1


@given(st.lists(st.integers(1, 1 << 20), min_size=1, max_size=50))
def test_gamma_round_trip(values):
    writer = BitWriter()
    for v in values:
        writer.write_gamma(v)
    bits = _BitData(writer.getvalue(), writer.bit_length)
    pos = 0
    decoded = []
    for _ in values:
        v, pos = gamma_decode_loop(bits, pos)
        decoded.append(v)
    assert decoded == values
    assert pos == writer.bit_length


def test_table_decoder_matches_loop_decoder():
    rng = random.Random(11)
    for trial in range(200):
        n = rng.randint(1, 60)
        values = [rng.choice([1, 2, 3, rng.randint(1, 500), rng.randint(1, 10**6)])
                  for _ in range(n)]
        writer = BitWriter()
        for v in values:
            writer.write_gamma(v)
        bits = _BitData(writer.getvalue(), writer.bit_length)
        assert _decode_gammas(bits, 0, n) == values


def test_table_decoder_falls_back_on_wide_codes():
    # a 33-bit code cannot start inside any 8-bit window
    values = [1] * 15 + [65536] + [1] * 3
    writer = BitWriter()
    for v in values:
        writer.write_gamma(v)
    bits = _BitData(writer.getvalue(), writer.bit_length)
    assert _decode_gammas(bits, 0, len(values)) == values


def test_bit_writer_plain_fields():
    writer = BitWriter()
    writer.write_bits(0b1011, 4)
    writer.write_bits(0, 3)
    writer.write_bit(1)
    writer.write_bits(0xABCD, 16)
    assert writer.bit_length == 24
    bits = _BitData(writer.getvalue(), 24)
    assert bits.read_field(0, 4) == 0b1011
    assert bits.read_field(4, 3) == 0
    assert bits.get(7) == 1
    assert bits.read_field(8, 16) == 0xABCD


# -- rank bitmaps -----------------------------------------------------------


def test_rank_small_example():
    v = RankBitVector.from_bits([1, 0, 1, 1])
    assert v.rank1(0) == 0
    assert v.rank1(1) == 1
    assert v.rank1(2) == 1
    assert v.rank1(4) == 3
    assert [v.get(i) for i in range(4)] == [1, 0, 1, 1]


@pytest.mark.parametrize("length", [1, 63, 64, 65, 200, 511, 512, 513, 1500])
def test_rank_matches_prefix_sums(length):
    rng = random.Random(length)
    bits = [rng.randint(0, 1) for _ in range(length)]
    v = RankBitVector.from_bits(bits)
    oracle = ones_prefix(bits)
    assert v.bit_length == length
    for pos in range(length + 1):
        assert v.rank1(pos) == oracle[pos]


def test_unpack_range_and_iter_ones():
    rng = random.Random(3)
    bits = [rng.randint(0, 1) for _ in range(700)]
    v = RankBitVector.from_bits(bits)
    for _ in range(300):
        start = rng.randint(0, 700)
        stop = rng.randint(start, 700)
        assert v.unpack_range(start, stop).tolist() == bits[start:stop]
        expect = [i for i in range(start, stop) if bits[i]]
        assert list(v.iter_ones(start, stop)) == expect


def test_rank_vector_equality():
    a = RankBitVector.from_bits([1, 0, 1])
    b = RankBitVector.from_bits([1, 0, 1])
    c = RankBitVector.from_bits([1, 0, 1, 0])
    assert a == b
    assert a != c
    assert a != "101"


# -- hybrid sequences -------------------------------------------------------


def random_values(rng, n):
    # mostly small counts with occasional spikes, like real frequency runs
    return [rng.choice([1, 1, 1, 2, 3, rng.randint(1, 40), rng.randint(1, 5000)])
            for _ in range(n)]


@pytest.mark.parametrize("block_size", [1, 4, 16, 37])
def test_hybrid_round_trip(block_size):
    rng = random.Random(block_size)
    for n in [1, 2, 5, 16, 37, 100, 301]:
        values = random_values(rng, n)
        seq = HybridSequence.encode(values, block_size)
        assert len(seq) == n
        assert list(seq) == values
        for j in range(n):
            assert seq.access(j) == values[j]
        for _ in range(40):
            start = rng.randint(0, n)
            stop = rng.randint(start, n)
            assert seq.decode_range(start, stop).tolist() == values[start:stop]


def test_hybrid_empty_sequence():
    seq = HybridSequence.encode([], 4)
    assert len(seq) == 0
    assert list(seq) == []
    assert seq.decode_range(0, 0).tolist() == []
    assert seq.data_bits == 0


def test_hybrid_ties_choose_fixed():
    # all-ones block: 4 fixed bits vs 4 gamma bits
    seq = HybridSequence.encode([1, 1, 1, 1], 4)
    assert seq.flag.get(0) == 1
    assert seq.words == [1]
    assert seq.data_bits == 4
    # 2*10 fixed vs 1+19 gamma, another exact tie
    seq = HybridSequence.encode([1, 1000], 2)
    assert seq.flag.get(0) == 1
    assert seq.words == [10]
    assert seq.data_bits == 20


def test_hybrid_prefers_gamma_when_smaller():
    # fixed needs 4*2 = 8 bits, gamma 3+1+1+1 = 6
    seq = HybridSequence.encode([3, 1, 1, 1], 4)
    assert seq.flag.get(0) == 0
    assert seq.words == []
    assert seq.data_bits == 6


def test_hybrid_mixed_blocks_and_offsets():
    values = [3, 1, 1, 1] + [1, 1, 1, 1] + [7, 7, 7, 7]
    seq = HybridSequence.encode(values, 4)
    # gamma 6 bits, fixed 4 bits, fixed 12 bits (3+3+3+3 = 12 ties to fixed)
    assert [seq.flag.get(k) for k in range(3)] == [0, 1, 1]
    assert seq.sb == [0, 6, 10]
    assert seq.words == [1, 3]
    assert list(seq) == values


def test_encoding_costs_agree_with_encoder():
    rng = random.Random(17)
    for _ in range(120):
        n = rng.randint(1, 200)
        b = rng.choice([1, 3, 4, 16, 64])
        values = random_values(rng, n)
        fixed, gamma, hybrid = encoding_costs(values, b)
        assert hybrid <= fixed
        assert hybrid <= gamma
        assert HybridSequence.encode(values, b).data_bits == hybrid


def test_hybrid_equality():
    a = HybridSequence.encode([3, 1, 4, 1], 2)
    b = HybridSequence.encode([3, 1, 4, 1], 2)
    c = HybridSequence.encode([3, 1, 4, 2], 2)
    assert a == b
    assert a != c
    assert a != [3, 1, 4, 1]


# -- flattened trees: frozen values for the worked database -----------------

BD_EXPECTED = (
    [1, 1, 1, 1, 1, 1, 1]
    + [1, 1, 0, 0, 1, 0, 1]
    + [1, 1, 0, 0, 1]
    + [1, 0, 0, 0, 0, 0, 1]
    + [0, 0, 1, 1, 1, 1]
)
PSI_D_EXPECTED = [3, 1, 1, 1, 1, 1, 1, 3, 1, 1, 1, 1, 1, 1, 3, 1, 1, 1, 1, 1]
BL_EXPECTED = (
    [1, 1, 1, 1]
    + [1, 1, 0, 1]
    + [1, 1, 0, 1]
    + [1, 1, 0, 1]
    + [1, 1, 1, 1]
)
PSI_L_EXPECTED = [4, 3, 1, 2, 3, 3, 1, 2, 2, 1, 3, 3, 1, 4, 1, 1, 2]


@pytest.fixture(scope="module")
def toy_tree(toy_index):
    (tree,) = toy_index.regions.values()
    return tree


def test_toy_tree_layout(toy_tree):
    assert len(toy_tree) == 5
    assert [rec.graph_id for rec in toy_tree.records] == [-1, -1, 0, 1, 2]
    assert toy_tree.records[0].children == (1, 4)
    assert toy_tree.records[1].children == (2, 3)
    assert all(rec.children == () for rec in toy_tree.records[2:])


def test_toy_bitmaps_frozen(toy_tree):
    assert toy_tree.bd.bit_length == 32
    assert toy_tree.bd.unpack_range(0, 32).tolist() == BD_EXPECTED
    assert toy_tree.bl.bit_length == 20
    assert toy_tree.bl.unpack_range(0, 20).tolist() == BL_EXPECTED


def test_toy_psi_frozen(toy_tree):
    assert list(toy_tree.psi_d) == PSI_D_EXPECTED
    assert list(toy_tree.psi_l) == PSI_L_EXPECTED


def test_toy_slice_boundaries(toy_tree):
    d_bounds = [toy_tree.slice_bounds(n, "d") for n in range(5)]
    assert d_bounds == [(0, 6), (7, 13), (14, 18), (19, 25), (26, 31)]
    l_bounds = [toy_tree.slice_bounds(n, "l") for n in range(5)]
    assert l_bounds == [(0, 3), (4, 7), (8, 11), (12, 15), (16, 19)]


def test_toy_rank_then_access(toy_tree):
    # the two-step lookup: position 19 opens the second leaf's run
    assert toy_tree.bd.rank1(19) == 14
    assert toy_tree.psi_d.access(14) == 3
    assert toy_tree.f_access(3, "d", 0) == 3
    assert toy_tree.f_access(1, "d", 2) == 0


def test_toy_block_coding_details(toy_tree):
    # block size 4: [3,1,1,1] and [1,1,1,3] go gamma (6 bits), the all-ones
    # block ties and stays fixed at width 1
    psi = toy_tree.psi_d
    assert psi.block_size == 4
    assert psi.sb == [0, 6, 12, 16, 22]
    assert [psi.flag.get(k) for k in range(5)] == [0, 0, 1, 0, 1]
    assert psi.words == [1, 1]
    assert psi.sb[3] == 16
    assert psi.flag.get(3) == 0


def test_toy_full_reconstruction(toy, toy_tree):
    profiles = {
        g.id: encode_profile(g, toy.vocab_d, toy.vocab_l)[0] for g in toy.graphs
    }
    for node, rec in enumerate(toy_tree.records):
        if rec.graph_id < 0:
            continue
        p = profiles[rec.graph_id]
        assert (rec.n_vertices, rec.n_edges) == (p.n_vertices, p.n_edges)
        for which, vec in (("d", p.degree_freq), ("l", p.label_freq)):
            l, r = toy_tree.slice_bounds(node, which)
            assert r - l + 1 == vec.size
            got = [toy_tree.f_access(node, which, i) for i in range(vec.size)]
            assert got == vec.tolist()
            expect_items = [(i, int(v)) for i, v in enumerate(vec) if v]
            assert toy_tree.nonzero_items(node, which) == expect_items


# -- flattened trees: random reconstruction ---------------------------------


def plain_preorder(root):
    out = []

    def walk(node):
        out.append(node)
        for c in node.children:
            walk(c)

    walk(root)
    return out


@pytest.mark.parametrize("block_size,fanout", [(1, 2), (4, 3), (16, 8)])
def test_random_tree_reconstruction(block_size, fanout):
    rng = random.Random(block_size * 100 + fanout)
    from gedsearch.graphs import LabelInterner

    interner = LabelInterner()
    graphs = synth.random_small_database(40, rng, interner)
    vocab_d, vocab_l = build_vocabularies(graphs, interner)
    leaves = [
        TreeNode(encode_profile(g, vocab_d, vocab_l)[0], graph_id=g.id)
        for g in graphs
    ]
    root = build_tree(leaves, fanout)
    tree = SuccinctTree.from_tree(root, block_size)
    nodes = plain_preorder(root)
    assert len(tree) == len(nodes)
    for idx, node in enumerate(nodes):
        rec = tree.records[idx]
        assert rec.graph_id == (-1 if node.graph_id is None else node.graph_id)
        assert rec.n_vertices == node.profile.n_vertices
        assert rec.n_edges == node.profile.n_edges
        assert len(rec.children) == len(node.children)
        for which, vec in (
            ("d", node.profile.degree_freq),
            ("l", node.profile.label_freq),
        ):
            l, r = tree.slice_bounds(idx, which)
            assert r - l + 1 == vec.size
            got = [tree.f_access(idx, which, i) for i in range(vec.size)]
            assert got == vec.tolist()
            items = tree.nonzero_items(idx, which)
            assert items == [(i, int(v)) for i, v in enumerate(vec) if v]


def test_child_pointers_match_preorder(toy_tree):
    # preorder: every child index exceeds its parent, slices are contiguous
    seen_d = 0
    seen_l = 0
    for idx, rec in enumerate(toy_tree.records):
        assert rec.l_d == seen_d and rec.l_l == seen_l
        seen_d = rec.r_d + 1
        seen_l = rec.r_l + 1
        for c in rec.children:
            assert c > idx
    assert seen_d == toy_tree.bd.bit_length
    assert seen_l == toy_tree.bl.bit_length


# -- size accounting --------------------------------------------------------


def test_size_report_sections(toy_tree):
    report = toy_tree.size_report()
    assert set(report) == {"node_scalars", "degree_side", "label_side"}
    assert all(bits > 0 for bits in report.values())
    # bitmap plus coded values must undercut 32-bit entries on both sides
    assert report["degree_side"] < 32 * toy_tree.bd.bit_length
    assert report["label_side"] < 32 * toy_tree.bl.bit_length
    assert sum(report.values()) < toy_tree.plain_size_bits()


def test_plain_size_formula(toy_tree):
    n = len(toy_tree.records)
    n_children = sum(len(r.children) for r in toy_tree.records)
    entries = toy_tree.bd.bit_length + toy_tree.bl.bit_length
    expect = 32 * entries + 32 * 3 * n + 32 * (n_children + n)
    assert toy_tree.plain_size_bits() == expect
