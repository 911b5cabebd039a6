"""Binary index file format.

Layout: magic "MSQX", a little-endian u16 format version, then six
sections in fixed order (header, labels, degree vocabulary, label
vocabulary, graphs, regions). Every section is framed as

    u64 payload length | payload | u32 CRC32 of the payload

so truncation and corruption are caught before anything is interpreted.
All integers are little-endian; bit vectors are stored byte-padded with
their exact bit length alongside. Rank directories are rebuilt on load.

Rebuilding an index from the same inputs writes byte-identical files:
section order, region order (sorted by cell id) and every array order are
deterministic functions of the input.
"""

from __future__ import annotations

import struct
import zlib
from typing import BinaryIO

from .engine import GraphIndex, IndexParams
from .graphs import DegreeQGram, LabeledGraph, LabelInterner, Vocabulary
from .succinct import HybridSequence, RankBitVector, SuccinctTree, _NodeRecord

__all__ = ["MAGIC", "FORMAT_VERSION", "IndexFormatError", "save_index", "load_index"]

MAGIC = b"MSQX"
FORMAT_VERSION = 1

_INTERNAL = 0xFFFFFFFF  # graph-id sentinel for internal tree nodes


class IndexFormatError(ValueError):
    """Malformed, truncated or corrupt index file."""


class _Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def u8(self, v: int):
        self._parts.append(struct.pack("<B", v))

    def u32(self, v: int):
        self._parts.append(struct.pack("<I", v))

    def i64(self, v: int):
        self._parts.append(struct.pack("<q", v))

    def u64(self, v: int):
        self._parts.append(struct.pack("<Q", v))

    def raw(self, b: bytes):
        self._parts.append(b)

    def u32_array(self, values):
        self.u64(len(values))
        self._parts.append(struct.pack(f"<{len(values)}I", *values))

    def bits(self, data: bytes, bit_length: int):
        self.u64(bit_length)
        self.raw(data)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class _Reader:
    def __init__(self, data: bytes, what: str):
        self._data = data
        self._pos = 0
        self._what = what

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise IndexFormatError(f"{self._what}: truncated")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self._take(8))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def u32_array(self) -> tuple[int, ...]:
        n = self.u64()
        return struct.unpack(f"<{n}I", self._take(4 * n))

    def bits(self) -> tuple[bytes, int]:
        bit_length = self.u64()
        return self._take((bit_length + 7) // 8), bit_length

    def done(self) -> None:
        if self._pos != len(self._data):
            raise IndexFormatError(f"{self._what}: trailing bytes")


def _write_section(fh: BinaryIO, payload: bytes) -> None:
    fh.write(struct.pack("<Q", len(payload)))
    fh.write(payload)
    fh.write(struct.pack("<I", zlib.crc32(payload)))


def _read_section(fh: BinaryIO, what: str) -> bytes:
    head = fh.read(8)
    if len(head) != 8:
        raise IndexFormatError(f"{what}: missing section header")
    (n,) = struct.unpack("<Q", head)
    # a corrupt length field must not drive a giant read
    pos = fh.tell()
    remaining = fh.seek(0, 2) - pos
    fh.seek(pos)
    if n > remaining:
        raise IndexFormatError(f"{what}: truncated section")
    payload = fh.read(n)
    tail = fh.read(4)
    if len(payload) != n or len(tail) != 4:
        raise IndexFormatError(f"{what}: truncated section")
    (crc,) = struct.unpack("<I", tail)
    if zlib.crc32(payload) != crc:
        raise IndexFormatError(f"{what}: checksum mismatch")
    return payload


# -- section payloads -------------------------------------------------------


def _pack_sequence(w: _Writer, seq: HybridSequence) -> None:
    w.u64(seq.length)
    w.bits(seq.data, seq.data_bits)
    w.u32_array(seq.sb)
    w.bits(seq.flag.data, seq.flag.bit_length)
    w.u64(len(seq.words))
    for width in seq.words:
        w.u8(width)


def _unpack_sequence(r: _Reader, block_size: int) -> HybridSequence:
    length = r.u64()
    data, data_bits = r.bits()
    sb = list(r.u32_array())
    flag_data, flag_bits = r.bits()
    words = [r.u8() for _ in range(r.u64())]
    return HybridSequence(
        length,
        block_size,
        data,
        data_bits,
        sb,
        RankBitVector(flag_data, flag_bits),
        words,
    )


def _pack_tree(tree: SuccinctTree) -> bytes:
    w = _Writer()
    w.u64(len(tree.records))
    for rec in tree.records:
        gid = _INTERNAL if rec.graph_id < 0 else rec.graph_id
        # inclusive r is stored as exclusive end so empty slices stay unsigned
        w.u32(gid)
        w.u32(rec.n_vertices)
        w.u32(rec.n_edges)
        w.u32(rec.l_d)
        w.u32(rec.r_d + 1)
        w.u32(rec.l_l)
        w.u32(rec.r_l + 1)
        w.u32_array(rec.children)
    w.bits(tree.bd.data, tree.bd.bit_length)
    w.bits(tree.bl.data, tree.bl.bit_length)
    _pack_sequence(w, tree.psi_d)
    _pack_sequence(w, tree.psi_l)
    return w.getvalue()


def _unpack_tree(blob: bytes, block_size: int) -> SuccinctTree:
    r = _Reader(blob, "region tree")
    records = []
    for _ in range(r.u64()):
        gid = r.u32()
        n_v, n_e = r.u32(), r.u32()
        l_d, end_d = r.u32(), r.u32()
        l_l, end_l = r.u32(), r.u32()
        children = r.u32_array()
        records.append(
            _NodeRecord(
                -1 if gid == _INTERNAL else gid,
                n_v,
                n_e,
                l_d,
                end_d - 1,
                l_l,
                end_l - 1,
                children,
            )
        )
    bd = RankBitVector(*r.bits())
    bl = RankBitVector(*r.bits())
    psi_d = _unpack_sequence(r, block_size)
    psi_l = _unpack_sequence(r, block_size)
    r.done()
    return SuccinctTree(records, bd, bl, psi_d, psi_l)


def save_index(index: GraphIndex, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))

        w = _Writer()
        p = index.params
        w.i64(p.x0)
        w.i64(p.y0)
        w.u32(p.region_length)
        w.u32(p.block_size)
        w.u32(p.fanout)
        w.u64(index.n_graphs)
        w.u64(len(index.vocab_d))
        w.u64(len(index.vocab_l))
        _write_section(fh, w.getvalue())

        w = _Writer()
        strings = index.interner.strings
        w.u64(len(strings))
        for s in strings:
            raw = s.encode("utf-8")
            w.u32(len(raw))
            w.raw(raw)
        _write_section(fh, w.getvalue())

        w = _Writer()
        w.u64(len(index.vocab_d))
        for q in index.vocab_d.entries:
            w.u32(q.vertex_label)
            w.u32_array(q.edge_labels)
        _write_section(fh, w.getvalue())

        w = _Writer()
        w.u32_array([q for q in index.vocab_l.entries])
        _write_section(fh, w.getvalue())

        w = _Writer()
        blobs = []
        for g in index.graphs:
            gw = _Writer()
            gw.u32(g.n_vertices)
            gw.u32(g.n_edges)
            gw.u32_array(g.vertex_labels)
            for u, v, lbl in g.edges:
                gw.u32(u)
                gw.u32(v)
                gw.u32(lbl)
            blobs.append(gw.getvalue())
        w.u64(len(blobs))
        offset = 0
        for b in blobs:  # id -> offset directory, then the payloads
            w.u64(offset)
            offset += len(b)
        for b in blobs:
            w.raw(b)
        _write_section(fh, w.getvalue())

        w = _Writer()
        w.u64(len(index.regions))
        for (i, j) in sorted(index.regions):
            blob = _pack_tree(index.regions[(i, j)])
            w.i64(i)
            w.i64(j)
            w.u64(len(blob))
            w.raw(blob)
        _write_section(fh, w.getvalue())


def load_index(path) -> GraphIndex:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise IndexFormatError(f"bad magic {magic!r}")
        ver = fh.read(2)
        if len(ver) != 2 or struct.unpack("<H", ver)[0] != FORMAT_VERSION:
            raise IndexFormatError("unsupported format version")

        r = _Reader(_read_section(fh, "header"), "header")
        x0, y0 = r.i64(), r.i64()
        region_length, block_size, fanout = r.u32(), r.u32(), r.u32()
        n_graphs = r.u64()
        n_vocab_d, n_vocab_l = r.u64(), r.u64()
        r.done()
        params = IndexParams(x0, y0, region_length, block_size, fanout)

        r = _Reader(_read_section(fh, "labels"), "labels")
        labels = []
        for _ in range(r.u64()):
            n = r.u32()
            labels.append(r._take(n).decode("utf-8"))
        r.done()
        interner = LabelInterner(labels)

        r = _Reader(_read_section(fh, "degree vocabulary"), "degree vocabulary")
        entries = []
        for _ in range(r.u64()):
            vlabel = r.u32()
            elabels = r.u32_array()
            entries.append(DegreeQGram(vlabel, elabels, len(elabels)))
        r.done()
        if len(entries) != n_vocab_d:
            raise IndexFormatError("degree vocabulary size mismatch")
        vocab_d = Vocabulary.from_entries(entries)

        r = _Reader(_read_section(fh, "label vocabulary"), "label vocabulary")
        vocab_l = Vocabulary.from_entries(list(r.u32_array()))
        r.done()
        if len(vocab_l) != n_vocab_l:
            raise IndexFormatError("label vocabulary size mismatch")

        r = _Reader(_read_section(fh, "graphs"), "graphs")
        count = r.u64()
        if count != n_graphs:
            raise IndexFormatError("graph count mismatch")
        offsets = [r.u64() for _ in range(count)]
        graphs = []
        for gid in range(count):
            n_v = r.u32()
            n_e = r.u32()
            vlabels = r.u32_array()
            if len(vlabels) != n_v:
                raise IndexFormatError(f"graph {gid}: vertex count mismatch")
            edges = tuple((r.u32(), r.u32(), r.u32()) for _ in range(n_e))
            graphs.append(LabeledGraph(gid, vlabels, edges))
        r.done()
        del offsets  # directory enables random access; bulk load reads all

        r = _Reader(_read_section(fh, "regions"), "regions")
        regions = {}
        for _ in range(r.u64()):
            i, j = r.i64(), r.i64()
            blob = r._take(r.u64())
            regions[(i, j)] = _unpack_tree(blob, block_size)
        r.done()

        if fh.read(1):
            raise IndexFormatError("trailing bytes after regions section")

    return GraphIndex(params, interner, vocab_d, vocab_l, tuple(graphs), regions)
