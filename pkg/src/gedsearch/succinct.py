"""Succinct storage for the q-gram tree.

Per-node frequency vectors are split into a presence bitmap and the
sequence of nonzero values. All bitmaps (and all value sequences) of one
tree are concatenated in depth-first preorder, each node keeping only its
[l, r] slice boundaries:

  * ``B``    one bit per vector position, 1 where the frequency is nonzero,
             with O(1) rank support;
  * ``Psi``  the nonzero values, coded per block of ``b`` entries either
             fixed-width or Elias gamma, whichever is smaller (ties go to
             fixed); per-block bit offsets ``SB``, a ``flag`` bitvector
             marking fixed blocks, and per-fixed-block widths ``words``
             make any entry decodable from the block start.

Bits are packed LSB-first within bytes; streams read left to right in
entry order. A frequency is recovered as 0 if its B bit is clear, else
Psi[rank1(B, position)].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .qtree import TreeNode

__all__ = [
    "BitWriter",
    "RankBitVector",
    "gamma_bit_length",
    "gamma_decode_loop",
    "HybridSequence",
    "encoding_costs",
    "SuccinctTree",
]

SUPERBLOCK_BITS = 512
BLOCK_BITS = 64

_LOW_MASKS = tuple((1 << w) - 1 for w in range(65))


class BitWriter:
    """Append-only bit stream, LSB-first within each byte."""

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._n = 0  # bits sitting in _acc

    def write_bit(self, bit: int) -> None:
        self.write_bits(bit & 1, 1)

    def write_bits(self, value: int, width: int) -> None:
        """Write ``width`` bits of ``value``, lowest bit first."""
        self._acc |= (value & ((1 << width) - 1)) << self._n
        self._n += width
        while self._n >= 8:
            self._buf.append(self._acc & 0xFF)
            self._acc >>= 8
            self._n -= 8

    def write_gamma(self, value: int) -> None:
        """Elias gamma: n zeros, then the (n+1)-bit binary of value,
        highest bit (always 1) first. Requires value >= 1."""
        assert value >= 1
        n = value.bit_length() - 1
        rev = 0
        v = value
        for _ in range(n):  # low n bits of value, reversed
            rev = rev << 1 | (v & 1)
            v >>= 1
        # LSB-first field: n zeros, the leading 1, then the payload MSB-first
        self.write_bits(1 << n | rev << (n + 1), 2 * n + 1)

    @property
    def bit_length(self) -> int:
        return len(self._buf) * 8 + self._n

    def getvalue(self) -> bytes:
        out = bytes(self._buf)
        if self._n:
            out += bytes([self._acc])
        return out


def gamma_bit_length(value: int) -> int:
    assert value >= 1
    return 2 * (value.bit_length() - 1) + 1


class _BitData:
    """Random-access view over packed bits (shared by readers below)."""

    def __init__(self, data: bytes, bit_length: int):
        assert len(data) >= (bit_length + 7) // 8
        self.data = data
        self.bit_length = bit_length

    def get(self, pos: int) -> int:
        return self.data[pos >> 3] >> (pos & 7) & 1

    def peek8(self, pos: int) -> int:
        """8 bits starting at pos, zero-padded past the end."""
        byte = pos >> 3
        chunk = self.data[byte : byte + 2]
        window = int.from_bytes(chunk, "little") >> (pos & 7)
        return window & 0xFF

    def read_field(self, pos: int, width: int) -> int:
        assert pos + width <= self.bit_length
        first = pos >> 3
        last = (pos + width + 7) >> 3
        word = int.from_bytes(self.data[first:last], "little")
        return word >> (pos & 7) & _LOW_MASKS[width]


def gamma_decode_loop(bits: _BitData, pos: int) -> tuple[int, int]:
    """Reference decoder: one value starting at bit ``pos``.

    Returns (value, next position). Pure bit loop, used directly at the
    stream tail and as the oracle for the table decoder.
    """
    zeros = 0
    while bits.get(pos) == 0:
        zeros += 1
        pos += 1
        assert pos < bits.bit_length, "truncated gamma code"
    pos += 1
    value = 1
    for _ in range(zeros):
        value = value << 1 | bits.get(pos)
        pos += 1
    return value, pos


def _build_gamma_table():
    """For every byte (read LSB-first): the complete gamma codes inside it.

    table[b] = (values, code lengths). Codes that would spill past the
    8-bit window are not decoded; a leading code longer than the window
    yields an empty entry and the caller falls back to the bit loop.
    """
    table = []
    for byte in range(256):
        values: list[int] = []
        lengths: list[int] = []
        pos = 0
        while pos < 8:
            zeros = 0
            p = pos
            while p < 8 and (byte >> p & 1) == 0:
                zeros += 1
                p += 1
            if p + 1 + zeros > 8:
                break  # code incomplete within the window
            p += 1
            value = 1
            for _ in range(zeros):
                value = value << 1 | byte >> p & 1
                p += 1
            values.append(value)
            lengths.append(p - pos)
            pos = p
        table.append((tuple(values), tuple(lengths)))
    return tuple(table)


GAMMA_TABLE = _build_gamma_table()


def _decode_gammas(bits: _BitData, pos: int, count: int) -> list[int]:
    """Decode ``count`` consecutive gamma codes starting at bit ``pos``.

    Table-driven eight bits at a time, falling back to the bit loop for
    codes that do not fit the window.
    """
    out: list[int] = []
    table = GAMMA_TABLE
    while count:
        values, lengths = table[bits.peek8(pos)]
        if not values:
            value, pos = gamma_decode_loop(bits, pos)
            out.append(value)
            count -= 1
            continue
        for value, length in zip(values, lengths):
            out.append(value)
            pos += length
            count -= 1
            if not count:
                break
    return out


class RankBitVector:
    """Static bit vector with constant-time rank.

    Two-level directory: absolute ranks every 512 bits, byte-sized deltas
    every 64-bit word within the superblock. ``rank1(pos)`` counts ones
    strictly before ``pos`` (exclusive prefix convention).
    """

    def __init__(self, data: bytes, bit_length: int):
        assert len(data) == (bit_length + 7) // 8
        self._bits = _BitData(data, bit_length)
        self.data = data
        self.bit_length = bit_length
        self._bytes_arr = np.frombuffer(data, dtype=np.uint8)

        n_words = (bit_length + BLOCK_BITS - 1) // BLOCK_BITS
        padded = data.ljust(n_words * 8, b"\x00")
        words = np.frombuffer(padded, dtype="<u8")
        counts = np.bitwise_count(words).astype(np.int64)
        cum = np.concatenate(([0], np.cumsum(counts)))  # ones before word k

        per_super = SUPERBLOCK_BITS // BLOCK_BITS
        self._super = cum[::per_super].copy()
        self._block = (cum[:-1] - self._super[np.arange(n_words) // per_super]).astype(
            np.uint16
        )
        self._words = words.tolist()
        self._total_ones = int(cum[-1])

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "RankBitVector":
        arr = np.asarray(bits, dtype=np.uint8)
        return cls(np.packbits(arr, bitorder="little").tobytes(), len(arr))

    def get(self, pos: int) -> int:
        assert 0 <= pos < self.bit_length
        return self._bits.get(pos)

    def rank1(self, pos: int) -> int:
        """Number of set bits in [0, pos)."""
        assert 0 <= pos <= self.bit_length
        if pos == self.bit_length:
            return self._total_ones
        word = pos // BLOCK_BITS
        r = int(self._super[pos // SUPERBLOCK_BITS]) + int(self._block[word])
        rem = pos % BLOCK_BITS
        if rem:
            r += (self._words[word] & _LOW_MASKS[rem]).bit_count()
        return r

    def unpack_range(self, start: int, stop: int) -> np.ndarray:
        """Bits [start, stop) as a uint8 0/1 array."""
        assert 0 <= start <= stop <= self.bit_length
        lo = start >> 3
        hi = (stop + 7) >> 3
        bits = np.unpackbits(self._bytes_arr[lo:hi], bitorder="little")
        return bits[start - lo * 8 : stop - lo * 8]

    def iter_ones(self, start: int, stop: int) -> Iterator[int]:
        """Positions of set bits in [start, stop), ascending."""
        if start >= stop:
            return
        w = start // BLOCK_BITS
        last_w = (stop - 1) // BLOCK_BITS
        while w <= last_w:
            word = self._words[w]
            base = w * BLOCK_BITS
            if w == start // BLOCK_BITS:
                word &= ~_LOW_MASKS[start - base] & _LOW_MASKS[64]
            if w == last_w and stop - base < 64:
                word &= _LOW_MASKS[stop - base]
            while word:
                low = word & -word
                yield base + low.bit_length() - 1
                word ^= low
            w += 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RankBitVector)
            and self.bit_length == other.bit_length
            and self.data == other.data
        )

    def __len__(self) -> int:
        return self.bit_length


def _block_costs(values: Sequence[int]) -> tuple[int, int, int]:
    """(fixed bits, gamma bits, fixed width) for one block of values."""
    width = max(values).bit_length()
    return len(values) * width, sum(gamma_bit_length(v) for v in values), width


def encoding_costs(values: Sequence[int], block_size: int) -> tuple[int, int, int]:
    """Total payload bits under all-fixed, all-gamma and hybrid coding."""
    fixed = gamma = hybrid = 0
    for k in range(0, len(values), block_size):
        f, g, _ = _block_costs(values[k : k + block_size])
        fixed += f
        gamma += g
        hybrid += min(f, g)
    return fixed, gamma, hybrid


class HybridSequence:
    """Blocked sequence of positive integers, per-block fixed or gamma coded.

    Each block of ``block_size`` values is stored in whichever of the two
    codes is smaller for it (fixed width = bit length of the block max;
    ties use fixed). Access decodes from the block start: entry j costs at
    most (j mod block_size) + 1 sequential decodes, or one field read when
    the block is fixed-width.
    """

    def __init__(
        self,
        length: int,
        block_size: int,
        data: bytes,
        data_bits: int,
        sb: Sequence[int],
        flag: RankBitVector,
        words: Sequence[int],
    ):
        self.length = length
        self.block_size = block_size
        self._bits = _BitData(data, data_bits)
        self.data = data
        self.data_bits = data_bits
        self.sb = list(sb)
        self.flag = flag
        self.words = list(words)
        self._block_cache: dict[int, np.ndarray] = {}

    @classmethod
    def encode(cls, values: Sequence[int], block_size: int) -> "HybridSequence":
        assert block_size >= 1
        writer = BitWriter()
        sb: list[int] = []
        flag_bits: list[int] = []
        words: list[int] = []
        for k in range(0, len(values), block_size):
            block = values[k : k + block_size]
            fixed_bits, gamma_bits, width = _block_costs(block)
            sb.append(writer.bit_length)
            if gamma_bits < fixed_bits:
                flag_bits.append(0)
                for v in block:
                    writer.write_gamma(v)
            else:
                flag_bits.append(1)
                words.append(width)
                for v in block:
                    writer.write_bits(v, width)
        return cls(
            len(values),
            block_size,
            writer.getvalue(),
            writer.bit_length,
            sb,
            RankBitVector.from_bits(flag_bits),
            words,
        )

    @property
    def n_blocks(self) -> int:
        return len(self.sb)

    def decode_block(self, k: int) -> np.ndarray:
        """All values of block k (cached; traversals revisit blocks a lot)."""
        cached = self._block_cache.get(k)
        if cached is not None:
            return cached
        count = min(self.block_size, self.length - k * self.block_size)
        start = self.sb[k]
        if self.flag.get(k):
            width = self.words[self.flag.rank1(k)]
            vals = [
                self._bits.read_field(start + i * width, width) for i in range(count)
            ]
        else:
            vals = _decode_gammas(self._bits, start, count)
        arr = np.asarray(vals, dtype=np.int64)
        self._block_cache[k] = arr
        return arr

    def access(self, j: int) -> int:
        """Value of entry j."""
        assert 0 <= j < self.length
        k, r = divmod(j, self.block_size)
        cached = self._block_cache.get(k)
        if cached is not None:
            return int(cached[r])
        start = self.sb[k]
        if self.flag.get(k):
            width = self.words[self.flag.rank1(k)]
            return self._bits.read_field(start + r * width, width)
        return _decode_gammas(self._bits, start, r + 1)[-1]

    def decode_range(self, start: int, stop: int) -> np.ndarray:
        """Entries [start, stop) by whole-block decoding.

        The common single-block case returns a view into the cached block,
        so a hot traversal pays one dict hit and a slice.
        """
        if start >= stop:
            return np.empty(0, dtype=np.int64)
        b = self.block_size
        k0 = start // b
        k1 = (stop - 1) // b
        if k0 == k1:
            return self.decode_block(k0)[start - k0 * b : stop - k0 * b]
        parts = []
        for k in range(k0, k1 + 1):
            vals = self.decode_block(k)
            lo = max(start - k * b, 0)
            hi = min(stop - k * b, vals.size)
            parts.append(vals[lo:hi])
        return np.concatenate(parts)

    def __iter__(self) -> Iterator[int]:
        for k in range(self.n_blocks):
            yield from (int(v) for v in self.decode_block(k))

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HybridSequence)
            and self.length == other.length
            and self.block_size == other.block_size
            and self.data_bits == other.data_bits
            and self.data == other.data
            and self.sb == other.sb
            and self.flag == other.flag
            and self.words == other.words
        )


@dataclass(frozen=True)
class _NodeRecord:
    """Per-node scalars of the serialized tree (preorder index space)."""

    graph_id: int  # -1 on internal nodes
    n_vertices: int
    n_edges: int
    l_d: int
    r_d: int
    l_l: int
    r_l: int
    children: tuple[int, ...]


class SuccinctTree:
    """A q-gram tree flattened to the concatenated succinct form.

    Nodes are indexed in depth-first preorder (root = 0). Vector slices
    are contiguous and non-overlapping in that same order, so a node's
    trimmed vector length is r - l + 1.
    """

    def __init__(
        self,
        records: Sequence[_NodeRecord],
        bd: RankBitVector,
        bl: RankBitVector,
        psi_d: HybridSequence,
        psi_l: HybridSequence,
    ):
        self.records = list(records)
        self.bd = bd
        self.bl = bl
        self.psi_d = psi_d
        self.psi_l = psi_l
        self.first_d, self.count_d, self.ones_d = self._directory(bd, "d")
        self.first_l, self.count_l, self.ones_l = self._directory(bl, "l")

    def _directory(self, bits: RankBitVector, which: str):
        """Per-node select support, rebuilt at load and never stored.

        ``first``/``count`` give each node's run inside Psi, ``ones`` the
        node-relative q-gram ids of all set bits in node order. Together
        they replace a rank plus bitmap scan per visited node with two
        list reads and an array slice.
        """
        unpacked = bits.unpack_range(0, bits.bit_length)
        csum = np.concatenate(([0], np.cumsum(unpacked, dtype=np.int64)))
        if which == "d":
            lo = np.array([rec.l_d for rec in self.records], dtype=np.int64)
            hi = np.array([rec.r_d for rec in self.records], dtype=np.int64)
        else:
            lo = np.array([rec.l_l for rec in self.records], dtype=np.int64)
            hi = np.array([rec.r_l for rec in self.records], dtype=np.int64)
        first = csum[lo]
        count = csum[hi + 1] - first
        ones = np.flatnonzero(unpacked) - np.repeat(lo, count)
        return first.tolist(), count.tolist(), ones

    @classmethod
    def from_tree(cls, root: TreeNode, block_size: int) -> "SuccinctTree":
        records: list[_NodeRecord] = []
        bd_parts: list[np.ndarray] = []
        bl_parts: list[np.ndarray] = []
        psi_d_parts: list[np.ndarray] = []
        psi_l_parts: list[np.ndarray] = []
        bd_len = bl_len = 0

        def walk(node: TreeNode) -> int:
            nonlocal bd_len, bl_len
            idx = len(records)
            records.append(None)  # reserve preorder slot
            p = node.profile
            d_mask = p.degree_freq != 0
            l_mask = p.label_freq != 0
            l_d = bd_len
            bd_parts.append(d_mask)
            psi_d_parts.append(p.degree_freq[d_mask])
            bd_len += d_mask.size
            l_l = bl_len
            bl_parts.append(l_mask)
            psi_l_parts.append(p.label_freq[l_mask])
            bl_len += l_mask.size
            r_d = bd_len - 1
            r_l = bl_len - 1
            children = tuple(walk(c) for c in node.children)
            records[idx] = _NodeRecord(
                -1 if node.graph_id is None else node.graph_id,
                p.n_vertices,
                p.n_edges,
                l_d,
                r_d,
                l_l,
                r_l,
                children,
            )
            return idx

        walk(root)
        return cls(
            records,
            RankBitVector.from_bits(np.concatenate(bd_parts)),
            RankBitVector.from_bits(np.concatenate(bl_parts)),
            HybridSequence.encode(np.concatenate(psi_d_parts).tolist(), block_size),
            HybridSequence.encode(np.concatenate(psi_l_parts).tolist(), block_size),
        )

    def __len__(self) -> int:
        return len(self.records)

    def _side(self, which: str):
        if which == "d":
            return self.bd, self.psi_d
        if which == "l":
            return self.bl, self.psi_l
        raise ValueError(f"side must be 'd' or 'l', got {which!r}")

    def slice_bounds(self, node: int, which: str) -> tuple[int, int]:
        rec = self.records[node]
        return (rec.l_d, rec.r_d) if which == "d" else (rec.l_l, rec.r_l)

    def f_access(self, node: int, which: str, i: int) -> int:
        """Frequency of q-gram id ``i`` at ``node``; i must be inside the
        node's trimmed vector (0 <= i <= r - l)."""
        bits, psi = self._side(which)
        l, r = self.slice_bounds(node, which)
        assert 0 <= i <= r - l
        pos = l + i
        if not bits.get(pos):
            return 0
        return psi.access(bits.rank1(pos))

    def nonzero_items(self, node: int, which: str) -> list[tuple[int, int]]:
        """(q-gram id, frequency) pairs of a node's vector, ascending id.

        Decodes the Psi run of the slice in one pass instead of per-entry
        random access.
        """
        bits, psi = self._side(which)
        l, r = self.slice_bounds(node, which)
        if r < l:
            return []
        first = bits.rank1(l)
        values = psi.decode_range(first, bits.rank1(r + 1))
        return [
            (pos - l, v) for pos, v in zip(bits.iter_ones(l, r + 1), values)
        ]

    # -- size accounting ----------------------------------------------------

    def size_report(self) -> dict:
        """Stored-size breakdown in bits, by section.

        node_scalars covers graph ids, size counters, slice boundaries and
        child pointers at the widths the index file uses (32-bit scalars,
        32-bit child refs); the directory structures built at load time do
        not count.
        """

        def seq_bits(s: HybridSequence) -> int:
            return (
                s.data_bits
                + 32 * len(s.sb)
                + s.flag.bit_length
                + 8 * len(s.words)
            )

        n_children = sum(len(r.children) for r in self.records)
        scalars = 32 * 7 * len(self.records) + 32 * (n_children + len(self.records))
        return {
            "node_scalars": scalars,
            "degree_side": self.bd.bit_length + seq_bits(self.psi_d),
            "label_side": self.bl.bit_length + seq_bits(self.psi_l),
        }

    def plain_size_bits(self) -> int:
        """The same tree with uncompressed 32-bit frequency vectors."""
        n_children = sum(len(r.children) for r in self.records)
        vector_entries = (self.bd.bit_length + self.bl.bit_length)  # trimmed lengths
        return (
            32 * vector_entries
            + 32 * 3 * len(self.records)  # graph id, n_v, n_e
            + 32 * (n_children + len(self.records))
        )
