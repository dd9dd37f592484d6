"""16x8 microkernels built from Boolean logic, bit counts and 16-bit sums.

A packed block stores, for every depth byte, one byte per row (or column,
or bit plane).  Before a block is multiplied it is regrouped into 64-bit
words: word ``w`` of lane ``q`` holds depth bytes ``8w .. 8w+7`` of lane
``q``.  The kernels then combine one A word with one B word using the
Boolean product of the mode and count the set bits, so 64 depth steps cost
a handful of instructions.  A-side words are built once per row block and
reused for every column block; B-side words once per depth block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._bits import popcount
from .errors import DepthOverflow, ModeMismatch
from .packing import PackedBlock

K_MAX_16 = (1 << 15) - 1


@dataclass
class AccumulatorTile:
    """16x8 block of C in signed 16-bit, plus the depth accumulated so far."""

    values: np.ndarray = field(default_factory=lambda: np.zeros((16, 8), dtype=np.int16))
    depth: int = 0

    def __post_init__(self) -> None:
        if self.values.shape != (16, 8) or self.values.dtype != np.int16:
            raise ValueError("AccumulatorTile.values must be int16 with shape (16, 8)")


@njit(cache=True)
def lane_words(buf, width, nbytes, out):
    """out[w, q] = depth bytes 8w..8w+7 of lane q, little-endian; zero past nbytes."""
    nw = (nbytes + 7) // 8
    for w in range(nw):
        for q in range(width):
            v = np.uint64(0)
            for b in range(min(8, nbytes - 8 * w)):
                v |= np.uint64(buf[(8 * w + b) * width + q]) << np.uint64(8 * b)
            out[w, q] = v


def block_words(block: PackedBlock, width: int) -> np.ndarray:
    out = np.empty(((block.depth_bytes + 7) // 8, width), dtype=np.uint64)
    lane_words(block.buffer, width, block.depth_bytes, out)
    return out


# Lane of row i's plus plane in the tnn-A layout; the minus plane is 8 further.
@njit(inline="always")
def _plus_lane(i):
    return i + 8 * (i // 8)


@njit(cache=True)
def bnn_block(xa, yb, k_eff, acc):
    """acc += k_eff - 2 * popcount(a XOR b); xa is (nw, 16), yb (nw, 8)."""
    s = np.zeros(8, dtype=np.int32)
    for i in range(16):
        s[:] = 0
        for w in range(xa.shape[0]):
            x = xa[w, i]
            for j in range(8):
                s[j] += np.int32(popcount(x ^ yb[w, j]))
        for j in range(8):
            acc[i, j] = np.int16(np.int32(acc[i, j]) + k_eff - 2 * s[j])


@njit(cache=True)
def tnn_block(xa, yb, acc):
    """Ternary x ternary: z+ = (x+ & y+) | (x- & y-), z- = (x+ & y-) | (x- & y+).

    xa is (nw, 32) in tnn-A lane order, yb (nw, 16) with plus/minus lanes
    interleaved per column.
    """
    s = np.zeros(8, dtype=np.int32)
    for i in range(16):
        s[:] = 0
        lp = _plus_lane(i)
        for w in range(xa.shape[0]):
            xp = xa[w, lp]
            xm = xa[w, lp + 8]
            for j in range(8):
                yp = yb[w, 2 * j]
                ym = yb[w, 2 * j + 1]
                zp = (xp & yp) | (xm & ym)
                zm = (xp & ym) | (xm & yp)
                s[j] += np.int32(popcount(zp)) - np.int32(popcount(zm))
        for j in range(8):
            acc[i, j] = np.int16(np.int32(acc[i, j]) + s[j])


@njit(cache=True)
def tbn_block(xa, yb, acc):
    """Ternary x binary: z+ = (x+ | y) & (x- | ~y), z- = (x+ | ~y) & (x- | y)."""
    s = np.zeros(8, dtype=np.int32)
    for i in range(16):
        s[:] = 0
        lp = _plus_lane(i)
        for w in range(xa.shape[0]):
            xp = xa[w, lp]
            xm = xa[w, lp + 8]
            for j in range(8):
                y = yb[w, j]
                ny = ~y
                zp = (xp | y) & (xm | ny)
                zm = (xp | ny) & (xm | y)
                s[j] += np.int32(popcount(zp)) - np.int32(popcount(zm))
        for j in range(8):
            acc[i, j] = np.int16(np.int32(acc[i, j]) + s[j])


def dot_binary(a_bits, b_bits, k_logical: int) -> int:
    """Dot product of two packed {+1, -1} vectors: k - 2 * popcount(a ^ b)."""
    if k_logical > K_MAX_16:
        raise DepthOverflow(f"depth {k_logical} exceeds {K_MAX_16}")
    a = np.asarray(a_bits, dtype=np.uint8)
    b = np.asarray(b_bits, dtype=np.uint8)
    if a.shape != b.shape or k_logical > 8 * a.size:
        raise ValueError("bit sequences must match in length and cover k_logical bits")
    return k_logical - 2 * int(np.bitwise_count(a ^ b).sum(dtype=np.int64))


def _prepare(a_block: PackedBlock, a_mode: str, b_block: PackedBlock, b_mode: str,
             k_eff: int | None, acc: AccumulatorTile | None) -> tuple[int, AccumulatorTile]:
    if a_block.mode != a_mode or b_block.mode != b_mode:
        raise ModeMismatch(f"expected {a_mode} x {b_mode}, got {a_block.mode} x {b_block.mode}")
    if a_block.depth_bytes != b_block.depth_bytes:
        raise ValueError("A and B blocks cover different depth ranges")
    if k_eff is None:
        k_eff = a_block.k_eff
    if not 1 <= k_eff <= 8 * a_block.depth_bytes:
        raise ValueError(f"k_eff {k_eff} does not fit {a_block.depth_bytes} depth bytes")
    if acc is None:
        acc = AccumulatorTile()
    if acc.depth + k_eff > K_MAX_16:
        raise DepthOverflow(f"accumulated depth {acc.depth + k_eff} exceeds {K_MAX_16}")
    return k_eff, acc


def _finish(acc: AccumulatorTile, k_eff: int) -> AccumulatorTile:
    acc.depth += k_eff
    if __debug__ and np.abs(acc.values.astype(np.int32)).max() > acc.depth:
        raise AssertionError("accumulator entry exceeds accumulated depth")
    return acc


def microkernel_bnn(a_block: PackedBlock, b_block: PackedBlock, k_eff: int | None = None,
                    acc: AccumulatorTile | None = None) -> AccumulatorTile:
    k_eff, acc = _prepare(a_block, "bnn-A", b_block, "bnn-B", k_eff, acc)
    bnn_block(block_words(a_block, 16), block_words(b_block, 8), k_eff, acc.values)
    return _finish(acc, k_eff)


def microkernel_tnn(a_block: PackedBlock, b_block: PackedBlock, k_eff: int | None = None,
                    acc: AccumulatorTile | None = None) -> AccumulatorTile:
    k_eff, acc = _prepare(a_block, "tnn-A", b_block, "tnn-B", k_eff, acc)
    tnn_block(block_words(a_block, 32), block_words(b_block, 16), acc.values)
    return _finish(acc, k_eff)


def microkernel_tbn(a_block: PackedBlock, b_block: PackedBlock, k_eff: int | None = None,
                    acc: AccumulatorTile | None = None) -> AccumulatorTile:
    k_eff, acc = _prepare(a_block, "tnn-A", b_block, "bnn-B", k_eff, acc)
    tbn_block(block_words(a_block, 32), block_words(b_block, 8), acc.values)
    return _finish(acc, k_eff)
