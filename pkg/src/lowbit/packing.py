"""Reorder packed bit planes into microkernel-ready blocks.

Layouts, for every depth byte ``d`` of the block:

* ``bnn-A``: byte ``d`` of rows 0..15 (16 bytes, one 128-bit column).
* ``bnn-B``: byte ``d`` of columns 0..7 (8 bytes).
* ``tnn-A``: plus rows 0..7, minus rows 0..7, plus rows 8..15, minus rows 8..15
  (32 bytes, read by the kernel as four 64-bit words).
* ``tnn-B``: col0 plus, col0 minus, col1 plus, ..., col7 minus (16 bytes).

B operands are addressed through their transpose: a packed matrix whose rows
are the columns of B and whose columns run along the shared depth.

Blocks narrower than 16 rows / 8 columns are padded with zero bytes, and a
final partial depth byte has its unused bits cleared.  Ternary-binary
multiplication reuses the ``tnn-A`` and ``bnn-B`` layouts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numba import njit

from .core import BinaryPackedMatrix, TernaryPackedMatrix, encode_binary, encode_ternary
from .errors import ModeMismatch, OutOfBounds

M_MK = 16
N_MK = 8

BlockMode = Literal["bnn-A", "bnn-B", "tnn-A", "tnn-B"]

BYTES_PER_DEPTH = {"bnn-A": 16, "bnn-B": 8, "tnn-A": 32, "tnn-B": 16}


@dataclass(frozen=True)
class PackedBlock:
    mode: BlockMode
    logical_rows_or_cols: int
    depth_bytes: int
    k_eff: int
    buffer: np.ndarray

    def __post_init__(self) -> None:
        expected = BYTES_PER_DEPTH[self.mode] * self.depth_bytes
        if self.buffer.shape != (expected,):
            raise ValueError(f"{self.mode} buffer must hold {expected} bytes")


@njit(inline="always")
def _src_byte(plane, r, byte, last_byte, last_mask):
    if r >= plane.shape[0] or byte >= plane.shape[1]:
        return np.uint8(0)
    v = plane[r, byte]
    if byte == last_byte:
        v &= last_mask
    return v


@njit(cache=True)
def pack_rows_interleaved(plane, start, byte0, nbytes, k_eff, width, out):
    """out[d * width + i] = plane[start + i, byte0 + d], zero outside the source."""
    last_byte = byte0 + nbytes - 1
    rem = k_eff % 8
    last_mask = np.uint8(0xFF) if rem == 0 else np.uint8((1 << rem) - 1)
    for d in range(nbytes):
        for i in range(width):
            out[d * width + i] = _src_byte(plane, start + i, byte0 + d, last_byte, last_mask)


@njit(cache=True)
def pack_a_ternary_into(plus, minus, start, byte0, nbytes, k_eff, out):
    last_byte = byte0 + nbytes - 1
    rem = k_eff % 8
    last_mask = np.uint8(0xFF) if rem == 0 else np.uint8((1 << rem) - 1)
    for d in range(nbytes):
        base = d * 32
        for h in range(2):
            for i in range(8):
                r = start + 8 * h + i
                out[base + 16 * h + i] = _src_byte(plus, r, byte0 + d, last_byte, last_mask)
                out[base + 16 * h + 8 + i] = _src_byte(minus, r, byte0 + d, last_byte, last_mask)


@njit(cache=True)
def pack_b_ternary_into(plus, minus, start, byte0, nbytes, k_eff, out):
    last_byte = byte0 + nbytes - 1
    rem = k_eff % 8
    last_mask = np.uint8(0xFF) if rem == 0 else np.uint8((1 << rem) - 1)
    for d in range(nbytes):
        base = d * 16
        for j in range(8):
            c = start + j
            out[base + 2 * j] = _src_byte(plus, c, byte0 + d, last_byte, last_mask)
            out[base + 2 * j + 1] = _src_byte(minus, c, byte0 + d, last_byte, last_mask)


def _check_window(rows: int, cols: int, start: int, depth_start: int, k_eff: int, what: str) -> int:
    if k_eff < 1:
        raise ValueError(f"k_eff must be >= 1, got {k_eff}")
    if depth_start % 8:
        raise ValueError(f"depth_start must be a multiple of 8, got {depth_start}")
    if not 0 <= start < rows:
        raise OutOfBounds(f"{what} start {start} outside [0, {rows})")
    if depth_start < 0 or depth_start + k_eff > cols:
        raise OutOfBounds(f"depth window [{depth_start}, {depth_start + k_eff}) outside [0, {cols})")
    return (k_eff + 7) // 8


def pack_a_binary(a: BinaryPackedMatrix, row_start: int, depth_start: int, k_eff: int) -> PackedBlock:
    nbytes = _check_window(a.rows, a.cols, row_start, depth_start, k_eff, "row")
    buf = np.empty(M_MK * nbytes, dtype=np.uint8)
    pack_rows_interleaved(a.plane, row_start, depth_start // 8, nbytes, k_eff, M_MK, buf)
    return PackedBlock("bnn-A", min(M_MK, a.rows - row_start), nbytes, k_eff, buf)


def pack_b_binary(b: BinaryPackedMatrix, col_start: int, depth_start: int, k_eff: int) -> PackedBlock:
    """Pack 8 columns of B; ``b`` holds B transposed (one row per column)."""
    nbytes = _check_window(b.rows, b.cols, col_start, depth_start, k_eff, "column")
    buf = np.empty(N_MK * nbytes, dtype=np.uint8)
    pack_rows_interleaved(b.plane, col_start, depth_start // 8, nbytes, k_eff, N_MK, buf)
    return PackedBlock("bnn-B", min(N_MK, b.rows - col_start), nbytes, k_eff, buf)


def pack_a_ternary(a: TernaryPackedMatrix, row_start: int, depth_start: int, k_eff: int) -> PackedBlock:
    nbytes = _check_window(a.rows, a.cols, row_start, depth_start, k_eff, "row")
    buf = np.empty(2 * M_MK * nbytes, dtype=np.uint8)
    pack_a_ternary_into(a.plane_plus, a.plane_minus, row_start, depth_start // 8, nbytes, k_eff, buf)
    return PackedBlock("tnn-A", min(M_MK, a.rows - row_start), nbytes, k_eff, buf)


def pack_b_ternary(b: TernaryPackedMatrix, col_start: int, depth_start: int, k_eff: int) -> PackedBlock:
    """Pack 8 columns of B; ``b`` holds B transposed (one row per column)."""
    nbytes = _check_window(b.rows, b.cols, col_start, depth_start, k_eff, "column")
    buf = np.empty(2 * N_MK * nbytes, dtype=np.uint8)
    pack_b_ternary_into(b.plane_plus, b.plane_minus, col_start, depth_start // 8, nbytes, k_eff, buf)
    return PackedBlock("tnn-B", min(N_MK, b.rows - col_start), nbytes, k_eff, buf)


# -- whole-matrix B pre-packing ----------------------------------------------


@dataclass(frozen=True)
class PackedB:
    """A right-hand operand packed once, ahead of any multiplication.

    ``panels[t]`` is the full-depth block for columns ``8t .. 8t+7``, so a
    depth slice starting at byte ``d0`` is the contiguous range
    ``panels[t, d0 * w : (d0 + nb) * w]`` with ``w`` bytes per depth byte.
    """

    kind: Literal["binary", "ternary"]
    k: int
    n: int
    panels: np.ndarray

    @property
    def depth_bytes(self) -> int:
        return (self.k + 7) // 8

    @property
    def block_mode(self) -> BlockMode:
        return "bnn-B" if self.kind == "binary" else "tnn-B"


def pack_b(bt: BinaryPackedMatrix | TernaryPackedMatrix) -> PackedB:
    """Pre-pack an encoded transposed B (``n`` rows over depth ``k``)."""
    n, k = bt.rows, bt.cols
    nbytes = (k + 7) // 8
    tiles = (n + N_MK - 1) // N_MK
    if isinstance(bt, BinaryPackedMatrix):
        panels = np.empty((tiles, N_MK * nbytes), dtype=np.uint8)
        for t in range(tiles):
            pack_rows_interleaved(bt.plane, t * N_MK, 0, nbytes, k, N_MK, panels[t])
        kind = "binary"
    elif isinstance(bt, TernaryPackedMatrix):
        panels = np.empty((tiles, 2 * N_MK * nbytes), dtype=np.uint8)
        for t in range(tiles):
            pack_b_ternary_into(bt.plane_plus, bt.plane_minus, t * N_MK, 0, nbytes, k, panels[t])
        kind = "ternary"
    else:
        raise ModeMismatch(f"cannot pack {type(bt).__name__} as a B operand")
    panels.setflags(write=False)
    return PackedB(kind, k, n, panels)


def prepack_b(b_values, mode: str) -> PackedB:
    """Encode and pre-pack a logical ``k x n`` matrix for ``mode``.

    ``bnn`` and ``tbn`` take a binary B, ``tnn`` a ternary one.
    """
    bt = np.asarray(b_values).T
    if mode in ("bnn", "tbn"):
        return pack_b(encode_binary(bt))
    if mode == "tnn":
        return pack_b(encode_ternary(bt))
    raise ModeMismatch(f"unknown low-bit mode {mode!r}")
