"""Blocked GeMM drivers, baselines and overflow limits.

All drivers share one loop nest: an outer loop over depth blocks of
``k_blk``, a loop over 16-row blocks of A (packed into a small scratch
buffer per block), and an inner loop over the 8-column panels of a B that
was packed once ahead of time.  Remainder rows/columns are computed in full
16x8 tiles and only the valid part is written back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numba import njit

from .core import (
    BinaryPackedMatrix,
    QuantParams,
    TernaryPackedMatrix,
    encode_binary,
    encode_ternary,
)
from .errors import DepthOverflow, ModeMismatch
from .kernels import K_MAX_16, bnn_block, lane_words, tbn_block, tnn_block
from .packing import M_MK, N_MK, PackedB, pack_a_ternary_into, pack_rows_interleaved, prepack_b

LowbitMode = Literal["bnn", "tnn", "tbn"]
LOWBIT_MODES = ("bnn", "tnn", "tbn")


@dataclass(frozen=True)
class GemmDims:
    m: int
    n: int
    k: int

    def __post_init__(self) -> None:
        if min(self.m, self.n, self.k) < 1:
            raise ValueError(f"dimensions must be positive, got {self}")


@dataclass(frozen=True)
class GemmConfig:
    k_blk: int = 4096
    m_mk: int = M_MK
    n_mk: int = N_MK
    acc_bits: int = 16

    def __post_init__(self) -> None:
        if self.k_blk < 8 or self.k_blk % 8:
            raise ValueError(f"k_blk must be a positive multiple of 8, got {self.k_blk}")
        if self.k_blk > K_MAX_16:
            raise ValueError(f"k_blk {self.k_blk} exceeds the 16-bit depth limit {K_MAX_16}")
        if (self.m_mk, self.n_mk) != (M_MK, N_MK):
            raise ValueError(f"microkernel shape is fixed at {M_MK}x{N_MK}")
        if self.acc_bits != 16:
            raise ValueError("low-bit kernels accumulate in 16 bits")


DEFAULT_CONFIG = GemmConfig()


def k_max(p: int, q: int, *, sign_valued: bool = False) -> int:
    """Largest depth whose p-bit products cannot overflow a q-bit accumulator.

    With ``sign_valued`` every product has magnitude at most 1 and the limit
    is the largest value of a signed q-bit register.
    """
    if sign_valued:
        return (1 << (q - 1)) - 1
    if p < 1 or q <= 2 * p:
        raise ValueError(f"need p >= 1 and q > 2p, got p={p}, q={q}")
    return ((1 << q) - 1) // ((1 << p) - 1) ** 2


def c_in_max(k_max_value: int, kernel_h: int, kernel_w: int) -> int:
    """Largest input channel count for an overflow-free GeMM convolution."""
    if kernel_h < 1 or kernel_w < 1:
        raise ValueError("kernel dimensions must be >= 1")
    return k_max_value // (kernel_h * kernel_w)


def reference_gemm_int(a, b, dims: GemmDims | None = None) -> np.ndarray:
    """Exact integer product over decoded values (wide integers)."""
    a = np.asarray(getattr(a, "values", a), dtype=np.int64)
    b = np.asarray(getattr(b, "values", b), dtype=np.int64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"incompatible shapes {a.shape} x {b.shape}")
    if dims is not None and (dims.m, dims.k, dims.n) != (a.shape[0], a.shape[1], b.shape[1]):
        raise ValueError(f"{dims} does not match operands")
    return a @ b


# -- low-bit drivers ----------------------------------------------------------


@njit(cache=True)
def _writeback(out, acc, r, c, m, n):
    for i in range(min(M_MK, m - r)):
        for j in range(min(N_MK, n - c)):
            out[r + i, c + j] += acc[i, j]


@njit(cache=True)
def _panel_words(panels, byte0, nb, width):
    """Regroup the depth slice of every B panel into (tiles, nw, width) words."""
    tiles = panels.shape[0]
    yw = np.empty((tiles, (nb + 7) // 8, width), dtype=np.uint64)
    for t in range(tiles):
        lane_words(panels[t, width * byte0 : width * (byte0 + nb)], width, nb, yw[t])
    return yw


@njit(cache=True)
def _drive_bnn(plane, m, k, panels, n, k_blk, out):
    nb_max = (min(k_blk, k) + 7) // 8
    abuf = np.empty(16 * nb_max, dtype=np.uint8)
    xa = np.empty(((nb_max + 7) // 8, 16), dtype=np.uint64)
    acc = np.empty((16, 8), dtype=np.int16)
    for d in range(0, k, k_blk):
        k_eff = min(k_blk, k - d)
        nb = (k_eff + 7) // 8
        byte0 = d // 8
        yw = _panel_words(panels, byte0, nb, 8)
        xs = xa[: (nb + 7) // 8]
        for r in range(0, m, 16):
            pack_rows_interleaved(plane, r, byte0, nb, k_eff, 16, abuf)
            lane_words(abuf, 16, nb, xs)
            for t in range(yw.shape[0]):
                acc[:] = 0
                bnn_block(xs, yw[t], k_eff, acc)
                _writeback(out, acc, r, 8 * t, m, n)


@njit(cache=True)
def _drive_ternary_a(plus, minus, m, k, panels, b_width, n, k_blk, binary_b, out):
    nb_max = (min(k_blk, k) + 7) // 8
    abuf = np.empty(32 * nb_max, dtype=np.uint8)
    xa = np.empty(((nb_max + 7) // 8, 32), dtype=np.uint64)
    acc = np.empty((16, 8), dtype=np.int16)
    for d in range(0, k, k_blk):
        k_eff = min(k_blk, k - d)
        nb = (k_eff + 7) // 8
        byte0 = d // 8
        yw = _panel_words(panels, byte0, nb, b_width)
        xs = xa[: (nb + 7) // 8]
        for r in range(0, m, 16):
            pack_a_ternary_into(plus, minus, r, byte0, nb, k_eff, abuf)
            lane_words(abuf, 32, nb, xs)
            for t in range(yw.shape[0]):
                acc[:] = 0
                if binary_b:
                    tbn_block(xs, yw[t], acc)
                else:
                    tnn_block(xs, yw[t], acc)
                _writeback(out, acc, r, 8 * t, m, n)


def gemm_lowbit(mode: LowbitMode, a: BinaryPackedMatrix | TernaryPackedMatrix, packed_b: PackedB,
                dims: GemmDims | None = None, cfg: GemmConfig = DEFAULT_CONFIG) -> np.ndarray:
    """C = A @ B over {-1, 0, +1} values, returned as row-major int16.

    ``bnn`` takes binary A and B, ``tnn`` ternary A and B, ``tbn`` ternary A
    and binary B.
    """
    expected = {
        "bnn": (BinaryPackedMatrix, "binary"),
        "tnn": (TernaryPackedMatrix, "ternary"),
        "tbn": (TernaryPackedMatrix, "binary"),
    }
    if mode not in expected:
        raise ModeMismatch(f"unknown low-bit mode {mode!r}")
    a_type, b_kind = expected[mode]
    if not isinstance(a, a_type) or packed_b.kind != b_kind:
        raise ModeMismatch(
            f"{mode} needs {a_type.__name__} x {b_kind} B, "
            f"got {type(a).__name__} x {packed_b.kind} B"
        )
    if a.cols != packed_b.k:
        raise ValueError(f"depth mismatch: A has {a.cols}, B has {packed_b.k}")
    m, k, n = a.rows, a.cols, packed_b.n
    if dims is not None and (dims.m, dims.n, dims.k) != (m, n, k):
        raise ValueError(f"{dims} does not match operands ({m}, {n}, {k})")
    if k > K_MAX_16:
        raise DepthOverflow(f"depth {k} exceeds the 16-bit limit {K_MAX_16}")

    out = np.zeros((m, n), dtype=np.int16)
    if mode == "bnn":
        _drive_bnn(a.plane, m, k, packed_b.panels, n, cfg.k_blk, out)
    else:
        width = 8 if mode == "tbn" else 16
        _drive_ternary_a(a.plane_plus, a.plane_minus, m, k, packed_b.panels, width, n,
                         cfg.k_blk, mode == "tbn", out)
    return out


def encode_a(a_values, mode: LowbitMode) -> BinaryPackedMatrix | TernaryPackedMatrix:
    """Encode a logical left operand the way ``mode`` expects."""
    if mode == "bnn":
        return encode_binary(a_values)
    if mode in ("tnn", "tbn"):
        return encode_ternary(a_values)
    raise ModeMismatch(f"unknown low-bit mode {mode!r}")


def matmul_lowbit(mode: LowbitMode, a_values, b_values, cfg: GemmConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Encode, pack and multiply logical matrices in one call."""
    return gemm_lowbit(mode, encode_a(a_values, mode), prepack_b(b_values, mode), cfg=cfg)


# -- floating-point baseline --------------------------------------------------


@dataclass(frozen=True)
class PackedF32:
    k: int
    n: int
    panels: np.ndarray  # (tiles, 8, k) float32, zero-padded columns


def prepack_f32(b) -> PackedF32:
    b = np.asarray(b, dtype=np.float32)
    k, n = b.shape
    tiles = (n + N_MK - 1) // N_MK
    padded = np.zeros((k, tiles * N_MK), dtype=np.float32)
    padded[:, :n] = b
    panels = np.ascontiguousarray(padded.T.reshape(tiles, N_MK, k))
    return PackedF32(k, n, panels)


@njit(cache=True)
def _pack_rows_dense(a, r, d, k_eff, abuf):
    m = a.shape[0]
    for i in range(16):
        if r + i < m:
            for t in range(k_eff):
                abuf[i, t] = a[r + i, d + t]
        else:
            for t in range(k_eff):
                abuf[i, t] = 0


@njit(cache=True, fastmath=True)
def f32_tile(abuf, panel, d, k_eff, acc):
    for i in range(16):
        ai = abuf[i, :k_eff]
        for j in range(8):
            bj = panel[j, d : d + k_eff]
            s = np.float32(0.0)
            for t in range(k_eff):
                s += ai[t] * bj[t]
            acc[i, j] = s


@njit(cache=True)
def _drive_f32(a, panels, n, k_blk, out):
    m, k = a.shape
    abuf = np.empty((16, min(k_blk, k)), dtype=np.float32)
    acc = np.empty((16, 8), dtype=np.float32)
    for d in range(0, k, k_blk):
        k_eff = min(k_blk, k - d)
        for r in range(0, m, 16):
            _pack_rows_dense(a, r, d, k_eff, abuf)
            for t in range(panels.shape[0]):
                f32_tile(abuf, panels[t], d, k_eff, acc)
                _writeback(out, acc, r, 8 * t, m, n)


def gemm_f32(a, b, dims: GemmDims | None = None, cfg: GemmConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Single-precision GeMM on the same blocked loop nest as the low-bit modes."""
    a = np.ascontiguousarray(a, dtype=np.float32)
    pb = b if isinstance(b, PackedF32) else prepack_f32(b)
    if a.ndim != 2 or a.shape[1] != pb.k:
        raise ValueError(f"incompatible shapes {a.shape} x ({pb.k}, {pb.n})")
    if dims is not None and (dims.m, dims.n, dims.k) != (a.shape[0], pb.n, pb.k):
        raise ValueError(f"{dims} does not match operands")
    out = np.zeros((a.shape[0], pb.n), dtype=np.float32)
    _drive_f32(a, pb.panels, pb.n, cfg.k_blk, out)
    return out


# -- zero-point quantized baseline -------------------------------------------


@njit(cache=True)
def _pack_rows_u8(a, r, d, k_eff, abuf):
    m = a.shape[0]
    for i in range(16):
        if r + i < m:
            for t in range(k_eff):
                abuf[i, t] = a[r + i, d + t]
        else:
            for t in range(k_eff):
                abuf[i, t] = 0


@njit(cache=True)
def u8_tile(abuf, panel, d, k_eff, acc):
    for i in range(16):
        ai = abuf[i, :k_eff]
        for j in range(8):
            bj = panel[j, d : d + k_eff]
            s = np.int32(0)
            for t in range(k_eff):
                s += np.int32(ai[t]) * np.int32(bj[t])
            acc[i, j] = s


@njit(cache=True)
def _drive_quantized(a, panels, n, k_blk, out):
    """out (uint16 or uint32, the q-bit accumulator) += A_hat @ B_hat."""
    m, k = a.shape
    abuf = np.empty((16, min(k_blk, k)), dtype=np.uint8)
    acc = np.empty((16, 8), dtype=np.int32)
    for d in range(0, k, k_blk):
        k_eff = min(k_blk, k - d)
        for r in range(0, m, 16):
            _pack_rows_u8(a, r, d, k_eff, abuf)
            for t in range(panels.shape[0]):
                u8_tile(abuf, panels[t], d, k_eff, acc)
                _writeback(out, acc, r, 8 * t, m, n)


@dataclass(frozen=True)
class QuantizedGemmInputs:
    """Quantized operands plus the row/column sums the zero-point terms need.

    Sums and the packed B panels are derived when not supplied; B-side data
    can be computed once and reused across calls with new A operands.
    """

    a_hat: np.ndarray
    b_hat: np.ndarray
    qa: QuantParams
    qb: QuantParams
    a_row_sums: np.ndarray | None = None
    b_col_sums: np.ndarray | None = None
    b_panels: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        a = np.ascontiguousarray(self.a_hat)
        b = np.ascontiguousarray(self.b_hat)
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ValueError(f"incompatible shapes {a.shape} x {b.shape}")
        for arr, q, name in ((a, self.qa, "a_hat"), (b, self.qb, "b_hat")):
            if arr.size and (arr.min() < 0 or arr.max() > q.qmax):
                raise ValueError(f"{name} entries must lie in [0, {q.qmax}]")
        a = a.astype(np.uint8, copy=False)
        b = b.astype(np.uint8, copy=False)
        set_ = object.__setattr__
        set_(self, "a_hat", a)
        set_(self, "b_hat", b)
        if self.a_row_sums is None:
            set_(self, "a_row_sums", a.sum(axis=1, dtype=np.int64))
        if self.b_col_sums is None:
            set_(self, "b_col_sums", b.sum(axis=0, dtype=np.int64))
        if self.b_panels is None:
            k, n = b.shape
            tiles = (n + N_MK - 1) // N_MK
            padded = np.zeros((k, tiles * N_MK), dtype=np.uint8)
            padded[:, :n] = b
            set_(self, "b_panels", np.ascontiguousarray(padded.T.reshape(tiles, N_MK, k)))

    @property
    def dims(self) -> GemmDims:
        return GemmDims(self.a_hat.shape[0], self.b_hat.shape[1], self.a_hat.shape[1])


@dataclass(frozen=True)
class QuantizedProduct:
    """Integer product C~ and the real factor that maps it back: C ~ scale * C~."""

    c_tilde: np.ndarray
    scale: float

    def dequantize(self) -> np.ndarray:
        return self.scale * self.c_tilde.astype(np.float64)


def gemm_quantized(inputs: QuantizedGemmInputs, dims: GemmDims | None = None,
                   acc_bits: int | None = None, k_blk: int = DEFAULT_CONFIG.k_blk) -> QuantizedProduct:
    """Zero-point corrected integer GeMM.

    C~ = A_hat @ B_hat - z_B * rowsum(A_hat) - z_A * colsum(B_hat) + k z_A z_B.
    The first term accumulates in an unsigned ``acc_bits`` register (32 for
    8-bit inputs, 16 for 4-bit by default); the depth is checked against the
    matching overflow limit.
    """
    p = max(inputs.qa.bits, inputs.qb.bits)
    if acc_bits is None:
        acc_bits = 32 if p == 8 else 16
    if acc_bits not in (16, 32):
        raise ValueError(f"acc_bits must be 16 or 32, got {acc_bits}")
    shape = inputs.dims
    if dims is not None and dims != shape:
        raise ValueError(f"{dims} does not match operands {shape}")
    limit = k_max(p, acc_bits)
    if shape.k > limit:
        raise DepthOverflow(f"depth {shape.k} exceeds k_max={limit} for p={p}, q={acc_bits}")

    acc = np.zeros((shape.m, shape.n), dtype=np.uint32 if acc_bits == 32 else np.uint16)
    _drive_quantized(inputs.a_hat, inputs.b_panels, shape.n, k_blk, acc)

    za, zb = inputs.qa.zero_point, inputs.qb.zero_point
    c = acc.astype(np.int64)
    c -= zb * inputs.a_row_sums[:, None]
    c -= za * inputs.b_col_sums[None, :]
    c += shape.k * za * zb
    return QuantizedProduct(c, inputs.qa.scale * inputs.qb.scale)
