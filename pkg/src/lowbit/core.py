"""Value representations, bit encodings and element-level products.

Binary values use one bit per element: +1 -> 0, -1 -> 1.
Ternary values use two bit planes (plus, minus): +1 -> (1, 0), 0 -> (0, 0),
-1 -> (0, 1); the code (1, 1) is invalid.

Packed planes are row-major with LSB-first bit order inside each byte, so
bit ``j`` of byte ``b`` holds depth offset ``8 * b + j``.  Padding bits past
the logical column count are always zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidCode, ZeroInBinaryInput

Mode = Literal["binary", "ternary"]


def _padded_bytes(cols: int) -> int:
    return (cols + 7) // 8


@dataclass(frozen=True)
class SignMatrix:
    """Dense row-major matrix of values in {-1, 0, +1}.

    ``mode="binary"`` additionally forbids zeros.
    """

    values: np.ndarray
    mode: Mode = "ternary"

    def __post_init__(self) -> None:
        raw = np.asarray(self.values)
        if raw.ndim != 2:
            raise ValueError(f"SignMatrix needs a 2D array, got ndim={raw.ndim}")
        if raw.dtype.kind not in "iub" and raw.size:
            if not np.all(raw == np.round(raw)):
                raise ValueError("SignMatrix values must be integers")
        arr = np.ascontiguousarray(raw, dtype=np.int8)
        if self.mode not in ("binary", "ternary"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if arr.size and (arr.min() < -1 or arr.max() > 1):
            raise ValueError("SignMatrix values must lie in {-1, 0, +1}")
        if self.mode == "binary" and np.any(arr == 0):
            raise ZeroInBinaryInput("binary SignMatrix contains 0")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _values_of(x) -> np.ndarray:
    if isinstance(x, SignMatrix):
        return x.values
    return SignMatrix(x).values


@dataclass(frozen=True)
class BinaryPackedMatrix:
    """One bit plane, shape ``(rows, stride_bits // 8)``, dtype uint8."""

    rows: int
    cols: int
    plane: np.ndarray

    def __post_init__(self) -> None:
        plane = np.ascontiguousarray(self.plane, dtype=np.uint8)
        if plane.shape != (self.rows, _padded_bytes(self.cols)):
            raise ValueError(
                f"plane shape {plane.shape} does not match "
                f"({self.rows}, {_padded_bytes(self.cols)})"
            )
        plane.setflags(write=False)
        object.__setattr__(self, "plane", plane)

    @property
    def stride_bits(self) -> int:
        return 8 * _padded_bytes(self.cols)


@dataclass(frozen=True)
class TernaryPackedMatrix:
    """Two bit planes (plus, minus), each shaped like a binary plane."""

    rows: int
    cols: int
    plane_plus: np.ndarray
    plane_minus: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.rows, _padded_bytes(self.cols))
        planes = []
        for plane in (self.plane_plus, self.plane_minus):
            plane = np.ascontiguousarray(plane, dtype=np.uint8)
            if plane.shape != shape:
                raise ValueError(f"plane shape {plane.shape} does not match {shape}")
            plane.setflags(write=False)
            planes.append(plane)
        if np.any(planes[0] & planes[1]):
            raise InvalidCode("plus and minus planes overlap (code (1, 1))")
        object.__setattr__(self, "plane_plus", planes[0])
        object.__setattr__(self, "plane_minus", planes[1])

    @property
    def stride_bits(self) -> int:
        return 8 * _padded_bytes(self.cols)


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    return np.packbits(bits.astype(np.uint8), axis=1, bitorder="little")


def _unpack_bits(plane: np.ndarray, cols: int) -> np.ndarray:
    return np.unpackbits(plane, axis=1, count=cols, bitorder="little")


def encode_binary(values) -> BinaryPackedMatrix:
    """Pack a {-1, +1} matrix into a single bit plane.

    Raises ZeroInBinaryInput if any element is 0.
    """
    arr = _values_of(values)
    if np.any(arr == 0):
        raise ZeroInBinaryInput("binary encoding cannot represent 0")
    rows, cols = arr.shape
    return BinaryPackedMatrix(rows, cols, _pack_bits(arr < 0))


def decode_binary(m: BinaryPackedMatrix) -> SignMatrix:
    bits = _unpack_bits(m.plane, m.cols).astype(np.int8)
    return SignMatrix(1 - 2 * bits, mode="binary")


def encode_ternary(values) -> TernaryPackedMatrix:
    arr = _values_of(values)
    rows, cols = arr.shape
    return TernaryPackedMatrix(rows, cols, _pack_bits(arr > 0), _pack_bits(arr < 0))


def decode_ternary(m: TernaryPackedMatrix) -> SignMatrix:
    plus = _unpack_bits(m.plane_plus, m.cols).astype(np.int8)
    minus = _unpack_bits(m.plane_minus, m.cols).astype(np.int8)
    return SignMatrix(plus - minus, mode="ternary")


# -- element-level codes ------------------------------------------------------

_CODE_OF = {1: (1, 0), 0: (0, 0), -1: (0, 1)}


def _check_bit(b) -> int:
    if b not in (0, 1):
        raise InvalidCode(f"bit must be 0 or 1, got {b!r}")
    return int(b)


def _check_code(code) -> tuple[int, int]:
    plus, minus = (_check_bit(b) for b in code)
    if plus and minus:
        raise InvalidCode("ternary code (1, 1) is invalid")
    return plus, minus


def ternary_code(value: int) -> tuple[int, int]:
    """2-bit code of a ternary value."""
    try:
        return _CODE_OF[value]
    except KeyError:
        raise ValueError(f"{value!r} is not a ternary value") from None


def ternary_value(code) -> int:
    plus, minus = _check_code(code)
    return plus - minus


def binary_bit(value: int) -> int:
    if value == 1:
        return 0
    if value == -1:
        return 1
    if value == 0:
        raise ZeroInBinaryInput("binary encoding cannot represent 0")
    raise ValueError(f"{value!r} is not a binary value")


def binary_value(bit) -> int:
    return 1 - 2 * _check_bit(bit)


def ternary_mul(x_code, y_code) -> tuple[int, int]:
    """Product of two ternary codes using AND/OR only."""
    xp, xm = _check_code(x_code)
    yp, ym = _check_code(y_code)
    return (xp & yp) | (xm & ym), (xp & ym) | (xm & yp)


def ternary_binary_mul(x_code, y_bit) -> tuple[int, int]:
    """Product of a ternary code and a binary bit using OR/AND/OR-NOT."""
    xp, xm = _check_code(x_code)
    y = _check_bit(y_bit)
    ny = y ^ 1
    return (xp | y) & (xm | ny), (xp | ny) & (xm | y)


# -- linear quantization ------------------------------------------------------


@dataclass(frozen=True)
class QuantParams:
    """Linear quantization grid: real value = scale * (q - zero_point)."""

    scale: float
    zero_point: int
    bits: int = 8

    def __post_init__(self) -> None:
        if self.bits not in (4, 8):
            raise ValueError(f"bits must be 4 or 8, got {self.bits}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not 0 <= self.zero_point < self.qmax:
            raise ValueError(f"zero_point must lie in [0, {self.qmax}), got {self.zero_point}")

    @property
    def qmax(self) -> int:
        """Largest quantized value, 2**bits - 1."""
        return (1 << self.bits) - 1


def quantize(x, q: QuantParams):
    """Round-half-up onto the grid and saturate to [0, qmax]."""
    scaled = np.floor(np.asarray(x, dtype=np.float64) / q.scale + 0.5) + q.zero_point
    out = np.clip(scaled, 0, q.qmax).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def dequantize(x_hat, q: QuantParams):
    out = q.scale * (np.asarray(x_hat, dtype=np.float64) - q.zero_point)
    return float(out) if out.ndim == 0 else out
