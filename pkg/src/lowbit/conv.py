"""Convolution lowered to one low-bit matrix multiplication (im2col).

Feature maps are channel-last ``(H, W, C)``; kernels are ``(Hk, Wk, C_in,
C_out)``.  Each output pixel becomes one row of the lowered matrix, with
columns ordered by kernel row, kernel column, then channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import Mode, SignMatrix
from .errors import ChannelOverflow, EmptyOutput, ModeMismatch
from .gemm import LowbitMode, c_in_max, encode_a, gemm_lowbit, k_max
from .packing import PackedB, prepack_b


@dataclass(frozen=True)
class FeatureMap:
    values: np.ndarray
    mode: Mode = "ternary"

    def __post_init__(self) -> None:
        raw = np.asarray(self.values)
        if raw.ndim != 3:
            raise ValueError(f"feature map must be (H, W, C), got ndim={raw.ndim}")
        # reuse the domain checks of SignMatrix on a flattened view
        flat = SignMatrix(raw.reshape(raw.shape[0], -1), mode=self.mode)
        object.__setattr__(self, "values", flat.values.reshape(raw.shape))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class ConvSpec:
    """Kernel geometry.  ``pad_value`` fills the border: 0 suits ternary
    activations, +1 or -1 keep a binary feature map binary."""

    kernel_h: int
    kernel_w: int
    out_channels: int
    stride: int = 1
    padding: int = 0
    pad_value: int = 0

    def __post_init__(self) -> None:
        if min(self.kernel_h, self.kernel_w, self.out_channels) < 1:
            raise ValueError("kernel dimensions and out_channels must be >= 1")
        if self.stride < 1 or self.padding < 0:
            raise ValueError("stride must be >= 1 and padding >= 0")
        if self.pad_value not in (-1, 0, 1):
            raise ValueError(f"pad_value must be -1, 0 or +1, got {self.pad_value}")

    def output_size(self, height: int, width: int) -> tuple[int, int]:
        ho = (height + 2 * self.padding - self.kernel_h) // self.stride + 1
        wo = (width + 2 * self.padding - self.kernel_w) // self.stride + 1
        return max(ho, 0), max(wo, 0)


def im2col(fm: FeatureMap, spec: ConvSpec) -> SignMatrix:
    """Lower ``fm`` to a ``(Ho * Wo) x (Hk * Wk * C)`` matrix.

    The result is binary only if ``fm`` is binary and no zero padding was
    introduced.
    """
    ho, wo = spec.output_size(fm.height, fm.width)
    if ho < 1 or wo < 1:
        raise EmptyOutput(
            f"{spec.kernel_h}x{spec.kernel_w} kernel with padding {spec.padding} "
            f"does not fit a {fm.height}x{fm.width} input"
        )
    p = spec.padding
    x = np.pad(fm.values, ((p, p), (p, p), (0, 0)), constant_values=spec.pad_value)
    win = sliding_window_view(x, (spec.kernel_h, spec.kernel_w), axis=(0, 1))
    win = win[: (ho - 1) * spec.stride + 1 : spec.stride, : (wo - 1) * spec.stride + 1 : spec.stride]
    # (Ho, Wo, C, Hk, Wk) -> (Ho, Wo, Hk, Wk, C)
    cols = win.transpose(0, 1, 3, 4, 2).reshape(ho * wo, -1)
    binary = fm.mode == "binary" and (p == 0 or spec.pad_value != 0)
    return SignMatrix(cols, mode="binary" if binary else "ternary")


@dataclass(frozen=True)
class PackedConvWeights:
    """A kernel lowered to a ``(Hk * Wk * C_in) x C_out`` matrix and pre-packed."""

    mode: LowbitMode
    kernel_h: int
    kernel_w: int
    in_channels: int
    out_channels: int
    packed: PackedB


def _check_channels(c_in: int, kernel_h: int, kernel_w: int) -> None:
    limit = c_in_max(k_max(1, 16, sign_valued=True), kernel_h, kernel_w)
    if c_in > limit:
        raise ChannelOverflow(
            f"{c_in} input channels exceed c_in_max={limit} for a {kernel_h}x{kernel_w} kernel"
        )


def pack_conv_weights(kernel, mode: LowbitMode) -> PackedConvWeights:
    w = np.asarray(kernel)
    if w.ndim != 4:
        raise ValueError(f"kernel must be (Hk, Wk, C_in, C_out), got ndim={w.ndim}")
    hk, wk, c_in, c_out = w.shape
    _check_channels(c_in, hk, wk)
    return PackedConvWeights(mode, hk, wk, c_in, c_out, prepack_b(w.reshape(-1, c_out), mode))


def conv2d_lowbit(mode: LowbitMode, fm: FeatureMap, weights: PackedConvWeights,
                  spec: ConvSpec) -> np.ndarray:
    """Integer convolution, returned as int16 ``(Ho, Wo, C_out)``."""
    _check_channels(fm.channels, spec.kernel_h, spec.kernel_w)
    if weights.mode != mode:
        raise ModeMismatch(f"weights were packed for {weights.mode}, not {mode}")
    geometry = (weights.kernel_h, weights.kernel_w, weights.in_channels, weights.out_channels)
    if geometry != (spec.kernel_h, spec.kernel_w, fm.channels, spec.out_channels):
        raise ValueError(f"weights {geometry} do not match the feature map and ConvSpec")
    lowered = im2col(fm, spec)
    if mode == "bnn" and lowered.mode != "binary":
        raise ModeMismatch("bnn needs binary activations; zero padding makes them ternary")
    out = gemm_lowbit(mode, encode_a(lowered, mode), weights.packed)
    ho, wo = spec.output_size(fm.height, fm.width)
    return out.reshape(ho, wo, spec.out_channels)
