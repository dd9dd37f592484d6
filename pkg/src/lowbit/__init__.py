"""Binary, ternary and ternary-binary matrix multiplication on bit-packed operands."""

from .conv import ConvSpec, FeatureMap, PackedConvWeights, conv2d_lowbit, im2col, pack_conv_weights
from .core import (
    BinaryPackedMatrix,
    QuantParams,
    SignMatrix,
    TernaryPackedMatrix,
    decode_binary,
    decode_ternary,
    dequantize,
    encode_binary,
    encode_ternary,
    quantize,
    ternary_binary_mul,
    ternary_mul,
)
from .errors import (
    ChannelOverflow,
    DepthOverflow,
    EmptyOutput,
    InvalidCode,
    InvalidPlan,
    LowbitError,
    ModeMismatch,
    OracleCheckFailed,
    OutOfBounds,
    ZeroInBinaryInput,
)
from .gemm import (
    DEFAULT_CONFIG,
    GemmConfig,
    GemmDims,
    QuantizedGemmInputs,
    QuantizedProduct,
    c_in_max,
    encode_a,
    gemm_f32,
    gemm_lowbit,
    gemm_quantized,
    k_max,
    matmul_lowbit,
    prepack_f32,
    reference_gemm_int,
)
from .kernels import AccumulatorTile, dot_binary, microkernel_bnn, microkernel_tbn, microkernel_tnn
from .packing import (
    PackedB,
    PackedBlock,
    pack_a_binary,
    pack_a_ternary,
    pack_b,
    pack_b_binary,
    pack_b_ternary,
    prepack_b,
)

__all__ = [name for name in dir() if not name.startswith("_")]
