import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowbit.core import encode_binary, encode_ternary
from lowbit.errors import OutOfBounds
from lowbit.packing import (
    pack_a_binary,
    pack_a_ternary,
    pack_b,
    pack_b_binary,
    pack_b_ternary,
    prepack_b,
)

from oracles import unpack_block


def window(values, start, depth_start, k_eff, width):
    """Source rows covered by a block, before lane padding."""
    return values[start : start + width, depth_start : depth_start + k_eff]


class TestGoldenLayouts:
    def test_bnn_a_all_plus(self):
        blk = pack_a_binary(encode_binary(np.ones((16, 8), int)), 0, 0, 8)
        assert blk.buffer.tolist() == [0] * 16

    def test_bnn_a_row3_minus(self):
        a = np.ones((16, 8), int)
        a[3] = -1
        blk = pack_a_binary(encode_binary(a), 0, 0, 8)
        assert blk.buffer.tolist() == [0, 0, 0, 0xFF] + [0] * 12

    def test_bnn_b_all_plus(self):
        blk = pack_b_binary(encode_binary(np.ones((8, 24), int)), 0, 0, 24)
        assert blk.buffer.tolist() == [0] * 24

    def test_bnn_b_col5_minus(self):
        bt = np.ones((8, 24), int)  # B transposed: row c is column c of B
        bt[5] = -1
        blk = pack_b_binary(encode_binary(bt), 0, 0, 24)
        for g in range(3):
            group = blk.buffer[8 * g : 8 * g + 8].tolist()
            assert group == [0, 0, 0, 0, 0, 0xFF, 0, 0]

    def test_tnn_a_all_zero(self):
        blk = pack_a_ternary(encode_ternary(np.zeros((16, 16), int)), 0, 0, 16)
        assert not blk.buffer.any() and blk.buffer.size == 64

    def test_tnn_a_single_plus(self):
        a = np.zeros((16, 8), int)
        a[0, 0] = 1
        blk = pack_a_ternary(encode_ternary(a), 0, 0, 8)
        assert blk.buffer[0] == 0x01 and blk.buffer[1:].sum() == 0

    def test_tnn_a_group_order(self):
        # plus rows 0-7, minus rows 0-7, plus rows 8-15, minus rows 8-15
        a = np.zeros((16, 8), int)
        a[1, 0], a[2, 1], a[9, 2], a[15, 3] = 1, -1, 1, -1
        buf = pack_a_ternary(encode_ternary(a), 0, 0, 8).buffer
        expected = np.zeros(32, np.uint8)
        expected[1] = 0x01
        expected[8 + 2] = 0x02
        expected[16 + 1] = 0x04
        expected[24 + 7] = 0x08
        assert buf.tolist() == expected.tolist()

    def test_tnn_b_single_minus(self):
        bt = np.zeros((8, 8), int)
        bt[2, 0] = -1
        blk = pack_b_ternary(encode_ternary(bt), 0, 0, 8)
        assert blk.buffer[5] == 0x01 and blk.buffer.sum() == 1

    def test_partial_depth_byte_is_masked(self):
        a = -np.ones((16, 16), int)
        blk = pack_a_binary(encode_binary(a), 0, 8, 3)
        assert blk.buffer.tolist() == [0b111] * 16

    def test_row_remainder_is_zero_padded(self):
        a = -np.ones((5, 8), int)
        blk = pack_a_binary(encode_binary(a), 0, 0, 8)
        assert blk.logical_rows_or_cols == 5
        assert blk.buffer.tolist() == [0xFF] * 5 + [0] * 11


@pytest.mark.parametrize("k_eff", [8, 16, 64, 128, 504])
def test_buffer_lengths(k_eff):
    rng = np.random.default_rng(k_eff)
    a = rng.integers(-1, 2, (16, k_eff))
    s = rng.choice([-1, 1], (16, k_eff))
    nb = (k_eff + 7) // 8
    assert pack_a_binary(encode_binary(s), 0, 0, k_eff).buffer.size == 16 * nb
    assert pack_b_binary(encode_binary(s), 0, 0, k_eff).buffer.size == 8 * nb
    assert pack_a_ternary(encode_ternary(a), 0, 0, k_eff).buffer.size == 32 * nb
    assert pack_b_ternary(encode_ternary(a), 0, 0, k_eff).buffer.size == 16 * nb
    assert pack_a_binary(encode_binary(s), 0, 0, k_eff).depth_bytes == nb


PACKERS = {
    "bnn-A": (pack_a_binary, encode_binary, 16, True),
    "bnn-B": (pack_b_binary, encode_binary, 8, True),
    "tnn-A": (pack_a_ternary, encode_ternary, 16, False),
    "tnn-B": (pack_b_ternary, encode_ternary, 8, False),
}


@settings(max_examples=60, deadline=None)
@given(
    mode=st.sampled_from(sorted(PACKERS)),
    rows=st.integers(1, 40),
    cols=st.integers(1, 140),
    data=st.data(),
)
def test_unpack_oracle_recovers_source(mode, rows, cols, data):
    packer, encoder, width, binary = PACKERS[mode]
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    values = rng.choice([-1, 1], (rows, cols)) if binary else rng.integers(-1, 2, (rows, cols))
    start = data.draw(st.integers(0, rows - 1))
    depth_start = 8 * data.draw(st.integers(0, (cols - 1) // 8))
    k_eff = data.draw(st.integers(1, cols - depth_start))
    blk = packer(encoder(values), start, depth_start, k_eff)
    got = unpack_block(mode, blk.buffer, blk.depth_bytes, k_eff)
    src = window(values, start, depth_start, k_eff, width)
    assert (got[: src.shape[0]] == src).all()
    # lanes past the source are neutral: +1 for binary, 0 for ternary
    assert (got[src.shape[0] :] == (1 if binary else 0)).all()


class TestBounds:
    def test_row_start_outside(self):
        m = encode_binary(np.ones((16, 8), int))
        with pytest.raises(OutOfBounds):
            pack_a_binary(m, 16, 0, 8)

    def test_depth_window_outside(self):
        m = encode_ternary(np.ones((8, 16), int))
        with pytest.raises(OutOfBounds):
            pack_b_ternary(m, 0, 8, 9)

    def test_depth_start_alignment(self):
        m = encode_binary(np.ones((16, 16), int))
        with pytest.raises(ValueError):
            pack_a_binary(m, 0, 4, 8)

    def test_nonpositive_k_eff(self):
        m = encode_binary(np.ones((16, 16), int))
        with pytest.raises(ValueError):
            pack_a_binary(m, 0, 0, 0)


@pytest.mark.parametrize("mode,block_packer,width", [
    ("bnn", pack_b_binary, 8),
    ("tbn", pack_b_binary, 8),
    ("tnn", pack_b_ternary, 16),
])
def test_prepacked_panels_match_block_packer(mode, block_packer, width):
    rng = np.random.default_rng(11)
    k, n = 77, 21
    b = rng.integers(-1, 2, (k, n)) if mode == "tnn" else rng.choice([-1, 1], (k, n))
    packed = prepack_b(b, mode)
    encoded = (encode_ternary if mode == "tnn" else encode_binary)(b.T)
    assert packed.panels.shape == (3, width * 10)
    for t in range(3):
        # a depth slice of a panel is the block packer's output for that slice
        blk = block_packer(encoded, 8 * t, 16, 40)
        assert (packed.panels[t, width * 2 : width * 7] == blk.buffer).all()
    assert (pack_b(encoded).panels == packed.panels).all()
