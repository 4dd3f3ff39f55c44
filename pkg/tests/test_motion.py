import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import textured_frame
from modules.frame_io import FrameKind
from modules.motion import (McParams, MotionField, candidate_order, decode_motion_field, encode_motion_field,
                            estimate_block_motion, predict_array, search_range_for_level, update_array,
                            warp_predict, warp_update)
from modules.utils import ArgumentError, EntropyError


def _oracle(reference, current, search_range, block_size):
    """Recherche exhaustive bloc par bloc avec lecture bornée"""
    height, width = current.shape
    rows, cols = -(-height // block_size), -(-width // block_size)
    out = np.zeros((rows, cols, 2), dtype=np.int32)
    for by in range(rows):
        for bx in range(cols):
            ys = np.arange(by * block_size, min((by + 1) * block_size, height))
            xs = np.arange(bx * block_size, min((bx + 1) * block_size, width))
            block = current[np.ix_(ys, xs)].astype(np.int64)
            best = None
            for dy, dx in candidate_order(search_range):
                ry = np.clip(ys + dy, 0, height - 1)
                rx = np.clip(xs + dx, 0, width - 1)
                sad = int(np.abs(block - reference[np.ix_(ry, rx)]).sum())
                if best is None or sad < best:
                    best = sad
                    out[by, bx] = (dx, dy)
    return out


def test_matches_brute_force_oracle(rng):
    params = McParams(block_size=8)
    for index in range(100):
        reference = rng.integers(0, 256, size=(32, 32))
        # la moitié des paires contient un vrai déplacement
        if index % 2:
            current = np.roll(reference, (int(rng.integers(-4, 5)), int(rng.integers(-4, 5))), axis=(0, 1))
        else:
            current = rng.integers(0, 256, size=(32, 32))
        field = estimate_block_motion(reference, current, 4, params)
        assert np.array_equal(field.vectors, _oracle(reference, current, 4, 8)), index


def test_recovers_global_shift():
    reference = textured_frame(32, 32, seed=3).astype(np.int64)
    shift = MotionField(np.tile([2, 1], (4, 4, 1)), 8, 4, 32, 32)
    current = predict_array(reference, shift)
    field = estimate_block_motion(reference, current, 4)
    assert np.all(field.dx == 2)
    assert np.all(field.dy == 1)


def test_identical_frames_give_zero_field(rng):
    frame = rng.integers(0, 256, size=(16, 16))
    field = estimate_block_motion(frame, frame, 4)
    assert field.is_identity()


def test_candidate_order_prefers_short_vectors():
    order = candidate_order(2)
    assert order[0] == (0, 0)
    assert order[1:5] == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert len(order) == 25


@pytest.mark.parametrize("level, expected", [(1, 8), (2, 16), (4, 64), (6, 64)])
def test_search_range_doubles_and_caps(level, expected):
    assert search_range_for_level(level, McParams()) == expected


def test_invalid_params():
    with pytest.raises(ArgumentError):
        McParams(block_size=0).validate()
    with pytest.raises(ArgumentError):
        McParams(initial_search_range=128, max_search_range=64).validate()


def test_update_scatters_blocks():
    hp = np.arange(16).reshape(4, 4)
    field = MotionField(np.array([[[1, 0], [0, 0]], [[0, 0], [0, 0]]]), 2, 1, 4, 4)
    out = update_array(hp, field)
    # bloc (0,0) écrit en colonnes 1..2, puis écrasé en colonne 2 par le bloc (0,1)
    assert out[0].tolist() == [0, 0, 2, 3]
    assert out[2:].tolist() == hp[2:].tolist()


@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 8), st.data())
def test_field_serialization(width, height, block_size, data):
    rows, cols = -(-height // block_size), -(-width // block_size)
    values = data.draw(st.lists(st.integers(-16, 16), min_size=rows * cols * 2, max_size=rows * cols * 2))
    field = MotionField(np.array(values).reshape(rows, cols, 2), block_size, 16, width, height)
    decoded = decode_motion_field(encode_motion_field(field), (width, height), block_size, 16)
    assert decoded == field


def test_decode_rejects_trailing_bytes():
    field = MotionField.zeros(8, 8, 4)
    with pytest.raises(EntropyError):
        decode_motion_field(encode_motion_field(field) + b"\x01", (8, 8), 4)


def test_zero_field_warps_are_identity(rng):
    frame = rng.integers(-255, 256, size=(12, 10))
    field = MotionField.zeros(10, 12, 4)
    assert np.array_equal(warp_predict(frame, field).samples, frame)
    updated = warp_update(frame, field)
    assert np.array_equal(updated.samples, frame)
    assert updated.kind is FrameKind.HP


def test_single_block_shift_reads_clamped_column():
    reference = np.arange(16).reshape(4, 4)
    field = MotionField(np.array([[[1, 0]]]), 4, 1, 4, 4)
    predicted = warp_predict(reference, field).samples
    for j in range(4):
        assert predicted[:, j].tolist() == reference[:, min(j + 1, 3)].tolist()


@pytest.mark.parametrize("seed", range(5))
def test_zero_hp_scatters_to_zero(seed):
    rng = np.random.default_rng(seed)
    field = MotionField(rng.integers(-3, 4, size=(3, 3, 2)), 4, 3, 10, 12)
    assert not warp_update(np.zeros((12, 10)), field).samples.any()


def test_warp_rejects_uncovered_frame():
    field = MotionField.zeros(8, 8, 4)
    with pytest.raises(ArgumentError):
        warp_predict(np.zeros((8, 12)), field)
    with pytest.raises(ArgumentError):
        warp_update(np.zeros((4, 8)), field)


def test_zero_field_costs_under_a_byte_per_vector():
    field = MotionField.zeros(64, 64, 8)
    assert field.block_count == 64
    data = encode_motion_field(field)
    assert len(data) < field.block_count
    assert decode_motion_field(data, (64, 64), 8) == field
