import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import static_then_moving, textured_frame
from modules.adaptive import PruneDecision
from modules.codec import (LAMBDA_MILLI_MAX, EncodeConfig, decode_preview, decode_sequence, encode_sequence,
                          lambda_milli, sequence_depth_vector)
from modules.container import extract_temporal_layers, read_container
from modules.frame_io import Sequence
from modules.temporal import McMode
from modules.utils import ArgumentError

REFERENCE_V = (3, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 2, 0, 0, 0)


def _reference_decisions(level, position):
    kept = {(2, 8)}
    return PruneDecision.KEEP_PARENT if (level, position) in kept else PruneDecision.DECOMPOSE


@given(
    st.integers(2, 10), st.integers(2, 10), st.integers(1, 12), st.sampled_from([1.0, 3.0, 5.0, 7.0]),
    st.sampled_from(list(McMode)), st.integers(1, 3), st.integers(0, 2 ** 32 - 1),
)
def test_lossless_round_trip(width, height, frames, lam, mode, i_max, seed):
    planes = np.random.default_rng(seed).integers(0, 256, size=(frames, height, width))
    sequence = Sequence.from_array(planes)
    config = EncodeConfig(width, height, i_max=i_max, lam=lam, mc_mode=mode, block_size=4,
                          initial_search_range=2, max_search_range=8)
    assert decode_sequence(encode_sequence(sequence, config)).as_array().tolist() == planes.tolist()


@pytest.mark.parametrize("mode", list(McMode))
def test_mixed_content_round_trip(mode):
    sequence = static_then_moving(16, 16, 16)
    data = encode_sequence(sequence, EncodeConfig(16, 16, i_max=3, mc_mode=mode))
    assert decode_sequence(data) == sequence


def test_encoding_is_deterministic_and_thread_independent():
    sequence = static_then_moving(8, 8, 8)
    config = EncodeConfig(8, 8, i_max=3, mc_mode=McMode.BLOCK, block_size=4)
    first = encode_sequence(sequence, config)
    assert encode_sequence(sequence, config) == first
    config.threads = 4
    assert encode_sequence(sequence, config) == first
    assert decode_sequence(first, threads=4) == sequence


def test_reference_partition():
    planes = np.stack([textured_frame(8, 8, seed=t) for t in range(16)])
    sequence = Sequence.from_array(planes)
    data = encode_sequence(sequence, EncodeConfig(8, 8, i_max=3), forced=_reference_decisions)
    assert sequence_depth_vector(read_container(data)).values == REFERENCE_V

    preview = decode_preview(extract_temporal_layers(data, 0))
    assert preview.positions == [0, 8, 10, 12]
    assert preview.levels == [3, 1, 1, 2]
    assert decode_sequence(data) == sequence


def test_intermediate_resolution():
    planes = np.stack([textured_frame(8, 8, seed=t) for t in range(16)])
    data = encode_sequence(Sequence.from_array(planes), EncodeConfig(8, 8, i_max=3), forced=_reference_decisions)
    preview = decode_preview(extract_temporal_layers(data, 1))
    # EL3 seul : le LP de niveau 3 redescend au niveau 2
    assert preview.positions == [0, 4, 8, 10, 12]
    assert preview.levels == [2, 2, 1, 1, 2]


def test_hold_preview_has_full_rate():
    sequence = static_then_moving(8, 8, 16)
    data = encode_sequence(sequence, EncodeConfig(8, 8, i_max=3))
    preview = decode_preview(extract_temporal_layers(data, 0), hold=True)
    assert preview.to_sequence().frame_count == 16
    assert len(decode_preview(extract_temporal_layers(data, 0)).to_sequence().frames) == len(preview.frames)


@pytest.mark.parametrize("changes", [dict(lam=-1.0), dict(i_max=9), dict(i_max=0), dict(threads=0),
                                     dict(block_size=0), dict(initial_search_range=100)])
def test_invalid_config(changes):
    values = dict(width=8, height=8)
    values.update(changes)
    with pytest.raises(ArgumentError):
        EncodeConfig(**values).validate()


def test_dimension_mismatch():
    sequence = static_then_moving(8, 8, 4)
    with pytest.raises(ArgumentError):
        encode_sequence(sequence, EncodeConfig(16, 8, i_max=2))


def test_infinite_lambda_is_stored_saturated():
    sequence = static_then_moving(8, 8, 8)
    data = encode_sequence(sequence, EncodeConfig(8, 8, i_max=3, lam=math.inf))
    assert read_container(data).header.lambda_milli == LAMBDA_MILLI_MAX
    assert decode_sequence(data) == sequence


@pytest.mark.parametrize("lam, expected", [(0.0, 0), (3.0, 3000), (2.5e6, 2_500_000_000), (1e12, LAMBDA_MILLI_MAX),
                                           (math.inf, LAMBDA_MILLI_MAX)])
def test_lambda_milli(lam, expected):
    assert lambda_milli(lam) == expected
