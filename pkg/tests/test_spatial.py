import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import textured_frame
from modules.frame_io import CoefficientFrame, FrameKind
from modules.spatial import (decode_frame_lossless, dwt53_forward, dwt53_inverse, effective_levels,
                             encode_frame_lossless, subband_shapes, _warn_reduced_levels)
from modules.utils import ArgumentError

shapes = st.tuples(st.integers(1, 24), st.integers(1, 24))


@given(arrays(np.int32, shapes, elements=st.integers(0, 255)))
def test_lp_range_round_trip(samples):
    height, width = samples.shape
    decoded = decode_frame_lossless(encode_frame_lossless(CoefficientFrame(samples)), (width, height))
    assert np.array_equal(decoded.samples, samples)


@given(arrays(np.int32, shapes, elements=st.integers(-255, 255)))
def test_hp_range_round_trip(samples):
    height, width = samples.shape
    data = encode_frame_lossless(CoefficientFrame(samples, FrameKind.HP))
    decoded = decode_frame_lossless(data, (width, height), FrameKind.HP)
    assert np.array_equal(decoded.samples, samples)
    assert decoded.kind is FrameKind.HP


def test_transform_is_reversible(rng):
    samples = rng.integers(-300, 300, size=(17, 23))
    decomposition = dwt53_forward(samples)
    assert decomposition.levels == 4
    assert decomposition.coefficient_count() == samples.size
    assert np.array_equal(dwt53_inverse(decomposition).samples, samples)


def test_subband_shapes_match_transform(rng):
    decomposition = dwt53_forward(rng.integers(0, 256, size=(13, 9)))
    ll_shape, levels = subband_shapes(9, 13, decomposition.levels)
    assert decomposition.ll.shape == ll_shape
    for (hl, lh, hh), expected in zip(decomposition.details, levels):
        assert (hl.shape, lh.shape, hh.shape) == expected


def test_constant_frame_has_no_detail():
    decomposition = dwt53_forward(np.full((16, 16), 77))
    for _, _, band in decomposition.subbands():
        if band is not decomposition.ll:
            assert not band.any()


def test_zero_hp_frame_is_nearly_free():
    data = encode_frame_lossless(CoefficientFrame(np.zeros((256, 256)), FrameKind.HP))
    assert len(data) * 8 / (256 * 256) < 0.01


def test_texture_costs_more_than_flat():
    flat = encode_frame_lossless(CoefficientFrame(np.full((16, 16), 128)))
    textured = encode_frame_lossless(CoefficientFrame(textured_frame(16, 16)))
    assert len(textured) > len(flat)


def test_small_frames_reduce_levels(caplog):
    assert effective_levels(8, 8) == 3
    assert effective_levels(1, 1) == 0
    _warn_reduced_levels.cache_clear()
    with caplog.at_level("WARNING"):
        for _ in range(5):
            dwt53_forward(np.zeros((8, 8)))
        dwt53_forward(np.zeros((8, 4)))
    # un avertissement par format, pas par trame
    assert caplog.text.count("niveau") == 2


def test_empty_frame():
    with pytest.raises(ArgumentError):
        dwt53_forward(np.zeros((0, 4)))


@pytest.mark.acceptance
def test_ten_thousand_random_frames():
    rng = np.random.default_rng(2024)
    for index in range(10_000):
        height, width = (int(n) for n in rng.integers(1, 33, size=2))
        kind = FrameKind.LP if index % 2 == 0 else FrameKind.HP
        low = 0 if kind is FrameKind.LP else -255
        samples = rng.integers(low, 256, size=(height, width))
        decoded = decode_frame_lossless(encode_frame_lossless(CoefficientFrame(samples, kind)), (width, height), kind)
        assert np.array_equal(decoded.samples, samples), (index, width, height)
