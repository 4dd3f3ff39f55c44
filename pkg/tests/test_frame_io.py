import numpy as np
import pytest

from modules.frame_io import CoefficientFrame, Frame, FrameKind, Sequence, load_raw_sequence, save_raw_sequence
from modules.utils import ArgumentError, ConsistencyError, MalformedInputError, SampleRangeError


def test_load_three_frames(tmp_path):
    path = tmp_path / "in.yuv"
    path.write_bytes(bytes(range(12)))
    seq = load_raw_sequence(path, 2, 2)
    assert seq.frame_count == 3
    assert seq.frames[1].samples.tolist() == [[4, 5], [6, 7]]


def test_save_load_round_trip(tmp_path, rng):
    planes = rng.integers(0, 256, size=(5, 6, 7))
    path = tmp_path / "clip.yuv"
    save_raw_sequence(Sequence.from_array(planes), path)
    assert path.read_bytes() == planes.astype(np.uint8).tobytes()
    assert np.array_equal(load_raw_sequence(path, 7, 6).as_array(), planes)


def test_size_not_multiple(tmp_path):
    path = tmp_path / "bad.yuv"
    path.write_bytes(b"\x00" * 13)
    with pytest.raises(MalformedInputError):
        load_raw_sequence(path, 2, 2)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.yuv"
    path.write_bytes(b"")
    with pytest.raises(MalformedInputError):
        load_raw_sequence(path, 2, 2)


def test_invalid_dimensions(tmp_path):
    path = tmp_path / "x.yuv"
    path.write_bytes(b"\x00" * 4)
    with pytest.raises(ArgumentError):
        load_raw_sequence(path, 0, 2)


def test_save_rejects_coefficients(tmp_path):
    seq = Sequence([CoefficientFrame(np.array([[-3, 4]]), FrameKind.HP)])
    with pytest.raises(SampleRangeError):
        save_raw_sequence(seq, tmp_path / "out.yuv")


def test_frame_range_checks():
    with pytest.raises(SampleRangeError):
        Frame(np.array([[256]]))
    with pytest.raises(ConsistencyError):
        CoefficientFrame(np.array([[40000]]))


def test_frames_are_read_only():
    frame = Frame(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        frame.samples[0, 0] = 1


def test_sequence_requires_same_shape():
    with pytest.raises(ArgumentError):
        Sequence([Frame(np.zeros((2, 2))), Frame(np.zeros((2, 3)))])
    with pytest.raises(ArgumentError):
        Sequence([])
