import numpy as np
import pandas as pd
import pytest

from app import _int_list, main
from conftest import static_then_moving
from modules.codec import EncodeConfig, encode_sequence


@pytest.fixture
def raw_clip(tmp_path):
    sequence = static_then_moving(8, 8, 16)
    path = tmp_path / "clip.yuv"
    path.write_bytes(sequence.as_array().astype(np.uint8).tobytes())
    return sequence, path


def _encode_args(path, output, *extra):
    return ['encode', str(path), '--width', '8', '--height', '8', '-o', str(output), *extra]


@pytest.mark.parametrize("mc", ['none', 'block'])
def test_encode_decode_round_trip(raw_clip, tmp_path, capsys, mc):
    sequence, path = raw_clip
    container = tmp_path / "clip.cawl"
    assert main(_encode_args(path, container, '--levels', '3', '--lambda', '3', '--mc', mc)) == 0
    assert "PSNR_LP_t=" in capsys.readouterr().out

    decoded = tmp_path / "out.yuv"
    assert main(['decode', str(container), '-o', str(decoded)]) == 0
    assert decoded.read_bytes() == path.read_bytes()


def test_cli_matches_in_memory_encoder(raw_clip, tmp_path):
    sequence, path = raw_clip
    container = tmp_path / "clip.cawl"
    assert main(_encode_args(path, container, '--levels', '2')) == 0
    assert container.read_bytes() == encode_sequence(sequence, EncodeConfig(8, 8, i_max=2))


def test_preview_decode_writes_index(raw_clip, tmp_path):
    _, path = raw_clip
    container = tmp_path / "clip.cawl"
    main(_encode_args(path, container))
    preview = tmp_path / "preview.yuv"
    index = tmp_path / "index.csv"
    assert main(['decode', str(container), '-o', str(preview), '--keep-levels', '0', '--index', str(index)]) == 0
    positions = pd.read_csv(index)
    assert list(positions.columns) == ['position', 'support']
    assert positions['support'].sum() == 16
    assert len(preview.read_bytes()) == len(positions) * 64

    held = tmp_path / "held.yuv"
    assert main(['decode', str(container), '-o', str(held), '--keep-levels', '0', '--hold']) == 0
    assert len(held.read_bytes()) == 16 * 64


def test_extract_and_report(raw_clip, tmp_path, capsys):
    _, path = raw_clip
    container = tmp_path / "clip.cawl"
    main(_encode_args(path, container))
    base = tmp_path / "base.cawl"
    assert main(['extract', str(container), '-k', '0', '-o', str(base)]) == 0
    assert base.stat().st_size < container.stat().st_size
    capsys.readouterr()
    assert main(['report', str(base)]) == 0
    assert 'total' in capsys.readouterr().out


def test_analyze_csv(raw_clip, tmp_path):
    _, path = raw_clip
    csv = tmp_path / "sweep.csv"
    plot = tmp_path / "sweep.html"
    args = ['analyze', str(path), '--width', '8', '--height', '8', '--levels', '1-2', '--lambdas', '1,3',
            '--mc', 'none', '-o', str(csv), '--plot', str(plot)]
    assert main(args) == 0
    df = pd.read_csv(csv)
    assert list(df.columns) == ['level', 'mode', 'lambda', 'file_size_bytes', 'psnr_lp_t_db']
    assert len(df) == 4
    assert plot.read_text(encoding='utf-8').count('plotly') > 0


def test_argument_errors_exit_2(raw_clip, tmp_path):
    _, path = raw_clip
    container = tmp_path / "clip.cawl"
    assert main(_encode_args(path, container, '--lambda', '-1')) == 2
    main(_encode_args(path, container))
    assert main(['decode', str(container), '-o', str(tmp_path / "x.yuv"), '--keep-levels', '9']) == 2


def test_bad_container_exit_1(tmp_path, caplog):
    bogus = tmp_path / "bogus.cawl"
    bogus.write_bytes(b"NOPE" + bytes(40))
    assert main(['decode', str(bogus), '-o', str(tmp_path / "x.yuv")]) == 1
    assert "container" in caplog.text


def test_malformed_raw_input(tmp_path):
    path = tmp_path / "odd.yuv"
    path.write_bytes(bytes(65))
    assert main(_encode_args(path, tmp_path / "x.cawl")) == 2


def test_int_list():
    assert _int_list("1-3") == [1, 2, 3]
    assert _int_list("1,4,6") == [1, 4, 6]


def test_encode_with_infinite_lambda(raw_clip, tmp_path):
    _, path = raw_clip
    container = tmp_path / "clip.cawl"
    assert main(_encode_args(path, container, '--lambda', 'inf')) == 0
    decoded = tmp_path / "out.yuv"
    assert main(['decode', str(container), '-o', str(decoded)]) == 0
    assert decoded.read_bytes() == path.read_bytes()


def test_analyze_overlays_uniform(raw_clip, tmp_path, capsys):
    _, path = raw_clip
    csv = tmp_path / "sweep.csv"
    args = ['analyze', str(path), '--width', '8', '--height', '8', '--levels', '1-2', '--lambdas', '3',
            '--mc', 'none', '--uniform', 'both', '-o', str(csv)]
    assert main(args) == 0
    df = pd.read_csv(csv)
    assert len(df) == 4
    assert set(df['mode']) == {'none', 'none-uniform'}
    # tableau lisible en console quand le CSV va dans un fichier
    assert 'psnr_lp_t_db' in capsys.readouterr().out


def test_report_prints_every_section(raw_clip, tmp_path, capsys):
    _, path = raw_clip
    container = tmp_path / "clip.cawl"
    main(_encode_args(path, container))
    capsys.readouterr()
    assert main(['report', str(container)]) == 0
    out = capsys.readouterr().out
    for section in ('BL', 'EL3', 'motion', 'header', 'total'):
        assert section in out


LAMBDAS = ('1', '3', '5', '7')
MODES = ('none', 'block')


@pytest.mark.acceptance
@pytest.mark.parametrize("case", range(50))
def test_cli_lossless_at_scale(case, tmp_path):
    rng = np.random.default_rng(case)
    width, height = (int(n) for n in rng.integers(2, 65, size=2))
    frames = int(rng.integers(1, 33))
    lam, mc, levels = LAMBDAS[case % 4], MODES[(case // 4) % 2], 1 + case % 5
    path = tmp_path / "clip.yuv"
    path.write_bytes(rng.integers(0, 256, size=(frames, height, width), dtype=np.uint8).tobytes())

    container = tmp_path / "clip.cawl"
    args = ['encode', str(path), '--width', str(width), '--height', str(height), '-o', str(container),
            '--levels', str(levels), '--lambda', lam, '--mc', mc, '--search-init', '4', '--search-max', '16']
    assert main(args) == 0
    decoded = tmp_path / "out.yuv"
    assert main(['decode', str(container), '-o', str(decoded)]) == 0
    assert decoded.read_bytes() == path.read_bytes()
