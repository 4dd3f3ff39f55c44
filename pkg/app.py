"""
Ligne de commande du codec vidéo sans perte à lifting temporel adaptatif
Commandes : encode, decode, extract, analyze, compare, report
"""

import argparse
import logging
import os
import sys
import traceback
from pathlib import Path
from typing import List, Optional

import pandas as pd

# Ajouter la racine du dépôt au path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from modules.adaptive import HpDistortion, depth_histogram
from modules.codec import EncodeConfig, decode_preview, decode_sequence, encode_sequence, sequence_depth_vector
from modules.container import extract_temporal_layers, read_container
from modules.frame_io import load_raw_sequence, save_raw_sequence
from modules.metrics import (base_layer_psnr, comparison_table, compare_with_uniform, rate_report,
                            rate_report_table, sweep)
from modules.temporal import McMode
from modules.utils import ArgumentError, CodecError, Exporter
from visualization.charts import write_sweep_charts
from visualization.tables import TableGenerator, summary_line

logger = logging.getLogger("cawl")

LOG_LEVEL_ENV = "CAWL_LOG_LEVEL"

# valeurs de force_uniform balayées par analyze --uniform
UNIFORM_VARIANTS = {'no': (False,), 'only': (True,), 'both': (False, True)}


# ============================================================================
# ANALYSE DES ARGUMENTS
# ============================================================================
def _int_list(text: str) -> List[int]:
    """« 1-6 » ou « 1,3,5 »"""
    values = []
    for part in text.split(','):
        if '-' in part.strip('-'):
            low, high = part.split('-', 1)
            values.extend(range(int(low), int(high) + 1))
        else:
            values.append(int(part))
    return values


def _float_list(text: str) -> List[float]:
    return [float(part) for part in text.split(',')]


def _mc_list(text: str) -> List[McMode]:
    return [McMode(part) for part in text.split(',')]


def _add_geometry(parser: argparse.ArgumentParser):
    parser.add_argument('input', type=Path, help="Vidéo brute 8 bits (4:0:0)")
    parser.add_argument('--width', type=int, required=True)
    parser.add_argument('--height', type=int, required=True)


def _add_coding(parser: argparse.ArgumentParser):
    parser.add_argument('--block-size', type=int, default=8)
    parser.add_argument('--search-init', type=int, default=8, help="Fenêtre de recherche au niveau 1")
    parser.add_argument('--search-max', type=int, default=64)
    parser.add_argument('--hp-distortion', choices=[p.value for p in HpDistortion], default='energy')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='cawl', description=__doc__.strip().splitlines()[0])
    parser.add_argument('--log-level', default=os.environ.get(LOG_LEVEL_ENV, 'WARNING'),
                        help=f"Niveau de journalisation (ou variable {LOG_LEVEL_ENV})")
    parser.add_argument('--threads', type=int, default=1, help="Nombre maximal de threads")
    sub = parser.add_subparsers(dest='command', required=True)

    encode = sub.add_parser('encode', help="Encode une vidéo brute")
    _add_geometry(encode)
    encode.add_argument('-o', '--output', type=Path, required=True)
    encode.add_argument('--levels', type=int, default=3, help="i_max (1 à 8)")
    encode.add_argument('--lambda', dest='lam', type=float, default=3.0)
    encode.add_argument('--mc', choices=[m.value for m in McMode], default='none')
    encode.add_argument('--force-uniform', action='store_true', help="Décomposition uniforme (U-WL)")
    _add_coding(encode)

    decode = sub.add_parser('decode', help="Décode un conteneur")
    decode.add_argument('input', type=Path)
    decode.add_argument('-o', '--output', type=Path, required=True)
    decode.add_argument('--keep-levels', type=int, default=None, help="Couches EL gardées (défaut: toutes)")
    decode.add_argument('--hold', action='store_true', help="Répète chaque LP sur son support")
    decode.add_argument('--index', type=Path, default=None, help="Fichier CSV des positions (aperçu)")

    extract = sub.add_parser('extract', help="Extrait des couches temporelles")
    extract.add_argument('input', type=Path)
    extract.add_argument('-k', '--keep-levels', type=int, required=True)
    extract.add_argument('-o', '--output', type=Path, required=True)

    analyze = sub.add_parser('analyze', help="Balayage niveaux × λ × mode")
    _add_geometry(analyze)
    analyze.add_argument('--levels', type=_int_list, default=_int_list('1-6'))
    analyze.add_argument('--lambdas', type=_float_list, default=_float_list('1,3,5,7'))
    analyze.add_argument('--mc', type=_mc_list, default=_mc_list('none,block'))
    analyze.add_argument('--uniform', nargs='?', const='only', default='no', choices=list(UNIFORM_VARIANTS),
                         help="Décomposition uniforme (U-WL) ; « both » superpose CA-WL et U-WL")
    analyze.add_argument('-o', '--output', type=Path, default=None, help="CSV (défaut: sortie standard)")
    analyze.add_argument('--plot', type=Path, default=None, help="Courbes HTML")
    analyze.add_argument('--excel', type=Path, default=None, help="Classeur Excel")
    _add_coding(analyze)

    compare = sub.add_parser('compare', help="Compare CA-WL et U-WL")
    _add_geometry(compare)
    compare.add_argument('--levels', type=int, default=3)
    compare.add_argument('--lambdas', type=_float_list, default=_float_list('1,3,5,7'))
    compare.add_argument('--mc', type=_mc_list, default=_mc_list('none,block'))
    compare.add_argument('-o', '--output', type=Path, default=None, help="CSV des comparaisons")
    _add_coding(compare)

    report = sub.add_parser('report', help="Octets par couche d'un conteneur")
    report.add_argument('input', type=Path)

    return parser


def _config(args, **overrides) -> EncodeConfig:
    values = dict(
        width=args.width, height=args.height, block_size=args.block_size,
        initial_search_range=args.search_init, max_search_range=args.search_max,
        hp_distortion=HpDistortion(args.hp_distortion), threads=args.threads,
    )
    values.update(overrides)
    return EncodeConfig(**values).validate()


# ============================================================================
# COMMANDES
# ============================================================================
def cmd_encode(args) -> int:
    config = _config(args, i_max=args.levels, lam=args.lam, mc_mode=McMode(args.mc),
                     force_uniform=args.force_uniform)
    sequence = load_raw_sequence(args.input, args.width, args.height)
    data = encode_sequence(sequence, config)
    args.output.write_bytes(data)

    report = rate_report(data)
    histogram = depth_histogram(sequence_depth_vector(read_container(data)))
    trailing = sequence.frame_count % config.gop_size
    if trailing:
        histogram[0] = histogram.get(0, 0) + trailing
    layers = {**report.layer_bytes, 'motion': report.motion_bytes, 'v': report.depth_bytes}
    print(summary_line(report.total, layers, base_layer_psnr(data, sequence)))
    print(TableGenerator.depth_summary(histogram))
    return 0


def cmd_decode(args) -> int:
    data = args.input.read_bytes()
    header = read_container(data).header
    keep = header.i_max if args.keep_levels is None else args.keep_levels
    if not 0 <= keep <= header.i_max:
        raise ArgumentError(f"--keep-levels hors de [0, {header.i_max}]: {keep}")

    if keep == header.i_max and header.layers_kept == header.i_max:
        save_raw_sequence(decode_sequence(data, threads=args.threads), args.output)
        return 0

    preview = decode_preview(extract_temporal_layers(data, keep), hold=args.hold, threads=args.threads)
    save_raw_sequence(preview.to_sequence(), args.output)
    index_path = args.index or args.output.with_suffix(args.output.suffix + '.index.csv')
    Exporter.to_csv(pd.DataFrame(preview.index(), columns=['position', 'support']), index_path)
    logger.info("Aperçu: %d trame(s), index écrit dans %s", len(preview.frames), index_path)
    return 0


def cmd_extract(args) -> int:
    args.output.write_bytes(extract_temporal_layers(args.input.read_bytes(), args.keep_levels))
    return 0


def cmd_analyze(args) -> int:
    sequence = load_raw_sequence(args.input, args.width, args.height)
    base = _config(args)
    df = pd.concat([sweep(sequence, args.levels, args.lambdas, args.mc, base, uniform=uniform)
                    for uniform in UNIFORM_VARIANTS[args.uniform]], ignore_index=True)
    text = Exporter.to_csv(df, args.output)
    if args.output is None:
        sys.stdout.write(text)
    else:
        print(TableGenerator.sweep_table(df))
    if args.plot is not None:
        write_sweep_charts(df, args.plot)
    if args.excel is not None:
        Exporter.to_excel({'balayage': df}, args.excel)
    return 0


def cmd_compare(args) -> int:
    sequence = load_raw_sequence(args.input, args.width, args.height)
    rows = [compare_with_uniform(sequence, _config(args, i_max=args.levels, lam=lam, mc_mode=mode))
            for mode in args.mc for lam in args.lambdas]
    df = comparison_table(rows)
    if args.output is not None:
        Exporter.to_csv(df, args.output)
    print(TableGenerator.comparison_table(df))
    return 0


def cmd_report(args) -> int:
    print(TableGenerator.rate_table(rate_report_table(args.input.read_bytes())))
    return 0


COMMANDS = {
    'encode': cmd_encode,
    'decode': cmd_decode,
    'extract': cmd_extract,
    'analyze': cmd_analyze,
    'compare': cmd_compare,
    'report': cmd_report,
}


def _failing_module(exc: BaseException) -> str:
    """Dernier module du paquet traversé par l'exception"""
    name = 'app'
    for frame in traceback.extract_tb(exc.__traceback__):
        path = Path(frame.filename)
        if path.parent.name in ('modules', 'visualization'):
            name = path.stem
    return name


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.getLevelName(str(args.log_level).upper())
    if not isinstance(level, int):
        parser.error(f"niveau de journalisation inconnu: {args.log_level}")
    logging.basicConfig(level=level,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return COMMANDS[args.command](args)
    except ArgumentError as exc:
        logger.error("[%s] %s", _failing_module(exc), exc)
        return 2
    except CodecError as exc:
        logger.error("[%s] %s: %s", _failing_module(exc), type(exc).__name__, exc)
        return 1
    except OSError as exc:
        logger.error("[entrée/sortie] %s", exc)
        return 1


if __name__ == '__main__':
    sys.exit(main())
