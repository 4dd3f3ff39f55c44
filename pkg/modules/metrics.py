"""
Module de mesures
PSNR_LP_t de la couche de base, attribution des octets du conteneur,
comparaison CA-WL / U-WL et balayages niveaux × λ × mode
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Mapping, Union

import numpy as np
import pandas as pd

from modules.adaptive import DepthVector, Role, parse_depth_vector, support_depths
from modules.codec import EncodeConfig, decode_preview, encode_sequence
from modules.container import BASE_LAYER, extract_temporal_layers, read_container, section_sizes
from modules.frame_io import CoefficientFrame, Frame, Sequence
from modules.temporal import McMode
from modules.utils import ArgumentError, Validator

logger = logging.getLogger(__name__)

PEAK = 255.0
SWEEP_COLUMNS = ['level', 'mode', 'lambda', 'file_size_bytes', 'psnr_lp_t_db']
UNIFORM_SUFFIX = '-uniform'


# ============================================================================
# QUALITÉ
# ============================================================================
def psnr_lp_t(base_layer: Mapping[int, Union[Frame, CoefficientFrame]], original: Sequence,
              v: DepthVector) -> float:
    """
    PSNR de la couche de base à EQM groupée

    Chaque trame BL est comparée à toutes les trames originales de son
    support ; les intra (et les trames finales hors v) comptent pour une
    erreur nulle. Une EQM nulle donne +inf (« lossless »).

    Args:
        base_layer: Trame BL par position
        original: Séquence originale
        v: Vecteur de profondeur des GOP complets
    """
    supports = {role.position: 1 << role.level for role in parse_depth_vector(v) if role.role is not Role.HP}
    for position in range(len(v), original.frame_count):
        supports[position] = 1
    if sorted(base_layer) != sorted(supports):
        raise ArgumentError(f"Positions BL {sorted(base_layer)} incompatibles avec v ({sorted(supports)})")

    squared = 0.0
    for position, frame in base_layer.items():
        samples = frame.samples.astype(np.float64)
        for original_frame in original.frames[position:position + supports[position]]:
            Validator.check_same_shape(samples, original_frame.samples)
            squared += float(np.sum((samples - original_frame.samples) ** 2))
    mse = squared / (original.frame_count * original.width * original.height)
    if mse == 0:
        return math.inf
    return 10 * math.log10(PEAK ** 2 / mse)


def mean_support_depth(v: DepthVector, positions: Iterable[int]) -> float:
    """Profondeur moyenne atteinte sur un ensemble de positions"""
    depths = support_depths(v)
    selected = [depths[p] for p in positions]
    if not selected:
        raise ArgumentError("Aucune position sélectionnée")
    return float(np.mean(selected))


def base_layer_psnr(data: bytes, original: Sequence) -> float:
    """PSNR_LP_t d'un conteneur contre la séquence qu'il code"""
    preview = decode_preview(extract_temporal_layers(data, 0))
    return psnr_lp_t(dict(zip(preview.positions, preview.frames)), original, preview.depth)


# ============================================================================
# DÉBIT
# ============================================================================
@dataclass(frozen=True)
class RateReport:
    layer_bytes: Dict[str, int]
    motion_bytes: int
    depth_bytes: int
    header_bytes: int
    pixels: int

    @property
    def total(self) -> int:
        return sum(self.layer_bytes.values()) + self.motion_bytes + self.depth_bytes + self.header_bytes

    @property
    def bits_per_pixel(self) -> float:
        return self.total * 8 / self.pixels

    def as_frame(self) -> pd.DataFrame:
        rows = [(name, size) for name, size in self.layer_bytes.items()]
        rows += [('motion', self.motion_bytes), ('v', self.depth_bytes), ('header', self.header_bytes),
                 ('total', self.total)]
        df = pd.DataFrame(rows, columns=['section', 'bytes'])
        df['bpp'] = df['bytes'] * 8 / self.pixels
        return df


def _layer_name(layer_id: int) -> str:
    return 'BL' if layer_id == BASE_LAYER else f'EL{layer_id}'


def rate_report(data: bytes) -> RateReport:
    """Attribution exacte des octets ; total == len(data)"""
    bitstream = read_container(data)
    sizes = section_sizes(bitstream, len(data))
    header = bitstream.header
    order = [BASE_LAYER] + header.kept_levels
    return RateReport(
        layer_bytes={_layer_name(k): sizes.layers[k] for k in order},
        motion_bytes=sizes.motion,
        depth_bytes=sizes.depth,
        header_bytes=sizes.header,
        pixels=header.width * header.height * header.frame_count,
    )


def rate_report_table(data: bytes) -> pd.DataFrame:
    return rate_report(data).as_frame()


# ============================================================================
# COMPARAISONS ET BALAYAGES
# ============================================================================
@dataclass(frozen=True)
class ComparisonRow:
    mode: str
    lam: float
    psnr_adaptive_db: float
    psnr_uniform_db: float
    size_adaptive: int
    size_uniform: int

    @property
    def delta_psnr_db(self) -> float:
        if math.isinf(self.psnr_adaptive_db) and math.isinf(self.psnr_uniform_db):
            return 0.0
        return self.psnr_adaptive_db - self.psnr_uniform_db

    @property
    def delta_size_percent(self) -> float:
        return 100.0 * (self.size_adaptive - self.size_uniform) / self.size_uniform


def compare_with_uniform(sequence: Sequence, config: EncodeConfig) -> ComparisonRow:
    """Encode en CA-WL puis avec décomposition forcée (U-WL) et compare"""
    adaptive = encode_sequence(sequence, replace(config, force_uniform=False))
    uniform = encode_sequence(sequence, replace(config, force_uniform=True))
    row = ComparisonRow(
        mode=config.mc_mode.value,
        lam=config.lam,
        psnr_adaptive_db=base_layer_psnr(adaptive, sequence),
        psnr_uniform_db=base_layer_psnr(uniform, sequence),
        size_adaptive=len(adaptive),
        size_uniform=len(uniform),
    )
    logger.info("λ=%s %s: ΔPSNR=%.2f dB, Δtaille=%.2f %%", config.lam, row.mode, row.delta_psnr_db,
                row.delta_size_percent)
    return row


def comparison_table(rows: Iterable[ComparisonRow]) -> pd.DataFrame:
    return pd.DataFrame([{
        'mode': row.mode,
        'lambda': row.lam,
        'delta_psnr_db': row.delta_psnr_db,
        'delta_size_percent': row.delta_size_percent,
        'size_adaptive': row.size_adaptive,
        'size_uniform': row.size_uniform,
    } for row in rows])


def sweep(sequence: Sequence, levels: Iterable[int], lambdas: Iterable[float], modes: Iterable[McMode],
          base: EncodeConfig, uniform: bool = False) -> pd.DataFrame:
    """
    Balayage niveaux × λ × mode

    Returns:
        Une ligne par combinaison, colonnes SWEEP_COLUMNS
    """
    rows: List[dict] = []
    for mode in modes:
        for lam in lambdas:
            for level in levels:
                config = replace(base, i_max=level, lam=lam, mc_mode=mode, force_uniform=uniform)
                data = encode_sequence(sequence, config)
                rows.append({
                    'level': level,
                    'mode': mode.value + (UNIFORM_SUFFIX if uniform else ''),
                    'lambda': lam,
                    'file_size_bytes': len(data),
                    'psnr_lp_t_db': base_layer_psnr(data, sequence),
                })
                logger.debug("Balayage: %s", rows[-1])
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
