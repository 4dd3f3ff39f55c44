"""
Module d'orchestration du codec
Configuration d'encodage, encodage d'une séquence en conteneur, décodage
complet et aperçu à résolution temporelle réduite
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from modules.adaptive import (DepthVector, HpDistortion, LambdaConfig, PruneDecision, Role,
                              build_adaptive_decomposition, parse_depth_vector)
from modules.container import (BASE_LAYER, FrameRecord, GopSection, LayeredBitstream, StreamHeader,
                               read_container, write_container)
from modules.entropy import encode_depth_vector
from modules.frame_io import CoefficientFrame, Frame, FrameKind, Sequence
from modules.motion import McParams, decode_motion_field, search_range_for_level
from modules.spatial import decode_frame_lossless, encode_frame_lossless
from modules.temporal import McMode, WarpPair, lift_pair_inverse
from modules.utils import ArgumentError, Validator

logger = logging.getLogger(__name__)

LAMBDA_MILLI_MAX = 0xFFFFFFFF


@dataclass
class EncodeConfig:
    """Paramètres d'encodage ; les options de la ligne de commande s'y projettent une à une"""
    width: int
    height: int
    i_max: int = 3
    lam: float = 3.0
    mc_mode: McMode = McMode.NONE
    block_size: int = 8
    initial_search_range: int = 8
    max_search_range: int = 64
    force_uniform: bool = False
    hp_distortion: HpDistortion = HpDistortion.ENERGY
    threads: int = 1

    def validate(self) -> "EncodeConfig":
        Validator.check_dimensions(self.width, self.height)
        if self.width > 0xFFFF or self.height > 0xFFFF:
            raise ArgumentError(f"Dimensions trop grandes: {self.width}x{self.height}")
        Validator.check_levels(self.i_max)
        LambdaConfig(self.lam)
        self.mc_params.validate()
        if max(self.block_size, self.max_search_range) > 0xFF:
            raise ArgumentError("Taille de bloc et fenêtre de recherche limitées à 255")
        if self.threads < 1:
            raise ArgumentError(f"Nombre de threads invalide: {self.threads}")
        return self

    @property
    def mc_params(self) -> McParams:
        return McParams(self.block_size, self.initial_search_range, self.max_search_range)

    @property
    def gop_size(self) -> int:
        return 1 << self.i_max


# ============================================================================
# ENCODAGE
# ============================================================================
def lambda_milli(lam: float) -> int:
    """λ × 1000 sur 32 bits, saturé (λ infini compris)"""
    if math.isinf(lam):
        return LAMBDA_MILLI_MAX
    return min(int(round(lam * 1000)), LAMBDA_MILLI_MAX)


def _gop_section(result) -> GopSection:
    section = GopSection(result.depth, encode_depth_vector(result.depth).to_bytes())
    section.layers[BASE_LAYER] = []
    for level in range(result.depth.i_max, 0, -1):
        section.layers[level] = []
    for role in parse_depth_vector(result.depth):
        layer_id = role.level if role.role is Role.HP else BASE_LAYER
        section.layers[layer_id].append(FrameRecord(role.position, role.level, result.payloads[role.key]))
    section.motion = dict(result.motion_payloads)
    return section


def encode_sequence(sequence: Sequence, config: EncodeConfig,
                    forced: Optional[Callable[[int, int], PruneDecision]] = None) -> bytes:
    """
    Encode une séquence en conteneur

    Args:
        sequence: Trames originales
        config: Paramètres validés
        forced: Décision imposée f(niveau formé, position absolue de la paire)

    Returns:
        Octets du conteneur (déterministes, indépendants du nombre de threads)
    """
    config.validate()
    if (sequence.width, sequence.height) != (config.width, config.height):
        raise ArgumentError(
            f"Séquence {sequence.width}x{sequence.height} pour une configuration {config.width}x{config.height}"
        )
    gop = config.gop_size
    full_gops, trailing = divmod(sequence.frame_count, gop)
    if trailing:
        logger.warning("%d trame(s) finale(s) hors GOP codée(s) en intra", trailing)

    sections = []
    for index in range(full_gops):
        offset = index * gop
        gop_forced = None
        if forced is not None:
            gop_forced = (lambda level, position, offset=offset: forced(level, offset + position))
        result = build_adaptive_decomposition(
            sequence.frames[offset:offset + gop], config.lam, config.mc_mode, config.mc_params,
            config.hp_distortion, config.force_uniform, gop_forced, config.threads,
        )
        sections.append(_gop_section(result))

    tail = [encode_frame_lossless(CoefficientFrame(frame.samples)) for frame in sequence.frames[full_gops * gop:]]
    header = StreamHeader(
        width=config.width, height=config.height, frame_count=sequence.frame_count, i_max=config.i_max,
        lambda_milli=lambda_milli(config.lam), mc_mode=config.mc_mode,
        block_size=config.block_size, initial_search_range=config.initial_search_range,
        max_search_range=config.max_search_range, trailing_frame_count=trailing,
    )
    data = write_container(LayeredBitstream(header, sections, tail))
    logger.info("Encodage terminé: %d trames, %d octets", sequence.frame_count, len(data))
    return data


# ============================================================================
# DÉCODAGE
# ============================================================================
@dataclass
class Preview:
    """
    Trames représentatives : frames[n] tient lieu des originaux
    positions[n] .. positions[n] + 2^levels[n] - 1
    """
    frames: List[CoefficientFrame]
    positions: List[int]
    levels: List[int]
    frame_count: int
    depth: Optional[DepthVector] = None
    hold: bool = False

    @property
    def supports(self) -> List[int]:
        return [1 << level for level in self.levels]

    def to_sequence(self) -> Sequence:
        """Trames bornées à [0, 255], répétées sur leur support si hold"""
        frames = []
        for frame, support in zip(self.frames, self.supports):
            pixels = Frame(np.clip(frame.samples, 0, 255))
            frames.extend([pixels] * (support if self.hold else 1))
        return Sequence(frames)

    def index(self) -> List[Tuple[int, int]]:
        """(position, taille du support) par trame représentative"""
        return list(zip(self.positions, self.supports))


def _decode_gop(section: GopSection, header: StreamHeader, offset: int) -> List[Tuple[int, int, CoefficientFrame]]:
    dims = (header.width, header.height)
    params = McParams(header.block_size, header.initial_search_range, header.max_search_range)
    kept = set(header.kept_levels)
    hps: Dict[Tuple[int, int], CoefficientFrame] = {}
    for level in header.kept_levels:
        for record in section.layers[level]:
            hps[(level, record.position)] = decode_frame_lossless(record.payload, dims, FrameKind.HP)
    fields = {
        (level, position): decode_motion_field(payload, dims, header.block_size, search_range_for_level(level, params))
        for (level, position), payload in section.motion.items()
    }

    out = []
    for record in section.layers[BASE_LAYER]:
        current = {record.position: decode_frame_lossless(record.payload, dims, FrameKind.LP)}
        level = record.level
        while level > 0 and level in kept:
            half = 1 << (level - 1)
            lower = {}
            for position, lp in current.items():
                warp = WarpPair(fields.get((level, position))) if header.mc_mode is McMode.BLOCK else WarpPair()
                odd, even = lift_pair_inverse(lp, hps[(level, position + half)], warp)
                lower[position], lower[position + half] = odd, even
            current = lower
            level -= 1
        out.extend((offset + position, level, frame) for position, frame in current.items())
    return out


def sequence_depth_vector(bitstream: LayeredBitstream) -> DepthVector:
    """Concaténation des tranches de v des GOP complets"""
    values = [value for section in bitstream.gops for value in section.depth.values]
    return DepthVector.from_values(values, bitstream.header.i_max)


def decode_preview(data: bytes, hold: bool = False, threads: int = 1) -> Preview:
    """
    Décode autant de niveaux que les couches présentes le permettent

    Avec toutes les couches, chaque trame représentative est une trame
    originale ; sinon les LP tiennent lieu de leur support.
    """
    bitstream = read_container(data)
    header = bitstream.header
    jobs = [(section, index * header.gop_size) for index, section in enumerate(bitstream.gops)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            decoded = list(pool.map(lambda job: _decode_gop(job[0], header, job[1]), jobs))
    else:
        decoded = [_decode_gop(section, header, offset) for section, offset in jobs]

    items = [item for gop in decoded for item in gop]
    base = header.full_gops * header.gop_size
    dims = (header.width, header.height)
    for n, payload in enumerate(bitstream.trailing):
        items.append((base + n, 0, decode_frame_lossless(payload, dims, FrameKind.LP)))
    items.sort(key=lambda item: item[0])
    return Preview(
        frames=[item[2] for item in items],
        positions=[item[0] for item in items],
        levels=[item[1] for item in items],
        frame_count=header.frame_count,
        depth=sequence_depth_vector(bitstream),
        hold=hold,
    )


def decode_sequence(data: bytes, threads: int = 1) -> Sequence:
    """Reconstruction exacte ; exige un flux avec toutes ses couches"""
    header = read_container(data).header
    if header.layers_kept != header.i_max:
        raise ArgumentError(
            f"Flux réduit à {header.layers_kept} couche(s) EL sur {header.i_max}: seul un aperçu est possible"
        )
    preview = decode_preview(data, threads=threads)
    return Sequence([Frame(frame.samples) for frame in preview.frames])
