"""
Module du conteneur en couches
En-tête, vecteurs de profondeur codés, champs de mouvement, couche de base
(BL) et couches d'amélioration (EL_k) ; extraction de couches temporelles

Disposition (entiers petit-boutistes) :
    en-tête fixe  "CAWL", u8 version, u16 largeur, u16 hauteur, u32 T,
                  u16 taille de GOP, u8 i_max, u32 λ×1000, u8 mode MC,
                  u8 taille de bloc, u8 fenêtre initiale, u8 fenêtre maximale,
                  u16 trames finales, u8 couches EL conservées
    par GOP       u32 longueur de section, puis
                  v codé (u32 bits + octets),
                  u16 nombre de champs, champs (u8 niveau, u16 position,
                  u32 longueur, octets), du plus profond au moins profond,
                  u8 nombre de couches, couches BL puis EL_imax..EL_1
                  (u8 identifiant, u16 nombre de trames, trames
                  (u16 position, u8 niveau, u32 longueur, octets))
    fin           trames intra finales (u32 longueur, octets)
"""

import logging
import struct
from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple

from modules.adaptive import DepthVector, Role, parse_depth_vector
from modules.entropy import CodedStream, decode_depth_vector
from modules.temporal import McMode
from modules.utils import (ArgumentError, BadMagicError, ConsistencyError, EntropyError,
                           MalformedContainerError, TruncatedContainerError, VersionMismatchError)

logger = logging.getLogger(__name__)

MAGIC = b"CAWL"
VERSION = 1
BASE_LAYER = 0

_HEADER = struct.Struct("<4sBHHIHBIBBBBHB")
_MOTION_RECORD = struct.Struct("<BHI")
_FRAME_RECORD = struct.Struct("<HBI")
_LAYER_HEAD = struct.Struct("<BH")
_MC_CODES = {McMode.NONE: 0, McMode.BLOCK: 1}


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    frame_count: int
    i_max: int
    lambda_milli: int = 3000
    mc_mode: McMode = McMode.NONE
    block_size: int = 8
    initial_search_range: int = 8
    max_search_range: int = 64
    trailing_frame_count: int = 0
    layers_kept: int = -1
    version: int = VERSION

    def __post_init__(self):
        if self.layers_kept < 0:
            object.__setattr__(self, 'layers_kept', self.i_max)
        if not 1 <= self.i_max <= 8:
            raise MalformedContainerError(f"i_max hors plage: {self.i_max}")
        if not 0 <= self.trailing_frame_count < self.gop_size:
            raise MalformedContainerError(f"Trames finales ({self.trailing_frame_count}) ≥ GOP ({self.gop_size})")
        if (self.frame_count - self.trailing_frame_count) % self.gop_size or self.frame_count < 1:
            raise MalformedContainerError(
                f"T={self.frame_count} incompatible avec GOP {self.gop_size} et {self.trailing_frame_count} trame(s) finale(s)"
            )
        if not 0 <= self.layers_kept <= self.i_max:
            raise MalformedContainerError(f"Nombre de couches conservées invalide: {self.layers_kept}")

    @property
    def gop_size(self) -> int:
        return 1 << self.i_max

    @property
    def full_gops(self) -> int:
        return (self.frame_count - self.trailing_frame_count) // self.gop_size

    @property
    def lam(self) -> float:
        return self.lambda_milli / 1000

    @property
    def kept_levels(self) -> List[int]:
        """Niveaux dont la couche EL est présente, du plus profond au moins profond"""
        return list(range(self.i_max, self.i_max - self.layers_kept, -1))

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC, self.version, self.width, self.height, self.frame_count, self.gop_size, self.i_max,
            self.lambda_milli, _MC_CODES[self.mc_mode], self.block_size, self.initial_search_range,
            self.max_search_range, self.trailing_frame_count, self.layers_kept,
        )

    @classmethod
    def unpack(cls, data: bytes) -> "StreamHeader":
        if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
            raise BadMagicError("Signature « CAWL » absente")
        if len(data) < _HEADER.size:
            raise TruncatedContainerError(f"En-tête tronqué ({len(data)} octets sur {_HEADER.size})")
        (_, version, width, height, frames, gop, i_max, lam, mc, block, initial, maximum,
         trailing, kept) = _HEADER.unpack_from(data)
        if version != VERSION:
            raise VersionMismatchError(f"Version {version} non prise en charge (attendue {VERSION})")
        modes = {code: mode for mode, code in _MC_CODES.items()}
        if mc not in modes:
            raise MalformedContainerError(f"Mode de compensation inconnu: {mc}")
        header = cls(width, height, frames, i_max, lam, modes[mc], block, initial, maximum, trailing, kept, version)
        if gop != header.gop_size:
            raise MalformedContainerError(f"Taille de GOP {gop} au lieu de 2^{i_max}")
        if width == 0 or height == 0:
            raise MalformedContainerError(f"Dimensions nulles: {width}x{height}")
        return header


@dataclass(frozen=True)
class FrameRecord:
    position: int
    level: int
    payload: bytes

    @property
    def size(self) -> int:
        return _FRAME_RECORD.size + len(self.payload)


@dataclass
class GopSection:
    """Un GOP : v codé, champs (clé (niveau, position du LP)) et couches"""
    depth: DepthVector
    depth_payload: bytes
    motion: Dict[Tuple[int, int], bytes] = field(default_factory=dict)
    layers: Dict[int, List[FrameRecord]] = field(default_factory=dict)

    def motion_order(self) -> List[Tuple[int, int]]:
        return sorted(self.motion, key=lambda key: (-key[0], key[1]))

    def layer_order(self) -> List[int]:
        return [BASE_LAYER] + sorted((k for k in self.layers if k != BASE_LAYER), reverse=True)


@dataclass
class LayeredBitstream:
    header: StreamHeader
    gops: List[GopSection] = field(default_factory=list)
    trailing: List[bytes] = field(default_factory=list)


def expected_records(depth: DepthVector, header: StreamHeader):
    """Enregistrements que v impose : couches {id: [(position, niveau)]} et clés de champs"""
    kept = set(header.kept_levels)
    layers: Dict[int, List[Tuple[int, int]]] = {BASE_LAYER: []}
    for level in header.kept_levels:
        layers[level] = []
    motion = []
    for role in parse_depth_vector(depth):
        if role.role is Role.HP:
            if role.level not in kept:
                continue
            layers[role.level].append((role.position, role.level))
            if header.mc_mode is McMode.BLOCK:
                motion.append((role.level, role.lp_position))
        else:
            layers[BASE_LAYER].append((role.position, role.level))
    return layers, sorted(motion, key=lambda key: (-key[0], key[1]))


def _check_section(section: GopSection, header: StreamHeader, error):
    if len(section.depth) != header.gop_size or section.depth.i_max != header.i_max:
        raise error(f"Vecteur de profondeur de longueur {len(section.depth)} pour un GOP de {header.gop_size}")
    layers, motion = expected_records(section.depth, header)
    if sorted(section.layers) != sorted(layers):
        raise error(f"Couches présentes {sorted(section.layers)} au lieu de {sorted(layers)}")
    for layer_id, expected in layers.items():
        found = sorted((record.position, record.level) for record in section.layers[layer_id])
        if found != sorted(expected):
            raise error(f"Couche {layer_id}: {len(found)} trame(s) ne correspondant pas à v ({len(expected)} attendue(s))")
    if section.motion_order() != motion:
        raise error(f"{len(section.motion)} champ(s) de mouvement au lieu de {len(motion)}")


# ============================================================================
# ÉCRITURE
# ============================================================================
def write_container(bitstream: LayeredBitstream) -> bytes:
    """
    Sérialise le flux en couches

    Raises:
        ConsistencyError: GOP incohérents avec l'en-tête
    """
    header = bitstream.header
    if len(bitstream.gops) != header.full_gops or len(bitstream.trailing) != header.trailing_frame_count:
        raise ConsistencyError(
            f"{len(bitstream.gops)} GOP et {len(bitstream.trailing)} trame(s) finale(s) pour l'en-tête "
            f"({header.full_gops}, {header.trailing_frame_count})"
        )
    out = bytearray(header.pack())
    for section in bitstream.gops:
        _check_section(section, header, ConsistencyError)
        body = bytearray(section.depth_payload)
        body += struct.pack("<H", len(section.motion))
        for level, position in section.motion_order():
            payload = section.motion[(level, position)]
            body += _MOTION_RECORD.pack(level, position, len(payload)) + payload
        order = section.layer_order()
        body += struct.pack("<B", len(order))
        for layer_id in order:
            records = sorted(section.layers[layer_id], key=lambda r: r.position)
            body += _LAYER_HEAD.pack(layer_id, len(records))
            for record in records:
                body += _FRAME_RECORD.pack(record.position, record.level, len(record.payload)) + record.payload
        out += struct.pack("<I", len(body)) + body
    for payload in bitstream.trailing:
        out += struct.pack("<I", len(payload)) + payload
    return bytes(out)


# ============================================================================
# LECTURE
# ============================================================================
class _Reader:
    def __init__(self, data: bytes, offset: int = 0, end: int = -1):
        self.data = data
        self.pos = offset
        self.end = len(data) if end < 0 else end

    def unpack(self, fmt: struct.Struct):
        if self.pos + fmt.size > self.end:
            raise TruncatedContainerError(f"Conteneur tronqué à l'octet {self.pos}")
        values = fmt.unpack_from(self.data, self.pos)
        self.pos += fmt.size
        return values

    def take(self, count: int) -> bytes:
        if self.pos + count > self.end:
            raise TruncatedContainerError(f"Conteneur tronqué: {count} octet(s) attendus à l'octet {self.pos}")
        chunk = bytes(self.data[self.pos:self.pos + count])
        self.pos += count
        return chunk


_U8 = struct.Struct("<B")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


def _read_section(reader: _Reader, header: StreamHeader) -> GopSection:
    start = reader.pos
    try:
        stream, end = CodedStream.from_bytes(reader.data[:reader.end], reader.pos)
    except EntropyError as exc:
        raise TruncatedContainerError(f"Vecteur de profondeur tronqué: {exc}") from exc
    depth_payload = reader.take(end - start)
    try:
        depth = decode_depth_vector(stream, header.gop_size, header.i_max)
    except EntropyError as exc:
        raise MalformedContainerError(str(exc)) from exc

    section = GopSection(depth, depth_payload)
    (motion_count,) = reader.unpack(_U16)
    for _ in range(motion_count):
        level, position, length = reader.unpack(_MOTION_RECORD)
        if (level, position) in section.motion:
            raise MalformedContainerError(f"Champ de mouvement ({level}, {position}) dupliqué")
        section.motion[(level, position)] = reader.take(length)

    (layer_count,) = reader.unpack(_U8)
    for _ in range(layer_count):
        layer_id, count = reader.unpack(_LAYER_HEAD)
        if layer_id in section.layers:
            raise MalformedContainerError(f"Couche {layer_id} dupliquée")
        records = []
        for _ in range(count):
            position, level, length = reader.unpack(_FRAME_RECORD)
            if layer_id != BASE_LAYER and level != layer_id:
                raise MalformedContainerError(f"Trame de niveau {level} dans la couche EL_{layer_id}")
            records.append(FrameRecord(position, level, reader.take(length)))
        section.layers[layer_id] = records
    _check_section(section, header, MalformedContainerError)
    return section


def read_container(data: bytes) -> LayeredBitstream:
    """
    Relit un conteneur et valide v et le nombre d'enregistrements

    Raises:
        BadMagicError, VersionMismatchError, TruncatedContainerError,
        MalformedContainerError
    """
    header = StreamHeader.unpack(data)
    reader = _Reader(data, _HEADER.size)
    bitstream = LayeredBitstream(header)
    for index in range(header.full_gops):
        (length,) = reader.unpack(_U32)
        section_reader = _Reader(data, reader.pos, reader.pos + length)
        if section_reader.end > len(data):
            raise TruncatedContainerError(f"Section du GOP {index} tronquée")
        section = _read_section(section_reader, header)
        if section_reader.pos != section_reader.end:
            raise MalformedContainerError(f"GOP {index}: {section_reader.end - section_reader.pos} octet(s) inexpliqué(s)")
        reader.pos = section_reader.end
        bitstream.gops.append(section)
    for _ in range(header.trailing_frame_count):
        (length,) = reader.unpack(_U32)
        bitstream.trailing.append(reader.take(length))
    if reader.pos != len(data):
        raise MalformedContainerError(f"{len(data) - reader.pos} octet(s) en trop en fin de conteneur")
    logger.debug("Conteneur lu: %d GOP, %d trame(s) finale(s)", len(bitstream.gops), len(bitstream.trailing))
    return bitstream


# ============================================================================
# EXTRACTION ET ATTRIBUTION
# ============================================================================
def extract_temporal_layers(data: bytes, keep_levels: int) -> bytes:
    """
    Garde BL et EL_imax..EL_(imax-k+1), sans transcodage

    Un flux déjà réduit garde au plus les couches qu'il contient encore.
    """
    bitstream = read_container(data)
    header = bitstream.header
    if not 0 <= keep_levels <= header.i_max:
        raise ArgumentError(f"Nombre de couches à garder hors de [0, {header.i_max}]: {keep_levels}")
    kept = min(keep_levels, header.layers_kept)
    new_header = replace(header, layers_kept=kept)
    levels = set(new_header.kept_levels)
    for section in bitstream.gops:
        section.layers = {k: records for k, records in section.layers.items() if k == BASE_LAYER or k in levels}
        section.motion = {key: payload for key, payload in section.motion.items() if key[0] in levels}
    bitstream.header = new_header
    return write_container(bitstream)


@dataclass(frozen=True)
class SectionSizes:
    """Octets par catégorie ; la somme égale la taille du conteneur"""
    layers: Dict[int, int]
    motion: int
    depth: int
    header: int

    @property
    def total(self) -> int:
        return sum(self.layers.values()) + self.motion + self.depth + self.header


def section_sizes(bitstream: LayeredBitstream, total: int) -> SectionSizes:
    """Attribue chaque octet : enregistrements à leur couche, préfixes et compteurs à l'en-tête"""
    layers: Dict[int, int] = {BASE_LAYER: 0}
    for level in bitstream.header.kept_levels:
        layers[level] = 0
    motion = depth = 0
    for section in bitstream.gops:
        depth += len(section.depth_payload)
        motion += sum(_MOTION_RECORD.size + len(payload) for payload in section.motion.values())
        for layer_id, records in section.layers.items():
            layers[layer_id] += sum(record.size for record in records)
    layers[BASE_LAYER] += sum(_U32.size + len(payload) for payload in bitstream.trailing)
    header = total - sum(layers.values()) - motion - depth
    if header < _HEADER.size:
        raise ConsistencyError(f"Attribution des octets incohérente ({header} octets d'en-tête)")
    return SectionSizes(layers, motion, depth, header)
