"""
Module de codage intra sans perte
Ondelette entière réversible 5/3 à 4 niveaux puis codage arithmétique des
sous-bandes ; donne le débit réel de chaque trame LP/HP
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np

from modules.entropy import CodedStream, ContextModel, RangeDecoder, RangeEncoder, SignedValueContexts
from modules.frame_io import CoefficientFrame, FrameKind
from modules.utils import ArgumentError, EntropyError

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = 4

# Emplacements des drapeaux « sous-bande non nulle »
BAND_SLOTS = {'LL': 0, 'HL': 1, 'LH': 2, 'HH': 3}


@dataclass
class SpatialDecomposition:
    """Sous-bandes d'une trame ; details[0] est le niveau le plus fin"""
    ll: np.ndarray
    details: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=list)
    width: int = 0
    height: int = 0

    @property
    def levels(self) -> int:
        return len(self.details)

    def subbands(self):
        """Ordre du flux : LL (le plus profond), puis HL, LH, HH du plus profond au plus fin"""
        yield 'LL', self.levels, self.ll
        for level in range(self.levels, 0, -1):
            hl, lh, hh = self.details[level - 1]
            yield 'HL', level, hl
            yield 'LH', level, lh
            yield 'HH', level, hh

    def coefficient_count(self) -> int:
        return sum(band.size for _, _, band in self.subbands())


# ============================================================================
# LIFTING 5/3 (axe 0)
# ============================================================================
def _neighbours(s: np.ndarray, d: np.ndarray):
    # extension symétrique aux deux bords
    s_right = np.concatenate([s[1:], s[-1:]])[:len(d)]
    d_left = np.concatenate([d[:1], d])[:len(s)]
    d_right = np.concatenate([d, d[-1:]])[:len(s)]
    return s_right, d_left, d_right


def _forward_axis0(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    s = x[0::2].copy()
    d = x[1::2].copy()
    if len(d) == 0:
        return s, d
    s_right = np.concatenate([s[1:], s[-1:]])[:len(d)]
    d = d - np.floor_divide(s[:len(d)] + s_right, 2)
    _, d_left, d_right = _neighbours(s, d)
    s = s + np.floor_divide(d_left + d_right + 2, 4)
    return s, d


def _inverse_axis0(s: np.ndarray, d: np.ndarray) -> np.ndarray:
    out = np.empty((len(s) + len(d),) + s.shape[1:], dtype=s.dtype)
    if len(d) == 0:
        out[0::2] = s
        return out
    _, d_left, d_right = _neighbours(s, d)
    s = s - np.floor_divide(d_left + d_right + 2, 4)
    s_right = np.concatenate([s[1:], s[-1:]])[:len(d)]
    d = d + np.floor_divide(s[:len(d)] + s_right, 2)
    out[0::2] = s
    out[1::2] = d
    return out


def effective_levels(width: int, height: int, levels: int = DEFAULT_LEVELS) -> int:
    """Nombre de niveaux réellement appliqués (réduit pour les petites trames)"""
    return max(0, min(levels, int(math.floor(math.log2(max(width, height))))))


@functools.lru_cache(maxsize=None)
def _warn_reduced_levels(width: int, height: int, applied: int, levels: int):
    """Un seul avertissement par format de trame"""
    logger.warning("Trame %dx%d: %d niveau(x) spatiaux au lieu de %d", width, height, applied, levels)


def subband_shapes(width: int, height: int, levels: int):
    """Formes (LL, [(HL, LH, HH) par niveau]) déduites des dimensions"""
    shapes = []
    h, w = height, width
    for _ in range(levels):
        hc, hf, wc, wf = -(-h // 2), h // 2, -(-w // 2), w // 2
        shapes.append(((hc, wf), (hf, wc), (hf, wf)))
        h, w = hc, wc
    return (h, w), shapes


def dwt53_forward(frame: Union[CoefficientFrame, np.ndarray], levels: int = DEFAULT_LEVELS) -> SpatialDecomposition:
    """
    Décomposition 5/3 réversible sur `levels` niveaux

    Les petites trames utilisent moins de niveaux (avertissement).
    """
    samples = frame.samples if hasattr(frame, 'samples') else np.asarray(frame)
    if samples.ndim != 2 or samples.size == 0:
        raise ArgumentError(f"Trame vide ou non 2-D: forme {samples.shape}")
    height, width = samples.shape
    applied = effective_levels(width, height, levels)
    if applied < levels:
        _warn_reduced_levels(width, height, applied, levels)

    ll = samples.astype(np.int64)
    details = []
    for _ in range(applied):
        low, high = _forward_axis0(ll.T)
        low, high = low.T, high.T
        ll_next, lh = _forward_axis0(low)
        hl, hh = _forward_axis0(high)
        details.append((hl, lh, hh))
        ll = ll_next
    return SpatialDecomposition(ll, details, width, height)


def dwt53_inverse(decomposition: SpatialDecomposition, kind: FrameKind = FrameKind.LP) -> CoefficientFrame:
    ll = decomposition.ll
    for level in range(decomposition.levels, 0, -1):
        hl, lh, hh = decomposition.details[level - 1]
        low = _inverse_axis0(ll, lh)
        high = _inverse_axis0(hl, hh)
        ll = _inverse_axis0(low.T, high.T).T
    return CoefficientFrame(ll, kind)


# ============================================================================
# CODAGE DES TRAMES
# ============================================================================
def encode_frame_lossless(frame: Union[CoefficientFrame, np.ndarray]) -> bytes:
    """
    Code une trame sans perte

    Un seul flux arithmétique encadré ; chaque sous-bande a son groupe de
    contextes et un drapeau « non nulle ». La taille en octets est le
    numérateur du débit R.
    """
    decomposition = dwt53_forward(frame)
    encoder = RangeEncoder()
    flags = ContextModel(len(BAND_SLOTS))
    for name, _, band in decomposition.subbands():
        if band.size == 0:
            continue
        nonzero = bool(np.any(band))
        encoder.encode_bit(flags, BAND_SLOTS[name], int(nonzero))
        if not nonzero:
            continue
        contexts = SignedValueContexts()
        for value in band.ravel().tolist():
            contexts.encode(encoder, value)
    return CodedStream(encoder.finish()).to_bytes()


def decode_frame_lossless(data: bytes, dims: Tuple[int, int], kind: FrameKind = FrameKind.LP) -> CoefficientFrame:
    """Inverse de encode_frame_lossless ; dims = (largeur, hauteur)"""
    width, height = dims
    if width <= 0 or height <= 0:
        raise ArgumentError(f"Dimensions invalides: {width}x{height}")
    stream, end = CodedStream.from_bytes(data)
    if end != len(data):
        raise EntropyError(f"{len(data) - end} octet(s) en trop après la trame", offset=end)

    levels = effective_levels(width, height)
    ll_shape, shapes = subband_shapes(width, height, levels)
    decoder = RangeDecoder(stream.payload)
    flags = ContextModel(len(BAND_SLOTS))

    def read_band(name: str, shape) -> np.ndarray:
        count = shape[0] * shape[1]
        if count == 0:
            return np.zeros(shape, dtype=np.int64)
        if not decoder.decode_bit(flags, BAND_SLOTS[name]):
            return np.zeros(shape, dtype=np.int64)
        contexts = SignedValueContexts()
        values = [contexts.decode(decoder) for _ in range(count)]
        return np.array(values, dtype=np.int64).reshape(shape)

    ll = read_band('LL', ll_shape)
    details: List = [None] * levels
    for level in range(levels, 0, -1):
        hl_shape, lh_shape, hh_shape = shapes[level - 1]
        hl = read_band('HL', hl_shape)
        lh = read_band('LH', lh_shape)
        hh = read_band('HH', hh_shape)
        details[level - 1] = (hl, lh, hh)
    return dwt53_inverse(SpatialDecomposition(ll, details, width, height), kind)
