"""
Module de codage entropique
Codeur arithmétique binaire adaptatif (codeur de plage 32 bits à propagation
de retenue), codage des valeurs signées et du vecteur de profondeur
"""

import logging
import struct
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence as Seq, Tuple

import numpy as np

from modules.utils import ArgumentError, EntropyError

logger = logging.getLogger(__name__)

PROB_BITS = 12
PROB_SCALE = 1 << PROB_BITS
PROB_INIT = PROB_SCALE // 2
ADAPT_SHIFT = 5
TOP = 1 << 24
MASK32 = 0xFFFFFFFF

# Au-delà, le préfixe Exp-Golomb ne peut venir que d'un flux corrompu
MAX_GOLOMB_PREFIX = 30


class ContextModel:
    """
    Ensemble de contextes binaires adaptatifs

    Chaque état est la probabilité du bit 0 sur PROB_BITS bits ; il reste
    dans l'intervalle ouvert (0, PROB_SCALE).
    """

    def __init__(self, count: int):
        if count <= 0:
            raise ArgumentError(f"Nombre de contextes invalide: {count}")
        self.probs = [PROB_INIT] * count

    def __len__(self):
        return len(self.probs)


class RangeEncoder:
    """Codeur de plage binaire (arithmétique entière uniquement)"""

    def __init__(self):
        self.low = 0
        self.range = MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def encode_bit(self, model: ContextModel, ctx: int, bit: int):
        probs = model.probs
        p = probs[ctx]
        bound = (self.range >> PROB_BITS) * p
        if bit == 0:
            self.range = bound
            probs[ctx] = p + ((PROB_SCALE - p) >> ADAPT_SHIFT)
        else:
            self.low += bound
            self.range -= bound
            probs[ctx] = p - (p >> ADAPT_SHIFT)
        while self.range < TOP:
            self.range <<= 8
            self._shift_low()

    def _shift_low(self):
        # low tient sur 33 bits : le bit 32 est la retenue à propager
        if self.low < 0xFF000000 or self.low > MASK32:
            carry = self.low >> 32
            temp = self.cache
            while True:
                self.out.append((temp + carry) & 0xFF)
                temp = 0xFF
                self.cache_size -= 1
                if self.cache_size == 0:
                    break
            self.cache = (self.low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (self.low & 0x00FFFFFF) << 8

    def finish(self) -> bytes:
        """
        Vide le codeur

        Choisit dans [low, low + range) la valeur ayant le plus d'octets
        nuls en fin ; le décodeur complète par des zéros.
        """
        high = self.low + self.range - 1
        value = self.low
        for shift in (32, 24, 16, 8, 0):
            mask = (1 << shift) - 1
            value = (self.low + mask) & ~mask
            if value <= high:
                break
        self.low = value
        for _ in range(5):
            self._shift_low()
        # le premier octet émis est toujours nul
        return bytes(self.out[1:]).rstrip(b"\x00")


class RangeDecoder:
    """Décodeur apparié à RangeEncoder"""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.range = MASK32
        self.code = 0
        for _ in range(4):
            self.code = (self.code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        byte = self.data[self.pos] if self.pos < len(self.data) else 0
        self.pos += 1
        return byte

    def decode_bit(self, model: ContextModel, ctx: int) -> int:
        probs = model.probs
        p = probs[ctx]
        bound = (self.range >> PROB_BITS) * p
        if self.code < bound:
            self.range = bound
            probs[ctx] = p + ((PROB_SCALE - p) >> ADAPT_SHIFT)
            bit = 0
        else:
            self.code -= bound
            self.range -= bound
            probs[ctx] = p - (p >> ADAPT_SHIFT)
            bit = 1
        while self.range < TOP:
            self.range <<= 8
            self.code = (self.code << 8) | self._next_byte()
        if self.code >= self.range:
            raise EntropyError(f"Flux arithmétique incohérent à l'octet {self.pos}", offset=self.pos)
        return bit


@dataclass(frozen=True)
class CodedStream:
    """Flux codé : préfixe de longueur en bits (u32 LE) puis octets"""
    payload: bytes = b""

    @property
    def bit_length(self) -> int:
        return 8 * len(self.payload)

    def to_bytes(self) -> bytes:
        return struct.pack("<I", self.bit_length) + self.payload

    @classmethod
    def from_bytes(cls, buffer: bytes, offset: int = 0) -> Tuple["CodedStream", int]:
        """Relit un flux encadré ; retourne le flux et la position suivante"""
        if len(buffer) < offset + 4:
            raise EntropyError(f"Flux tronqué: préfixe de longueur absent à l'octet {offset}", offset=offset)
        (bits,) = struct.unpack_from("<I", buffer, offset)
        if bits % 8:
            raise EntropyError(f"Longueur de flux invalide ({bits} bits) à l'octet {offset}", offset=offset)
        start = offset + 4
        end = start + bits // 8
        if len(buffer) < end:
            raise EntropyError(f"Flux tronqué: {end - len(buffer)} octet(s) manquant(s) après l'octet {len(buffer)}",
                               offset=len(buffer))
        return cls(bytes(buffer[start:end])), end


# ============================================================================
# BITS BRUTS
# ============================================================================
def ac_encode(bits: Iterable[Tuple[int, int]], context_count: Optional[int] = None) -> CodedStream:
    """
    Code une suite de (bit, contexte)

    Args:
        bits: Couples (bit, identifiant de contexte)
        context_count: Nombre de contextes (déduit des données si absent)
    """
    pairs = list(bits)
    if context_count is None:
        context_count = max((ctx for _, ctx in pairs), default=0) + 1
    model = ContextModel(context_count)
    encoder = RangeEncoder()
    for bit, ctx in pairs:
        encoder.encode_bit(model, ctx, 1 if bit else 0)
    return CodedStream(encoder.finish())


def ac_decode(stream: CodedStream, schedule: Seq[int], context_count: Optional[int] = None) -> List[int]:
    """Décode un bit par entrée du calendrier de contextes"""
    schedule = list(schedule)
    if context_count is None:
        context_count = max(schedule, default=0) + 1
    model = ContextModel(context_count)
    decoder = RangeDecoder(stream.payload)
    return [decoder.decode_bit(model, ctx) for ctx in schedule]


# ============================================================================
# VALEURS SIGNÉES
# ============================================================================
class SignedValueContexts:
    """
    Groupe de contextes pour des valeurs signées

    Binarisation : drapeau de nullité (contexte selon l'amplitude
    précédente), signe, puis amplitude en Exp-Golomb (préfixe unaire et
    suffixe, chaque case avec son contexte).
    """

    PREFIX_CONTEXTS = 18
    SUFFIX_CONTEXTS = 18

    def __init__(self):
        self.zero = ContextModel(3)
        self.sign = ContextModel(1)
        self.prefix = ContextModel(self.PREFIX_CONTEXTS)
        self.suffix = ContextModel(self.SUFFIX_CONTEXTS)
        self.last_magnitude = 0

    def _zero_ctx(self) -> int:
        if self.last_magnitude == 0:
            return 0
        return 1 if self.last_magnitude <= 2 else 2

    def encode(self, encoder: RangeEncoder, value: int):
        magnitude = abs(value)
        encoder.encode_bit(self.zero, self._zero_ctx(), 1 if magnitude else 0)
        self.last_magnitude = magnitude
        if not magnitude:
            return
        encoder.encode_bit(self.sign, 0, 1 if value < 0 else 0)
        k = magnitude.bit_length() - 1
        for j in range(k):
            encoder.encode_bit(self.prefix, min(j, self.PREFIX_CONTEXTS - 1), 1)
        encoder.encode_bit(self.prefix, min(k, self.PREFIX_CONTEXTS - 1), 0)
        for b in range(k - 1, -1, -1):
            encoder.encode_bit(self.suffix, min(b, self.SUFFIX_CONTEXTS - 1), (magnitude >> b) & 1)

    def decode(self, decoder: RangeDecoder) -> int:
        if not decoder.decode_bit(self.zero, self._zero_ctx()):
            self.last_magnitude = 0
            return 0
        negative = decoder.decode_bit(self.sign, 0)
        k = 0
        while decoder.decode_bit(self.prefix, min(k, self.PREFIX_CONTEXTS - 1)):
            k += 1
            if k > MAX_GOLOMB_PREFIX:
                raise EntropyError(f"Préfixe Exp-Golomb invalide à l'octet {decoder.pos}", offset=decoder.pos)
        magnitude = 1
        for b in range(k - 1, -1, -1):
            magnitude = (magnitude << 1) | decoder.decode_bit(self.suffix, min(b, self.SUFFIX_CONTEXTS - 1))
        self.last_magnitude = magnitude
        return -magnitude if negative else magnitude


def encode_signed_values(values, contexts: Optional[SignedValueContexts] = None) -> CodedStream:
    """Code une suite d'entiers signés dans un flux autonome"""
    contexts = contexts or SignedValueContexts()
    encoder = RangeEncoder()
    for value in np.asarray(values, dtype=np.int64).ravel().tolist():
        contexts.encode(encoder, value)
    return CodedStream(encoder.finish())


def decode_signed_values(stream: CodedStream, count: int,
                         contexts: Optional[SignedValueContexts] = None) -> np.ndarray:
    contexts = contexts or SignedValueContexts()
    decoder = RangeDecoder(stream.payload)
    return np.array([contexts.decode(decoder) for _ in range(count)], dtype=np.int64)


# ============================================================================
# VECTEUR DE PROFONDEUR
# ============================================================================
def _max_depth_at(position: int, length: int, i_max: int) -> int:
    """Plus grand niveau qu'un LP peut porter à cette position"""
    gop = 1 << i_max
    offset = position % gop
    depth = 0
    while depth < i_max and offset % (1 << (depth + 1)) == 0 and position + (1 << (depth + 1)) <= length:
        depth += 1
    return depth


class _DepthContexts:
    def __init__(self, i_max: int):
        self.i_max = i_max
        self.model = ContextModel((i_max + 1) * max(i_max, 1))

    def ctx(self, previous: int, bin_index: int) -> int:
        return previous * self.i_max + bin_index


def encode_depth_vector(v) -> CodedStream:
    """
    Code le vecteur de profondeur

    Unaire tronqué par entrée, borné par le niveau maximal que la position
    admet ; les positions couvertes par le support d'un LP sont implicites
    (toujours nulles) et ne sont pas codées.
    """
    values = list(v.values)
    i_max = v.i_max
    contexts = _DepthContexts(i_max)
    encoder = RangeEncoder()
    previous = 0
    position = 0
    while position < len(values):
        value = values[position]
        limit = _max_depth_at(position, len(values), i_max)
        for j in range(min(value + 1, limit)):
            encoder.encode_bit(contexts.model, contexts.ctx(previous, j), 1 if j < value else 0)
        if value:
            previous = value
            position += 1 << value
        else:
            position += 1
    return CodedStream(encoder.finish())


def decode_depth_vector(stream: CodedStream, length: int, i_max: int):
    """Décode un vecteur de profondeur de longueur donnée"""
    from modules.adaptive import DepthVector
    from modules.utils import DepthVectorError

    contexts = _DepthContexts(i_max)
    decoder = RangeDecoder(stream.payload)
    values = [0] * length
    previous = 0
    position = 0
    while position < length:
        limit = _max_depth_at(position, length, i_max)
        value = 0
        while value < limit and decoder.decode_bit(contexts.model, contexts.ctx(previous, value)):
            value += 1
        values[position] = value
        if value:
            previous = value
            position += 1 << value
        else:
            position += 1

    try:
        return DepthVector.from_values(values, i_max)
    except DepthVectorError as exc:
        raise EntropyError(f"Vecteur de profondeur décodé invalide: {exc}") from exc
