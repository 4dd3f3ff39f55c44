"""
Module de compensation de mouvement par blocs
Estimation plein-recherche (SAD), opérateurs de déformation de prédiction et
de mise à jour, sérialisation des champs de vecteurs
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from modules.entropy import CodedStream, RangeDecoder, RangeEncoder, SignedValueContexts
from modules.frame_io import CoefficientFrame, FrameKind
from modules.utils import ArgumentError, EntropyError, Validator

logger = logging.getLogger(__name__)

FrameLike = Union[CoefficientFrame, np.ndarray]


def _samples(frame: FrameLike) -> np.ndarray:
    return frame.samples if hasattr(frame, 'samples') else np.asarray(frame)


@dataclass(frozen=True)
class McParams:
    """Paramètres de la compensation de mouvement par blocs"""
    block_size: int = 8
    initial_search_range: int = 8
    max_search_range: int = 64

    def validate(self) -> "McParams":
        if self.block_size < 1:
            raise ArgumentError(f"Taille de bloc invalide: {self.block_size}")
        if not 0 < self.initial_search_range <= self.max_search_range:
            raise ArgumentError(
                f"Fenêtre de recherche invalide: initiale {self.initial_search_range}, "
                f"maximale {self.max_search_range}"
            )
        return self


@dataclass(frozen=True, eq=False)
class MotionField:
    """
    Champ de vecteurs entiers, un par bloc de la trame courante (paire)

    vectors[by, bx] = (dx, dy) ; la grille couvre toute la trame
    (division arrondie au supérieur, blocs de bord tronqués).
    """
    vectors: np.ndarray
    block_size: int
    search_range: int
    width: int
    height: int

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.int32).reshape(-1, 2)
        rows, cols = self.grid_shape
        if vectors.shape[0] != rows * cols:
            raise ArgumentError(f"Champ de {vectors.shape[0]} vecteurs pour une grille {rows}x{cols}")
        vectors = vectors.reshape(rows, cols, 2)
        if vectors.size and np.abs(vectors).max() > self.search_range:
            raise ArgumentError(f"Vecteur hors de la fenêtre ±{self.search_range}")
        vectors.setflags(write=False)
        object.__setattr__(self, 'vectors', vectors)

    @classmethod
    def zeros(cls, width: int, height: int, block_size: int = 8) -> "MotionField":
        """Champ nul (opérateur identité, mode sans compensation)"""
        rows, cols = -(-height // block_size), -(-width // block_size)
        return cls(np.zeros((rows, cols, 2), dtype=np.int32), block_size, 0, width, height)

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return -(-self.height // self.block_size), -(-self.width // self.block_size)

    @property
    def block_count(self) -> int:
        rows, cols = self.grid_shape
        return rows * cols

    @property
    def dx(self) -> np.ndarray:
        return self.vectors[..., 0]

    @property
    def dy(self) -> np.ndarray:
        return self.vectors[..., 1]

    def is_identity(self) -> bool:
        return not np.any(self.vectors)

    def __eq__(self, other):
        return (isinstance(other, MotionField) and self.block_size == other.block_size
                and (self.width, self.height) == (other.width, other.height)
                and np.array_equal(self.vectors, other.vectors))

    __hash__ = None


def search_range_for_level(level: int, params: McParams) -> int:
    """Fenêtre doublée à chaque niveau, plafonnée à max_search_range"""
    if level < 1:
        raise ArgumentError(f"Niveau de décomposition invalide: {level}")
    return min(params.initial_search_range << (level - 1), params.max_search_range)


def _block_starts(length: int, block_size: int) -> np.ndarray:
    return np.arange(0, length, block_size)


def block_sad(diff: np.ndarray, block_size: int) -> np.ndarray:
    """Somme des valeurs absolues par bloc (blocs de bord tronqués)"""
    rows = _block_starts(diff.shape[0], block_size)
    cols = _block_starts(diff.shape[1], block_size)
    return np.add.reduceat(np.add.reduceat(np.abs(diff), rows, axis=0), cols, axis=1)


def candidate_order(search_range: int):
    """Candidats triés par |dx|+|dy| puis ordre ligne par ligne (dy, dx)"""
    candidates = [(dy, dx) for dy in range(-search_range, search_range + 1)
                  for dx in range(-search_range, search_range + 1)]
    return sorted(candidates, key=lambda c: (abs(c[0]) + abs(c[1]), c[0], c[1]))


def estimate_block_motion(reference: FrameLike, current: FrameLike, search_range: int,
                          params: McParams = McParams()) -> MotionField:
    """
    Estimation de mouvement plein-recherche

    Args:
        reference: Trame de référence (impaire, l_{2t-1})
        current: Trame courante (paire, l_{2t}), porte la grille de blocs
        search_range: Fenêtre ±search_range en x et en y

    Returns:
        Champ minimisant la SAD avec lecture bornée aux bords ; égalités
        départagées par |dx|+|dy| puis ordre des candidats
    """
    ref = _samples(reference).astype(np.int64)
    cur = _samples(current).astype(np.int64)
    Validator.check_same_shape(ref, cur)
    if search_range < 0:
        raise ArgumentError(f"Fenêtre de recherche négative: {search_range}")
    height, width = cur.shape
    bs = params.block_size

    # au-delà de la taille de la trame, les lectures bornées sont identiques
    # et le départage favorise toujours le vecteur le plus court
    ry = min(search_range, height - 1)
    rx = min(search_range, width - 1)
    padded = np.pad(ref, ((ry, ry), (rx, rx)), mode='edge')

    rows, cols = -(-height // bs), -(-width // bs)
    best_sad = np.full((rows, cols), np.iinfo(np.int64).max, dtype=np.int64)
    best = np.zeros((rows, cols, 2), dtype=np.int32)

    for dy, dx in candidate_order(max(rx, ry)):
        if abs(dx) > rx or abs(dy) > ry:
            continue
        shifted = padded[ry + dy:ry + dy + height, rx + dx:rx + dx + width]
        sad = block_sad(cur - shifted, bs)
        better = sad < best_sad
        if better.any():
            best_sad[better] = sad[better]
            best[better] = (dx, dy)

    logger.debug("Estimation %dx%d, fenêtre ±%d, SAD totale %d", width, height, search_range, int(best_sad.sum()))
    return MotionField(best, bs, search_range, width, height)


def predict_array(reference: np.ndarray, field: MotionField) -> np.ndarray:
    """W_{2t-1→2t} : copie du bloc de référence décalé, lecture bornée"""
    height, width = reference.shape
    bs = field.block_size
    by = np.arange(height) // bs
    bx = np.arange(width) // bs
    dx = field.dx[by[:, None], bx[None, :]]
    dy = field.dy[by[:, None], bx[None, :]]
    ys = np.clip(np.arange(height)[:, None] + dy, 0, height - 1)
    xs = np.clip(np.arange(width)[None, :] + dx, 0, width - 1)
    return reference[ys, xs]


def update_array(hp: np.ndarray, field: MotionField) -> np.ndarray:
    """
    W_{2t→2t-1} : dispersion des blocs HP vers leur position de référence

    Sortie initialisée à zéro, blocs traités ligne par ligne, les pixels
    hors trame sont perdus, une écriture ultérieure écrase la précédente.
    """
    height, width = hp.shape
    bs = field.block_size
    out = np.zeros_like(hp)
    rows, cols = field.grid_shape
    for by in range(rows):
        for bx in range(cols):
            y0, x0 = by * bs, bx * bs
            y1, x1 = min(y0 + bs, height), min(x0 + bs, width)
            dx, dy = int(field.vectors[by, bx, 0]), int(field.vectors[by, bx, 1])
            ty0, tx0 = y0 + dy, x0 + dx
            cy0, cx0 = max(ty0, 0), max(tx0, 0)
            cy1, cx1 = min(ty0 + (y1 - y0), height), min(tx0 + (x1 - x0), width)
            if cy0 >= cy1 or cx0 >= cx1:
                continue
            out[cy0:cy1, cx0:cx1] = hp[cy0 - dy:cy1 - dy, cx0 - dx:cx1 - dx]
    return out


def warp_predict(reference: FrameLike, field: MotionField) -> CoefficientFrame:
    ref = _samples(reference)
    _check_coverage(ref, field)
    return CoefficientFrame(predict_array(ref, field), FrameKind.LP)


def warp_update(hp: FrameLike, field: MotionField) -> CoefficientFrame:
    samples = _samples(hp)
    _check_coverage(samples, field)
    return CoefficientFrame(update_array(samples, field), FrameKind.HP)


def _check_coverage(samples: np.ndarray, field: MotionField):
    if samples.shape != (field.height, field.width):
        raise ArgumentError(f"Le champ couvre {field.width}x{field.height}, trame {samples.shape[1]}x{samples.shape[0]}")


# ============================================================================
# SÉRIALISATION
# ============================================================================
def encode_motion_field(field: MotionField) -> bytes:
    """Code (dx, dy) prédits depuis le voisin de gauche, un groupe de contextes par composante"""
    if field.block_count == 0:
        return b""
    contexts = (SignedValueContexts(), SignedValueContexts())
    encoder = RangeEncoder()
    for row in field.vectors.tolist():
        left = (0, 0)
        for vector in row:
            for component in (0, 1):
                contexts[component].encode(encoder, vector[component] - left[component])
            left = vector
    return CodedStream(encoder.finish()).to_bytes()


def decode_motion_field(data: bytes, dims: Tuple[int, int], block_size: int = 8,
                        search_range: Optional[int] = None) -> MotionField:
    """
    Relit un champ codé

    Args:
        data: Octets produits par encode_motion_field
        dims: (largeur, hauteur) de la trame
        search_range: Fenêtre attendue (déduite des vecteurs si absente)
    """
    width, height = dims
    rows, cols = -(-height // block_size), -(-width // block_size)
    if rows * cols == 0:
        return MotionField(np.zeros((0, 2), dtype=np.int32), block_size, search_range or 0, width, height)

    stream, end = CodedStream.from_bytes(data)
    if end != len(data):
        raise EntropyError(f"{len(data) - end} octet(s) en trop après le champ de mouvement", offset=end)
    contexts = (SignedValueContexts(), SignedValueContexts())
    decoder = RangeDecoder(stream.payload)
    vectors = np.zeros((rows, cols, 2), dtype=np.int32)
    for by in range(rows):
        left = [0, 0]
        for bx in range(cols):
            for component in (0, 1):
                left[component] += contexts[component].decode(decoder)
            vectors[by, bx] = left

    largest = int(np.abs(vectors).max())
    if search_range is None:
        search_range = largest
    elif largest > search_range:
        raise EntropyError(f"Vecteur décodé hors de la fenêtre ±{search_range}")
    return MotionField(vectors, block_size, search_range, width, height)
