"""
Module d'entrée/sortie des trames
Modélise trames, trames de coefficients et séquences ; lit et écrit la vidéo
brute 8 bits en niveaux de gris (4:0:0), sans en-tête
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Union

import numpy as np

from modules.utils import ArgumentError, MalformedInputError, Validator

logger = logging.getLogger(__name__)

# Type d'échantillon partagé par tous les niveaux (au moins 16 bits signés)
SAMPLE_DTYPE = np.int32


class FrameKind(Enum):
    LP = "LP"
    HP = "HP"


def _freeze(samples) -> np.ndarray:
    array = np.array(samples, dtype=SAMPLE_DTYPE, copy=True)
    if array.ndim != 2:
        raise ArgumentError(f"Une trame doit être une grille 2-D, reçu {array.ndim} dimension(s)")
    Validator.check_dimensions(array.shape[1], array.shape[0])
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Frame:
    """Trame originale (niveau 0), échantillons dans [0, 255]"""
    samples: np.ndarray

    def __post_init__(self):
        array = _freeze(self.samples)
        Validator.check_pixel_range(array)
        object.__setattr__(self, 'samples', array)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other):
        return isinstance(other, Frame) and np.array_equal(self.samples, other.samples)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CoefficientFrame:
    """Trame de coefficients signés issue du lifting temporel"""
    samples: np.ndarray
    kind: FrameKind = FrameKind.LP

    def __post_init__(self):
        array = _freeze(self.samples)
        Validator.check_coefficient_range(array)
        object.__setattr__(self, 'samples', array)

    @classmethod
    def from_frame(cls, frame: Frame) -> "CoefficientFrame":
        return cls(frame.samples, FrameKind.LP)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other):
        return (isinstance(other, CoefficientFrame) and self.kind == other.kind
                and np.array_equal(self.samples, other.samples))

    __hash__ = None


@dataclass(frozen=True)
class Sequence:
    """Suite ordonnée de trames de même taille (pixels, ou coefficients passés par erreur)"""
    frames: List[Union[Frame, CoefficientFrame]] = field(default_factory=list)

    def __post_init__(self):
        frames = list(self.frames)
        if not frames:
            raise ArgumentError("Une séquence contient au moins une trame")
        shape = frames[0].samples.shape
        for index, frame in enumerate(frames):
            if frame.samples.shape != shape:
                raise ArgumentError(f"Trame {index}: dimensions {frame.samples.shape} au lieu de {shape}")
        object.__setattr__(self, 'frames', frames)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "Sequence":
        """Construit une séquence depuis un tableau (T, H, W)"""
        array = np.asarray(array)
        if array.ndim != 3:
            raise ArgumentError("Tableau (T, H, W) attendu")
        return cls([Frame(plane) for plane in array])

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def as_array(self) -> np.ndarray:
        return np.stack([frame.samples for frame in self.frames])


def load_raw_sequence(path: Union[str, Path], width: int, height: int) -> Sequence:
    """
    Charge une vidéo brute 8 bits

    Args:
        path: Chemin du fichier (trames concaténées, ligne par ligne)
        width, height: Dimensions fournies hors bande

    Returns:
        Séquence de taille(fichier) / (width × height) trames
    """
    if width <= 0 or height <= 0:
        raise ArgumentError(f"Dimensions invalides: {width}x{height}")

    data = Path(path).read_bytes()
    frame_bytes = width * height
    if len(data) == 0 or len(data) % frame_bytes != 0:
        raise MalformedInputError(
            f"Taille de fichier {len(data)} octets: multiple positif de {frame_bytes} "
            f"({width}x{height}) attendu"
        )

    planes = np.frombuffer(data, dtype=np.uint8).reshape(-1, height, width)
    logger.info("Chargé %s: %d trames %dx%d", path, planes.shape[0], width, height)
    return Sequence.from_array(planes)


def save_raw_sequence(seq: Sequence, path: Union[str, Path]):
    """Écrit la séquence au format brut (inverse exact de load_raw_sequence)"""
    array = seq.as_array()
    Validator.check_pixel_range(array)
    Path(path).write_bytes(array.astype(np.uint8).tobytes())
