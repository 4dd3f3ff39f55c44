"""
Fonctions utilitaires pour le codec à lifting adaptatif
Erreurs communes, validation des paramètres et export des résultats
"""

import math
from io import BytesIO
from pathlib import Path
from typing import Dict, Union

import numpy as np
import pandas as pd


# ============================================================================
# ERREURS
# ============================================================================
class CodecError(Exception):
    """Classe de base de toutes les erreurs du codec"""


class ArgumentError(CodecError, ValueError):
    """Paramètre ou argument invalide"""


class MalformedInputError(ArgumentError):
    """Fichier d'entrée brut mal formé"""


class SampleRangeError(ArgumentError):
    """Échantillon hors de la plage 8 bits"""


class EntropyError(CodecError):
    """Flux entropique tronqué ou incohérent"""

    def __init__(self, message: str, offset: int = -1):
        super().__init__(message)
        self.offset = offset


class DepthVectorError(CodecError):
    """Vecteur de profondeur qui viole ses invariants"""


class ContainerError(CodecError):
    """Erreur de lecture du conteneur"""


class BadMagicError(ContainerError):
    pass


class VersionMismatchError(ContainerError):
    pass


class TruncatedContainerError(ContainerError):
    pass


class MalformedContainerError(ContainerError):
    pass


class ConsistencyError(CodecError):
    """Violation d'un invariant interne"""


# ============================================================================
# VALIDATION
# ============================================================================
class Validator:
    """Classe pour la validation des données et des paramètres"""

    @staticmethod
    def check_dimensions(width: int, height: int):
        """Vérifie que les dimensions sont strictement positives"""
        if width <= 0 or height <= 0:
            raise ArgumentError(f"Dimensions invalides: {width}x{height}")

    @staticmethod
    def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "trames"):
        """Vérifie que deux grilles ont la même taille"""
        if a.shape != b.shape:
            raise ArgumentError(f"Dimensions différentes pour les {what}: {a.shape} vs {b.shape}")

    @staticmethod
    def check_levels(levels: int, maximum: int = 8):
        if not 1 <= levels <= maximum:
            raise ArgumentError(f"Nombre de niveaux hors plage [1, {maximum}]: {levels}")

    @staticmethod
    def check_lambda(value: float):
        if not (value >= 0) or math.isnan(value):
            raise ArgumentError(f"λ doit être positif ou nul: {value}")

    @staticmethod
    def is_power_of_two(n: int) -> bool:
        return n >= 1 and (n & (n - 1)) == 0

    @staticmethod
    def check_pixel_range(samples: np.ndarray):
        """Vérifie que les échantillons sont des pixels 8 bits"""
        if samples.size and (samples.min() < 0 or samples.max() > 255):
            raise SampleRangeError(
                f"Échantillon hors de [0, 255] (min={int(samples.min())}, max={int(samples.max())}): "
                "coefficients passés à la place de pixels ?"
            )

    @staticmethod
    def check_coefficient_range(samples: np.ndarray):
        """Les coefficients doivent tenir sur 16 bits signés"""
        if samples.size and (samples.min() < -32768 or samples.max() > 32767):
            raise ConsistencyError("Dépassement du conteneur 16 bits des coefficients")


# ============================================================================
# EXPORT
# ============================================================================
class Exporter:
    """Classe pour l'export des résultats"""

    @staticmethod
    def to_csv(df: pd.DataFrame, path: Union[str, Path, None] = None) -> str:
        """Export CSV (retourne le texte si aucun chemin n'est donné)"""
        text = df.to_csv(index=False)
        if path is not None:
            Path(path).write_text(text)
        return text

    @staticmethod
    def to_excel(sheets: Dict[str, pd.DataFrame], path: Union[str, Path, None] = None) -> BytesIO:
        """Export vers Excel, une feuille par tableau"""
        output = BytesIO()

        with pd.ExcelWriter(output, engine='openpyxl') as writer:
            for name, df in sheets.items():
                df.to_excel(writer, sheet_name=name[:31], index=False)

        output.seek(0)
        if path is not None:
            Path(path).write_bytes(output.getvalue())
        return output


def format_psnr(value: float, decimals: int = 2) -> str:
    """Formate un PSNR pour l'affichage"""
    if math.isinf(value):
        return "lossless"
    return f"{value:.{decimals}f} dB"


def format_bytes(value: int) -> str:
    if value >= 1 << 20:
        return f"{value / (1 << 20):.2f} MB"
    if value >= 1 << 10:
        return f"{value / (1 << 10):.2f} kB"
    return f"{value} B"
