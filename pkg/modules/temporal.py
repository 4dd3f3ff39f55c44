"""
Module de lifting temporel
Transformée de Haar entière (prédiction puis mise à jour) dans la direction
temporelle, avec opérateur de déformation interchangeable
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence as Seq, Tuple

import numpy as np

from modules.frame_io import CoefficientFrame, FrameKind
from modules.motion import (McParams, MotionField, estimate_block_motion, search_range_for_level, warp_predict,
                            warp_update)
from modules.utils import ArgumentError, Validator

logger = logging.getLogger(__name__)


class McMode(Enum):
    NONE = "none"
    BLOCK = "block"


@dataclass(frozen=True)
class WarpPair:
    """
    Opérateurs de prédiction et de mise à jour attachés à un champ

    Sans champ (ou champ nul), les deux opérateurs sont l'identité.
    """
    field: Optional[MotionField] = None

    def predict(self, reference: np.ndarray) -> np.ndarray:
        if self.field is None or self.field.is_identity():
            return reference
        return warp_predict(reference, self.field).samples

    def update(self, hp: np.ndarray) -> np.ndarray:
        if self.field is None or self.field.is_identity():
            return hp
        return warp_update(hp, self.field).samples


IDENTITY = WarpPair()


def lift_pair_forward(odd: CoefficientFrame, even: CoefficientFrame,
                      warp: WarpPair = IDENTITY) -> Tuple[CoefficientFrame, CoefficientFrame]:
    """
    Un pas de lifting de Haar

    h = pair - ⌊W(impair)⌋ ; l = impair + ⌊W'(h) / 2⌋ (plancher vers -∞)
    """
    a = odd.samples.astype(np.int64)
    b = even.samples.astype(np.int64)
    Validator.check_same_shape(a, b)
    hp = b - warp.predict(a)
    lp = a + np.floor_divide(warp.update(hp), 2)
    return CoefficientFrame(lp, FrameKind.LP), CoefficientFrame(hp, FrameKind.HP)


def lift_pair_inverse(lp: CoefficientFrame, hp: CoefficientFrame,
                      warp: WarpPair = IDENTITY) -> Tuple[CoefficientFrame, CoefficientFrame]:
    """Inverse exact de lift_pair_forward pour le même champ"""
    l = lp.samples.astype(np.int64)
    h = hp.samples.astype(np.int64)
    Validator.check_same_shape(l, h)
    odd = l - np.floor_divide(warp.update(h), 2)
    even = h + warp.predict(odd)
    return CoefficientFrame(odd, FrameKind.LP), CoefficientFrame(even, FrameKind.LP)


def _estimate(odd: CoefficientFrame, even: CoefficientFrame, mc_mode: McMode, level: int,
              params: McParams) -> MotionField:
    if mc_mode is McMode.NONE:
        return MotionField.zeros(even.width, even.height, params.block_size)
    return estimate_block_motion(odd, even, search_range_for_level(level, params), params)


def analyze_level(lp_frames: Seq[CoefficientFrame], mc_mode: McMode, level: int,
                  params: McParams = McParams(), threads: int = 1
                  ) -> Tuple[List[CoefficientFrame], List[CoefficientFrame], List[MotionField]]:
    """
    Un niveau de décomposition sur une liste de trames LP

    Args:
        lp_frames: Trames du niveau précédent (nombre pair)
        mc_mode: Sans compensation ou compensation par blocs
        level: Niveau produit (fixe la fenêtre de recherche)
        threads: Paires traitées en parallèle (résultat identique)

    Returns:
        (LP, HP, champs), N/2 éléments chacun
    """
    if len(lp_frames) % 2:
        raise ArgumentError(f"Nombre de trames impair au niveau {level}: {len(lp_frames)}")

    def work(k: int):
        odd, even = lp_frames[2 * k], lp_frames[2 * k + 1]
        field = _estimate(odd, even, mc_mode, level, params)
        lp, hp = lift_pair_forward(odd, even, WarpPair(field))
        return lp, hp, field

    pairs = range(len(lp_frames) // 2)
    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, pairs))
    else:
        results = [work(k) for k in pairs]

    logger.debug("Niveau %d: %d paires analysées (%s)", level, len(results), mc_mode.value)
    return [r[0] for r in results], [r[1] for r in results], [r[2] for r in results]


def synthesize_level(lp: Seq[CoefficientFrame], hp: Seq[CoefficientFrame],
                     motion_fields: Seq[Optional[MotionField]],
                     mc_mode: McMode = McMode.NONE) -> List[CoefficientFrame]:
    """Inverse exact de analyze_level ; entrelace (impair, pair) par paire"""
    if not len(lp) == len(hp) == len(motion_fields):
        raise ArgumentError(f"Longueurs incohérentes: {len(lp)} LP, {len(hp)} HP, {len(motion_fields)} champs")
    out: List[CoefficientFrame] = []
    for l, h, field in zip(lp, hp, motion_fields):
        warp = IDENTITY if mc_mode is McMode.NONE else WarpPair(field)
        odd, even = lift_pair_inverse(l, h, warp)
        out.extend([odd, even])
    return out
