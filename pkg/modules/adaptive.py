"""
Module de décomposition adaptative au contenu
Coûts débit-distorsion des nœuds, critère d'élagage lagrangien, algorithme
rétrospectif par GOP et vecteur de profondeur v
"""

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence as Seq, Tuple

import numpy as np

from modules.frame_io import CoefficientFrame, Frame
from modules.motion import McParams, MotionField, encode_motion_field
from modules.spatial import encode_frame_lossless
from modules.temporal import McMode, analyze_level
from modules.utils import ArgumentError, ConsistencyError, DepthVectorError, Validator

logger = logging.getLogger(__name__)

# ('LP' | 'HP', niveau, position dans le GOP)
FrameKey = Tuple[str, int, int]


class PruneDecision(Enum):
    KEEP_PARENT = "keep_parent"
    DECOMPOSE = "decompose"


class HpDistortion(Enum):
    ENERGY = "energy"
    ZERO = "zero"


@dataclass(frozen=True)
class CostRecord:
    """Distorsion (EQM par pixel, échelle 8 bits) et débit (bits par pixel)"""
    distortion: float
    rate: float

    def __post_init__(self):
        if self.distortion < 0 or self.rate < 0:
            raise ArgumentError(f"Coût négatif: D={self.distortion}, R={self.rate}")

    def __add__(self, other: "CostRecord") -> "CostRecord":
        return CostRecord(self.distortion + other.distortion, self.rate + other.rate)


@dataclass(frozen=True)
class LambdaConfig:
    value: float = 3.0

    def __post_init__(self):
        Validator.check_lambda(self.value)


@dataclass
class DecompositionNode:
    """
    Décision sur une paire de nœuds du niveau level-1

    support : les 2^level trames originales couvertes ; children : clés du
    LP et du HP produits, absentes quand la paire est conservée (élaguée).
    """
    level: int
    position: int
    support: range
    parent_cost: CostRecord
    cost: CostRecord
    children: Optional[Tuple[FrameKey, FrameKey]] = None
    pruned: bool = False


@dataclass
class GopTree:
    i_max: int
    nodes: List[DecompositionNode] = field(default_factory=list)

    def node(self, level: int, position: int) -> Optional[DecompositionNode]:
        for node in self.nodes:
            if node.level == level and node.position == position:
                return node
        return None


# ============================================================================
# VECTEUR DE PROFONDEUR
# ============================================================================
class Role(Enum):
    LP = "LP"
    HP = "HP"
    INTRA = "INTRA"


@dataclass(frozen=True)
class FrameRole:
    """Rôle d'une position ; pour un HP, lp_position est son LP du même niveau"""
    position: int
    role: Role
    level: int
    owner: Optional[int] = None
    lp_position: Optional[int] = None

    @property
    def key(self) -> FrameKey:
        return ('HP' if self.role is Role.HP else 'LP', self.level, self.position)


@dataclass(frozen=True)
class DepthVector:
    """v[p] = i > 0 : LP de niveau i en p, HP partenaire en p + 2^(i-1)"""
    values: Tuple[int, ...]
    i_max: int

    @classmethod
    def zeros(cls, length: int, i_max: int) -> "DepthVector":
        return cls(tuple([0] * length), i_max)

    @classmethod
    def from_values(cls, values, i_max: int) -> "DepthVector":
        v = cls(tuple(int(x) for x in values), i_max)
        parse_depth_vector(v)
        return v

    def __len__(self):
        return len(self.values)

    def __getitem__(self, index):
        return self.values[index]


def parse_depth_vector(v: DepthVector) -> List[FrameRole]:
    """
    Retrouve le rôle de chaque position

    Un LP de niveau i en p réclame son partenaire p + 2^(i-1) et, de façon
    récursive, toutes les positions HP de son sous-arbre ; les zéros non
    réclamés sont des trames intra.
    """
    length = len(v.values)
    roles: Dict[int, FrameRole] = {}
    for p, level in enumerate(v.values):
        if level < 0 or level > v.i_max:
            raise DepthVectorError(f"v[{p}] = {level} hors de [0, {v.i_max}]")
        if level == 0:
            continue
        span = 1 << level
        if p % span:
            raise DepthVectorError(f"LP de niveau {level} mal aligné en {p}")
        if p + span > length:
            raise DepthVectorError(f"Partenaire HP de la position {p} hors du GOP")
        if p in roles:
            raise DepthVectorError(f"Position {p} déjà réclamée par le LP en {roles[p].owner}")
        roles[p] = FrameRole(p, Role.LP, level)
        for j in range(1, level + 1):
            for m in range(1 << (level - j)):
                q = p + m * (1 << j) + (1 << (j - 1))
                if v.values[q] != 0:
                    raise DepthVectorError(
                        f"v[{q}] = {v.values[q]} alors que la position est le HP du LP en {p}"
                    )
                if q in roles:
                    raise DepthVectorError(f"Position {q} réclamée deux fois")
                roles[q] = FrameRole(q, Role.HP, j, owner=p, lp_position=q - (1 << (j - 1)))

    for p in range(length):
        if p not in roles:
            roles[p] = FrameRole(p, Role.INTRA, 0)
    return [roles[p] for p in range(length)]


def update_depth_vector(v: DepthVector, level: int, surviving_lp_positions: Seq[int]) -> DepthVector:
    """Incrémente v aux LP survivants du niveau `level` ; leur partenaire HP passe à 0"""
    values = list(v.values)
    half = 1 << (level - 1)
    for p in surviving_lp_positions:
        partner = p + half
        if p % (1 << level) or partner >= len(values):
            raise ConsistencyError(f"Position {p} invalide pour le niveau {level}")
        if values[p] != level - 1 or values[partner] != level - 1:
            raise ConsistencyError(f"Collision avec un partenaire HP en {p} au niveau {level}")
        values[p] += 1
        values[partner] = 0
    return DepthVector.from_values(values, v.i_max)


def support_depths(v: DepthVector) -> List[int]:
    """Profondeur atteinte à chaque position (niveau du LP qui la couvre)"""
    depths = [0] * len(v.values)
    for role in parse_depth_vector(v):
        if role.role is Role.LP:
            for q in range(role.position, role.position + (1 << role.level)):
                depths[q] = role.level
    return depths


def depth_histogram(v: DepthVector) -> Dict[int, int]:
    """Nombre de trames originales par profondeur atteinte"""
    return dict(sorted(Counter(support_depths(v)).items()))


# ============================================================================
# COÛTS ET CRITÈRE
# ============================================================================
def node_distortion_lp(lp: CoefficientFrame, support: Seq[Frame]) -> float:
    """EQM moyenne du LP contre chacune des trames originales de son support"""
    if not support:
        raise ArgumentError("Support vide pour la distorsion LP")
    samples = lp.samples.astype(np.float64)
    errors = []
    for frame in support:
        Validator.check_same_shape(samples, frame.samples)
        errors.append(np.mean((samples - frame.samples) ** 2))
    return float(np.mean(errors))


def node_distortion_hp(hp: CoefficientFrame, policy: HpDistortion = HpDistortion.ENERGY) -> float:
    """Énergie moyenne du résidu (écart au HP idéal nul), ou 0 selon la politique"""
    if policy is HpDistortion.ZERO:
        return 0.0
    return float(np.mean(hp.samples.astype(np.float64) ** 2))


def lagrangian_cost(rec: CostRecord, lam: float) -> float:
    return rec.distortion + lam * rec.rate


def prune_decision(parent_pair: CostRecord, child_lp: CostRecord, child_hp: CostRecord,
                   lam: float) -> PruneDecision:
    """Conserve le parent si son coût ne dépasse pas celui des enfants (égalité incluse)"""
    children = child_lp + child_hp
    if math.isinf(lam):
        keep = (parent_pair.rate, parent_pair.distortion) <= (children.rate, children.distortion)
    else:
        keep = lagrangian_cost(parent_pair, lam) <= lagrangian_cost(children, lam)
    return PruneDecision.KEEP_PARENT if keep else PruneDecision.DECOMPOSE


# ============================================================================
# ALGORITHME PAR GOP
# ============================================================================
ForcedDecisions = Callable[[int, int], PruneDecision]


@dataclass
class AdaptiveDecomposition:
    """Résultat d'un GOP : arbre, v, trames survivantes et leurs codages"""
    tree: GopTree
    depth: DepthVector
    frames: Dict[FrameKey, CoefficientFrame]
    motion_fields: Dict[Tuple[int, int], MotionField]
    payloads: Dict[FrameKey, bytes]
    motion_payloads: Dict[Tuple[int, int], bytes]


def build_adaptive_decomposition(gop: Seq[Frame], lam: float = 3.0, mc_mode: McMode = McMode.NONE,
                                 params: McParams = McParams(),
                                 hp_distortion: HpDistortion = HpDistortion.ENERGY,
                                 force_uniform: bool = False,
                                 forced: Optional[ForcedDecisions] = None,
                                 threads: int = 1) -> AdaptiveDecomposition:
    """
    Décomposition adaptative d'un GOP de 2^i_max trames

    Tous les niveaux sont calculés d'abord, toutes les trames candidates
    sont codées pour obtenir les débits réels, puis les paires sont évaluées
    par niveau croissant ; une paire conservée arrête l'arbre localement.

    Args:
        gop: Trames originales du GOP
        lam: Multiplicateur de Lagrange
        force_uniform: Décompose toujours (U-WL)
        forced: Décision imposée f(niveau formé, position de la paire)
    """
    size = len(gop)
    if not Validator.is_power_of_two(size) or size < 2:
        raise ArgumentError(f"Taille de GOP non puissance de deux (≥ 2): {size}")
    Validator.check_lambda(lam)
    i_max = size.bit_length() - 1
    pixels = gop[0].width * gop[0].height

    # (a) analyse complète
    frames: Dict[FrameKey, CoefficientFrame] = {}
    fields: Dict[Tuple[int, int], MotionField] = {}
    current = [CoefficientFrame.from_frame(f) for f in gop]
    for p, frame in enumerate(current):
        frames[('LP', 0, p)] = frame
    for level in range(1, i_max + 1):
        lps, hps, level_fields = analyze_level(current, mc_mode, level, params, threads)
        step, half = 1 << level, 1 << (level - 1)
        for k, (lp, hp, motion) in enumerate(zip(lps, hps, level_fields)):
            frames[('LP', level, k * step)] = lp
            frames[('HP', level, k * step + half)] = hp
            fields[(level, k * step)] = motion
        current = lps

    # (b) débits réels
    keys = list(frames)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            coded = list(pool.map(lambda key: encode_frame_lossless(frames[key]), keys))
    else:
        coded = [encode_frame_lossless(frames[key]) for key in keys]
    payloads = dict(zip(keys, coded))
    motion_payloads: Dict[Tuple[int, int], bytes] = {}
    if mc_mode is McMode.BLOCK:
        motion_payloads = {key: encode_motion_field(motion) for key, motion in fields.items()}

    def rate(key: FrameKey) -> float:
        return len(payloads[key]) * 8 / pixels

    def lp_cost(level: int, position: int) -> CostRecord:
        support = gop[position:position + (1 << level)]
        return CostRecord(node_distortion_lp(frames[('LP', level, position)], support), rate(('LP', level, position)))

    # (c) évaluation par niveau croissant
    tree = GopTree(i_max)
    v = DepthVector.zeros(size, i_max)
    active = set(range(size))
    for level in range(1, i_max + 1):
        half = 1 << (level - 1)
        survivors = []
        for a in range(0, size, 1 << level):
            b = a + half
            if a not in active or b not in active:
                continue
            first, second = lp_cost(level - 1, a), lp_cost(level - 1, b)
            parent = CostRecord((first.distortion + second.distortion) / 2, first.rate + second.rate)
            child_lp = lp_cost(level, a)
            hp_key = ('HP', level, b)
            mv_rate = len(motion_payloads.get((level, a), b"")) * 8 / pixels
            child_hp = CostRecord(node_distortion_hp(frames[hp_key], hp_distortion), rate(hp_key) + mv_rate)

            if forced is not None:
                decision = forced(level, a)
            elif force_uniform:
                decision = PruneDecision.DECOMPOSE
            else:
                decision = prune_decision(parent, child_lp, child_hp, lam)

            logger.debug("Niveau %d paire %d: parent D=%.3f R=%.4f, enfants D=%.3f R=%.4f -> %s",
                         level, a, parent.distortion, parent.rate, child_lp.distortion + child_hp.distortion,
                         child_lp.rate + child_hp.rate, decision.value)
            kept = decision is PruneDecision.KEEP_PARENT
            tree.nodes.append(DecompositionNode(
                level, a, range(a, a + (1 << level)), parent, child_lp + child_hp,
                children=None if kept else (('LP', level, a), hp_key), pruned=kept,
            ))
            if not kept:
                survivors.append(a)
        active = set(survivors)
        v = update_depth_vector(v, level, survivors)

    # (d) trames survivantes
    kept_frames: Dict[FrameKey, CoefficientFrame] = {}
    kept_fields: Dict[Tuple[int, int], MotionField] = {}
    for role in parse_depth_vector(v):
        kept_frames[role.key] = frames[role.key]
        if role.role is Role.HP:
            kept_fields[(role.level, role.lp_position)] = fields[(role.level, role.lp_position)]

    logger.info("GOP de %d trames: v=%s", size, v.values)
    return AdaptiveDecomposition(
        tree=tree,
        depth=v,
        frames=kept_frames,
        motion_fields=kept_fields,
        payloads={key: payloads[key] for key in kept_frames},
        motion_payloads={key: motion_payloads[key] for key in kept_fields if key in motion_payloads},
    )
