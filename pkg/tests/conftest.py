"""
Configuration commune des tests
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Ajouter la racine du dépôt au path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from modules.frame_io import Sequence

settings.register_profile(
    "fast", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))

# critères d'acceptation à pleine échelle, lancés avec CAWL_ACCEPTANCE=1
ACCEPTANCE_ENV = "CAWL_ACCEPTANCE"


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: vérification à pleine échelle (lente)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get(ACCEPTANCE_ENV):
        return
    skip = pytest.mark.skip(reason=f"lancer avec {ACCEPTANCE_ENV}=1")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def textured_frame(width: int, height: int, seed: int = 0) -> np.ndarray:
    """Trame texturée (gradient et bruit) dans [0, 255]"""
    generator = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width]
    base = 40 + 3 * x + 2 * y + generator.integers(0, 40, size=(height, width))
    return np.clip(base, 0, 255).astype(np.uint8)


def static_then_moving(width: int = 16, height: int = 16, frames: int = 16, seed: int = 7) -> Sequence:
    """Première moitié statique (bruit léger), seconde moitié en mouvement fort"""
    generator = np.random.default_rng(seed)
    still = textured_frame(width, height, seed).astype(np.int32)
    planes = []
    for t in range(frames):
        if t < frames // 2:
            plane = still + generator.integers(-1, 2, size=still.shape)
        else:
            plane = generator.integers(0, 256, size=still.shape)
        planes.append(np.clip(plane, 0, 255))
    return Sequence.from_array(np.stack(planes))


@pytest.fixture
def mixed_sequence() -> Sequence:
    return static_then_moving()
