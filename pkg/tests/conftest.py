import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geoquery.corpus import build_text_index
from geoquery.embedding import ProviderConfig
from geoquery.index import IndexEntry, build
from geoquery.synth import generate_world

SMALL_WORLD_SEED = 11


@pytest.fixture(scope="session")
def small_world():
    """500 tiles, 5 clusters, dim 16; shared across read-only tests."""
    return generate_world(500, 16, 5, seed=SMALL_WORLD_SEED)


@pytest.fixture(scope="session")
def small_engine(small_world):
    w = small_world
    visual_index = build([IndexEntry(k, v) for k, v in w.visual_records])
    text_index = build_text_index(w.proxy_records)
    provider = ProviderConfig(kind="synthetic", dim=16, seed=SMALL_WORLD_SEED)
    return w, visual_index, text_index, provider


@pytest.fixture
def rng():
    return np.random.default_rng(42)
