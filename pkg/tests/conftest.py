"""
Shared pytest configuration.

Puts ``src`` on the import path and provides small seeded fixtures.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from posecast.core import GridSpec, Heatmap  # noqa: E402


@pytest.fixture
def rng():
    """Seeded generator so random-case tests are reproducible."""
    return np.random.default_rng(1234)


@pytest.fixture
def grid_2d():
    return GridSpec(K=2, D=1, H=8, W=8)


@pytest.fixture
def grid_3d():
    return GridSpec(K=2, D=4, H=6, W=5)


@pytest.fixture
def random_heatmap(rng):
    """Factory for random score heatmaps on a given grid."""

    def make(spec: GridSpec) -> Heatmap:
        return Heatmap(spec, rng.normal(size=spec.shape))

    return make


@pytest.fixture
def one_hot():
    """Factory for a large-margin heatmap peaked at one cell per joint."""

    def make(spec: GridSpec, cells, margin: float = 50.0) -> Heatmap:
        scores = np.zeros(spec.shape)
        for k, (x, y, z) in enumerate(cells):
            scores[k, z, y, x] = margin
        return Heatmap(spec, scores)

    return make


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    """Tests run the worker pool with one thread unless they opt in."""
    monkeypatch.setenv("POSECAST_THREADS", "1")
