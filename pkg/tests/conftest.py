import numpy as np
import pytest

from mechsynth.rng import SplitMix64


@pytest.fixture
def rng():
    return SplitMix64(0xC0FFEE)


def random_points(rng: SplitMix64, n: int, lo: float = -10.0, hi: float = 10.0) -> np.ndarray:
    return np.array([[rng.uniform(lo, hi), rng.uniform(lo, hi)] for _ in range(n)])


def circle_samples(n: int, r: float = 1.0, cx: float = 0.0, cy: float = 0.0) -> np.ndarray:
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.column_stack([cx + r * np.cos(th), cy + r * np.sin(th)])


def ellipse_samples(n: int, a: float = 2.0, b: float = 1.0) -> np.ndarray:
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.column_stack([a * np.cos(th), b * np.sin(th)])
