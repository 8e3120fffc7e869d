import numpy as np
import pytest

from raybvh import Ray, Scene
from raybvh.rng import Xorshift64Star


def rng_vec(rng: Xorshift64Star, lo: float, hi: float) -> np.ndarray:
    return np.array([rng.uniform(lo, hi) for _ in range(3)])


def random_triangle(rng: Xorshift64Star, extent: float = 20.0, size: float = 2.0):
    """Non-degenerate random triangle within [0, extent]^3."""
    while True:
        a = rng_vec(rng, 0.0, extent)
        b = a + rng_vec(rng, -size, size)
        c = a + rng_vec(rng, -size, size)
        if 0.5 * np.linalg.norm(np.cross(b - a, c - a)) > 1e-6:
            return a, b, c


def random_soup(seed: int, n: int, extent: float = 20.0) -> Scene:
    rng = Xorshift64Star(seed)
    tris = [random_triangle(rng, extent) for _ in range(n)]
    v = np.array(tris)
    return Scene.from_vertex_arrays(v[:, 0], v[:, 1], v[:, 2], name=f"soup:{seed}:{n}")


def random_ray_in(bounds, rng: Xorshift64Star, margin: float = 1.0) -> Ray:
    lo = bounds.min - margin
    hi = bounds.max + margin
    origin = np.array([rng.uniform(lo[k], hi[k]) for k in range(3)])
    return Ray(origin, np.array(rng.unit_vector()))


@pytest.fixture
def rng():
    return Xorshift64Star(20240817)
