import numpy as np
import pytest

from jcpulse.hilbert import build_space


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_axis(rng: np.random.Generator, xy_only: bool = False) -> np.ndarray:
    v = rng.normal(size=3)
    if xy_only:
        v[2] = 0.0
    return v / np.linalg.norm(v)


@pytest.fixture
def space2():
    return build_space(2)


@pytest.fixture
def space3():
    return build_space(3)
