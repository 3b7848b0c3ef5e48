import numpy as np
import pytest

from swsig import PathSignature, RadioScene, SystemConfig

M128 = 128

# the two-path reference scene: fractional signatures, equal gains
REF_PATHS = ((35.25, 15.25), (80.25, 88.50))
REF_GAIN = 0.5 + 0.5j


def ref_scene(M=M128, N=M128, gain=REF_GAIN):
    return RadioScene(tuple(PathSignature(a / M, b / N, gain) for a, b in REF_PATHS))


def single(phi, tau, gain=1.0):
    return RadioScene((PathSignature(phi, tau, gain),))


@pytest.fixture
def cfg128():
    return lambda alpha=0.0: SystemConfig(M128, M128, alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_scene(rng, n_paths, gain_scale=1.0):
    paths = []
    for _ in range(n_paths):
        phi, tau = rng.random(2)
        g = (rng.normal() + 1j * rng.normal()) * gain_scale
        paths.append(PathSignature(phi, tau, g))
    return RadioScene(tuple(paths))
