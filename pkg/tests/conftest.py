import numpy as np
import pytest

from smartdm.glm import CandidateModel
from smartdm.objective import ProblemSpec


def random_model(rng, n, p_i=None, phi=None, w=None):
    p_i = int(rng.integers(1, 4)) if p_i is None else p_i
    X = rng.standard_normal((n, p_i))
    snr = rng.uniform(-2.0, 2.0, p_i)
    c_X = rng.standard_normal(p_i)
    phi = float(rng.uniform(0.05, 0.95)) if phi is None else phi
    w = float(rng.uniform(0.2, 2.0)) if w is None else w
    return CandidateModel(X, snr, c_X, w, phi)


def random_spec(rng, n=None, p=None, m=None, constrained=True):
    """Small random problem with optional design and contrast constraints."""
    n = int(rng.integers(12, 61)) if n is None else n
    p = int(rng.integers(2, 6)) if p is None else p
    m = int(rng.integers(1, 11)) if m is None else m
    models = [random_model(rng, n) for _ in range(m)]
    A = B = C = d = None
    if constrained:
        A = np.eye(p)[:, :1]
        B = rng.standard_normal((n, 1))
        C = np.eye(p)[:1]
        d = np.array([1.0])
    return ProblemSpec(models, n, p, A, B, C, d, name="random")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_spec(rng):
    return random_spec(rng, n=30, p=3, m=4)
