import numpy as np
import pytest

from gpwave.trigpoly import TrigPolynomial, random_real_potential

STD_PAIRS = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1)]
AXIS_PAIRS = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
DELTA = 1.0 / 300.0


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def potential(rng):
    """Real mean-free polynomial with support strictly inside the R0=2 ball."""
    return random_real_potential(rng, STD_PAIRS, norm=0.5)


def random_direction(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def brute_convolve(f: TrigPolynomial, g: TrigPolynomial) -> dict:
    """Independent reference: plain dict-of-tuples convolution."""
    out: dict = {}
    for qf, cf in f.as_dict().items():
        for qg, cg in g.as_dict().items():
            q = (qf[0] + qg[0], qf[1] + qg[1], qf[2] + qg[2])
            out[q] = out.get(q, 0.0) + cf * cg
    return {q: c for q, c in out.items() if c != 0}
