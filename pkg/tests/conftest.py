import numpy as np
import pytest

from cqcovert import CqChannelPair
from cqcovert.operators import diagonal_state


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def canonical_channel():
    """Binary qubit channel with identical diagonal Bob/Willie state pairs."""
    innocent = diagonal_state([0.9, 0.1])
    signal = diagonal_state([0.6, 0.4])
    return CqChannelPair(bob_states=(innocent, signal),
                         willie_states=(innocent, signal))


def classical_kl(p, q):
    """Scalar KL oracle over probability vectors (nats)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    live = p > 0
    return float(np.sum(p[live] * np.log(p[live] / q[live])))


def classical_chi2(p, q):
    """Scalar chi-squared oracle sum (p-q)^2/q over the support of q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    live = q > 0
    return float(np.sum((p[live] - q[live]) ** 2 / q[live]))


def random_probs(dim, gen):
    v = gen.random(dim) + 1e-3
    return v / v.sum()
