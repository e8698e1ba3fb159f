import numpy as np
import pytest

from kerrpump import SystemParams, TwoModeAmplitudes


def pair_superposition(n_max, i, j, phase=1.0):
    """(|i,i> + phase |j,j>)/sqrt(1+|phase|^2) as an amplitude lattice."""
    c = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    c[i, i] = 1.0
    c[j, j] = phase
    c /= np.sqrt(np.sum(np.abs(c) ** 2))
    return TwoModeAmplitudes(c)


def random_state(rng, n_max):
    c = rng.standard_normal((n_max + 1, n_max + 1)) + 1j * rng.standard_normal((n_max + 1, n_max + 1))
    c /= np.sqrt(np.sum(np.abs(c) ** 2))
    return TwoModeAmplitudes(c)


def random_density(rng, n_max, rank=3):
    """Random valid density tensor as a mixture of random pure states."""
    d = n_max + 1
    rho = np.zeros((d, d, d, d), dtype=complex)
    weights = rng.random(rank)
    weights /= weights.sum()
    for w in weights:
        c = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        c /= np.sqrt(np.sum(np.abs(c) ** 2))
        rho += w * np.einsum("nk,ml->nmkl", c, c.conj())
    return rho


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


@pytest.fixture
def small_params():
    return SystemParams(g=0.3, n_max=4)
