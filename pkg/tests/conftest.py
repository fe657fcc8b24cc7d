import numpy as np
import pytest

from essvec.corpus import BowVector
from essvec.dev import DevArchitecture, PairedExample
from essvec.ev import EvArchitecture


def random_unit_bow(rng, dim, min_support=1):
    support = int(rng.integers(min_support, dim + 1))
    indices = np.sort(rng.choice(dim, size=support, replace=False))
    weights = rng.random(support) + 0.05
    weights /= weights.sum()
    return BowVector(indices=indices.astype(np.int64), weights=weights,
                     dim=dim)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_arch():
    return EvArchitecture(vocab_dim=8, embedding_dim=3, f_hidden=(5,),
                          g_hidden=(5,), h_hidden=(5,))


@pytest.fixture
def tiny_dev_arch():
    return DevArchitecture(vocab_dim=8, embedding_dim=3, f_hidden=(5,),
                           g_hidden=(5,), h_hidden=(5,), s_hidden=(4,))


def make_random_pair(rng, dim):
    return PairedExample(noisy=random_unit_bow(rng, dim),
                         clean=random_unit_bow(rng, dim))


@pytest.fixture
def random_pair(rng, tiny_dev_arch):
    return make_random_pair(rng, tiny_dev_arch.vocab_dim)
