import math

import numpy as np
import pytest
from hypothesis import settings

from sftlab.sft import Potential, Sft

settings.register_profile("sftlab", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("sftlab")

LOG_THREE_HALVES = math.log(1.5)


@pytest.fixture
def two_shift():
    return Sft.full_shift(2)


@pytest.fixture
def golden():
    return Sft.golden_mean()


@pytest.fixture
def union():
    """Full 2-shift on symbols 0, 1 next to the full 3-shift on 2, 3, 4."""
    return Sft.disjoint_union(Sft.full_shift(2), Sft.full_shift(3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_irreducible(rng, max_alphabet=4):
    """Random irreducible 0/1 matrix: a random cycle through every symbol
    plus extra random edges."""
    m = int(rng.integers(2, max_alphabet + 1))
    a = (rng.random((m, m)) < 0.5).astype(int)
    perm = rng.permutation(m)
    for i in range(m):
        a[perm[i], perm[(i + 1) % m]] = 1
    return Sft(a)


def brute_words(sft, n):
    """Admissible words by filtering every candidate string."""
    import itertools

    m = sft.alphabet_size
    return [w for w in itertools.product(range(m), repeat=n) if all(sft.transitions[a, b] for a, b in zip(w, w[1:]))]


def indicator_of(sft, symbols):
    return Potential.indicator(sft, symbols)
