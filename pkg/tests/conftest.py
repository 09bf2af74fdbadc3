import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from obfeval.channel import Alphabet, ObfuscationChannel, ProbVec


def make_alphabet(n, prefix="x"):
    return Alphabet([f"{prefix}{i}" for i in range(n)])


def random_channel(rng, n_in, n_out, dense=True):
    rows = rng.random((n_in, n_out))
    if dense:
        rows += 1e-3
    rows /= rows.sum(axis=1, keepdims=True)
    return ObfuscationChannel(make_alphabet(n_in), make_alphabet(n_out, "e"), rows)

def random_prior(rng, alphabet):
    mass = rng.random(alphabet.size) + 1e-3
    return ProbVec(alphabet, mass / mass.sum())


def bsc(q):
    a = Alphabet(["0", "1"])
    return ObfuscationChannel(a, a, [[1 - q, q], [q, 1 - q]])


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240817)
