import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240915)


def random_measure(rng, max_atoms=20, dim=2, spread=2.0):
    from mposterior import make_empirical

    n = int(rng.integers(1, max_atoms + 1))
    atoms = rng.standard_normal((n, dim)) + spread * rng.standard_normal(dim)
    if rng.random() < 0.5:
        return make_empirical(atoms)
    return make_empirical(atoms, rng.random(n) + 0.05)
