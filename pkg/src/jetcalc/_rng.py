"""Single source of pseudo-random streams for every sampled verdict."""

import numpy as np

PRNG_ID = "numpy.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
