"""Shared helpers for the test suite.

All randomness is drawn through named streams from a single seed so that
every test run is reproducible bit for bit.
"""

import numpy as np

from ncergo import Element, TracedAlgebra
from ncergo.rng import stream

SEED = 0xA5C3_2026

# block layouts used by the seeded property loops: up to 4 blocks,
# dims up to 6, mixed weights
BLOCK_CONFIGS = [
    ((2, 1.0),),
    ((3, 1.0),),
    ((4, 0.5),),
    ((6, 1.0),),
    ((2, 0.5), (3, 2.0)),
    ((1, 0.25), (2, 1.0), (4, 0.75)),
    ((2, 1.0), (2, 1.0), (3, 0.5), (1, 3.0)),
    ((5, 0.1), (1, 2.0)),
]


def make_algebra(config):
    return TracedAlgebra(tuple(config))


def random_unitary(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unitary_element(rng, algebra):
    return Element(algebra, [random_unitary(rng, d) for d in algebra.dims])


def random_projection(rng, algebra, min_rank=0):
    """A random orthogonal projection with seeded per-block ranks."""
    from ncergo.algebra import projection_from_ranges
    bases = []
    for d in algebra.dims:
        k = int(rng.integers(min(min_rank, d), d + 1))
        u = random_unitary(rng, d)
        bases.append(u[:, :k])
    return projection_from_ranges(algebra, bases)


def abs_element(x):
    """|x| = (x* x)^(1/2), built blockwise from the SVD."""
    data = []
    for b in x.data:
        _, s, vh = np.linalg.svd(b)
        data.append(vh.conj().T @ np.diag(s) @ vh)
    return Element(x.algebra, data, selfadjoint=True, positive=True)
