"""Shared helpers for the test suite."""

import numpy as np

from catalyx.hilbert import EigenspaceDecomposition


def random_decomposition(rng):
    """Random eigenspace data with contiguous blocks; eigenvalues may repeat
    across blocks (as for conservation-law refinements)."""
    n = int(rng.integers(1, 5))
    mult = [int(rng.integers(1, 4)) for _ in range(n)]
    weights = rng.dirichlet(np.ones(n))
    pairs = sorted(
        ((w / r, r) for w, r in zip(weights, mult)), key=lambda t: -t[0]
    )
    dim = sum(r for _, r in pairs)
    projs, values, mults = [], [], []
    off = 0
    for v, r in pairs:
        p = np.zeros((dim, dim), dtype=complex)
        p[off : off + r, off : off + r] = np.eye(r)
        projs.append(p)
        values.append(v)
        mults.append(r)
        off += r
    return EigenspaceDecomposition(values, projs, mults)
