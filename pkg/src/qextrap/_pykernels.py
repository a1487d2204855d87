"""Pure-numpy versions of the hot kernels (fallback when the extension is absent)."""

import numpy as np


def pinch_distribution_batch(unitaries, rho):
    """``diag(U_k rho U_k^dag)`` for a stack of unitaries, shape (K, N)."""
    u = np.asarray(unitaries, dtype=complex)
    return np.einsum("kxi,ij,kxj->kx", u, np.asarray(rho, dtype=complex), u.conj(),
                     optimize=True).real


def pinch_td_batch(unitaries, delta):
    """Per-key trace distance of pinched states given ``delta = rho0 - rho1``."""
    return 0.5 * np.abs(pinch_distribution_batch(unitaries, delta)).sum(axis=1)


def half_l1_rows(p, q):
    """Row-wise total-variation distance between two probability tables."""
    return 0.5 * np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum(axis=1)
