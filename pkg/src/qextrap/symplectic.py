"""Clifford tableaux over GF(2) and their dense synthesis.

A Clifford (modulo global phase) is stored as a symplectic matrix ``S`` of
shape (2n, 2n) plus 2n sign bits. Row ``j < n`` is the image of ``X_j``,
row ``n + j`` the image of ``Z_j``; each row is a Pauli vector ``(x | z)``.
The Hermitian Pauli for a vector is ``i**(x.z) X^x Z^z``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product

import numpy as np

from .rng import Stream

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def symplectic_form(n: int) -> np.ndarray:
    om = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    om[:n, n:] = np.eye(n, dtype=np.uint8)
    om[n:, :n] = np.eye(n, dtype=np.uint8)
    return om


def symp(v: np.ndarray, w: np.ndarray) -> int:
    n = len(v) // 2
    return int((v[:n] @ w[n:] + v[n:] @ w[:n]) % 2)


def is_symplectic(s: np.ndarray) -> bool:
    n = s.shape[0] // 2
    s = s.astype(np.int64)
    return bool(np.array_equal((s @ symplectic_form(n) @ s.T) % 2, symplectic_form(n)))


def symplectic_group_order(n: int) -> int:
    return math.prod((4**j - 1) * 2 ** (2 * j - 1) for j in range(1, n + 1))


def clifford_group_order(n: int) -> int:
    """Size of the n-qubit Clifford group modulo global phase."""
    return 4**n * symplectic_group_order(n)


def pauli_matrix(v: np.ndarray) -> np.ndarray:
    return _pauli_cached(tuple(int(b) for b in v)).copy()


@lru_cache(maxsize=4096)
def _pauli_cached(v: tuple) -> np.ndarray:
    v = np.array(v, dtype=np.int64)
    n = len(v) // 2
    x, z = v[:n], v[n:]
    m = np.ones((1, 1), dtype=complex)
    for j in range(n):
        m = np.kron(m, np.linalg.matrix_power(_X, int(x[j])) @ np.linalg.matrix_power(_Z, int(z[j])))
    return (1j) ** int(x @ z % 4) * m


def pauli_label(v: np.ndarray, sign: int = 0) -> str:
    n = len(v) // 2
    return ("-" if sign else "+") + "".join(_LETTERS[(int(v[j]), int(v[n + j]))] for j in range(n))


def _independent_rows(rows: np.ndarray) -> np.ndarray:
    """A maximal linearly independent subset of ``rows`` over GF(2)."""
    pivots, reduced = [], []
    for r in rows:
        r = r.copy()
        for p, red in zip(pivots, reduced):
            if r[p]:
                r ^= red
        nz = np.flatnonzero(r)
        if nz.size:
            pivots.append(nz[0])
            reduced.append(r)
    return np.array(reduced, dtype=np.uint8).reshape(-1, rows.shape[1])


def random_symplectic(n: int, rng: Stream) -> np.ndarray:
    """Uniform element of Sp(2n, 2).

    Builds a symplectic basis pair by pair: ``v`` uniform over nonzero
    vectors of the remaining space, ``w`` uniform over vectors pairing to 1
    with ``v``, then the space shrinks to the symplectic complement.
    """
    basis = np.eye(2 * n, dtype=np.uint8)
    xs, zs = [], []
    for _ in range(n):
        d = basis.shape[0]
        while True:
            c = rng.integers(0, 2, size=d).astype(np.uint8)
            if c.any():
                break
        v = (c @ basis) % 2
        while True:
            c = rng.integers(0, 2, size=d).astype(np.uint8)
            w = (c @ basis) % 2
            if symp(v, w) == 1:
                break
        xs.append(v.astype(np.uint8))
        zs.append(w.astype(np.uint8))
        proj = np.array([(u + symp(u, w) * v + symp(u, v) * w) % 2 for u in basis], dtype=np.uint8)
        basis = _independent_rows(proj)
    return np.array(xs + zs, dtype=np.uint8)


@lru_cache(maxsize=None)
def all_symplectic(n: int) -> np.ndarray:
    """Every element of Sp(2n, 2) by brute force, in increasing encoding order."""
    if n > 2:
        raise ValueError("exhaustive symplectic enumeration is limited to n <= 2")
    m = 2 * n
    codes = np.arange(2 ** (m * m), dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(m * m - 1, -1, -1)) & 1).reshape(-1, m, m)
    om = symplectic_form(n).astype(np.int64)
    prod_ = np.einsum("kij,jl,kml->kim", bits, om, bits) % 2
    ok = np.all(prod_ == om, axis=(1, 2))
    out = bits[ok].astype(np.uint8)
    out.flags.writeable = False
    return out


def encode(s: np.ndarray, signs: np.ndarray) -> int:
    key = 0
    for b in s.ravel():
        key = (key << 1) | int(b)
    for b in signs:
        key = (key << 1) | int(b)
    return key


def decode(key: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    m = 2 * n
    nbits = m * m + m
    if key < 0 or key >> nbits:
        raise ValueError(f"key {key} out of range for n={n}")
    bits = np.array([(key >> (nbits - 1 - i)) & 1 for i in range(nbits)], dtype=np.uint8)
    return bits[: m * m].reshape(m, m), bits[m * m:]


def tableau_label(s: np.ndarray, signs: np.ndarray) -> str:
    return ",".join(pauli_label(row, sg) for row, sg in zip(s, signs))


def synthesize(s: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Dense unitary with ``U X_j U^dag`` and ``U Z_j U^dag`` given by the tableau.

    Column 0 is the joint +1 eigenvector of the Z images; column ``x`` is
    the product of X images selected by the bits of ``x`` applied to it.
    The global phase is fixed so the first entry of column 0 with modulus
    above 1e-6 is real positive.
    """
    n = s.shape[0] // 2
    if not is_symplectic(s):
        raise ValueError("tableau is not symplectic")
    dim = 2**n
    ximg = [(-1) ** int(signs[j]) * pauli_matrix(s[j]) for j in range(n)]
    zimg = [(-1) ** int(signs[n + j]) * pauli_matrix(s[n + j]) for j in range(n)]
    proj = np.eye(dim, dtype=complex)
    for z in zimg:
        proj = proj @ (np.eye(dim) + z) / 2
    col = proj[:, np.argmax(np.linalg.norm(proj, axis=0))]
    col = col / np.linalg.norm(col)
    lead = col[np.flatnonzero(np.abs(col) > 1e-6)[0]]
    col = col * (abs(lead) / lead)
    u = np.empty((dim, dim), dtype=complex)
    for x in range(dim):
        vec = col
        for j in range(n):
            if (x >> (n - 1 - j)) & 1:
                vec = ximg[j] @ vec
        u[:, x] = vec
    return u


def tableau_of(u: np.ndarray, atol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Recover the tableau of a dense Clifford unitary (inverse of ``synthesize``)."""
    dim = u.shape[0]
    n = int(round(math.log2(dim)))
    gens = []
    for j in range(n):
        v = np.zeros(2 * n, dtype=np.uint8)
        v[j] = 1
        gens.append(v)
    for j in range(n):
        v = np.zeros(2 * n, dtype=np.uint8)
        v[n + j] = 1
        gens.append(v)
    rows, signs = [], []
    for g in gens:
        img = u @ pauli_matrix(g) @ u.conj().T
        for bits in product((0, 1), repeat=2 * n):
            v = np.array(bits, dtype=np.uint8)
            c = np.trace(pauli_matrix(v) @ img) / dim
            if abs(abs(c) - 1) < atol:
                if abs(c.imag) > atol:
                    raise ValueError("unitary is not Clifford")
                rows.append(v)
                signs.append(0 if c.real > 0 else 1)
                break
        else:
            raise ValueError("unitary is not Clifford")
    return np.array(rows, dtype=np.uint8), np.array(signs, dtype=np.uint8)


def random_clifford_key(n: int, rng: Stream) -> int:
    s = random_symplectic(n, rng)
    signs = rng.integers(0, 2, size=2 * n).astype(np.uint8)
    return encode(s, signs)


@lru_cache(maxsize=None)
def clifford_keys(n: int) -> tuple[int, ...]:
    """All tableau keys of the n-qubit Clifford group (n <= 2), sorted."""
    keys = []
    for s in all_symplectic(n):
        for sg in product((0, 1), repeat=2 * n):
            keys.append(encode(s, np.array(sg, dtype=np.uint8)))
    return tuple(sorted(keys))
