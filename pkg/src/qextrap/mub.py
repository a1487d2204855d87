"""Maximal sets of mutually unbiased bases.

Prime dimensions use the quadratic Gauss-sum vectors; qubit dimensions
``2**n`` (n <= 5) use the stabilizer classes of GF(2**n):

* class "infinity": Z-type Paulis, i.e. the computational basis;
* class ``a``: ``{X(b) Z(a b) : b in GF(2**n)}``.

The X part of ``X(b)`` uses polynomial-basis coordinates of ``b`` and the Z
part of ``Z(c)`` uses coordinates ``tr(c x**j)`` in the trace-dual basis, so
the symplectic product of two class members is ``tr(2 a b b') = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symplectic import pauli_matrix

# irreducible polynomials over GF(2), bit i = coefficient of x**i
IRREDUCIBLE = {1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011, 5: 0b100101}


@dataclass(frozen=True, eq=False)
class MubSet:
    """``bases[r]`` is a unitary whose columns are the vectors of basis r."""

    dim: int
    bases: tuple[np.ndarray, ...]


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, int(p**0.5) + 1))


def prime_mub(p: int) -> MubSet:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if p == 2:
        s = 1 / np.sqrt(2)
        return MubSet(2, (
            np.eye(2, dtype=complex),
            s * np.array([[1, 1], [1, -1]], dtype=complex),
            s * np.array([[1, 1], [1j, -1j]], dtype=complex),
        ))
    j = np.arange(p)
    omega = np.exp(2j * np.pi / p)
    bases = [np.eye(p, dtype=complex)]
    for r in range(p):
        # column k: p**-1/2 sum_j omega**(r j^2 + k j) |j>
        expo = (r * j[:, None] ** 2 + j[:, None] * j[None, :]) % p
        bases.append(omega**expo / np.sqrt(p))
    return MubSet(p, tuple(bases))


def gf_mul(a: int, b: int, n: int) -> int:
    poly = IRREDUCIBLE[n]
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return out


def gf_trace(a: int, n: int) -> int:
    t, x = 0, a
    for _ in range(n):
        t ^= x
        x = gf_mul(x, x, n)
    if t not in (0, 1):
        raise ArithmeticError("field trace left GF(2)")
    return t


def _pauli_vector(b: int, c: int, n: int) -> np.ndarray:
    # qubit j carries coefficient of x**j for X, and tr(c x**j) for Z
    x = [(b >> j) & 1 for j in range(n)]
    z = [gf_trace(gf_mul(c, 1 << j, n), n) for j in range(n)]
    return np.array(x + z, dtype=np.uint8)


def qubit_mub(n: int) -> MubSet:
    if n not in IRREDUCIBLE:
        raise ValueError(f"qubit MUBs are tabulated for 1 <= n <= 5, got n={n}")
    dim = 2**n
    weights = 2.0 ** np.arange(n)
    bases = [np.eye(dim, dtype=complex)]
    for a in range(dim):
        gens = [pauli_matrix(_pauli_vector(1 << i, gf_mul(a, 1 << i, n), n)) for i in range(n)]
        # distinct weights make the joint eigenbasis of the commuting class nondegenerate
        h = sum(w * g for w, g in zip(weights, gens))
        _, v = np.linalg.eigh(h)
        bases.append(v)
    return MubSet(dim, tuple(bases))


def max_deviation(m: MubSet) -> float:
    """Largest ``| |<e_i^r|e_j^s>|^2 - 1/N |`` over basis pairs r != s."""
    worst = 0.0
    for r in range(len(m.bases)):
        for s in range(r + 1, len(m.bases)):
            ov = np.abs(m.bases[r].conj().T @ m.bases[s]) ** 2
            worst = max(worst, float(np.max(np.abs(ov - 1.0 / m.dim))))
    return worst


def orthonormality_error(m: MubSet) -> float:
    eye = np.eye(m.dim)
    return max(float(np.max(np.abs(b.conj().T @ b - eye))) for b in m.bases)
