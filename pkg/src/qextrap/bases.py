"""Keyed families of measurement bases.

A family maps each key ``k`` to a unitary ``Rand_k``; measuring "in basis
k" means applying ``Rand_k`` and then measuring in the computational basis,
so the post-measurement state of ``rho`` is ``sum_x P_x rho P_x`` with
``P_x = Rand_k^dag |x><x| Rand_k``.

Key conventions (all keys are Python ints):

* ``mub_prime`` / ``mub_qubits``: basis index r, with r = 0 the computational basis;
* ``clifford``: tableau encoding from :mod:`qextrap.symplectic`;
* ``binary_phase``: bit j (big-endian over the N diagonal entries) set means a -1 sign;
* ``pauli_group``: base-4 digits per qubit, 0=I 1=X 2=Y 3=Z;
* ``per_qubit_pauli``: base-3 digits per qubit, 0=Z 1=X 2=Y measurement axis;
* ``haar``: sample index feeding a dedicated random stream;
* ``computational``: the single key 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import _accel, mub, symplectic
from .qcore import DensityMatrix, as_matrix, haar_unitary
from .rng import Stream, stream, substream

KINDS = ("mub_prime", "mub_qubits", "clifford", "binary_phase", "pauli_group",
         "per_qubit_pauli", "haar", "computational")
ENUMERATE_LIMIT = 2**20
_CACHE_ENTRIES = 2**22

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
_PAULIS = (np.eye(2, dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex),
           np.array([[0, -1j], [1j, 0]], dtype=complex), np.diag([1, -1]).astype(complex))
_AXES = (np.eye(2, dtype=complex), _H, _H @ _SDG)


def _kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _digits(key: int, base: int, n: int) -> list[int]:
    return [(key // base ** (n - 1 - j)) % base for j in range(n)]


@dataclass(frozen=True, eq=False)
class BasisFamily:
    kind: str
    params: tuple
    dim: int
    key_count: int
    enumerable: bool
    data: Any = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def descriptor(self) -> str:
        return ":".join([self.kind] + [str(p) for p in self.params])

    @property
    def is_mub(self) -> bool:
        return self.kind in ("mub_prime", "mub_qubits")

    @property
    def n_qubits(self) -> int | None:
        n = round(math.log2(self.dim))
        return n if 2**n == self.dim else None

    # -- keys -----------------------------------------------------------
    def keys(self, mode: str = "enumerate", count: int | None = None,
             rng: Stream | None = None) -> list[int]:
        """Enumerate every key once, or draw ``count`` i.i.d. uniform keys."""
        if mode == "enumerate":
            if not self.enumerable or self.key_count > ENUMERATE_LIMIT:
                raise ValueError(f"family {self.descriptor} cannot be enumerated")
            if self.kind == "clifford":
                return list(self.data)
            return list(range(self.key_count))
        if mode == "sample":
            if count is None or rng is None:
                raise ValueError("sampling needs a count and a stream")
            return [self._sample_key(rng) for _ in range(count)]
        raise ValueError(f"unknown key mode {mode!r}")

    def _sample_key(self, rng: Stream) -> int:
        if self.kind == "clifford":
            return symplectic.random_clifford_key(self.params[0], rng)
        if self.kind == "haar":
            return int(rng.integers(0, 2**62))
        if self.key_count < 2**62:
            return int(rng.integers(0, self.key_count))
        bits = rng.integers(0, 2, size=self.key_count.bit_length() - 1)
        return int("".join(map(str, bits)), 2)

    def check_key(self, key: int):
        if self.kind == "clifford":
            s, _ = symplectic.decode(key, self.params[0])
            if not symplectic.is_symplectic(s):
                raise ValueError(f"key {key} is not a valid Clifford tableau")
            return
        if self.kind == "haar":
            if key < 0:
                raise ValueError(f"invalid haar key {key}")
            return
        if not 0 <= key < self.key_count:
            raise ValueError(f"key {key} outside [0, {self.key_count}) for {self.descriptor}")

    def key_label(self, key: int) -> str:
        """Canonical string form of a key (used in reports)."""
        k = self.kind
        if k == "clifford":
            return symplectic.tableau_label(*symplectic.decode(key, self.params[0]))
        if k == "pauli_group":
            return "".join("IXYZ"[d] for d in _digits(key, 4, self.params[0]))
        if k == "per_qubit_pauli":
            return "".join("ZXY"[d] for d in _digits(key, 3, self.params[0]))
        if k == "binary_phase":
            return "".join("-" if b else "+" for b in _digits(key, 2, self.dim))
        if k == "mub_prime" and self.dim == 2:
            return "ZXY"[key]
        return f"{k}[{key}]"

    # -- unitaries ------------------------------------------------------
    def unitary(self, key: int) -> np.ndarray:
        self.check_key(key)
        cached = self._cache.get("stack")
        if cached is not None and self.kind != "clifford" and self.kind != "haar":
            return cached[key]
        k = self.kind
        if k in ("mub_prime", "mub_qubits"):
            return self.data.bases[key].conj().T
        if k == "clifford":
            return symplectic.synthesize(*symplectic.decode(key, self.params[0]))
        if k == "binary_phase":
            n = self.params[0]
            signs = np.array([(-1) ** b for b in _digits(key, 2, self.dim)], dtype=complex)
            return _kron_all([_H] * n) * signs[None, :]
        if k == "pauli_group":
            return _kron_all(_PAULIS[d] for d in _digits(key, 4, self.params[0]))
        if k == "per_qubit_pauli":
            return _kron_all(_AXES[d] for d in _digits(key, 3, self.params[0]))
        if k == "haar":
            return haar_unitary(self.dim, substream(self.data, key))
        if k == "computational":
            return np.eye(self.dim, dtype=complex)
        raise AssertionError(k)

    def unitaries(self, keys: Sequence[int] | None = None) -> np.ndarray:
        """Stacked unitaries, shape (K, N, N); all keys when ``keys`` is None."""
        if keys is None:
            stack = self._cache.get("stack")
            if stack is not None:
                return stack
            keys = self.keys()
            stack = np.stack([self.unitary(k) for k in keys]) if keys else np.empty((0, self.dim, self.dim))
            if len(keys) * self.dim**2 <= _CACHE_ENTRIES:
                stack.flags.writeable = False
                self._cache["stack"] = stack
            return stack
        return np.stack([self.unitary(k) for k in keys])

    def mub_set(self) -> mub.MubSet:
        if not self.is_mub:
            raise ValueError(f"{self.descriptor} is not a MUB family")
        return self.data


def build_family(kind: str, *args, bases: int | None = None, rng: Stream | int | None = None,
                 verify: bool = True) -> BasisFamily:
    """Construct a basis family.

    Args:
        kind: one of :data:`KINDS`.
        *args: ``p`` for mub_prime, ``n`` (qubits) for the qubit kinds,
            ``(dim, sample_count)`` for haar, ``dim`` for computational.
        bases: for MUB kinds, use only the first ``bases`` bases of the
            maximal set (the computational basis comes first).
        rng: seed material for the haar kind.
        verify: check unitarity and, for MUBs, unbiasedness at build time.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown family kind {kind!r}")
    if kind in ("mub_prime", "mub_qubits"):
        m = mub.prime_mub(args[0]) if kind == "mub_prime" else mub.qubit_mub(args[0])
        params = (args[0],)
        if bases is not None:
            if not 1 <= bases <= len(m.bases):
                raise ValueError(f"bases={bases} outside [1, {len(m.bases)}]")
            if bases < len(m.bases):
                m = mub.MubSet(m.dim, m.bases[:bases])
                params = (args[0], f"bases={bases}")
        if verify:
            dev = mub.max_deviation(m)
            if dev > 1e-9 or mub.orthonormality_error(m) > 1e-9:
                raise RuntimeError(f"MUB construction failed verification (deviation {dev:.3e})")
        fam = BasisFamily(kind, params, m.dim, len(m.bases), True, m)
    elif kind == "clifford":
        n = int(args[0])
        if n < 1:
            raise ValueError("clifford needs n >= 1")
        keys = symplectic.clifford_keys(n) if n <= 2 else None
        fam = BasisFamily(kind, (n,), 2**n, symplectic.clifford_group_order(n), n <= 2, keys)
    elif kind in ("binary_phase", "pauli_group", "per_qubit_pauli"):
        n = int(args[0])
        if n < 1:
            raise ValueError(f"{kind} needs n >= 1")
        count = {"binary_phase": 2 ** (2**n), "pauli_group": 4**n, "per_qubit_pauli": 3**n}[kind]
        fam = BasisFamily(kind, (n,), 2**n, count, count <= ENUMERATE_LIMIT)
    elif kind == "haar":
        dim, count = int(args[0]), int(args[1])
        if isinstance(rng, np.random.Generator):
            base = rng
        else:
            base = stream(0 if rng is None else int(rng))
        fam = BasisFamily(kind, (dim, count), dim, count, False, base)
    else:
        dim = int(args[0])
        fam = BasisFamily(kind, (dim,), dim, 1, True)
    if verify and fam.enumerable and fam.key_count * fam.dim**2 <= _CACHE_ENTRIES:
        stack = fam.unitaries()
        err = np.max(np.abs(np.einsum("kij,kil->kjl", stack.conj(), stack) - np.eye(fam.dim)))
        if err > 1e-9:
            raise RuntimeError(f"family {fam.descriptor} has a non-unitary member (error {err:.3e})")
    return fam


def parse_family(desc: str, seed: int = 0) -> BasisFamily:
    """Build a family from ``kind:arg[:arg...][:bases=p]`` (CLI descriptor form)."""
    parts = desc.split(":")
    kind, args, kw = parts[0], [], {}
    for p in parts[1:]:
        if "=" in p:
            k, v = p.split("=", 1)
            kw[k] = int(v)
        else:
            args.append(int(p))
    if kind == "haar":
        kw["rng"] = stream(seed, 0xBA5E)
    return build_family(kind, *args, **kw)


@dataclass(frozen=True, eq=False)
class PinchResult:
    pinched: DensityMatrix
    distribution: np.ndarray


def pinch(family: BasisFamily, key: int, rho) -> PinchResult:
    """Post-measurement state of ``rho`` in basis ``key`` and its outcome distribution."""
    mat = as_matrix(rho)
    if mat.shape != (family.dim, family.dim):
        raise ValueError(f"state of dim {mat.shape[0]} does not match family dim {family.dim}")
    u = family.unitary(key)
    dist = np.real(np.einsum("xi,ij,xj->x", u, mat, u.conj()))
    pinched = (u.conj().T * dist) @ u
    return PinchResult(DensityMatrix(pinched, check=False), dist)


def pinch_distributions(family: BasisFamily, rho, keys: Sequence[int] | None = None) -> np.ndarray:
    """Outcome distributions for many keys at once, shape (K, N)."""
    return _accel.pinch_distribution_batch(family.unitaries(keys), as_matrix(rho))


def verify_mub(m: mub.MubSet) -> dict:
    return {"maxDeviation": mub.max_deviation(m)}


def design_targets(dim: int) -> tuple[float, float]:
    """Haar values of the fourth moment and the orthogonal cross moment."""
    return 2.0 / (dim * (dim + 1)), 1.0 / (dim * (dim + 1))


def _default_probes(dim: int) -> list[np.ndarray]:
    e = np.eye(dim, dtype=complex)
    plus = (e[0] + e[1]) / np.sqrt(2)
    minus = (e[0] - e[1]) / np.sqrt(2)
    tilt = (e[0] + 1j * e[dim - 1]) / np.sqrt(2)
    return [e[0], e[1], plus, minus, tilt]


def verify_2design(family: BasisFamily, probes: Sequence[np.ndarray] | None = None,
                   mode: str = "exact", count: int = 10_000, rng: Stream | None = None,
                   chunk: int = 4096) -> dict:
    """Second moments of ``|<0|U|psi>|^2`` over the family.

    Reports, per probe, ``E[|<0|U|psi>|^4]`` against ``2/(N(N+1))`` and, per
    orthogonal probe pair, ``E[|<0|U|a>|^2 |<0|U|b>|^2]`` against
    ``1/(N(N+1))``; the first moment ``E[|<0|U|psi>|^2] = 1/N`` is reported
    too. In sampled mode each value carries a standard error.
    """
    probes = [np.asarray(p, dtype=complex) for p in (probes or _default_probes(family.dim))]
    if mode == "exact":
        keys = family.keys()
    elif mode == "sampled":
        keys = family.keys("sample", count, rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    pm = np.array(probes).T  # (N, P)
    rows = []
    for start in range(0, len(keys), chunk):
        u = family.unitaries(keys[start:start + chunk])
        rows.append(np.abs(u[:, 0, :] @ pm) ** 2)
    w = np.concatenate(rows)  # (K, P): |<0|U|psi_p>|^2
    pairs = [(i, j) for i in range(len(probes)) for j in range(i + 1, len(probes))
             if abs(np.vdot(probes[i], probes[j])) < 1e-9]
    fourth = w**2
    cross = np.stack([w[:, i] * w[:, j] for i, j in pairs], axis=1) if pairs else np.empty((len(w), 0))
    t4, tc = design_targets(family.dim)
    k = len(w)

    def summary(vals, target):
        mean = vals.mean(axis=0)
        out = {"values": mean.tolist(), "target": target,
               "maxDeviation": float(np.max(np.abs(mean - target))) if mean.size else 0.0}
        if mode == "sampled":
            out["stderr"] = (vals.std(axis=0, ddof=1) / np.sqrt(k)).tolist()
        return out

    return {
        "family": family.descriptor,
        "mode": mode,
        "samples": k,
        "firstMoment": summary(w, 1.0 / family.dim),
        "fourthMoment": summary(fourth, t4),
        "crossMoment": summary(cross, tc),
        "crossPairs": pairs,
    }
