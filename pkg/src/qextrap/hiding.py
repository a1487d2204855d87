"""Hiding experiments: how close two states stay after a random-basis measurement."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _accel
from .bases import BasisFamily, build_family
from .mub import MubSet
from .qcore import as_matrix, trace_distance
from .rng import Stream

EXACT_LIMIT = 2**16
CHUNK = 2048


@dataclass(frozen=True, eq=False)
class HidingReport:
    """Expected post-measurement trace distance for one state pair.

    ``bound`` is None when no bound is known for the family kind.
    """

    family: str
    expected_td: float
    bound: float | None
    mode: str
    trials: int
    stderr: float | None
    td_input: float
    per_key_tds: np.ndarray | None = field(default=None, repr=False)
    keys: list | None = field(default=None, repr=False)

    @property
    def ratio(self) -> float | None:
        """Observed expected TD over the input TD (None for identical inputs)."""
        return None if self.td_input < 1e-15 else self.expected_td / self.td_input

    def within_bound(self, slack: float = 1e-9) -> bool | None:
        if self.bound is None:
            return None
        if self.mode == "exact":
            return self.expected_td <= self.bound + slack
        return self.expected_td <= self.bound + 3 * (self.stderr or 0.0) + slack


def lemma_bound(family: BasisFamily, td: float) -> float | None:
    """Upper bound on the expected post-measurement TD, or None if the kind has none.

    MUB families with p bases in use: ``sqrt(N / (2p)) * td``.
    Unitary 2-designs (Clifford, Haar): ``sqrt(N / (2(N+1))) * td``.
    """
    n = family.dim
    if family.is_mub:
        return math.sqrt(n / (2 * family.key_count)) * td
    if family.kind in ("clifford", "haar"):
        return math.sqrt(n / (2 * (n + 1))) * td
    return None


def _key_tds(family: BasisFamily, keys: Sequence[int], delta: np.ndarray, workers: int) -> np.ndarray:
    full = None
    if family.enumerable and len(keys) == family.key_count and list(keys) == family.keys():
        full = family.unitaries()  # cached across calls
    bounds = [(i, i + CHUNK) for i in range(0, len(keys), CHUNK)]

    def run(b):
        u = full[b[0]:b[1]] if full is not None else family.unitaries(keys[b[0]:b[1]])
        return _accel.pinch_td_batch(u, delta)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return np.concatenate(parts) if parts else np.empty(0)


def expected_pinch_distance(family: BasisFamily, rho0, rho1, mode: str = "auto",
                            trials: int = 2000, rng: Stream | None = None,
                            keys: Sequence[int] | None = None, workers: int = 1,
                            keep_keys: bool = True) -> HidingReport:
    """Average over keys of ``TD(W0^(k), W1^(k))``.

    Args:
        mode: ``exact`` (every key once), ``monteCarlo`` (``trials`` keys drawn
            from ``rng``) or ``auto`` (exact when the key set is enumerable and
            has at most 2**16 keys).
        keys: explicit key list, averaged uniformly (reported as exact).
    """
    a, b = as_matrix(rho0), as_matrix(rho1)
    if a.shape != (family.dim, family.dim) or b.shape != a.shape:
        raise ValueError(f"state dims {a.shape}, {b.shape} do not match family dim {family.dim}")
    if mode == "auto":
        mode = "exact" if family.enumerable and family.key_count <= EXACT_LIMIT else "monteCarlo"
    if keys is not None:
        mode = "exact"
        keys = list(keys)
    elif mode == "exact":
        if not family.enumerable or family.key_count > EXACT_LIMIT:
            raise ValueError(f"exact mode needs an enumerable family with <= {EXACT_LIMIT} keys")
        keys = family.keys()
    elif mode == "monteCarlo":
        if rng is None:
            raise ValueError("Monte Carlo mode needs a stream")
        keys = family.keys("sample", trials, rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    tds = _key_tds(family, keys, a - b, workers)
    td = trace_distance(a, b)
    mean = float(tds.mean())
    stderr = None if mode == "exact" else float(tds.std(ddof=1) / math.sqrt(len(tds)))
    return HidingReport(family.descriptor, mean, lemma_bound(family, td), mode, len(tds), stderr,
                        td, tds, list(keys) if keep_keys else None)


@dataclass(frozen=True, eq=False)
class IvanovicResult:
    identity_part: np.ndarray
    terms: tuple[np.ndarray, ...]
    residual: float
    max_overlap: float


def ivanovic_decompose(w, m: MubSet) -> IvanovicResult:
    """Split ``W`` into ``I/N`` plus one traceless term per basis of a maximal MUB set."""
    mat = as_matrix(w)
    n = m.dim
    if mat.shape != (n, n):
        raise ValueError(f"state dim {mat.shape[0]} does not match MUB dim {n}")
    if len(m.bases) != n + 1:
        raise ValueError("decomposition needs a maximal (N+1)-basis set")
    ident = np.eye(n, dtype=complex) / n
    terms = []
    for v in m.bases:
        diag = np.real(np.einsum("ix,ij,jx->x", v.conj(), mat, v))
        terms.append((v * diag) @ v.conj().T - ident)
    resid = float(np.linalg.norm(mat - ident - sum(terms)))
    overlap = 0.0
    for r in range(len(terms)):
        for s in range(r + 1, len(terms)):
            overlap = max(overlap, abs(np.vdot(terms[r], terms[s])))
    return IvanovicResult(ident, tuple(terms), resid, float(overlap))


def _support_keys(n: int) -> list[int]:
    # sign patterns on entries 0 and 2**(n-1); bit j of the key (big-endian over N) flips entry j
    dim = 2**n
    e0, e1 = 1 << (dim - 1), 1 << (dim - 1 - 2 ** (n - 1))
    return [0, e1, e0, e0 | e1]


def counterexample_pair(which: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """The designated state pair for each counterexample family."""
    dim = 2**n
    if which == "binary_phase":
        a, b = np.zeros(dim, complex), np.zeros(dim, complex)
        a[0] = b[0] = 1 / np.sqrt(2)
        a[2 ** (n - 1)] = 1 / np.sqrt(2)
        b[2 ** (n - 1)] = -1 / np.sqrt(2)
    elif which in ("pauli_group", "per_qubit_pauli"):
        a, b = np.zeros(dim, complex), np.zeros(dim, complex)
        a[0] = 1
        b[-1] = 1
    else:
        raise ValueError(f"unknown counterexample {which!r}")
    return np.outer(a, a.conj()), np.outer(b, b.conj())


def counterexample_run(which: str, n: int, mode: str = "exact", trials: int = 2000,
                       rng: Stream | None = None, full: bool = False) -> HidingReport:
    """Run a family that fails to hide on its designated pair.

    For ``binary_phase`` the exact mode averages over the 4 sign patterns on
    the two support entries (the rest act trivially on the pair); pass
    ``full=True`` to enumerate every sign pattern instead.
    """
    fam = build_family(which, n, verify=False)
    rho0, rho1 = counterexample_pair(which, n)
    if which == "binary_phase" and mode == "exact" and not full:
        return expected_pinch_distance(fam, rho0, rho1, keys=_support_keys(n))
    if mode == "exact" and not fam.enumerable:
        raise ValueError(f"{which} with n={n} is too large for exact mode")
    return expected_pinch_distance(fam, rho0, rho1, mode=mode, trials=trials, rng=rng)


def haar_limit(dim: int, trials: int, rng: Stream) -> HidingReport:
    """Monte Carlo E_U[TD] for |0><0| vs |1><1| under a Haar-random basis.

    Only the first two columns of U matter; they are drawn as Gram-Schmidt
    orthonormalized complex Gaussian vectors.
    """
    if dim < 2:
        raise ValueError("N >= 2 required")
    g = (rng.standard_normal((trials, dim, 2)) + 1j * rng.standard_normal((trials, dim, 2))) / np.sqrt(2)
    c0 = g[:, :, 0] / np.linalg.norm(g[:, :, 0], axis=1, keepdims=True)
    c1 = g[:, :, 1] - np.sum(c0.conj() * g[:, :, 1], axis=1, keepdims=True) * c0
    c1 /= np.linalg.norm(c1, axis=1, keepdims=True)
    tds = 0.5 * np.sum(np.abs(np.abs(c0) ** 2 - np.abs(c1) ** 2), axis=1)
    stderr = float(tds.std(ddof=1) / math.sqrt(trials))
    bound = math.sqrt(dim / (2 * (dim + 1)))
    return HidingReport(f"haar:{dim}", float(tds.mean()), bound, "monteCarlo", trials, stderr, 1.0, tds)
