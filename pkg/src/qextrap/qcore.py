"""Dense states, density matrices and the distance measures built on them.

Conventions used throughout the package:

* Registers are flattened big-endian: the first register is the most
  significant index.
* ``fidelity`` is the *squared* Uhlmann fidelity ``(Tr|sqrt(rho) sqrt(sigma)|)**2``,
  so for a pure target it is an overlap probability. ``root_fidelity`` is its
  square root.
* ``holevo_fidelity`` is ``Tr(sqrt(rho) sqrt(sigma))``.

Metric functions accept either the typed wrappers below or raw numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rng import Stream

ATOL = 1e-9
COMPOSED_ATOL = 1e-8
# eigenvalues in [NEG_ERROR, 0) are numerical drift and get clamped
NEG_ERROR = -1e-6
SCHMIDT_CUTOFF = 1e-10


class NotPSDError(ValueError):
    pass


@dataclass(frozen=True)
class RegisterShape:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"register dims must be positive, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self):
        return len(self.dims)

    def split(self, cut: int) -> tuple[int, int]:
        """Dimensions of the two sides when the first ``cut`` registers form A."""
        if not 0 < cut < len(self.dims):
            raise ValueError(f"cut {cut} invalid for {len(self.dims)} registers")
        return math.prod(self.dims[:cut]), math.prod(self.dims[cut:])

    def concat(self, other: "RegisterShape") -> "RegisterShape":
        return RegisterShape(self.dims + other.dims)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state over an ordered list of registers.

    ``normalized=False`` marks the unnormalized kind (only used for the
    maximally entangled ``sum_i |i>|i>``); such states are rejected by
    operations that need a unit vector.
    """

    shape: RegisterShape
    amps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amps))
        if amps.size != self.shape.total:
            raise ValueError(f"{amps.size} amplitudes for register total {self.shape.total}")
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > ATOL:
            raise ValueError(f"state norm {np.linalg.norm(amps):.3e} is not 1")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps, dims: Sequence[int] | None = None, normalize: bool = False):
        amps = np.asarray(amps, dtype=complex).ravel()
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(RegisterShape(tuple(dims) if dims is not None else (amps.size,)), amps)

    @classmethod
    def basis(cls, index: int, dims: Sequence[int]):
        shape = RegisterShape(tuple(dims))
        amps = np.zeros(shape.total, dtype=complex)
        amps[index] = 1.0
        return cls(shape, amps)

    @property
    def dim(self) -> int:
        return self.shape.total

    def require_normalized(self):
        if not self.normalized:
            raise ValueError("an unnormalized state was passed where a unit vector is required")

    def density(self) -> "DensityMatrix":
        self.require_normalized()
        return DensityMatrix(np.outer(self.amps, self.amps.conj()))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per register."""
        return self.amps.reshape(self.shape.dims)


def maximally_entangled(d: int) -> StateVector:
    """The unnormalized ``sum_i |i>|i>`` on two d-dimensional registers."""
    return StateVector(RegisterShape((d, d)), np.eye(d, dtype=complex).ravel(), normalized=False)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, PSD, unit-trace operator (checked at construction)."""

    mat: np.ndarray
    check: bool = True

    def __post_init__(self):
        mat = _frozen(self.mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {mat.shape}")
        if self.check:
            if np.max(np.abs(mat - mat.conj().T)) > ATOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(mat).real - 1.0) > ATOL:
                raise ValueError(f"density matrix trace {np.trace(mat).real:.3e} is not 1")
            if np.linalg.eigvalsh(mat)[0] < -ATOL:
                raise NotPSDError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def maximally_mixed(cls, d: int):
        return cls(np.eye(d) / d)

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


def as_matrix(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.mat
    if isinstance(x, StateVector):
        return x.density().mat
    a = np.asarray(x, dtype=complex)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    return a


def _same_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def tensor(a, b):
    """Kronecker product of two states of the same kind."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(a.shape.concat(b.shape), np.kron(a.amps, b.amps),
                           normalized=a.normalized and b.normalized)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.mat, b.mat), check=a.check and b.check)
    raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def partial_trace(rho, shape: RegisterShape | Sequence[int], keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on the registers listed in ``keep`` (in their original order)."""
    shape = shape if isinstance(shape, RegisterShape) else RegisterShape(tuple(shape))
    mat = as_matrix(rho)
    if mat.shape != (shape.total, shape.total):
        raise ValueError(f"matrix of size {mat.shape[0]} does not match register total {shape.total}")
    keep = sorted(set(int(k) for k in keep))
    n = len(shape)
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"invalid register index set {keep} for {n} registers")
    drop = [i for i in range(n) if i not in keep]
    t = mat.reshape(shape.dims + shape.dims)
    # contract each dropped ket axis with its bra axis
    in_idx = list(range(2 * n))
    for i in drop:
        in_idx[n + i] = i
    out_idx = keep + [n + k for k in keep]
    red = np.einsum(t, in_idx, out_idx)
    d = math.prod(shape.dims[k] for k in keep)
    return DensityMatrix(red.reshape(d, d), check=False)


def reduced_state(state: StateVector | np.ndarray, dims: Sequence[int] | None = None,
                  cut: int = 1, side: str = "A") -> np.ndarray:
    """Reduced density matrix of a pure state on one side of a cut.

    Works on the dA x dB amplitude matrix directly, which avoids forming
    the full projector.
    """
    if isinstance(state, StateVector):
        dims, amps = state.shape.dims, state.amps
    else:
        amps = np.asarray(state, dtype=complex).ravel()
    da, db = RegisterShape(tuple(dims)).split(cut)
    m = amps.reshape(da, db)
    if side == "A":
        return m @ m.conj().T
    return (m.T @ m.conj())


def psd_eigh(rho) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with negative drift clamped to zero."""
    mat = as_matrix(rho)
    mat = (mat + mat.conj().T) / 2
    w, v = np.linalg.eigh(mat)
    if w[0] < NEG_ERROR:
        raise NotPSDError(f"eigenvalue {w[0]:.3e} below {NEG_ERROR}: input is not PSD")
    return np.clip(w, 0.0, None), v


def psd_sqrt(rho) -> np.ndarray:
    """Principal square root of a PSD matrix."""
    w, v = psd_eigh(rho)
    # eigenvalues at rounding level are numerically zero; their square roots would not be
    w = np.where(w <= len(w) * np.finfo(float).eps * max(w[-1], 1.0), 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _same_dims(a, b)
    d = a - b
    w = np.linalg.eigvalsh((d + d.conj().T) / 2)
    return float(min(1.0, 0.5 * np.sum(np.abs(w))))


def root_fidelity(rho, sigma) -> float:
    """``Tr|sqrt(rho) sqrt(sigma)|``, the nuclear norm of the product of roots."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _same_dims(a, b)
    s = np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False)
    return float(min(1.0, np.sum(s)))


def fidelity(rho, sigma) -> float:
    """Squared fidelity; equals ``|<psi|phi>|**2`` for pure inputs."""
    return root_fidelity(rho, sigma) ** 2


def holevo_fidelity(rho, sigma) -> float:
    """``Tr(sqrt(rho) sqrt(sigma))`` (real and nonnegative for PSD inputs)."""
    a, b = as_matrix(rho), as_matrix(sigma)
    _same_dims(a, b)
    return float(np.real(np.trace(psd_sqrt(a) @ psd_sqrt(b))))


def fidelity_angle(rho, sigma, variant: str = "root") -> float:
    """Angle used in the fidelity triangle inequality.

    ``variant="root"`` is the Bures angle ``arccos(sqrt(F))``;
    ``variant="squared"`` is ``arccos(F)``.
    """
    f = fidelity(rho, sigma)
    if variant == "root":
        return float(np.arccos(np.clip(math.sqrt(f), 0.0, 1.0)))
    if variant == "squared":
        return float(np.arccos(np.clip(f, 0.0, 1.0)))
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True, eq=False)
class SchmidtData:
    coeffs: np.ndarray
    left: np.ndarray  # columns are |A_i>
    right: np.ndarray  # columns are |B_i>
    rank: int

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,ai,bi->ab", self.coeffs, self.left, self.right).ravel()


def schmidt_decompose(state: StateVector, cut: int = 1) -> SchmidtData:
    """Schmidt coefficients and vectors across ``cut`` via SVD.

    Coefficients are sorted nonincreasing; ``rank`` counts those above
    ``SCHMIDT_CUTOFF``.
    """
    state.require_normalized()
    da, db = state.shape.split(cut)
    u, s, vh = np.linalg.svd(state.amps.reshape(da, db), full_matrices=False)
    rank = int(np.sum(s > SCHMIDT_CUTOFF))
    return SchmidtData(coeffs=s, left=u, right=vh.T, rank=rank)


@dataclass(frozen=True, eq=False)
class JordanHahnParts:
    """``rho0 - rho1 = weight * (plus - minus)`` with orthogonal unit-trace parts.

    For identical inputs ``weight`` is 0 and both parts are ``None``.
    """

    weight: float
    plus: DensityMatrix | None
    minus: DensityMatrix | None


def jordan_hahn(rho0, rho1, zero_tol: float = 1e-12) -> JordanHahnParts:
    a, b = as_matrix(rho0), as_matrix(rho1)
    _same_dims(a, b)
    d = a - b
    w, v = np.linalg.eigh((d + d.conj().T) / 2)
    pos = np.clip(w, 0.0, None)
    neg = np.clip(-w, 0.0, None)
    weight = float(np.sum(pos))
    if weight <= zero_tol:
        return JordanHahnParts(0.0, None, None)
    # both parts carry trace TD since Tr(rho0 - rho1) = 0
    plus = (v * (pos / weight)) @ v.conj().T
    minus = (v * (neg / np.sum(neg))) @ v.conj().T
    return JordanHahnParts(weight, DensityMatrix(plus, check=False), DensityMatrix(minus, check=False))


def haar_state(dim: int, rng: Stream) -> StateVector:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector.from_amplitudes(z / np.linalg.norm(z))


def haar_unitary(dim: int, rng: Stream) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix with phase fixing."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: Stream, rank: int | None = None) -> DensityMatrix:
    """Induced-measure random state ``G G^dag / Tr`` with ``G`` of shape dim x rank."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank {rank} outside [1, {dim}]")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.trace(m).real, check=False)


def sample_random(kind: str, dim: int, rng: Stream, rank: int | None = None):
    """Dispatch on ``kind``: ``haar_state``, ``haar_unitary`` or ``density``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if kind == "haar_state":
        return haar_state(dim, rng)
    if kind == "haar_unitary":
        return haar_unitary(dim, rng)
    if kind == "density":
        return random_density(dim, rng, rank)
    raise ValueError(f"unknown kind {kind!r}")


def conjugate(x):
    """Entrywise complex conjugate of a state or matrix."""
    if isinstance(x, StateVector):
        return StateVector(x.shape, x.amps.conj(), normalized=x.normalized)
    if isinstance(x, DensityMatrix):
        return DensityMatrix(x.mat.conj(), check=False)
    return np.conj(x)


def apply_on(t: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Apply a square ``op`` to the given axes of a register tensor.

    ``op`` acts on the flattened (big-endian) product of ``axes``.
    """
    axes = list(axes)
    rest = [i for i in range(t.ndim) if i not in axes]
    moved = np.transpose(t, axes + rest)
    sub = [t.shape[i] for i in axes]
    out = (op @ moved.reshape(math.prod(sub), -1)).reshape(moved.shape)
    return np.transpose(out, np.argsort(axes + rest))


def add_copy(t: np.ndarray, src: Sequence[int], dst: int, sign: int = 1) -> np.ndarray:
    """Modular-addition copy: ``dst <- dst + sign * value(src) mod dim(dst)``.

    ``value(src)`` is the big-endian integer encoded by the source axes. For
    qubit registers and a zero-initialized target this is the CNOT copy.
    """
    src = list(src)
    d = t.shape[dst]
    out = np.empty_like(t)
    for idx in np.ndindex(*[t.shape[i] for i in src]):
        v = 0
        for i, j in zip(src, idx):
            v = v * t.shape[i] + j
        sel = [slice(None)] * t.ndim
        for i, j in zip(src, idx):
            sel[i] = j
        sel = tuple(sel)
        # after fixing src axes, dst shifts down by the number of earlier fixed axes
        shift_axis = dst - sum(1 for i in src if i < dst)
        out[sel] = np.roll(t[sel], sign * v % d, axis=shift_axis)
    return out


def controlled_on(t: np.ndarray, control: int, target: int, ops: np.ndarray,
                  adjoint: bool = False) -> np.ndarray:
    """Apply ``ops[k]`` to axis ``target`` on the slice where axis ``control`` is k."""
    out = np.empty_like(t)
    shift = target - (1 if control < target else 0)
    for k in range(t.shape[control]):
        op = ops[k].conj().T if adjoint else ops[k]
        sl = np.take(t, k, axis=control)
        res = np.moveaxis(np.tensordot(op, sl, axes=([1], [shift])), 0, shift)
        idx = [slice(None)] * t.ndim
        idx[control] = k
        out[tuple(idx)] = res
    return out
