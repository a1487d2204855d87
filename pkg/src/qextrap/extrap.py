"""Quantum extrapolation: canonical-purification targets and solvers.

A task is a bipartite pure state on (A, B). Its target lives on (A, B') with
``dim B' = dim A`` and equals ``(sqrt(rho_A) (x) I)|Phi>``; as a dA x dA
amplitude matrix that is simply ``sqrt(rho_A)``.

Channels are Kraus lists; each operator maps (B, aux) to B', with B as the
major index of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .commit import CommitmentPair, GenInstance
from .qcore import (
    RegisterShape,
    SchmidtData,
    StateVector,
    fidelity,
    holevo_fidelity,
    maximally_entangled,
    psd_sqrt,
    random_density,
    reduced_state,
    root_fidelity,
    schmidt_decompose,
    trace_distance,
)
from .rng import Stream

TP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QExtrapTask:
    state: StateVector
    cut: int
    reduced: np.ndarray = field(repr=False)
    target: StateVector = field(repr=False)
    schmidt: SchmidtData = field(repr=False)

    @property
    def dims(self) -> tuple[int, int]:
        return self.state.shape.split(self.cut)

    @property
    def matrix(self) -> np.ndarray:
        """Amplitudes as a dA x dB matrix."""
        return self.state.amps.reshape(self.dims)


def make_task(state: StateVector | np.ndarray, cut: int = 1, dims: Sequence[int] | None = None) -> QExtrapTask:
    """Build the task for ``state`` split after the first ``cut`` registers.

    A 2-D array is read as the dA x dB amplitude matrix.
    """
    if not isinstance(state, StateVector):
        arr = np.asarray(state, dtype=complex)
        if dims is None:
            if arr.ndim != 2:
                raise ValueError("pass a StateVector, a dA x dB matrix, or explicit dims")
            dims, cut = arr.shape, 1
        state = StateVector.from_amplitudes(arr, dims)
    state.require_normalized()
    da, _ = state.shape.split(cut)
    rho = reduced_state(state, cut=cut)
    phi = maximally_entangled(da).amps.reshape(da, da)
    target = psd_sqrt(rho) @ phi
    return QExtrapTask(state, cut, rho,
                       StateVector(RegisterShape((da, da)), target.ravel()), schmidt_decompose(state, cut))


def svd_target(task: QExtrapTask) -> np.ndarray:
    """``sum_i a_i |A_i> (x) |A_i*>`` from the Schmidt data."""
    sd = task.schmidt
    return np.einsum("i,ai,bi->ab", sd.coeffs, sd.left, sd.left.conj()).ravel()


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_theta || a - e^{i theta} b ||``."""
    ov = np.vdot(b, a)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(a - ph * b))


# --------------------------------------------------------------------------
# channels
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExtrapChannel:
    """Kraus operators from (B, aux) to the output register."""

    kraus: tuple[np.ndarray, ...]
    name: str = "channel"

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]

    def tp_error(self) -> float:
        s = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.in_dim))))

    def is_trace_preserving(self, tol: float = TP_TOL) -> bool:
        return self.tp_error() <= tol

    def apply_right(self, m: np.ndarray, aux: np.ndarray | None = None) -> list[np.ndarray]:
        """Act on the column index of a pure bipartite amplitude matrix.

        Returns the branch matrices ``m_j`` (rows: untouched side, columns:
        output register); the output state is ``sum_j vec(m_j) vec(m_j)^dag``.
        """
        if aux is not None:
            m = np.einsum("ab,c->abc", m, aux).reshape(m.shape[0], -1)
        if m.shape[1] != self.in_dim:
            raise ValueError(f"channel input dim {self.in_dim} does not match {m.shape[1]}")
        return [m @ k.T for k in self.kraus]

    def then(self, other: "ExtrapChannel") -> "ExtrapChannel":
        """``other`` after ``self``."""
        return ExtrapChannel(tuple(b @ a for a in self.kraus for b in other.kraus),
                             f"{other.name}.{self.name}")


def unitary_channel(u: np.ndarray, name: str = "unitary") -> ExtrapChannel:
    return ExtrapChannel((np.asarray(u, dtype=complex),), name)


def replacement_channel(out_state, in_dim: int, name: str = "replace") -> ExtrapChannel:
    """Discard the input and prepare ``out_state`` (vector or density matrix)."""
    out = np.asarray(out_state, dtype=complex)
    if out.ndim == 1:
        out = np.outer(out, out.conj())
    w, v = np.linalg.eigh(out)
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > 1e-15:
            for i in range(in_dim):
                k = np.zeros((len(vec), in_dim), dtype=complex)
                k[:, i] = math.sqrt(lam) * vec
                ops.append(k)
    return ExtrapChannel(tuple(ops), name)


def _complement(cols: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of ``cols``."""
    if cols.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    u, s, _ = np.linalg.svd(cols, full_matrices=True)
    r = int(np.sum(s > 1e-10))
    return u[:, r:]


def _with_reset(partial: np.ndarray, name: str) -> ExtrapChannel:
    """Complete a partial isometry to a channel: off-support inputs go to |0>."""
    v = partial
    _, s, vh = np.linalg.svd(v, full_matrices=True)
    r = int(np.sum(s > 1e-10))
    rest = vh[r:].conj().T  # columns: input directions outside the support
    ops = [v]
    for j in range(rest.shape[1]):
        k = np.zeros((v.shape[0], v.shape[1]), dtype=complex)
        k[0] = rest[:, j].conj()
        ops.append(k)
    return ExtrapChannel(tuple(ops), name)


def exact_extrapolator(task: QExtrapTask) -> ExtrapChannel:
    """Channel B -> B' sending each Schmidt vector ``|B_i>`` to ``|A_i*>``.

    For ``dB <= dA`` this is a single isometry. Otherwise the map is a
    partial isometry on a dA-dimensional subspace containing the Schmidt
    support, and the remaining inputs are measured and replaced by |0>.
    """
    da, db = task.dims
    u, _, vh = np.linalg.svd(task.matrix, full_matrices=True)
    if db <= da:
        v = u[:, :db].conj() @ vh.conj()
        return ExtrapChannel((v,), "exact")
    v = u.conj() @ vh[:da].conj()
    return _with_reset(v, "exact")


def inverse_extrapolator(task: QExtrapTask) -> ExtrapChannel:
    """Channel B' -> B undoing :func:`exact_extrapolator` on the target."""
    fwd = exact_extrapolator(task).kraus[0]
    return _with_reset(fwd.conj().T, "inverse")


def branch_fidelity(target: np.ndarray, branches: Sequence[np.ndarray]) -> float:
    """``<T| sum_j |m_j><m_j| |T>`` for a pure target given as a vector."""
    t = np.ravel(target)
    return float(sum(abs(np.vdot(t, m.ravel())) ** 2 for m in branches))


def extrapolation_fidelity(task: QExtrapTask, channel: ExtrapChannel, aux: np.ndarray | None = None) -> float:
    """Overlap of the channel output on (A, B') with the target."""
    if channel.out_dim != task.dims[0]:
        raise ValueError(f"channel outputs dim {channel.out_dim}, target needs {task.dims[0]}")
    return branch_fidelity(task.target.amps, channel.apply_right(task.matrix, aux))


# --------------------------------------------------------------------------
# classical-challenge success
# --------------------------------------------------------------------------

def cq_success(gen: GenInstance, channel: ExtrapChannel, aux: np.ndarray | None = None) -> float:
    """``Tr(sum_s beta_s^2 |psi_s><psi_s| Adv(|chal_s><chal_s| (x) aux))``."""
    if channel.out_dim != gen.msg_dim:
        raise ValueError(f"channel outputs dim {channel.out_dim}, targets have {gen.msg_dim}")
    total = 0.0
    for beta, chal, psi in zip(gen.betas, gen.challenges, gen.targets):
        inp = chal if aux is None else np.kron(chal, aux)
        if len(inp) != channel.in_dim:
            raise ValueError(f"channel input dim {channel.in_dim} does not match {len(inp)}")
        total += beta**2 * sum(abs(np.vdot(psi, k @ inp)) ** 2 for k in channel.kraus)
    return float(total)


def lookup_channel(gen: GenInstance) -> ExtrapChannel:
    """Measure the challenge basis and output the matching target (|0> off the set)."""
    ops = [np.outer(psi, chal.conj()) for chal, psi in zip(gen.challenges, gen.targets)]
    rest = _complement(gen.challenges.T, gen.s_dim)
    e0 = np.zeros(gen.msg_dim, dtype=complex)
    e0[0] = 1
    ops += [np.outer(e0, rest[:, j].conj()) for j in range(rest.shape[1])]
    return ExtrapChannel(tuple(ops), "lookup")


# --------------------------------------------------------------------------
# robustness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RobustnessReport:
    eps: float
    state_overlap: float
    root_fidelity: float
    holevo_fidelity: float
    trace_distance: float
    target_overlap: float
    bound: float
    chain: tuple[float, float, float]

    @property
    def holds(self) -> bool:
        return self.target_overlap >= self.bound - 1e-9


def robustness_check(t1: QExtrapTask, t2: QExtrapTask) -> RobustnessReport:
    """Compare target overlap with ``(1 - sqrt(eps))**2`` where ``|<G|G'>|**2 = 1 - eps``.

    ``chain`` holds ``(1 - TD)**2``, ``(1 - sqrt(1 - F))**2`` and the bound,
    each a lower bound on the next-larger quantity.
    """
    if t1.dims != t2.dims:
        raise ValueError(f"task shapes {t1.dims} and {t2.dims} differ")
    ov = abs(np.vdot(t1.state.amps, t2.state.amps))
    eps = max(0.0, 1.0 - ov**2)
    rho, sig = t1.reduced, t2.reduced
    td = trace_distance(rho, sig)
    f = fidelity(rho, sig)
    tov = float(np.real(np.vdot(t2.target.amps, t1.target.amps)))
    bound = (1 - math.sqrt(eps)) ** 2
    chain = ((1 - td) ** 2, (1 - math.sqrt(max(0.0, 1 - f))) ** 2, bound)
    return RobustnessReport(eps, float(ov), root_fidelity(rho, sig), holevo_fidelity(rho, sig),
                            td, tov, bound, chain)


def perturbed_pair(dims: tuple[int, int], scale: float, rng: Stream) -> tuple[QExtrapTask, QExtrapTask]:
    n = dims[0] * dims[1]
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    g /= np.linalg.norm(g)
    h = g + scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2 * n)
    h /= np.linalg.norm(h)
    return make_task(g.reshape(dims)), make_task(h.reshape(dims))


# --------------------------------------------------------------------------
# classical challenges through quantum extrapolation
# --------------------------------------------------------------------------

def _conj_map(psi: np.ndarray) -> np.ndarray:
    """Unitary W with ``W psi = conj(psi)``."""
    a = np.hstack([psi[:, None], np.eye(len(psi), dtype=complex)])
    q, r = np.linalg.qr(a)
    q = q[:, : len(psi)]
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return q.conj() @ q.conj().T


@dataclass(frozen=True)
class ConjugationReport:
    q_fidelity: float
    transported_fidelity: float
    cq_success: float
    m_is_identity: bool

    @property
    def holds(self) -> bool:
        return self.cq_success >= self.q_fidelity - 1e-8


def purified_cq_state(gen: GenInstance) -> np.ndarray:
    """``sum_s beta_s |psi_s, s>_A (x) |s>_B`` as a (2**m * sDim) x sDim matrix."""
    m = np.zeros((gen.msg_dim, gen.s_dim, gen.s_dim), dtype=complex)
    for beta, chal, psi in zip(gen.betas, gen.challenges, gen.targets):
        x = int(np.argmax(np.abs(chal)))
        m[:, x, x] += beta * psi
    return m.reshape(gen.msg_dim * gen.s_dim, gen.s_dim)


def conjugation_reduce(gen: GenInstance, q_adversary: ExtrapChannel | None = None) -> ConjugationReport:
    """Turn a solver for the conjugated quantum task into a classical-challenge solver.

    The solver acts on B of the conjugated purified state; its fidelity there
    is ``q_fidelity``. Run on the original purified state and read out the
    message part of B', it solves the classical-challenge task with success
    ``cq_success``. The basis change M on A maps one picture to the other.
    """
    if gen.basis_kind != "classical":
        raise ValueError("conjugation reduction needs classical challenges")
    g = purified_cq_state(gen)
    conj_task = make_task(g.conj())
    if q_adversary is None:
        q_adversary = exact_extrapolator(conj_task)
    q_fid = extrapolation_fidelity(conj_task, q_adversary)
    # M = sum_x W_x (x) |x><x| on A = (message, challenge copy)
    mm = np.zeros((gen.msg_dim, gen.s_dim, gen.msg_dim, gen.s_dim), dtype=complex)
    for x in range(gen.s_dim):
        mm[:, x, :, x] = np.eye(gen.msg_dim)
    for chal, psi in zip(gen.challenges, gen.targets):
        x = int(np.argmax(np.abs(chal)))
        mm[:, x, :, x] = _conj_map(psi)
    mm = mm.reshape(g.shape[0], g.shape[0])
    # target after transport: sum_s beta_s |psi_s, s>_A |psi_s, s>_B'
    tgt = sum(beta * np.kron(np.kron(psi, chal), np.kron(psi, chal))
              for beta, chal, psi in zip(gen.betas, gen.challenges, gen.targets))
    branches = q_adversary.apply_right(g)
    transported = branch_fidelity(tgt, branches)
    # read out only the message part of B'
    ops = []
    for k in q_adversary.kraus:
        kk = k.reshape(gen.msg_dim, gen.s_dim, -1)
        ops += [kk[:, j, :] for j in range(gen.s_dim)]
    succ = cq_success(gen, ExtrapChannel(tuple(ops), "transported"))
    return ConjugationReport(q_fid, transported, succ,
                             bool(np.allclose(mm, np.eye(len(mm)), atol=1e-12)))


# --------------------------------------------------------------------------
# breaking binding from extrapolation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AttackReport:
    hiding_td: float
    target_overlap: float
    overlap_floor: float
    forward_fidelity: float
    inverse_fidelity: float
    achieved_advantage: float
    chain_bound: float
    chain_bound_squared: float

    @property
    def vacuous(self) -> bool:
        return self.chain_bound <= 0.0

    @property
    def holds(self) -> bool:
        return self.achieved_advantage >= self.chain_bound - 1e-6


def _chain(fids: Sequence[float], variant: str) -> float:
    if variant == "root":
        total = sum(math.acos(min(1.0, math.sqrt(max(f, 0.0)))) for f in fids)
        return math.cos(total) ** 2 if total < math.pi / 2 else 0.0
    total = sum(math.acos(min(1.0, max(f, 0.0))) for f in fids)
    return math.cos(total) if total < math.pi / 2 else 0.0


def commitment_attack(com0: np.ndarray | CommitmentPair, com1: np.ndarray | None = None) -> AttackReport:
    """Open a commitment to 0 as 1 through the two extrapolation targets.

    Inputs are C x D amplitude matrices (or a dense :class:`CommitmentPair`).
    The attack extrapolates ``|com0>`` to its target on (C, B'), then runs
    the inverse extrapolator of ``|com1>`` back into D. The chain bound
    composes the forward fidelity, ``|<T1|T0>|**2`` and the inverse fidelity
    through the fidelity triangle inequality.
    """
    if isinstance(com0, CommitmentPair):
        com0.require_dense()
        lay = com0.layout
        com0, com1 = com0.com0.reshape(lay.c_dim, lay.d_dim), com0.com1.reshape(lay.c_dim, lay.d_dim)
    t0, t1 = make_task(com0), make_task(com1)
    td = trace_distance(t0.reduced, t1.reduced)
    overlap = abs(np.vdot(t1.target.amps, t0.target.amps)) ** 2
    a0 = exact_extrapolator(t0)
    a1_inv = inverse_extrapolator(t1)
    f_fwd = extrapolation_fidelity(t0, a0)
    f_inv = branch_fidelity(com1, a1_inv.apply_right(t1.target.amps.reshape(t1.dims[0], -1)))
    attack = a0.then(a1_inv)
    achieved = branch_fidelity(com1, attack.apply_right(com0))
    fids = (f_fwd, overlap, f_inv)
    return AttackReport(td, float(overlap), (1 - td) ** 4, f_fwd, f_inv, achieved,
                        _chain(fids, "root"), _chain(fids, "squared"))


def synthetic_pair(dc: int, dd: int, td: float, rng: Stream) -> tuple[np.ndarray, np.ndarray]:
    """Two purifications (C x D matrices) whose C marginals are exactly ``td`` apart.

    The D side of each is rotated by an independent random isometry, so the
    opening is not trivially shared between the two bits.
    """
    if dd < dc:
        raise ValueError("need dim(D) >= dim(C) for full-rank purifications")
    rho0 = random_density(dc, rng).mat
    if td > 0:
        sigma = random_density(dc, rng, rank=1).mat
        base = trace_distance(rho0, sigma)
        if td > base:
            raise ValueError(f"requested TD {td} exceeds reachable {base:.3f}")
        rho1 = rho0 + (td / base) * (sigma - rho0)
    else:
        rho1 = rho0
    out = []
    for rho in (rho0, rho1):
        z = rng.standard_normal((dd, dc)) + 1j * rng.standard_normal((dd, dc))
        w, _ = np.linalg.qr(z)
        out.append(psd_sqrt(rho) @ w.T)
    return out[0], out[1]
