"""Bit commitment from a cloneable-to-quantum extrapolation task.

Register layout of the commitment (big-endian, in this order)::

    C0 (|K| * 2**m)  C1 (sDim)  K (|K|)  S (sDim)  M0 (2**m)  M1 (2**m)

C = (C0, C1) is sent, D = (K, S, M0, M1) is kept for the opening. C0
holds the pair (k, x) with k as the major digit.

Two representations are kept side by side: the dense purification (only for
small layouts) and a structured one made of the challenge weights and the
amplitude tables ``alpha[k, s, x] = <x|Rand_k|psi_s>`` and
``alpha0[k, x] = <x|Rand_k|0>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bases import BasisFamily
from .qcore import add_copy, apply_on, controlled_on, fidelity, haar_unitary, trace_distance
from .rng import Stream

DENSE_LIMIT = 2**14
NORM_TOL = 1e-9


# --------------------------------------------------------------------------
# instances
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GenInstance:
    """Weighted challenge/target pairs ``sum_s beta_s |chal_s>|psi_s>``.

    Attributes:
        betas: nonnegative weights with unit sum of squares.
        challenges: one orthonormal challenge vector per row (length ``s_dim``).
        targets: one unit target per row (length ``2**msg_qubits``).
        basis_kind: ``classical`` when every challenge is a computational
            basis vector, ``cloneable`` otherwise.
    """

    betas: np.ndarray
    challenges: np.ndarray
    targets: np.ndarray
    msg_qubits: int
    basis_kind: str = "classical"
    name: str = "instance"

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        ch = np.atleast_2d(np.asarray(self.challenges, dtype=complex))
        tg = np.atleast_2d(np.asarray(self.targets, dtype=complex))
        for name_, val in (("betas", b), ("challenges", ch), ("targets", tg)):
            val.flags.writeable = False
            object.__setattr__(self, name_, val)
        if not (len(b) == len(ch) == len(tg)):
            raise ValueError("betas, challenges and targets must have equal length")
        if np.any(b < 0):
            raise ValueError("weights must be nonnegative")
        if abs(np.sum(b**2) - 1) > NORM_TOL:
            raise ValueError(f"sum of squared weights is {np.sum(b**2):.12g}, not 1")
        if tg.shape[1] != 2**self.msg_qubits:
            raise ValueError(f"targets must have length 2**{self.msg_qubits}")
        if np.max(np.abs(np.linalg.norm(tg, axis=1) - 1)) > NORM_TOL:
            raise ValueError("every target must be a unit vector")
        gram = ch.conj() @ ch.T
        off = np.abs(gram - np.eye(len(ch)))
        if off.max() > NORM_TOL:
            i, j = np.unravel_index(np.argmax(off), off.shape)
            raise ValueError(f"challenges {min(i, j)} and {max(i, j)} are not orthonormal")
        if self.basis_kind not in ("classical", "cloneable"):
            raise ValueError(f"unknown basis kind {self.basis_kind!r}")
        if self.basis_kind == "classical":
            ok = np.all(np.isclose(np.abs(ch), 0, atol=NORM_TOL) | np.isclose(ch, 1, atol=NORM_TOL))
            if not ok:
                raise ValueError("classical challenges must be computational basis vectors")

    @classmethod
    def classical(cls, betas, indices: Sequence[int], targets, s_dim: int | None = None,
                  name: str = "instance") -> "GenInstance":
        s_dim = s_dim or (max(indices) + 1)
        ch = np.zeros((len(indices), s_dim), dtype=complex)
        ch[np.arange(len(indices)), list(indices)] = 1
        tg = np.atleast_2d(np.asarray(targets, dtype=complex))
        m = round(math.log2(tg.shape[1]))
        return cls(np.asarray(betas, float), ch, tg, m, "classical", name)

    @property
    def s_dim(self) -> int:
        return self.challenges.shape[1]

    @property
    def msg_dim(self) -> int:
        return 2**self.msg_qubits

    @property
    def n_challenges(self) -> int:
        return len(self.betas)

    def gen_state(self) -> np.ndarray:
        """``sum_s beta_s |chal_s> (x) |psi_s>`` as an (sDim, 2**m) array."""
        return np.einsum("s,si,sx->ix", self.betas, self.challenges, self.targets)

    def clone_unitary(self) -> np.ndarray | None:
        """Unitary W with ``W e_s = chal_s``; None for classical challenges."""
        if self.basis_kind == "classical":
            return None
        a = np.hstack([self.challenges.T, np.eye(self.s_dim, dtype=complex)])
        q, r = np.linalg.qr(a)
        d = np.diag(r)[: self.n_challenges]
        q[:, : self.n_challenges] *= d / np.abs(d)
        w = q[:, : self.s_dim]
        return w


@dataclass(frozen=True)
class CommitmentLayout:
    key_count: int
    s_dim: int
    msg_dim: int

    @property
    def dims(self) -> tuple[int, ...]:
        k, s, m = self.key_count, self.s_dim, self.msg_dim
        return (k * m, s, k, s, m, m)

    @property
    def c_dim(self) -> int:
        return self.key_count * self.msg_dim * self.s_dim

    @property
    def d_dim(self) -> int:
        return self.key_count * self.s_dim * self.msg_dim**2

    @property
    def total(self) -> int:
        return self.c_dim * self.d_dim


@dataclass(frozen=True, eq=False)
class CommitmentPair:
    gen: GenInstance
    family: str
    layout: CommitmentLayout
    keys: tuple
    alpha: np.ndarray = field(repr=False)
    alpha0: np.ndarray = field(repr=False)
    com0: np.ndarray | None = field(default=None, repr=False)
    com1: np.ndarray | None = field(default=None, repr=False)
    rands: np.ndarray | None = field(default=None, repr=False)

    @property
    def has_dense(self) -> bool:
        return self.com0 is not None

    @property
    def p(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def q(self) -> np.ndarray:
        return np.abs(self.alpha0) ** 2

    def require_dense(self):
        if not self.has_dense:
            raise ValueError("operation needs the dense representation")


# --------------------------------------------------------------------------
# dense circuit pieces
# --------------------------------------------------------------------------

def _clone(t: np.ndarray, w: np.ndarray | None, src: int, dst: int, inverse: bool = False) -> np.ndarray:
    if w is None:
        return add_copy(t, [src], dst, sign=-1 if inverse else 1)
    wd = w.conj().T
    if not inverse:
        t = apply_on(t, wd, [src])
        t = add_copy(t, [src], dst)
        return apply_on(apply_on(t, w, [src]), w, [dst])
    t = apply_on(apply_on(t, wd, [src]), wd, [dst])
    t = add_copy(t, [src], dst, sign=-1)
    return apply_on(t, w, [src])


def _init_tensor(gen: GenInstance, lay: CommitmentLayout) -> np.ndarray:
    t = np.zeros(lay.dims, dtype=complex)
    t[0, 0, :, :, :, 0] = gen.gen_state()[None] / math.sqrt(lay.key_count)
    return t


def commit_circuit(t: np.ndarray, b: int, rands: np.ndarray, w: np.ndarray | None,
                   inverse: bool = False) -> np.ndarray:
    """Apply the commitment unitary for bit ``b`` (or its inverse) to a layout tensor."""
    mb = 4 + b
    if not inverse:
        t = controlled_on(t, 2, mb, rands)
        t = add_copy(t, [2, mb], 0)
        return _clone(t, w, 3, 1)
    t = _clone(t, w, 3, 1, inverse=True)
    t = add_copy(t, [2, mb], 0, sign=-1)
    return controlled_on(t, 2, mb, rands, adjoint=True)


def build_commitment(gen: GenInstance, family: BasisFamily, representation: str = "auto",
                     keys: Sequence[int] | None = None) -> CommitmentPair:
    """Commitment states for both bits.

    Args:
        representation: ``structured`` (tables only), ``dense`` (tables plus
            dense states, error if the layout exceeds 2**14 entries) or
            ``auto`` (dense when it fits).
        keys: explicit key set; defaults to the family's full enumeration.
    """
    if family.dim != gen.msg_dim:
        raise ValueError(f"family dim {family.dim} does not match message dim {gen.msg_dim}")
    if keys is None:
        keys, rands = tuple(family.keys()), family.unitaries()
    else:
        keys = tuple(keys)
        rands = family.unitaries(list(keys))
    lay = CommitmentLayout(len(keys), gen.s_dim, gen.msg_dim)
    alpha = np.einsum("kxy,sy->ksx", rands, gen.targets)
    alpha0 = rands[:, :, 0].copy()
    dense = representation == "dense" or (representation == "auto" and lay.total <= DENSE_LIMIT)
    if representation not in ("auto", "dense", "structured"):
        raise ValueError(f"unknown representation {representation!r}")
    com0 = com1 = None
    if dense:
        if lay.total > DENSE_LIMIT:
            raise ValueError(f"dense layout has {lay.total} entries, limit is {DENSE_LIMIT}")
        w = gen.clone_unitary()
        init = _init_tensor(gen, lay)
        com0 = commit_circuit(init, 0, rands, w)
        com1 = commit_circuit(init, 1, rands, w)
    return CommitmentPair(gen, family.descriptor, lay, keys, alpha, alpha0, com0, com1, rands)


def completeness(pair: CommitmentPair) -> tuple[float, float]:
    """Probability that inverting the honest circuit on ``com_b`` returns ``|init>``."""
    pair.require_dense()
    w = pair.gen.clone_unitary()
    init = _init_tensor(pair.gen, pair.layout)
    out = []
    for b, com in ((0, pair.com0), (1, pair.com1)):
        back = commit_circuit(com, b, pair.rands, w, inverse=True)
        out.append(float(abs(np.vdot(init, back)) ** 2))
    return out[0], out[1]


# --------------------------------------------------------------------------
# hiding
# --------------------------------------------------------------------------

def reduced_c_state(pair: CommitmentPair, b: int, source: str = "structured") -> np.ndarray:
    """Reduced state on C = (C0, C1)."""
    lay = pair.layout
    if source == "dense":
        pair.require_dense()
        psi = (pair.com0 if b == 0 else pair.com1).reshape(lay.c_dim, lay.d_dim)
        return psi @ psi.conj().T
    probs = pair.p if b == 0 else np.broadcast_to(pair.q[:, None, :], pair.p.shape)
    rho = np.zeros((lay.c_dim, lay.c_dim), dtype=complex)
    for s, beta in enumerate(pair.gen.betas):
        diag = probs[:, s, :].reshape(-1) * beta**2 / lay.key_count
        chal = pair.gen.challenges[s]
        rho += np.kron(np.diag(diag), np.outer(chal, chal.conj()))
    return rho


def hiding_distance(pair: CommitmentPair, source: str = "structured") -> float:
    """TD between the two reduced C states.

    The structured value uses the block structure over (s, k):
    ``sum_s beta_s**2 E_k TD(p_{k,s}, q_k)``.
    """
    if source == "dense":
        return trace_distance(reduced_c_state(pair, 0, "dense"), reduced_c_state(pair, 1, "dense"))
    per = 0.5 * np.abs(pair.p - pair.q[:, None, :]).sum(axis=2)  # (K, S)
    return float(np.sum(pair.gen.betas**2 * per.mean(axis=0)))


def optimal_binding(pair: CommitmentPair, source: str = "structured") -> float:
    """Squared fidelity of the reduced C states (best binding advantage over all openers)."""
    if source == "dense":
        return fidelity(reduced_c_state(pair, 0, "dense"), reduced_c_state(pair, 1, "dense"))
    bc = np.sqrt(pair.p * pair.q[:, None, :]).sum(axis=2)  # (K, S)
    return float(np.sum(pair.gen.betas**2 * bc.mean(axis=0)) ** 2)


# --------------------------------------------------------------------------
# binding
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Adversary:
    """Unitary on (D, A), D-major, with an initial auxiliary state on A."""

    unitary: np.ndarray
    aux: np.ndarray
    name: str = "adversary"

    @property
    def aux_dim(self) -> int:
        return len(self.aux)


def identity_adversary(lay: CommitmentLayout) -> Adversary:
    return Adversary(np.eye(lay.d_dim, dtype=complex), np.ones(1, dtype=complex), "identity")


def swap_adversary(lay: CommitmentLayout) -> Adversary:
    """Swap the contents of M0 and M1."""
    k, s, m = lay.key_count, lay.s_dim, lay.msg_dim
    perm = np.arange(lay.d_dim).reshape(k, s, m, m).transpose(0, 1, 3, 2).reshape(-1)
    u = np.eye(lay.d_dim, dtype=complex)[perm]
    return Adversary(u, np.ones(1, dtype=complex), "swap")


def random_adversary(lay: CommitmentLayout, rng: Stream, aux_dim: int = 2) -> Adversary:
    u = haar_unitary(lay.d_dim * aux_dim, rng)
    aux = np.zeros(aux_dim, dtype=complex)
    aux[0] = 1
    return Adversary(u, aux, "haar")


def _check_adversary(pair: CommitmentPair, adv: Adversary):
    if adv.unitary.shape != (pair.layout.d_dim * adv.aux_dim,) * 2:
        raise ValueError(f"adversary acts on dim {adv.unitary.shape[0]}, expected "
                         f"{pair.layout.d_dim} * {adv.aux_dim}")


def binding_advantage(pair: CommitmentPair, adv: Adversary) -> float:
    """``|| (<com1| (x) I_A) U (|com0> (x) |aux>) ||**2``."""
    pair.require_dense()
    _check_adversary(pair, adv)
    lay = pair.layout
    psi0 = pair.com0.reshape(lay.c_dim, lay.d_dim)
    start = (psi0[:, :, None] * adv.aux[None, None, :]).reshape(lay.c_dim, -1)
    out = (start @ adv.unitary.T).reshape(lay.c_dim, lay.d_dim, adv.aux_dim)
    vec = np.einsum("cd,cda->a", pair.com1.reshape(lay.c_dim, lay.d_dim).conj(), out)
    return float(np.vdot(vec, vec).real)


def aux_table(pair: CommitmentPair, adv: Adversary) -> np.ndarray:
    """``aux[k, s, x] = (<k, chal_s, psi_s, x|_D (x) I) U |k, chal_s, x, 0>_D |aux>``."""
    _check_adversary(pair, adv)
    lay, gen = pair.layout, pair.gen
    k_, s_, m_, a_ = lay.key_count, lay.s_dim, lay.msg_dim, adv.aux_dim
    # rows (k, S, M0, M1, A), columns (k, S, M0, M1, A) with the input M1 fixed to 0
    u = adv.unitary.reshape(k_, s_, m_, m_, a_, k_, s_, m_, m_, a_)[..., 0, :]
    out = np.empty((k_, gen.n_challenges, m_, a_), dtype=complex)
    for s in range(gen.n_challenges):
        chal, psi = gen.challenges[s], gen.targets[s]
        out[:, s] = np.einsum("kiyxakjxc,i,y,j,c->kxa", u, chal.conj(), psi.conj(), chal, adv.aux)
    return out


def structured_binding_advantage(pair: CommitmentPair, aux: np.ndarray) -> float:
    """Binding advantage from an aux table (exact for any adversary)."""
    k = pair.layout.key_count
    vec = np.einsum("s,ksx,kx,ksxa->a", pair.gen.betas**2, pair.alpha, pair.alpha0.conj(), aux) / k
    return float(np.vdot(vec, vec).real)


@dataclass(frozen=True, eq=False)
class ReductionTables:
    p: np.ndarray
    q: np.ndarray
    w: np.ndarray


@dataclass(frozen=True, eq=False)
class ReductionResult:
    reduction_success: float
    binding_advantage: float
    chain: tuple[float, float, float]
    per_challenge_success: np.ndarray
    tables: ReductionTables

    @property
    def dominates(self) -> bool:
        return self.reduction_success >= self.binding_advantage - 1e-9


def _simulate_reduction(pair: CommitmentPair, adv: Adversary, s: int) -> float:
    """Success probability of the extrapolation solver for challenge ``s``.

    Registers (C0, C1, K, S', M', M1, A): K starts uniform, M' and M1 at 0
    and S' holds the challenge. CRand acts K -> M', (K, M') is copied into
    C0 and S' is cloned into C1. After the binding adversary acts on
    (K, S', M', M1, A), the check uncomputes the copies from (K, M1) and
    S' and keeps only C = 0. M' is then scored against the target.
    """
    lay, gen = pair.layout, pair.gen
    dims = lay.dims + (adv.aux_dim,)
    t = np.zeros(dims, dtype=complex)
    t[0, 0, :, :, 0, 0, :] = np.outer(gen.challenges[s], adv.aux)[None] / math.sqrt(lay.key_count)
    w = gen.clone_unitary()
    t = controlled_on(t, 2, 4, pair.rands)
    t = add_copy(t, [2, 4], 0)
    t = _clone(t, w, 3, 1)
    t = (t.reshape(lay.c_dim, -1) @ adv.unitary.T).reshape(dims)
    t = add_copy(t, [2, 5], 0, sign=-1)
    t = _clone(t, w, 3, 1, inverse=True)
    kept = t[0, 0]  # (K, S', M', M1, A)
    amp = np.tensordot(kept, gen.targets[s].conj(), axes=([2], [0]))
    return float(np.vdot(amp, amp).real)


def binding_reduction(pair: CommitmentPair, adv: Adversary) -> ReductionResult:
    """Run the binding-to-extrapolation reduction against ``adv``.

    Also returns the three intermediate values of the bound chain linking the
    binding advantage to the reduction's success probability.
    """
    pair.require_dense()
    gen = pair.gen
    per_s = np.array([_simulate_reduction(pair, adv, s) for s in range(gen.n_challenges)])
    success = float(np.sum(gen.betas**2 * per_s))
    adv_value = binding_advantage(pair, adv)
    aux = aux_table(pair, adv)
    wt = np.real(np.einsum("ksxa,ksxa->ksx", aux, aux.conj()))
    mag = np.abs(pair.alpha * pair.alpha0[:, None, :])  # (K, S, X)
    b2 = gen.betas**2
    inner = np.sum(mag * np.sqrt(wt), axis=2)  # (K, S)
    c5 = float(np.sum(b2 * inner.mean(axis=0)) ** 2)
    c6 = float(np.sum(b2 * (inner**2).mean(axis=0)))
    c7 = float(np.sum(b2 * np.sum(pair.q[:, None, :] * wt, axis=2).mean(axis=0)))
    return ReductionResult(success, adv_value, (c5, c6, c7), per_s,
                           ReductionTables(pair.p, pair.q, wt))


# --------------------------------------------------------------------------
# XOR amplification
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class XorReport:
    component_tds: list[float]
    composite_td: float
    product: float
    method: str

    @property
    def deviation(self) -> float:
        return abs(self.composite_td - self.product)


def parity_state(states: Sequence[tuple[np.ndarray, np.ndarray]], b: int) -> np.ndarray:
    """Uniform mixture of ``(x) rho_{x_i}`` over strings x of parity b."""
    lam = len(states)
    total = None
    for bits in range(2**lam):
        xs = [(bits >> (lam - 1 - i)) & 1 for i in range(lam)]
        if sum(xs) % 2 != b:
            continue
        term = np.ones((1, 1), dtype=complex)
        for (r0, r1), x in zip(states, xs):
            term = np.kron(term, r1 if x else r0)
        total = term if total is None else total + term
    return total / 2 ** (lam - 1)


def xor_amplify(pairs: Sequence[CommitmentPair], dense: bool | None = None) -> XorReport:
    """Hiding of the parity-encoded composite commitment.

    With ``dense`` (default when the composite C dimension is at most 4096)
    the two composite C states are formed explicitly and compared; otherwise
    the product of component distances is returned.
    """
    tds = [hiding_distance(p) for p in pairs]
    prod = float(np.prod(tds))
    cdim = math.prod(p.layout.c_dim for p in pairs)
    if dense is None:
        dense = cdim <= 4096
    if not dense:
        return XorReport(tds, prod, prod, "product")
    states = [(reduced_c_state(p, 0), reduced_c_state(p, 1)) for p in pairs]
    comp = trace_distance(parity_state(states, 0), parity_state(states, 1))
    return XorReport(tds, comp, prod, "dense")


# --------------------------------------------------------------------------
# bipartite variant with a fixed basis
# --------------------------------------------------------------------------

def bipartite_commitment(g: np.ndarray, family: BasisFamily) -> tuple[np.ndarray, np.ndarray]:
    """Commit by measuring one half of ``sum_ab g[a, b] |a>|b>`` in a random basis.

    Bit 0 measures A and keeps (K, B, A); bit 1 measures B and keeps
    (K, A, B). C holds (k, outcome). Returns both states as (C, D) matrices.
    """
    n = family.dim
    if g.shape != (n, n):
        raise ValueError("bipartite state must be N x N with N the family dim")
    keys = family.keys()
    kc = len(keys)
    rands = family.unitaries(keys)
    t = np.zeros((kc * n, kc, n, n), dtype=complex)
    t[0] = g[None] / math.sqrt(kc)
    out = []
    for b in (0, 1):
        ax = 2 + b
        s = add_copy(controlled_on(t, 1, ax, rands), [1, ax], 0)
        if b == 0:
            s = s.transpose(0, 1, 3, 2)
        out.append(s.reshape(kc * n, -1))
    return out[0], out[1]


def hadamard_pair_state(n: int) -> np.ndarray:
    """``2**(-n/2) sum_x |x> (x) H|x>`` as a coefficient matrix."""
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    hn = np.ones((1, 1))
    for _ in range(n):
        hn = np.kron(hn, h)
    return hn.T.astype(complex) / np.sqrt(2**n)


def hadamard_instance(n: int) -> GenInstance:
    """Classical challenges x with targets H|x>, uniform weights."""
    dim = 2**n
    return GenInstance.classical(np.full(dim, dim**-0.5), list(range(dim)),
                                 hadamard_pair_state(n).T * np.sqrt(dim), dim, name="hadamard")


@dataclass(frozen=True)
class FixedBasisDemo:
    n: int
    overlap: float
    difference_norm: float
    identity_advantage: float
    mub_bipartite_td: float
    contrast_hiding_td: float
    contrast_optimal_binding: float


def fixed_basis_failure_demo(n: int = 1) -> FixedBasisDemo:
    """Bipartite commitment of the Hadamard pair state under the computational basis.

    The two commitment states coincide, so the identity opener wins. As a
    contrast the Hadamard instance is committed with the full scheme under a
    maximal MUB family, where hiding and binding are both nontrivial.
    """
    from .bases import build_family

    g = hadamard_pair_state(n)
    c0, c1 = bipartite_commitment(g, build_family("computational", 2**n))
    overlap = abs(np.vdot(c1, c0))
    diff = float(np.linalg.norm(c0 - c1))
    mub = build_family("mub_prime", 2) if n == 1 else build_family("mub_qubits", n)
    m0, m1 = bipartite_commitment(g, mub)
    td_bip = trace_distance(m0 @ m0.conj().T, m1 @ m1.conj().T)
    pair = build_commitment(hadamard_instance(n), mub, "structured")
    return FixedBasisDemo(n, float(overlap), diff, float(overlap**2), td_bip,
                          hiding_distance(pair), optimal_binding(pair))
