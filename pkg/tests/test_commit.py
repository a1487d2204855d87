import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import density_pair, seeds
from oracles import commitment_states, fidelity_scipy, trace_distance_scipy
from qextrap.bases import build_family, parse_family
from qextrap.commit import (
    DENSE_LIMIT,
    CommitmentLayout,
    GenInstance,
    aux_table,
    binding_advantage,
    binding_reduction,
    bipartite_commitment,
    build_commitment,
    completeness,
    fixed_basis_failure_demo,
    hadamard_pair_state,
    hiding_distance,
    identity_adversary,
    optimal_binding,
    parity_state,
    random_adversary,
    reduced_c_state,
    structured_binding_advantage,
    swap_adversary,
    xor_amplify,
)
from qextrap.instances import BUILTIN, builtin_instance
from qextrap.qcore import trace_distance
from qextrap.rng import stream

# (instance, family) -> (hiding TD, optimal binding), from the brute-force matrix circuit
ORACLE = {
    ("excited", "mub_prime:2:bases=2"): (0.5, 0.25),
    ("bb84", "mub_prime:2"): (0.25, 0.6708193037947684),
    ("hadamard", "mub_prime:2"): (1 / 3, 0.6476030138606879),
}

INV_SQRT2 = 1 / math.sqrt(2)


def _pair(inst="excited", fam="mub_prime:2:bases=2", rep="dense", m=1):
    return build_commitment(builtin_instance(inst, m), parse_family(fam), rep)


@pytest.mark.parametrize("inst,fam", [("excited", "mub_prime:2:bases=2"), ("bb84", "mub_prime:2"),
                                      ("hadamard", "mub_prime:2"), ("haar", "mub_prime:2:bases=2")])
def test_dense_states_match_matrix_circuit(inst, fam):
    pair = _pair(inst, fam)
    g = pair.gen
    idx = [int(np.argmax(np.abs(c))) for c in g.challenges]
    c0, c1, dims = commitment_states(g.betas, idx, g.targets, parse_family(fam).unitaries())
    assert pair.layout.dims == dims
    assert np.allclose(pair.com0.ravel(), c0, atol=1e-12)
    assert np.allclose(pair.com1.ravel(), c1, atol=1e-12)
    cd = dims[0] * dims[1]
    r0, r1 = c0.reshape(cd, -1), c1.reshape(cd, -1)
    r0, r1 = r0 @ r0.conj().T, r1 @ r1.conj().T
    assert hiding_distance(pair) == pytest.approx(trace_distance_scipy(r0, r1), abs=1e-10)
    assert optimal_binding(pair) == pytest.approx(fidelity_scipy(r0, r1), abs=1e-8)


@pytest.mark.parametrize("key,values", list(ORACLE.items()))
def test_frozen_values(key, values):
    pair = _pair(*key)
    assert hiding_distance(pair) == pytest.approx(values[0], abs=1e-12)
    assert hiding_distance(pair, "dense") == pytest.approx(values[0], abs=1e-10)
    assert optimal_binding(pair) == pytest.approx(values[1], abs=1e-10)
    assert optimal_binding(pair, "dense") == pytest.approx(values[1], abs=1e-8)


def test_degenerate_is_perfectly_hiding():
    pair = _pair("degenerate", "mub_prime:2")
    assert hiding_distance(pair) == pytest.approx(0.0, abs=1e-12)
    assert optimal_binding(pair) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("inst", BUILTIN)
def test_completeness(inst):
    pair = _pair(inst, "mub_prime:2")
    c0, c1 = completeness(pair)
    assert c0 == pytest.approx(1.0, abs=1e-12) and c1 == pytest.approx(1.0, abs=1e-12)


DENSE_CASES = [(i, f) for f in ("mub_prime:2", "clifford:1") for i in BUILTIN
               if _pair(i, f, "structured").layout.total <= DENSE_LIMIT]


@pytest.mark.parametrize("inst,fam", DENSE_CASES)
def test_representations_agree(inst, fam):
    pair = _pair(inst, fam, "dense")
    for b in (0, 1):
        assert np.allclose(reduced_c_state(pair, b), reduced_c_state(pair, b, "dense"), atol=1e-12)


@pytest.mark.parametrize("inst", BUILTIN)
@pytest.mark.parametrize("fam", ["mub_prime:2", "clifford:1"])
def test_hiding_at_most_inv_sqrt2(inst, fam):
    assert hiding_distance(_pair(inst, fam, "structured")) <= INV_SQRT2 + 1e-9


def test_layout():
    lay = CommitmentLayout(3, 2, 4)
    assert lay.dims == (12, 2, 3, 2, 4, 4)
    assert lay.c_dim == 24 and lay.d_dim == 96 and lay.total == 24 * 96


def test_dense_limit_enforced():
    with pytest.raises(ValueError, match="limit"):
        build_commitment(builtin_instance("bb84", 2), build_family("clifford", 2), "dense")


def test_family_dim_checked():
    with pytest.raises(ValueError, match="does not match"):
        build_commitment(builtin_instance("excited", 2), build_family("mub_prime", 2))


def test_structured_only_has_no_dense():
    pair = _pair(rep="structured")
    assert not pair.has_dense
    with pytest.raises(ValueError, match="dense"):
        completeness(pair)


# -- instance validation ----------------------------------------------------

def test_gen_validation():
    e = np.eye(2)
    with pytest.raises(ValueError, match="squared weights"):
        GenInstance.classical([0.5, 0.5], [0, 1], [e[0], e[1]])
    with pytest.raises(ValueError, match="nonnegative"):
        GenInstance.classical([-1.0], [0], [e[0]])
    with pytest.raises(ValueError, match="unit vector"):
        GenInstance.classical([1.0], [0], [[1.0, 1.0]])
    with pytest.raises(ValueError, match="not orthonormal"):
        GenInstance([INV_SQRT2] * 2, [[1, 0], [INV_SQRT2, INV_SQRT2]], [e[0], e[1]], 1, "cloneable")
    with pytest.raises(ValueError, match="computational basis"):
        GenInstance([1.0], [[INV_SQRT2, INV_SQRT2]], [e[0]], 1, "classical")
    with pytest.raises(ValueError, match="equal length"):
        GenInstance([1.0], [[1, 0], [0, 1]], [e[0]], 1)


def test_clone_unitary():
    g = builtin_instance("cloneable")
    w = g.clone_unitary()
    assert np.allclose(w.conj().T @ w, np.eye(2))
    for s in range(2):
        assert np.allclose(w[:, s], g.challenges[s])
    assert builtin_instance("excited").clone_unitary() is None


def test_gen_state():
    g = builtin_instance("bb84")
    st_ = g.gen_state()
    assert st_.shape == (4, 2)
    assert np.sum(np.abs(st_) ** 2) == pytest.approx(1.0)


# -- binding ----------------------------------------------------------------

def test_identity_adversary_gets_overlap():
    pair = _pair()
    adv = binding_advantage(pair, identity_adversary(pair.layout))
    assert adv == pytest.approx(abs(np.vdot(pair.com1, pair.com0)) ** 2, abs=1e-12)


def test_degenerate_swap_opens_perfectly():
    pair = _pair("degenerate", "mub_prime:2")
    swap = swap_adversary(pair.layout)
    assert binding_advantage(pair, swap) == pytest.approx(1.0, abs=1e-12)
    res = binding_reduction(pair, swap)
    assert res.reduction_success == pytest.approx(1.0, abs=1e-12)


@given(seeds, st.sampled_from([("excited", "mub_prime:2:bases=2"), ("bb84", "mub_prime:2"),
                               ("cloneable", "mub_prime:2:bases=2")]))
def test_binding_below_optimum(seed, key):
    pair = _pair(*key)
    adv = random_adversary(pair.layout, stream(seed))
    assert binding_advantage(pair, adv) <= optimal_binding(pair) + 1e-9


@given(seeds, st.sampled_from([("excited", "mub_prime:2:bases=2"), ("haar", "mub_prime:2:bases=2"),
                               ("bb84", "mub_prime:2:bases=2")]))
def test_structured_advantage_equals_dense(seed, key):
    pair = _pair(*key)
    adv = random_adversary(pair.layout, stream(seed), aux_dim=1 + seed % 3)
    assert structured_binding_advantage(pair, aux_table(pair, adv)) == pytest.approx(
        binding_advantage(pair, adv), abs=1e-12)


@given(seeds, st.sampled_from([("excited", "mub_prime:2:bases=2"), ("haar", "mub_prime:2:bases=2"),
                               ("cloneable", "mub_prime:2:bases=2")]))
def test_reduction_dominates(seed, key):
    pair = _pair(*key)
    res = binding_reduction(pair, random_adversary(pair.layout, stream(seed)))
    c5, c6, c7 = res.chain
    assert res.binding_advantage <= c5 + 1e-9
    assert c5 <= c6 + 1e-12 and c6 <= c7 + 1e-12
    assert c7 == pytest.approx(res.reduction_success, abs=1e-12)
    assert res.dominates


def test_adversary_shape_checked():
    pair = _pair()
    bad = random_adversary(CommitmentLayout(1, 1, 2), stream(0))
    with pytest.raises(ValueError, match="adversary acts on"):
        binding_advantage(pair, bad)


# -- XOR --------------------------------------------------------------------

@pytest.mark.parametrize("lam,want", [(2, 0.25), (3, 0.125)])
def test_xor_product(lam, want):
    pair = _pair(rep="structured")
    rep = xor_amplify([pair] * lam)
    assert rep.method == "dense"
    assert rep.composite_td == pytest.approx(want, abs=1e-12)
    assert rep.deviation < 1e-12


def test_xor_product_fallback():
    pair = _pair(rep="structured")
    rep = xor_amplify([pair] * 3, dense=False)
    assert rep.method == "product" and rep.composite_td == pytest.approx(0.125)


@given(seeds, st.integers(2, 3))
def test_parity_td_is_product(seed, lam):
    pairs = [density_pair(seed + i, 2) for i in range(lam)]
    comp = trace_distance(parity_state(pairs, 0), parity_state(pairs, 1))
    assert comp == pytest.approx(np.prod([trace_distance(a, b) for a, b in pairs]), abs=1e-10)


# -- fixed basis ------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2])
def test_fixed_basis_failure(n):
    d = fixed_basis_failure_demo(n)
    assert d.overlap == pytest.approx(1.0, abs=1e-9)
    assert d.identity_advantage == pytest.approx(1.0, abs=1e-9)
    assert d.difference_norm < 1e-12
    assert d.contrast_hiding_td <= INV_SQRT2
    assert d.contrast_optimal_binding < 1


def test_fixed_basis_contrast_values():
    d = fixed_basis_failure_demo(1)
    assert d.contrast_hiding_td == pytest.approx(ORACLE[("hadamard", "mub_prime:2")][0], abs=1e-12)
    assert d.contrast_optimal_binding == pytest.approx(ORACLE[("hadamard", "mub_prime:2")][1], abs=1e-10)


def test_bipartite_symmetric_state_any_basis():
    # the pair state is swap-symmetric, so measuring either half gives the same state
    g = hadamard_pair_state(1)
    c0, c1 = bipartite_commitment(g, build_family("mub_prime", 2))
    assert abs(np.vdot(c1, c0)) == pytest.approx(1.0, abs=1e-12)


def test_bipartite_asymmetric_state_differs():
    g = np.array([[1, 1], [0, 0]], dtype=complex) / math.sqrt(2)
    c0, c1 = bipartite_commitment(g, build_family("computational", 2))
    # measuring A reveals 0; measuring B gives a uniform outcome
    assert trace_distance(c0 @ c0.conj().T, c1 @ c1.conj().T) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        bipartite_commitment(np.eye(3) / math.sqrt(3), build_family("mub_prime", 2))


def test_cloneable_reduced_states_agree():
    pair = _pair("cloneable", "mub_prime:2")
    assert hiding_distance(pair) == pytest.approx(hiding_distance(pair, "dense"), abs=1e-12)
    assert completeness(pair) == pytest.approx((1.0, 1.0), abs=1e-12)
