import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import density_pair, seeds
from qextrap.bases import (
    build_family,
    design_targets,
    parse_family,
    pinch,
    pinch_distributions,
    verify_2design,
    verify_mub,
)
from qextrap.mub import prime_mub
from qextrap.rng import stream


@pytest.mark.parametrize("args,count,dim", [
    (("mub_prime", 3), 4, 3),
    (("mub_qubits", 2), 5, 4),
    (("clifford", 1), 24, 2),
    (("clifford", 2), 11520, 4),
    (("binary_phase", 2), 16, 4),
    (("pauli_group", 2), 16, 4),
    (("per_qubit_pauli", 2), 9, 4),
    (("computational", 3), 1, 3),
])
def test_family_sizes(args, count, dim):
    fam = build_family(*args)
    assert fam.key_count == count and fam.dim == dim
    assert len(fam.keys()) == count


def test_family_enumeration_errors():
    with pytest.raises(ValueError, match="cannot be enumerated"):
        build_family("haar", 4, 10).keys()
    with pytest.raises(ValueError, match="cannot be enumerated"):
        build_family("clifford", 3).keys()
    with pytest.raises(ValueError, match="cannot be enumerated"):
        build_family("binary_phase", 5).keys()
    with pytest.raises(ValueError, match="not prime"):
        build_family("mub_prime", 4)
    with pytest.raises(ValueError):
        build_family("mub_qubits", 6)
    with pytest.raises(ValueError, match="unknown family kind"):
        build_family("nope", 1)


def test_key_validation():
    fam = build_family("mub_prime", 3)
    with pytest.raises(ValueError):
        fam.unitary(4)
    with pytest.raises(ValueError):
        build_family("clifford", 1).unitary(0)  # zero tableau is not symplectic


def test_mub_subset():
    fam = build_family("mub_prime", 2, bases=2)
    assert fam.key_count == 2 and fam.descriptor == "mub_prime:2:bases=2"
    with pytest.raises(ValueError):
        build_family("mub_prime", 2, bases=4)


def test_parse_family():
    assert parse_family("mub_prime:2:bases=2").key_count == 2
    assert parse_family("clifford:1").key_count == 24
    a, b = parse_family("haar:4:10", seed=3), parse_family("haar:4:10", seed=3)
    assert np.allclose(a.unitary(5), b.unitary(5))


def test_mub_family_measures_in_the_bases():
    # key r measures in basis r: its vectors are the outcome states
    fam = build_family("mub_prime", 3)
    m = prime_mub(3)
    for r in range(4):
        for x in range(3):
            v = m.bases[r][:, x]
            res = pinch(fam, r, np.outer(v, v.conj()))
            assert res.distribution[x] == pytest.approx(1.0)


def test_key_labels():
    assert [build_family("mub_prime", 2).key_label(k) for k in range(3)] == ["Z", "X", "Y"]
    assert build_family("pauli_group", 2).key_label(7) == "XZ"
    assert build_family("per_qubit_pauli", 2).key_label(5) == "XY"
    assert build_family("binary_phase", 1).key_label(1) == "+-"
    c = build_family("clifford", 1)
    assert c.key_label(c.keys()[0]).count(",") == 1


def test_per_qubit_axes():
    # Y-axis key maps |+i> to |0>
    fam = build_family("per_qubit_pauli", 1)
    plus_i = np.array([1, 1j]) / math.sqrt(2)
    assert abs(fam.unitary(2) @ plus_i)[0] == pytest.approx(1.0)
    plus = np.array([1, 1]) / math.sqrt(2)
    assert abs(fam.unitary(1) @ plus)[0] == pytest.approx(1.0)


def test_binary_phase_unitary():
    fam = build_family("binary_phase", 1)
    # key 1 flips the sign of entry 1: H diag(1, -1) maps |-> to |0>
    minus = np.array([1, -1]) / math.sqrt(2)
    assert abs((fam.unitary(1) @ minus)[0]) == pytest.approx(1.0)


def test_haar_keys_deterministic():
    fam = build_family("haar", 3, 5, rng=11)
    ks = fam.keys("sample", 4, stream(1))
    assert ks == fam.keys("sample", 4, stream(1))
    u = fam.unitary(ks[0])
    assert np.allclose(u @ u.conj().T, np.eye(3))


@given(seeds, st.sampled_from(["mub_prime:3", "clifford:1", "pauli_group:1", "mub_qubits:2"]))
def test_pinch_properties(seed, desc):
    fam = parse_family(desc)
    rho, _ = density_pair(seed, fam.dim)
    key = fam.keys()[seed % fam.key_count]
    res = pinch(fam, key, rho)
    assert res.distribution.sum() == pytest.approx(1.0)
    assert np.all(res.distribution > -1e-12)
    u = fam.unitary(key)
    # pinched state is diagonal in the measured basis
    d = u @ res.pinched.mat @ u.conj().T
    assert np.allclose(d, np.diag(res.distribution), atol=1e-12)
    assert np.allclose(pinch_distributions(fam, rho, [key])[0], res.distribution)


def test_pinch_dim_mismatch():
    with pytest.raises(ValueError, match="does not match"):
        pinch(build_family("mub_prime", 2), 0, np.eye(3) / 3)


def test_verify_mub_report():
    assert verify_mub(prime_mub(5))["maxDeviation"] < 1e-12


def test_design_targets():
    assert design_targets(2) == pytest.approx((1 / 3, 1 / 6))
    assert design_targets(4) == pytest.approx((0.1, 0.05))


@pytest.mark.parametrize("n", [1, 2])
def test_clifford_is_two_design(n):
    res = verify_2design(build_family("clifford", n))
    for k in ("firstMoment", "fourthMoment", "crossMoment"):
        assert res[k]["maxDeviation"] < 1e-9
    assert res["crossPairs"]


def test_pauli_group_is_not_a_two_design():
    res = verify_2design(build_family("pauli_group", 1))
    # |0> stays a basis vector under every Pauli, so the fourth moment is 1/2 not 1/3
    assert res["fourthMoment"]["values"][0] == pytest.approx(0.5)
    assert res["fourthMoment"]["maxDeviation"] > 0.1


def test_sampled_design_haar():
    fam = build_family("haar", 3, 10**6, rng=4)
    res = verify_2design(fam, mode="sampled", count=4000, rng=stream(5))
    four = res["fourthMoment"]
    for v, se in zip(four["values"], four["stderr"]):
        assert abs(v - four["target"]) < 4 * se + 1e-12
