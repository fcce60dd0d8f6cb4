import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcapacity import bounds as bd
from qcapacity import channels as ch
from qcapacity import fidelity as fid
from qcapacity import operators as ops
from qcapacity.errors import ValidationError

from conftest import amplitude_damping

seeds = st.integers(0, 2**16)


def test_ideal_capacity():
    assert bd.ideal_capacity(4, 2) == 2
    assert bd.ideal_capacity(2, 4) == 0.5
    lhs, rhs, ok = bd.unit_conversion_check(8, 2, 4)
    assert ok and lhs == pytest.approx(3)


def test_transposition_bound_values():
    assert bd.partial_transposition_bound(ch.identity_channel(2), 32).value == pytest.approx(1, abs=1e-6)
    assert bd.partial_transposition_bound(ch.identity_channel(3), 32).value == pytest.approx(math.log2(3), abs=1e-6)
    assert bd.partial_transposition_bound(ch.depolarizing_channel(2, 1.0), 32).value == pytest.approx(0, abs=1e-9)
    # ld of the semidefinite-program value 1.70946423 for amplitude damping at 0.3
    assert bd.partial_transposition_bound(amplitude_damping(0.3), 64).value == pytest.approx(0.7735442386, abs=1e-6)


def test_coherent_information_values():
    assert bd.coherent_information(np.eye(2) / 2, ch.identity_channel(2)) == pytest.approx(1)
    assert bd.coherent_information(np.eye(2) / 2, ch.depolarizing_channel(2, 1.0)) == pytest.approx(-1)
    assert bd.max_coherent_information(ch.identity_channel(2), 8).value == pytest.approx(1, abs=1e-6)
    # one-parameter maximisation over diagonal inputs
    assert bd.max_coherent_information(amplitude_damping(0.3), 16).value == pytest.approx(0.3279547619, abs=1e-7)
    # Pauli channel at 1/2: 1 - H(0.925, 0.025, 0.025, 0.025)
    pauli = 1 - ops.shannon_entropy([0.925, 0.025, 0.025, 0.025])
    assert bd.max_coherent_information(ch.depolarizing_channel(2, 0.1), 16).value == pytest.approx(pauli, abs=1e-7)


def test_two_block_coherent_information_not_below_one_block():
    t = amplitude_damping(0.2)
    one = bd.max_coherent_information(t, 8).value
    two = bd.max_coherent_information(t, 8, blocks=2).value
    assert two >= one - 1e-6
    with pytest.raises(ValidationError):
        bd.max_coherent_information(t, 8, blocks=3)


@given(seeds, st.integers(2, 3), st.integers(2, 3))
def test_isometric_upgrade(seed, eta, kappa):
    rng = np.random.default_rng(seed)
    rho = ops.random_density(eta, rng)
    e = ch.random_channel(eta, kappa, -(-eta // kappa) + 1, rng)
    t = ch.random_channel(kappa, eta, -(-kappa // eta) + 1, rng)
    up = bd.isometric_upgrade(rho, e, t)
    assert up.trace_residual() < 1e-9
    before = fid.entanglement_fidelity(rho, ch.compose(t, e))
    after = fid.entanglement_fidelity(rho, ch.compose(t, up))
    assert after >= before**2 - 1e-9


def test_best_branch_on_side_channel():
    rng = np.random.default_rng(8)
    enc = ch.random_channel(2, 4, 2, rng)
    dec = ch.random_channel(4, 2, 2, rng)
    prepared = [ops.projector(ops.basis_vector(2, 0)), ops.projector(ops.basis_vector(2, 1))]
    inst, decs = bd.separable_side_channel_branches(enc, dec, (2, 2), prepared)
    sel = bd.best_branch(inst, decs, ch.identity_channel(2))
    assert sel.certified
    assert np.sum(sel.weights) == pytest.approx(1)
    assert sel.renormalised_fidelities[sel.index] >= sel.assisted_fidelity - 1e-12


def test_haar_bridge_agrees_with_average():
    t = ch.depolarizing_channel(2, 0.3)
    (a, sa), (b, sb) = bd.haar_assist_bridge(t, ch.identity_channel(2), ch.identity_channel(2), 20000, 3)
    assert abs(a - b) <= 4 * math.hypot(sa, sb) + 1e-12
    assert abs(a - fid.average_fidelity_closed(t)) <= 4 * sa + 1e-12


def test_hashing_feasibility_flip():
    ok, margin = bd.hashing_feasible(2, 100, 1, 80)
    assert ok and margin == pytest.approx((0.8 + 0.04 - 1) + ops.binary_entropy(0.02))
    assert not bd.hashing_feasible(2, 100, 1, 90)[0]
    with pytest.raises(ValidationError):
        bd.hashing_feasible(4, 100, 1, 80)


def test_hashing_capacity_bound():
    assert bd.hashing_capacity_bound(2, 1, 0) == 1
    x = 2 * math.e * 0.01
    direct = (1 - 2 * x) + x * math.log2(x) + (1 - x) * math.log2(1 - x)
    assert bd.hashing_capacity_bound(2, 1, 0.01) == pytest.approx(direct, abs=1e-12)
    assert bd.hashing_capacity_bound(3, 2, 0) == pytest.approx(math.log2(3) / 2)
    with pytest.raises(ValidationError):
        bd.hashing_capacity_bound(2, 1, 0.2)
    rows = bd.hashing_table(2, 1, [0.0, 0.05])
    assert rows[1]["raw"] < 0 and rows[1]["clamped"] == 0


def test_rare_to_small_and_sandwich():
    assert bd.rare_to_small_bound(0.1, 2, 0) == pytest.approx(0.4, abs=1e-12)
    assert bd.rare_to_small_bound(0.0, 5, 1) == 0.0
    lo, hi = bd.epsilon_capacity_sandwich(1.0, 0.01)
    assert lo == pytest.approx(1 - 4 * math.e * 0.01) and hi == 1.0


@pytest.mark.parametrize("d,expected", [(2, True), (3, True), (4, False), (9, False), (11, True), (1, False)])
def test_is_prime(d, expected):
    assert bd.is_prime(d) is expected
