import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binom

from qcapacity import channels as ch
from qcapacity import equivalence as eq
from qcapacity import operators as ops
from qcapacity.errors import DimensionError, ValidationError

seeds = st.integers(0, 2**16)


def near_identity(d, p, rank, rng):
    noise = ch.random_channel(d, d, rank, rng)
    return ch.Channel([math.sqrt(1 - p) * np.eye(d)] + [math.sqrt(p) * k for k in noise.kraus])


@given(seeds, st.integers(2, 4))
def test_pure_distance_bound(seed, d):
    rng = np.random.default_rng(seed)
    lhs, rhs = eq.pure_distance_bound(ops.random_density(d, rng), ops.haar_vector(d, rng))
    assert lhs <= rhs + 1e-12


def test_pure_distance_bound_is_tight_on_pure_states():
    psi, phi = ops.basis_vector(2, 0), np.array([1, 1]) / math.sqrt(2)
    lhs, rhs = eq.pure_distance_bound(ops.projector(phi), psi)
    assert lhs == pytest.approx(rhs)


@given(seeds)
def test_chain_on_random_qubit_channels(seed):
    t = ch.random_channel(2, 2, 2, np.random.default_rng(seed))
    rep = eq.equivalence_chain(t, eq.ChainConfig(8, 16, seed))
    assert rep.passed
    assert np.allclose(rep.recompute(), [rep.one_minus_inf_fe, rep.four_sqrt_one_minus_F, rep.four_sqrt_opnorm,
                                         rep.four_sqrt_cbnorm, rep.eight_fourth_root])


def test_chain_identity_is_all_zero():
    rep = eq.equivalence_chain(ch.identity_channel(2), eq.ChainConfig(4, 8, 0))
    assert rep.passed
    assert max(rep.recompute()) < 1e-6


def test_chain_report_serialises():
    d = eq.equivalence_chain(ch.pinch_channel(2), eq.ChainConfig(4, 8, 0)).to_dict()
    assert d["estimator"]["bound_directions"]["cbnorm_T_minus_id"] == "lower"
    assert [l["certified"] for l in d["links"]] == [False, True, True, False]


def test_chain_rejects_large_or_rectangular():
    with pytest.raises(DimensionError):
        eq.equivalence_chain(ch.identity_channel(9))
    with pytest.raises(DimensionError):
        eq.equivalence_chain(ch.ideal_embed_encoder(2, 3))


@pytest.mark.parametrize("d", [2, 3, 4, 8, 16])
def test_pinch(d):
    res = eq.pinch_analysis(d)
    assert res.channel_fidelity == pytest.approx((d * d - 2 * d + 2) / d**2, abs=1e-12)
    assert res.opnorm_lower == pytest.approx(1, abs=1e-12)


def test_compress_channel_small():
    rng = np.random.default_rng(3)
    t = near_identity(4, 0.05, 2, rng)
    res = eq.compress_channel(t, np.eye(4) / 4, 2, restarts=8, seed=1)
    assert res.holds
    assert np.all(np.diff(res.peel_fidelities) >= -1e-12)
    assert res.q_star_norm == pytest.approx(0.5)
    assert np.sum(res.q) == pytest.approx(1, abs=1e-9)
    assert np.allclose(res.basis.conj().T @ res.basis, np.eye(2), atol=1e-10)
    assert res.channel.trace_residual() < 1e-8


def test_compress_channel_contract():
    with pytest.raises(ValidationError):
        eq.compress_channel(ch.identity_channel(2), np.diag([1.0, 0.0]), 2)


@pytest.mark.parametrize("n", [5, 20, 50])
def test_qaep_mass_against_binomial(n):
    p, eps = 0.9, 0.1
    rate = ops.binary_entropy(p)
    k = np.arange(n + 1)
    log2_lam = k * math.log2(p) + (n - k) * math.log2(1 - p)
    inside = (log2_lam >= -n * (rate + eps) - 1e-9 * n) & (log2_lam <= -n * (rate - eps) + 1e-9 * n)
    oracle = binom.pmf(k, n, p)[inside].sum()
    assert eq.qaep_typical_mass([p, 1 - p], n, rate, eps) == pytest.approx(oracle, abs=1e-12)


def test_qaep_mass_three_outcomes_full_window():
    assert eq.qaep_typical_mass([0.5, 0.3, 0.2], 10, 1.0, 10.0) == pytest.approx(1.0, abs=1e-12)


def test_entropy_boost():
    rows = eq.entropy_boost_demo([10, 50, 100])
    for r in rows:
        assert r.holds
        assert r.entropy_rate >= r.n - 2
    flat = eq.entropy_boost_source([3.0], [0.0], [5.0])
    assert flat[0].entropy == pytest.approx(3.0)
    with pytest.raises(ValidationError):
        eq.entropy_boost_source([1.0], [1.0], [1.0])
