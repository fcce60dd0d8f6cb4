import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcapacity import channels as ch
from qcapacity import jsonio
from qcapacity import operators as ops
from qcapacity.errors import DimensionError, ValidationError

seeds = st.integers(0, 2**32 - 1)


def random_ch(seed, din=2, dout=2, rank=2):
    return ch.random_channel(din, dout, rank, np.random.default_rng(seed))


def test_channel_rejects_non_trace_preserving():
    with pytest.raises(ValidationError, match=r"sum K\*K - 1"):
        ch.Channel([np.diag([1.0, 0.5])])


def test_identity_choi_is_unnormalised_omega():
    j = ch.identity_channel(2).choi()
    omega = ops.maximally_entangled(2) * np.sqrt(2)
    assert np.allclose(j, np.outer(omega, omega.conj()))


def test_transposition_choi_is_flip():
    assert np.allclose(ch.transposition_map(3).choi, ops.flip_operator(3))
    x = np.arange(9).reshape(3, 3) + 1j
    assert np.allclose(ch.transposition_map(3)(x), x.T)


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_choi_kraus_roundtrip(seed, din, dout):
    rng = np.random.default_rng(seed)
    rank = -(-din // dout) + 1
    t = ch.random_channel(din, dout, rank, rng)
    rho = ops.random_density(din, rng)
    back = ch.channel_from_choi(t.choi(), din, dout)
    assert np.allclose(back(rho), t(rho), atol=1e-9)
    assert back.trace_residual() < 1e-9


@given(seeds)
def test_channel_output_is_state(seed):
    rng = np.random.default_rng(seed)
    t = ch.random_channel(3, 2, 3, rng)
    out = t(ops.random_density(3, rng))
    ops.density_operator(out)


@given(seeds)
def test_superoperator_matches_kraus_action(seed):
    rng = np.random.default_rng(seed)
    t = random_ch(seed, 3, 3, 2)
    x = ops.random_matrix(3, 3, rng)
    assert np.allclose(t.to_superoperator()(x), t(x))
    s = t.to_superoperator()
    again = ch.Superoperator.from_natural(s.natural(), 3, 3)
    assert np.allclose(again.choi, s.choi)


@given(seeds)
def test_composition_and_tensor(seed):
    rng = np.random.default_rng(seed)
    a, b = random_ch(seed), random_ch(seed + 1)
    rho = ops.random_density(2, rng)
    assert np.allclose(ch.compose(a, b)(rho), a(b(rho)))
    sig = ops.random_density(2, rng)
    assert np.allclose(ch.tensor(a, b)(np.kron(rho, sig)), np.kron(a(rho), b(sig)))
    s = ch.compose_super(a.to_superoperator(), b.to_superoperator())
    assert np.allclose(s.choi, ch.compose(a, b).choi())


def test_compose_rejects_mismatched_dims():
    with pytest.raises(DimensionError):
        ch.compose(ch.identity_channel(2), ch.identity_channel(3))


@pytest.mark.parametrize("m,n", [(2, 3), (2, 4), (4, 4), (1, 3)])
def test_embed_then_restrict_is_identity(m, n):
    t = ch.compose(ch.ideal_restrict_decoder(n, m), ch.ideal_embed_encoder(m, n))
    assert np.allclose(t.choi(), ch.identity_channel(m).choi(), atol=1e-12)


def test_restrict_sends_outside_to_reference():
    dec = ch.ideal_restrict_decoder(3, 2)
    out = dec(ops.projector(ops.basis_vector(3, 2)))
    assert np.isclose(np.trace(out), 1)


def test_depolarizing_limits():
    assert np.allclose(ch.depolarizing_channel(2, 1.0)(np.diag([1.0, 0.0])), np.eye(2) / 2)
    assert np.allclose(ch.depolarizing_channel(3, 0.0).choi(), ch.identity_channel(3).choi())
    with pytest.raises(ValidationError):
        ch.depolarizing_channel(2, 1.5)


def test_pinch_keeps_diagonal():
    t = ch.pinch_channel(3)
    rho = np.full((3, 3), 1 / 3)
    out = t(rho)
    assert np.isclose(out[0, 0], 1 / 3)
    assert np.isclose(out[0, 1], 0)
    assert np.isclose(out[1, 2], 1 / 3)


@given(seeds, st.integers(2, 3), st.integers(0, 2))
def test_homomorphic_decoder_inverts_isometric_encoder(seed, m, extra):
    rng = np.random.default_rng(seed)
    n = m + extra
    v = ops.haar_isometry(n, m, rng)
    enc = ch.isometric_encoder(v)
    dec = ch.homomorphic_decoder(v, ops.random_density(m, rng))
    assert np.allclose(ch.compose(dec, enc).choi(), ch.identity_channel(m).choi(), atol=1e-10)


def test_random_channel_needs_enough_kraus():
    with pytest.raises(DimensionError):
        ch.random_channel(4, 2, 1, np.random.default_rng(0))


def test_coding_scheme_dimension_check():
    scheme = ch.CodingScheme(ch.ideal_embed_encoder(2, 4), ch.ideal_restrict_decoder(4, 2), 2, 2)
    scheme.check_chain(ch.identity_channel(2))
    with pytest.raises(DimensionError):
        scheme.check_chain(ch.identity_channel(3))
    corrected = scheme.corrected(ch.identity_channel(2))
    assert np.allclose(corrected.choi(), ch.identity_channel(2).choi())


def test_instrument_must_sum_to_channel():
    p0 = ops.projector(ops.basis_vector(2, 0))
    p1 = ops.projector(ops.basis_vector(2, 1))
    inst = ch.Instrument([ch.CPMap([p0]), ch.CPMap([p1])])
    assert ch.branch_weight(inst, 1, np.eye(2) / 2) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        ch.Instrument([ch.CPMap([p0])])


def test_json_roundtrip(tmp_path):
    t = ch.depolarizing_channel(2, 0.3)
    path = tmp_path / "t.json"
    jsonio.dump_channel(t, path)
    back = jsonio.load_channel(path)
    assert np.allclose(back.choi(), t.choi())
    s = ch.transposition_map(2)
    again = jsonio.superoperator_from_dict(json.loads(json.dumps(jsonio.superoperator_to_dict(s))))
    assert np.allclose(again.choi, s.choi)


def test_json_parse_tolerance():
    good = {"dim_in": 1, "dim_out": 1, "kraus": [[[[1 + 2e-7, 0.0]]]]}
    jsonio.channel_from_dict(good)
    bad = {"dim_in": 1, "dim_out": 1, "kraus": [[[[1.001, 0.0]]]]}
    with pytest.raises(ValidationError, match=r"sum K\*K - 1"):
        jsonio.channel_from_dict(bad)
    with pytest.raises(DimensionError):
        jsonio.channel_from_dict({"dim_in": 2, "dim_out": 2, "kraus": [[[[1, 0]]]]})


def test_fixture_files_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "fixtures"
    for name in ("identity_qubit", "pinch_d2", "pinch_d4", "depolarizing_full_qubit", "depolarizing_0.1_qubit"):
        t = jsonio.load_channel(root / f"{name}.json")
        assert t.trace_residual() < 1e-9
    s = jsonio.superoperator_from_dict(json.loads((root / "transposition_d2.json").read_text()))
    assert np.allclose(s.choi, ops.flip_operator(2))
