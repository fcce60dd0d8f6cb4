import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcapacity import sequences as sq
from qcapacity.errors import ValidationError


def square_source(length=200):
    big = [mu * mu for mu in range(1, length + 1)]
    return sq.RatePair(big, big)


def linear_target(length, rate):
    n = list(range(1, length + 1))
    return sq.RatePair(n, [math.floor(rate * v) for v in n])


def test_generate_sequence_rules():
    assert sq.generate_sequence({"rule": "poly", "params": {"power": 2}, "prefix_len": 4}) == [1, 4, 9, 16]
    assert sq.generate_sequence({"rule": "poly", "params": {"coeff": 0.8, "power": 1}, "prefix_len": 5}) == [0, 1, 2, 3, 4]
    assert sq.generate_sequence({"rule": "exp", "params": {"base": 3}, "prefix_len": 3}) == [3, 9, 27]
    assert sq.generate_sequence({"rule": "superexp", "params": {"base": 2, "power": 2}, "prefix_len": 3}) == [2, 16, 512]
    assert sq.generate_sequence({"rule": "explicit", "params": {"values": [5, 7]}}) == [5, 7]
    with pytest.raises(ValidationError):
        sq.generate_sequence({"rule": "fibonacci", "prefix_len": 3})
    with pytest.raises(ValidationError):
        sq.generate_sequence({"rule": "poly", "prefix_len": 0})


def test_growth_verdicts():
    assert sq.is_subexponential([mu * mu for mu in range(1, 101)]).subexponential
    v = sq.is_subexponential([2**mu for mu in range(1, 30)])
    assert not v.subexponential and not v.superexponential
    s = sq.is_subexponential([2 ** (mu * mu) for mu in range(1, 30)])
    assert s.superexponential and not s.subexponential


def test_index_map_examples():
    squares = [mu * mu for mu in range(1, 50)]
    assert sq.index_map(10, squares).mu == 3
    assert sq.index_map(16, squares).mu == 4
    r = sq.index_map(0, squares)
    assert r.vacuous and r.mu == 0


@given(st.lists(st.integers(1, 10**6), min_size=2, max_size=30, unique=True), st.integers(1, 10**6))
def test_index_map_sandwich(values, n):
    seq = sorted(values)
    r = sq.index_map(n, seq)
    if r.vacuous:
        assert n < seq[0]
    else:
        assert seq[r.mu - 1] <= n
        if not r.beyond_prefix:
            assert n < seq[r.mu]


def test_ideal_delta_properties():
    d = sq.ideal_delta()
    assert d(4, 2) == 0 and d(2, 3) == pytest.approx(0.5)
    assert d.grid_violations() == []


def test_declared_properties_are_checked():
    with pytest.raises(ValidationError):
        sq.DeltaFunction(lambda n, m: float(n), monotone=True)


def test_extend_coding_polynomial_source():
    tr = sq.extend_coding(sq.ideal_delta(), square_source(), linear_target(2000, 0.8))
    assert tr.passed
    assert tr.burn_in is not None
    assert all(e.chain_ok for e in tr.entries)
    late = [e for e in tr.entries if e.nu >= tr.burn_in]
    assert all(e.certified for e in late)


def test_extend_coding_rejects_without_gap():
    with pytest.raises(ValidationError, match="rate gap"):
        sq.extend_coding(sq.ideal_delta(), square_source(), linear_target(2000, 1.0))


def test_extend_coding_superexponential_source_reports_factor():
    big = [2 ** (mu * mu) for mu in range(1, 6)]
    tr = sq.extend_coding(sq.ideal_delta(), sq.RatePair(big, big), linear_target(2000, 0.5), window=200)
    bad = [e for e in tr.entries if not e.certified and e.mu > 0]
    assert not tr.passed
    assert bad and {e.failing_factor for e in bad} <= {"N_{mu+1}/N_mu", "m/n", "n/N_{mu+1}", "N_mu/M_mu", "product",
                                                         "index outside prefix"}


def test_counterexample_delta_small_cases():
    big, eps = sq.demo_sequences(3)
    delta = sq.counterexample_delta(big, eps)
    assert delta(2, 2) == pytest.approx(eps[0])
    assert delta(16, 16) == pytest.approx(eps[1])
    assert delta(1, 1) == math.inf
    assert delta(5, 0) == 0.0
    # m=3 <= 2+2 <= 5 uses two copies of the smallest block
    assert delta(5, 3) == pytest.approx(2 * eps[0])


def test_counterexample_demo_rows():
    for row in sq.counterexample_demo(range(3, 9)):
        assert row.delta >= 0.49
        assert row.log2_rate <= -row.mu
        assert row.delta >= row.lower_bound - 1e-12
        assert row.sporadic_delta < 2.0 ** -row.mu


@given(st.integers(1, 60), st.integers(1, 60), st.integers(1, 60), st.integers(1, 60))
def test_counterexample_subadditive(n1, n2, m1, m2):
    big, eps = sq.demo_sequences(3)
    delta = sq.counterexample_delta(big, eps)
    assert delta(n1 + n2, m1 + m2) <= delta(n1, m1) + delta(n2, m2) + 1e-12


def test_counterexample_input_checks():
    with pytest.raises(ValidationError):
        sq.counterexample_delta([2, 2], [0.1, 0.1])
    with pytest.raises(ValidationError):
        sq.counterexample_delta([2, 4], [0.1, 0.2])


def test_rate_pair_validation():
    with pytest.raises(ValidationError):
        sq.RatePair([1, 2], [1])
    assert sq.RatePair([2, 4], [1, 1]).rates() == [0.5, 0.25]
