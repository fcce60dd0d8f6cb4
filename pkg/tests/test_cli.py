import json
from pathlib import Path

import pytest

from qcapacity.cli import main

FIX = Path(__file__).resolve().parents[1] / "fixtures"


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_ideal_prints_capacity(capsys):
    code, out = run(capsys, "ideal", "4", "2")
    assert code == 0
    assert out.out.splitlines()[0] == "2.0000"


def test_json_report_has_schema(capsys):
    code, out = run(capsys, "--json", "ideal", "2", "4")
    rep = json.loads(out.out)
    assert rep["schema"] == 1 and rep["result"]["delta_lower"] == 0.5 and rep["ok"]


def test_flags_before_and_after_command(capsys):
    _, a = run(capsys, "--seed", "5", "--json", "ideal", "2", "2")
    _, b = run(capsys, "ideal", "2", "2", "--seed", "5", "--json")
    assert json.loads(a.out)["seed"] == 5
    assert a.out == b.out


def test_fidelity_pinch(capsys):
    code, out = run(capsys, "--restarts", "8", "--samples", "2000", "fidelity", str(FIX / "pinch_d2.json"))
    assert code == 0
    assert "channel_fidelity = 0.5" in out.out


def test_fidelity_identity_and_depolarizing(capsys):
    _, out = run(capsys, "--restarts", "8", "--samples", "2000", "--json", "fidelity", str(FIX / "identity_qubit.json"))
    rep = json.loads(out.out)["result"]
    for key in ("channel_fidelity", "average_fidelity_closed"):
        assert rep[key] == pytest.approx(1)
    assert rep["min_fidelity"]["value"] == pytest.approx(1)
    assert rep["inf_entanglement_fidelity"]["value"] == pytest.approx(1)
    _, out = run(capsys, "--restarts", "8", "--samples", "2000", "--json", "fidelity",
                 str(FIX / "depolarizing_full_qubit.json"))
    assert json.loads(out.out)["result"]["channel_fidelity"] == pytest.approx(0.25)


def test_bounds_on_depolarizing(capsys):
    code, out = run(capsys, "--restarts", "16", "--json", "bounds", str(FIX / "depolarizing_full_qubit.json"))
    rep = json.loads(out.out)["result"]
    assert code == 0
    assert rep["q_theta"]["value"] == pytest.approx(0, abs=2e-3)
    assert rep["hashing"]["table"][0]["raw"] == 1


def test_chain_passes_on_pinch(capsys):
    code, out = run(capsys, "--restarts", "16", "--json", "chain", str(FIX / "pinch_d2.json"))
    assert code == 0 and json.loads(out.out)["result"]["passed"]


def test_sequences_fixture(capsys):
    code, out = run(capsys, "--json", "sequences", str(FIX / "sequences_demo.json"))
    rep = json.loads(out.out)["result"]
    assert code == 0
    assert rep["extend"]["failures"] == 0
    assert min(r["delta"] for r in rep["counterexample"]) >= 0.49


def test_verify_is_byte_identical(capsys):
    _, a = run(capsys, "--json", "verify", "norms", "--seed", "7")
    _, b = run(capsys, "--json", "verify", "norms", "--seed", "7")
    assert a.out == b.out
    assert json.loads(a.out)["ok"]


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "fidelity", str(bad))[0] == 2
    assert run(capsys, "fidelity", str(tmp_path / "missing.json"))[0] == 2
    leaky = tmp_path / "leaky.json"
    leaky.write_text(json.dumps({"dim_in": 1, "dim_out": 1, "kraus": [[[[0.5, 0.0]]]]}))
    code, out = run(capsys, "fidelity", str(leaky))
    assert code == 3 and "sum K*K" in out.err
    assert run(capsys, "--restarts", "0", "ideal", "2", "2")[0] == 3
    nogap = tmp_path / "nogap.json"
    seq = {"rule": "poly", "params": {"power": 1}, "prefix_len": 100}
    nogap.write_text(json.dumps({"extend": {"given_n": seq, "given_m": seq, "target_n": seq, "target_m": seq}}))
    assert run(capsys, "sequences", str(nogap))[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
