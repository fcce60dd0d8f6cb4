"""Command-line interface: ``qcapacity <command> [flags]``.

Exit codes: 0 success, 2 malformed input, 3 contract violation, 4 failed check.
Reports are JSON objects with a top-level ``"schema": 1`` field; every number
is accompanied by the seed, restarts, samples or ancilla needed to reproduce it.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, channels, equivalence, fidelity, sequences, supnorms
from . import operators as ops
from .errors import QCapacityError
from .jsonio import load_channel

SCHEMA = 1
EXIT_OK, EXIT_PARSE, EXIT_CONTRACT, EXIT_FAILED = 0, 2, 3, 4
HASHING_DELTAS = (0.0, 0.005, 0.01, 0.02, 0.05)


class ParseFailure(Exception):
    pass


def _vector(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).reshape(-1)]


def _matrix(a) -> list:
    return [_vector(row) for row in np.asarray(a, dtype=complex)]


def _finite(x: float):
    """JSON has no infinities; encode them as strings."""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseFailure(f"{path}: {exc.strerror}") from exc


def _load_channel(path: str) -> channels.Channel:
    try:
        return load_channel(path)
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseFailure(f"{path}: {exc.strerror}") from exc


# ---------------------------------------------------------------------------
# Commands; each returns (report, ok)
# ---------------------------------------------------------------------------


def cmd_fidelity(args):
    t = _load_channel(args.channel)
    mc, se = fidelity.average_fidelity_mc(t, args.samples, args.seed)
    mf = fidelity.min_fidelity(t, args.restarts, args.seed)
    inf = fidelity.inf_entanglement_fidelity(t, args.restarts, args.seed, warm_start=mf.witness)
    report = {
        "channel_fidelity": fidelity.channel_fidelity(t),
        "average_fidelity_closed": fidelity.average_fidelity_closed(t),
        "average_fidelity_mc": {"mean": mc, "stderr": se, "samples": args.samples, "seed": args.seed},
        "min_fidelity": {"value": mf.value, "witness": _vector(mf.witness), "direction": "upper",
                         "restarts": args.restarts, "seed": args.seed},
        "inf_entanglement_fidelity": {"value": inf.value, "witness": _matrix(inf.witness), "direction": "upper",
                                      "restarts": args.restarts, "seed": args.seed, "ancilla_dim": t.dim_in},
    }
    return report, True


def cmd_chain(args):
    t = _load_channel(args.channel)
    config = equivalence.ChainConfig(args.restarts, args.restarts, args.seed, args.tolerance)
    rep = equivalence.equivalence_chain(t, config)
    return rep.to_dict(), rep.passed


def cmd_bounds(args):
    t = _load_channel(args.channel)
    qt = bounds.partial_transposition_bound(t, args.restarts, args.seed)
    ci = bounds.max_coherent_information(t, args.restarts, args.seed)
    report = {
        "q_theta": qt.to_dict(),
        "max_coherent_information": {"value": ci.value, "blocks": ci.blocks, "restarts": ci.restarts,
                                     "seed": ci.seed, "direction": "lower"},
    }
    d = t.dim_in
    if t.dim_out == d and bounds.is_prime(d):
        err = channels.difference(t.to_superoperator(), channels.identity_super(d))
        est = supnorms.cb_norm(err, d, args.restarts, args.seed)
        deltas = list(HASHING_DELTAS)
        if est.value < 1 / (2 * math.e):
            deltas.append(est.value)
        report["hashing"] = {
            "d": d, "N": 1, "cb_distance": {**est.to_dict(), "direction": "lower"},
            "table": bounds.hashing_table(d, 1, deltas),
        }
    return report, True


def cmd_ideal(args):
    n, m = args.n, args.m
    report = {
        "capacity": bounds.ideal_capacity(n, m),
        "delta_lower": supnorms.ideal_delta_lower(n, m),
        "unit_conversion": dict(zip(("lhs", "rhs", "consistent"), bounds.unit_conversion_check(n, n, m))),
    }
    return report, True


def _delta_from_spec(spec) -> sequences.DeltaFunction:
    spec = spec or {"kind": "ideal"}
    if spec.get("kind") == "ideal":
        return sequences.ideal_delta(int(spec.get("d", 2)))
    raise QCapacityError(f"unknown error-function kind {spec.get('kind')!r}")


def cmd_sequences(args):
    spec = _read_json(args.spec)
    if not isinstance(spec, dict) or not ({"extend", "counterexample"} & spec.keys()):
        raise QCapacityError("sequence file needs an 'extend' and/or 'counterexample' section")
    report, ok = {}, True
    if "extend" in spec:
        ex = spec["extend"]
        try:
            given = sequences.RatePair(sequences.generate_sequence(ex["given_n"]),
                                       sequences.generate_sequence(ex["given_m"]))
            target = sequences.RatePair(sequences.generate_sequence(ex["target_n"]),
                                        sequences.generate_sequence(ex["target_m"]))
        except KeyError as exc:
            raise QCapacityError(f"extend section is missing {exc.args[0]!r}") from exc
        tr = sequences.extend_coding(_delta_from_spec(ex.get("delta")), given, target, ex.get("window"))
        report["extend"] = {
            **tr.summary(),
            "given_growth": None if tr.given_growth is None else {
                "subexponential": tr.given_growth.subexponential,
                "superexponential": tr.given_growth.superexponential,
                "window": tr.given_growth.window, "tolerance": tr.given_growth.tolerance,
            },
            "failed_entries": [{"nu": e.nu, "mu": e.mu, "failing_factor": e.failing_factor} for e in tr.failures],
        }
        ok &= tr.passed
    if "counterexample" in spec:
        rows = sequences.counterexample_demo(spec["counterexample"].get("mu", list(range(3, 9))))
        report["counterexample"] = [
            {"mu": r.mu, "log2_n": math.log2(r.n), "log2_m": math.log2(r.m), "delta": _finite(r.delta),
             "lower_bound": r.lower_bound, "log2_rate": r.log2_rate, "sporadic_delta": r.sporadic_delta}
            for r in rows
        ]
    return report, ok


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------


def _suite_channels(seed, restarts, tol):
    rng = np.random.default_rng(seed)
    out = []
    t = channels.random_channel(3, 3, 3, rng)
    rho = ops.random_density(3, rng)
    out.append(("choi_roundtrip", float(np.max(np.abs(channels.channel_from_choi(t.choi(), 3, 3)(rho) - t(rho))))))
    out.append(("trace_preserving", float(t.trace_residual())))
    ident = channels.compose(channels.ideal_restrict_decoder(4, 2), channels.ideal_embed_encoder(2, 4))
    out.append(("embed_restrict_identity", float(np.max(np.abs(ident.choi() - channels.identity_channel(2).choi())))))
    return [(n, v <= tol, v) for n, v in out]


def _suite_fidelity(seed, restarts, tol):
    rng = np.random.default_rng(seed)
    t = channels.random_channel(2, 2, 2, rng)
    a = fidelity.entanglement_fidelity(ops.maximally_mixed(2), t)
    b = fidelity.channel_fidelity(t)
    mf = fidelity.min_fidelity(t, restarts, seed)
    avg = fidelity.average_fidelity_closed(t)
    return [
        ("fc_matches_fe_of_mixed", abs(a - b) <= tol, abs(a - b)),
        ("min_below_average", mf.value <= avg + tol, mf.value - avg),
    ]


def _suite_norms(seed, restarts, tol):
    rng = np.random.default_rng(seed)
    theta = supnorms.cb_norm(channels.transposition_map(2), 2, restarts, seed).value
    ch = supnorms.cb_norm(channels.random_channel(2, 2, 2, rng), 2, restarts, seed).value
    return [
        ("cb_transposition_2", abs(theta - 2) <= max(tol, 2e-3), theta),
        ("cb_channel_is_one", abs(ch - 1) <= tol, ch),
    ]


def _suite_bounds(seed, restarts, tol):
    qi = bounds.partial_transposition_bound(channels.identity_channel(2), restarts, seed).value
    ci = bounds.max_coherent_information(channels.identity_channel(2), min(restarts, 16), seed).value
    h = bounds.hashing_capacity_bound(2, 1, 0.0)
    return [
        ("q_theta_identity", abs(qi - 1) <= max(tol, 2e-3), qi),
        ("coherent_info_identity", abs(ci - 1) <= tol, ci),
        ("hashing_noiseless", abs(h - 1) <= tol, h),
    ]


def _suite_sequences(seed, restarts, tol):
    rows = sequences.counterexample_demo([3, 4])
    big = [mu * mu for mu in range(1, 101)]
    tr = sequences.extend_coding(sequences.ideal_delta(), sequences.RatePair(big, big),
                                 sequences.RatePair(range(1, 1001), [int(0.8 * v) for v in range(1, 1001)]))
    return [
        ("counterexample_stays_large", all(r.delta >= 0.49 for r in rows), min(r.delta for r in rows)),
        ("extension_certified", tr.passed, len(tr.failures)),
    ]


def _suite_equivalence(seed, restarts, tol):
    rng = np.random.default_rng(seed)
    rep = equivalence.equivalence_chain(channels.random_channel(2, 2, 2, rng),
                                        equivalence.ChainConfig(min(restarts, 16), min(restarts, 32), seed, tol))
    pa = equivalence.pinch_analysis(4)
    return [
        ("chain_random_qubit", rep.passed, rep.recompute()),
        ("pinch_fc_closed_form", abs(pa.channel_fidelity - pa.closed_form) <= tol, pa.channel_fidelity),
    ]


SUITES = {
    "channels": _suite_channels,
    "fidelity": _suite_fidelity,
    "norms": _suite_norms,
    "bounds": _suite_bounds,
    "sequences": _suite_sequences,
    "equivalence": _suite_equivalence,
}


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = {}
    ok = True
    for name in names:
        checks = SUITES[name](args.seed, args.restarts, args.tolerance)
        results[name] = [
            {"check": c, "passed": bool(p), "value": _finite(v) if not isinstance(v, tuple) else list(v)}
            for c, p, v in checks
        ]
        ok &= all(p for _, p, _ in checks)
    return {"suites": results, "passed": bool(ok)}, ok


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _flags(suppress: bool) -> argparse.ArgumentParser:
    """Global flags; the subcommand copy suppresses defaults so flags before the subcommand survive."""
    def default(v):
        return argparse.SUPPRESS if suppress else v

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default(0))
    common.add_argument("--restarts", type=int, default=default(256))
    common.add_argument("--samples", type=int, default=default(100_000))
    common.add_argument("--tolerance", type=float, default=default(1e-6))
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json", default=default("text"),
                     help="compact JSON report")
    fmt.add_argument("--pretty", dest="format", action="store_const", const="pretty", default=default("text"),
                     help="indented JSON report")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _flags(True)
    p = argparse.ArgumentParser(prog="qcapacity", parents=[_flags(False)],
                                description="Fidelities, channel norms and capacity bounds.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("fidelity", cmd_fidelity), ("chain", cmd_chain), ("bounds", cmd_bounds)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("channel", help="channel JSON file")
        s.set_defaults(func=fn)
    s = sub.add_parser("ideal", parents=[common], help="capacity of id_n for simulating id_m")
    s.add_argument("n", type=int)
    s.add_argument("m", type=int)
    s.set_defaults(func=cmd_ideal)
    s = sub.add_parser("sequences", parents=[common])
    s.add_argument("spec", help="sequence JSON file")
    s.set_defaults(func=cmd_sequences)
    s = sub.add_parser("verify", parents=[common])
    s.add_argument("suite", choices=[*SUITES, "all"])
    s.set_defaults(func=cmd_verify)
    return p


def _text(report: dict, prefix: str = "") -> list[str]:
    lines = []
    for k, v in report.items():
        if isinstance(v, dict):
            lines += _text(v, f"{prefix}{k}.")
        elif isinstance(v, float):
            lines.append(f"{prefix}{k} = {v:.10g}")
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            for i, row in enumerate(v):
                lines += _text(row, f"{prefix}{k}[{i}].")
        elif isinstance(v, list):
            continue
        else:
            lines.append(f"{prefix}{k} = {v}")
    return lines


def _check_flags(args) -> None:
    if args.restarts < 1 or args.samples < 2 or not args.tolerance > 0 or args.seed < 0:
        raise QCapacityError("need --restarts >= 1, --samples >= 2, --tolerance > 0 and --seed >= 0")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_flags(args)
        report, ok = args.func(args)
    except ParseFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except QCapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    meta = {"schema": SCHEMA, "command": args.command, "seed": args.seed, "restarts": args.restarts,
            "samples": args.samples, "tolerance": args.tolerance}
    full = {**meta, "result": report, "ok": bool(ok)}
    if args.format == "json":
        print(json.dumps(full, sort_keys=True, allow_nan=False))
    elif args.format == "pretty":
        print(json.dumps(full, sort_keys=True, indent=2, allow_nan=False))
    else:
        if args.command == "ideal":
            print(f"{report['capacity']:.4f}")
        print("\n".join(_text(report)))
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
