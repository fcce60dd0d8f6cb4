"""JSON encoding of channels and superoperators.

Complex entries are ``[re, im]`` pairs; matrices are lists of rows::

    {"dim_in": 2, "dim_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]}
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channels import Channel, Superoperator
from .errors import DimensionError, ValidationError

#: Trace-preservation tolerance accepted from files.
PARSE_TP_TOL = 1e-6


def _encode_matrix(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a, dtype=complex)]


def _decode_matrix(rows, shape: tuple[int, int], what: str) -> np.ndarray:
    try:
        a = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: entries must be [re, im] number pairs") from exc
    if a.shape != (*shape, 2):
        raise DimensionError(f"{what}: expected shape {shape} of [re, im] pairs, got {a.shape[:-1] if a.ndim else a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def _dims(obj: dict) -> tuple[int, int]:
    try:
        din, dout = obj["dim_in"], obj["dim_out"]
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r}") from exc
    if not (isinstance(din, int) and isinstance(dout, int)) or din < 1 or dout < 1:
        raise ValidationError("dim_in and dim_out must be positive integers")
    return din, dout


def channel_to_dict(t: Channel) -> dict:
    return {"dim_in": t.dim_in, "dim_out": t.dim_out, "kraus": [_encode_matrix(k) for k in t.kraus]}


def channel_from_dict(obj: dict) -> Channel:
    """Parse a channel, rejecting trace-preservation residuals above 1e-6."""
    if not isinstance(obj, dict):
        raise ValidationError("channel JSON must be an object")
    din, dout = _dims(obj)
    kraus = obj.get("kraus")
    if not isinstance(kraus, list) or not kraus:
        raise ValidationError("'kraus' must be a non-empty list of matrices")
    mats = [_decode_matrix(k, (dout, din), f"kraus[{i}]") for i, k in enumerate(kraus)]
    return Channel(mats, atol=PARSE_TP_TOL)


def superoperator_to_dict(s: Superoperator) -> dict:
    return {"dim_in": s.dim_in, "dim_out": s.dim_out, "choi": _encode_matrix(s.choi)}


def superoperator_from_dict(obj: dict) -> Superoperator:
    if not isinstance(obj, dict):
        raise ValidationError("superoperator JSON must be an object")
    din, dout = _dims(obj)
    if "choi" not in obj:
        raise ValidationError("missing field 'choi'")
    n = din * dout
    return Superoperator(_decode_matrix(obj["choi"], (n, n), "choi"), din, dout)


def load_channel(path) -> Channel:
    """Read a channel file. Raises ``json.JSONDecodeError`` on malformed JSON."""
    return channel_from_dict(json.loads(Path(path).read_text()))


def dump_channel(t: Channel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(t), indent=1) + "\n")
