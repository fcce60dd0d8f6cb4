"""Norms of superoperators: the 1->1 norm and the cb (diamond) norm.

Both are suprema of ||L~(X)||_1 over the trace-norm unit ball, with
L~ = L (x) id_a. The ball is the convex hull of rank-one operators
|phi><psi| with unit phi and psi, and a convex function attains its maximum
at an extreme point, so it suffices to search rank-one inputs. This
reduction is what the estimator relies on.

The search is a see-saw: for fixed (phi, psi) let U be the polar unitary of
Y = L~(|phi><psi|), so that ||Y||_1 = Re tr U*Y; then replace (phi, psi) by the
top singular pair of the adjoint image L~*(U). Each step cannot decrease the
objective. Every reported value is recomputed at its witness and is therefore
a certified lower bound on the norm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .channels import (
    CodingScheme,
    CPMap,
    Superoperator,
    compose,
    difference,
    identity_super,
    tensor_power,
)
from .errors import DimensionError, ValidationError

DEFAULT_RESTARTS = 256
ASCENT_TOL = 1e-8
MAX_SWEEPS = 2000
_BATCH = 256


@dataclass(frozen=True)
class NormEstimate:
    """Certified lower bound ``value = ||(L (x) id_a)(|phi><psi|)||_1``."""

    value: float
    phi: np.ndarray
    psi: np.ndarray
    ancilla_dim: int
    certified: bool
    restarts: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "ancilla_dim": self.ancilla_dim,
            "certified": self.certified,
            "restarts": self.restarts,
            "seed": self.seed,
        }


def _as_super(op) -> Superoperator:
    if isinstance(op, Superoperator):
        return op
    if isinstance(op, CPMap):
        return op.to_superoperator()
    raise TypeError(f"expected a Superoperator or CPMap, got {type(op).__name__}")


def objective(op, phi, psi, ancilla_dim: int = 1) -> float:
    """||(L (x) id_a)(|phi><psi|)||_1 for vectors on C^dim_in (x) C^a."""
    s = _as_super(op)
    phi = np.asarray(phi, dtype=complex).reshape(1, s.dim_in, ancilla_dim)
    psi = np.asarray(psi, dtype=complex).reshape(1, s.dim_in, ancilla_dim)
    y = _forward(s.choi4, phi, psi)
    return float(np.sum(np.linalg.svd(y[0], compute_uv=False)))


def _forward(j4: np.ndarray, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Batched Y = (L (x) id)(|phi><psi|) as ``(R, dout*a, dout*a)`` matrices."""
    r, _, a = phi.shape
    dout = j4.shape[0]
    y = np.einsum("aibj,rip,rjq->rapbq", j4, phi, psi.conj(), optimize=True)
    return y.reshape(r, dout * a, dout * a)


def _adjoint(j4: np.ndarray, u: np.ndarray, a: int) -> np.ndarray:
    """Batched Hilbert-Schmidt adjoint (L (x) id)*(U) as ``(R, din*a, din*a)``."""
    r = u.shape[0]
    dout, din = j4.shape[0], j4.shape[1]
    u4 = u.reshape(r, dout, a, dout, a)
    b = np.einsum("rapbq,aibj->ripjq", u4, j4.conj(), optimize=True)
    return b.reshape(r, din * a, din * a)


def _seesaw(j4: np.ndarray, phi: np.ndarray, psi: np.ndarray, tol: float):
    """Run the see-saw on a batch of starts; returns final (values, phi, psi)."""
    r, din, a = phi.shape
    phi = phi / np.linalg.norm(phi.reshape(r, -1), axis=1)[:, None, None]
    psi = psi / np.linalg.norm(psi.reshape(r, -1), axis=1)[:, None, None]
    prev = np.full(r, -np.inf)
    active = np.ones(r, dtype=bool)
    for _ in range(MAX_SWEEPS):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        y = _forward(j4, phi[idx], psi[idx])
        w, s, vh = np.linalg.svd(y)
        val = s.sum(axis=1)
        done = val - prev[idx] <= tol * np.maximum(1.0, val)
        prev[idx] = val
        active[idx[done]] = False
        step = idx[~done]
        if step.size == 0:
            break
        keep = ~done
        u = w[keep] @ vh[keep]
        b = _adjoint(j4, u, a)
        bw, _, bvh = np.linalg.svd(b)
        phi[step] = bw[:, :, 0].reshape(-1, din, a)
        psi[step] = bvh[:, 0, :].conj().reshape(-1, din, a)
    y = _forward(j4, phi, psi)
    vals = np.linalg.svd(y, compute_uv=False).sum(axis=1)
    return vals, phi, psi


def _basis_starts(din: int, a: int) -> np.ndarray:
    starts = np.zeros((din, din, a), dtype=complex)
    for nu in range(din):
        starts[nu, nu, 0] = 1.0
    return starts


def _level(j4, a, restarts, rng, seeded: list[np.ndarray], tol):
    """Best see-saw result at ancilla dimension ``a``."""
    din = j4.shape[1]
    phis = [_basis_starts(din, a)]
    psis = [_basis_starts(din, a)]
    for w_phi, w_psi in seeded:
        phis.append(w_phi.reshape(1, din, a))
        psis.append(w_psi.reshape(1, din, a))
    n_same = restarts // 4
    g_phi = ops.haar_vectors(restarts, din * a, rng).reshape(restarts, din, a)
    g_psi = ops.haar_vectors(restarts, din * a, rng).reshape(restarts, din, a)
    g_psi[:n_same] = g_phi[:n_same]
    phis.append(g_phi)
    psis.append(g_psi)
    phi_all = np.concatenate(phis)
    psi_all = np.concatenate(psis)
    best = (-np.inf, None, None)
    for lo in range(0, phi_all.shape[0], _BATCH):
        vals, ph, ps = _seesaw(j4, phi_all[lo:lo + _BATCH].copy(), psi_all[lo:lo + _BATCH].copy(), tol)
        i = int(np.argmax(vals))
        if vals[i] > best[0]:
            best = (float(vals[i]), ph[i].copy(), ps[i].copy())
    return best


def _lift(v: np.ndarray, a_old: int, a_new: int) -> np.ndarray:
    """v on C^din (x) C^a_old  ->  same vector on C^din (x) C^a_new (padding the ancilla)."""
    din = v.size // a_old
    out = np.zeros((din, a_new), dtype=complex)
    out[:, :a_old] = v.reshape(din, a_old)
    return out.reshape(-1)


def cb_norm(op, ancilla_dim: int | None = None, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
            seeds=(), tol: float = ASCENT_TOL) -> NormEstimate:
    """Lower bound on ||L||_cb from ||L (x) id_a||_{1->1} with ``a = ancilla_dim``.

    The search climbs the ladder a' = 1, 2, ..., a and seeds every level with
    the best witness of the previous one, so the estimate is nondecreasing in
    ``ancilla_dim`` for a fixed seed. ``seeds`` are extra (phi, psi) starting
    pairs on C^dim_in used at level 1. Defaults to ``a = dim_in``.
    """
    s = _as_super(op)
    a = s.dim_in if ancilla_dim is None else int(ancilla_dim)
    if a < 1:
        raise ValidationError("ancilla dimension must be at least 1")
    if restarts < 1:
        raise ValidationError("restarts must be a positive integer")
    j4 = np.ascontiguousarray(s.choi4)
    streams = np.random.SeedSequence(seed).spawn(a)
    extra = [(np.asarray(p, dtype=complex).reshape(-1), np.asarray(q, dtype=complex).reshape(-1)) for p, q in seeds]
    for p, q in extra:
        if p.size != s.dim_in or q.size != s.dim_in:
            raise DimensionError("seed vectors must live on the input space")
    best_phi, best_psi = None, None
    for level in range(1, a + 1):
        rng = np.random.default_rng(streams[level - 1])
        if level == 1:
            seeded = extra
        else:
            seeded = [(_lift(best_phi, level - 1, level), _lift(best_psi, level - 1, level))]
        _, ph, ps = _level(j4, level, restarts, rng, seeded, tol)
        best_phi, best_psi = ph.reshape(-1), ps.reshape(-1)
    value = objective(s, best_phi, best_psi, a)
    return NormEstimate(value, best_phi, best_psi, a, True, restarts, seed)


def superop_norm(op, restarts: int = DEFAULT_RESTARTS, seed: int = 0, seeds=(), tol: float = ASCENT_TOL) -> NormEstimate:
    """Lower bound on the 1->1 norm sup ||L(X)||_1 over ||X||_1 <= 1."""
    return cb_norm(op, 1, restarts, seed, seeds, tol)


def ideal_delta_lower(n_dim: int, m_dim: int) -> float:
    """Exact lower bound on inf_{D,E} ||D id_n E - id_m||_cb: 0 if m <= n else 1 - n/m."""
    if n_dim < 1 or m_dim < 1:
        raise ValidationError("dimensions must be positive")
    return 0.0 if m_dim <= n_dim else 1.0 - n_dim / m_dim


def scheme_delta(t: CPMap, scheme: CodingScheme, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                 ancilla_dim: int | None = None) -> NormEstimate:
    """cb_norm(D o T^{(x)n} o E - id) at a given coding scheme.

    This is the simulation error of one particular (E, D), hence an upper
    bound on the infimum over schemes, itself estimated from below.
    """
    scheme.check_chain(t)
    corrected = compose(scheme.decoder, compose(tensor_power(t, scheme.block_uses), scheme.encoder))
    err = difference(corrected.to_superoperator(), identity_super(scheme.code_dim))
    return cb_norm(err, ancilla_dim, restarts, seed)
