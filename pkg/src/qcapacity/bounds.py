"""Capacity bounds and coding-side constructions.

Upper bounds: the partial-transposition quantity Q_Theta = ld ||T Theta||_cb.
Lower-bound ingredients: single-letter coherent information and the
graph-code hashing formulas. Coding constructions: isometric upgrade of an
encoder, collapse of a classically assisted scheme to its best branch, and
the Haar-averaging bridge between average and minimum fidelity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import operators as ops
from .channels import (
    Channel,
    CPMap,
    Instrument,
    compose,
    compose_super,
    tensor,
    transposition_map,
)
from .errors import DimensionError, ValidationError
from .fidelity import average_fidelity_mc, entanglement_fidelity
from .supnorms import DEFAULT_RESTARTS, NormEstimate, cb_norm

COHINF_RESTARTS = 128
NORMALISATION_TOL = 1e-9
_LOG_CLAMP = 1e-15


# ---------------------------------------------------------------------------
# Ideal channels
# ---------------------------------------------------------------------------


def ideal_capacity(n_dim: int, m_dim: int) -> float:
    """Q(id_n, id_m) = ld n / ld m."""
    if n_dim < 1 or m_dim < 2:
        raise ValidationError("need n_dim >= 1 and m_dim >= 2")
    return math.log2(n_dim) / math.log2(m_dim)


def unit_conversion_check(k_dim: int, n_dim: int, m_dim: int) -> tuple[float, float, bool]:
    """Compare Q(id_k, id_n) ld n with Q(id_k, id_m) ld m; both equal ld k."""
    lhs = ideal_capacity(k_dim, n_dim) * math.log2(n_dim)
    rhs = ideal_capacity(k_dim, m_dim) * math.log2(m_dim)
    return lhs, rhs, math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# Partial transposition bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransposeBound:
    value: float
    estimate: NormEstimate

    def to_dict(self) -> dict:
        return {"value": self.value, **{f"estimator_{k}": v for k, v in self.estimate.to_dict().items()}}


def partial_transposition_bound(t: CPMap, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                                ancilla_dim: int | None = None) -> TransposeBound:
    """ld of the cb-norm estimate of T o Theta (transposition on the input).

    The cb estimate is a lower bound, so this is a lower estimate of the
    (upper) capacity bound Q_Theta.
    """
    theta = transposition_map(t.dim_in)
    est = cb_norm(compose_super(t.to_superoperator(), theta), ancilla_dim, restarts, seed)
    return TransposeBound(math.log2(est.value), est)


# ---------------------------------------------------------------------------
# Coherent information
# ---------------------------------------------------------------------------


def _complementary(kraus: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Environment output tr(t_i rho t_j*) of a Stinespring dilation."""
    return np.einsum("iab,bc,jac->ij", kraus, rho, kraus.conj())


def coherent_information(rho, t: CPMap) -> float:
    """S(T(rho)) - S((T (x) id)(|psi><psi|)) with psi the purification of rho."""
    rho = ops.density_operator(rho)
    if rho.shape[0] != t.dim_in:
        raise DimensionError("state and channel dimensions differ")
    d = t.dim_in
    psi = ops.purify(rho)
    out = t(rho)
    joint = sum(np.outer(v, v.conj()) for v in (np.kron(k, np.eye(d)) @ psi for k in t.kraus))
    return ops._entropy_of_psd(out) - ops._entropy_of_psd(joint)


def _entropy_and_log(sigma: np.ndarray):
    evals, evecs = np.linalg.eigh((sigma + sigma.conj().T) / 2)
    evals = np.clip(evals, 0.0, None)
    log = np.log2(np.maximum(evals, _LOG_CLAMP))
    s = -float(np.sum(evals[evals > 0] * np.log2(evals[evals > 0])))
    return s, (evecs * log) @ evecs.conj().T


def _neg_cohinf(z: np.ndarray, kraus: np.ndarray, d: int):
    g = (z[: d * d] + 1j * z[d * d:]).reshape(d, d)
    gram = g.conj().T @ g
    tr = np.trace(gram).real
    rho = gram / tr
    s_out, log_out = _entropy_and_log(np.einsum("kab,bc,kdc->ad", kraus, rho, kraus.conj()))
    s_env, log_env = _entropy_and_log(_complementary(kraus, rho))
    val = s_out - s_env
    h = -np.einsum("kba,bc,kcd->ad", kraus.conj(), log_out, kraus)
    h = h + np.einsum("ji,jba,ibd->ad", log_env, kraus.conj(), kraus)
    h = h - np.trace(h @ rho).real * np.eye(d)
    m = h @ g.conj().T / tr
    grad = np.concatenate([2 * m.T.real.reshape(-1), -2 * m.T.imag.reshape(-1)])
    return -val, -grad


@dataclass(frozen=True)
class CoherentInfoResult:
    value: float
    rho: np.ndarray
    blocks: int
    restarts: int
    seed: int


def max_coherent_information(t: CPMap, restarts: int = COHINF_RESTARTS, seed: int = 0, blocks: int = 1) -> CoherentInfoResult:
    """Largest I_c(rho, T^{(x)blocks})/blocks found over states rho.

    rho = G*G / tr(G*G) with unconstrained complex G; multi-start L-BFGS with
    an analytic gradient. The value is recomputed at the returned state, so it
    is a lower bound on the maximum. ``blocks`` may be 1 or 2.
    """
    if blocks not in (1, 2):
        raise ValidationError("only one or two channel uses are supported")
    if restarts < 1:
        raise ValidationError("restarts must be a positive integer")
    tt = t if blocks == 1 else tensor(t, t)
    d = tt.dim_in
    kraus = tt.kraus_array
    rng = np.random.default_rng(seed)
    starts = [np.eye(d, dtype=complex)]
    starts += [ops.random_matrix(d, d, rng) for _ in range(restarts)]
    best_val, best_rho = -np.inf, None
    for g0 in starts:
        z0 = np.concatenate([g0.real.reshape(-1), g0.imag.reshape(-1)])
        res = minimize(_neg_cohinf, z0, args=(kraus, d), jac=True, method="L-BFGS-B",
                       options={"gtol": 1e-10, "ftol": 1e-14, "maxiter": 1000})
        g = (res.x[: d * d] + 1j * res.x[d * d:]).reshape(d, d)
        rho = g.conj().T @ g
        rho = (rho + rho.conj().T) / 2
        rho = rho / np.trace(rho).real
        if -res.fun > best_val:
            best_val, best_rho = -res.fun, rho
    value = coherent_information(best_rho, tt) / blocks
    return CoherentInfoResult(value, best_rho, blocks, restarts, seed)


# ---------------------------------------------------------------------------
# Isometric encodings and classical forward communication
# ---------------------------------------------------------------------------


def _polar_isometry(a: np.ndarray) -> np.ndarray:
    """Isometric factor U W* of the thin SVD a = U S W* (columns of a tall matrix)."""
    u, _, wh = np.linalg.svd(a, full_matrices=False)
    return u @ wh


def isometric_upgrade(rho, e: CPMap, t: CPMap) -> Channel:
    """Channel E~ with F_e(rho, T E~) >= F_e(rho, T E)^2.

    ``e`` maps C^eta -> C^kappa with tr E(rho) = 1, ``t`` maps back. The Kraus
    sets are rotated so that X_ij = tr(t_i e_j rho) becomes diagonal; the
    index k maximising X_kk^2 / tr(e_k rho e_k*) selects t = t_k. For
    eta <= kappa the result is V . V* with V the polar isometry of t*; for
    eta > kappa it is W* . W completed to a channel by the maximally mixed
    state on C^kappa, W the polar isometry of t.
    """
    rho = ops.density_operator(rho)
    eta, kappa = e.dim_in, e.dim_out
    if rho.shape[0] != eta or (t.dim_in, t.dim_out) != (kappa, eta):
        raise DimensionError("need rho on C^eta, E: C^eta -> C^kappa and T: C^kappa -> C^eta")
    norm = float(np.trace(e(rho)).real)
    if abs(norm - 1) > NORMALISATION_TOL:
        raise ValidationError(f"encoder is not normalised on rho: tr E(rho) = {norm!r}")
    tk, ek = t.kraus_array, e.kraus_array
    m = max(len(tk), len(ek))
    x = np.zeros((m, m), dtype=complex)
    x[: len(tk), : len(ek)] = np.einsum("iab,jbc,ca->ij", tk, ek, rho)
    a, dvals, b = np.linalg.svd(x)
    tk = np.concatenate([tk, np.zeros((m - len(tk), eta, kappa))])
    ek = np.concatenate([ek, np.zeros((m - len(ek), kappa, eta))])
    t_rot = np.einsum("ik,iab->kab", a.conj(), tk)
    e_rot = np.einsum("kj,jab->kab", b.conj(), ek)
    lam = np.einsum("kab,bc,kac->k", e_rot, rho, e_rot.conj()).real
    score = np.where(lam > 1e-14, dvals**2 / np.where(lam > 1e-14, lam, 1.0), -np.inf)
    sel = t_rot[int(np.argmax(score))]
    if eta <= kappa:
        v = _polar_isometry(sel.conj().T)
        return Channel([v])
    w = _polar_isometry(sel)
    q, _ = np.linalg.qr(np.hstack([w, np.eye(eta)]))
    comp = q[:, kappa:eta]
    kraus = [w.conj().T]
    for c in range(eta - kappa):
        for i in range(kappa):
            op = np.zeros((kappa, eta), dtype=complex)
            op[i, :] = comp[:, c].conj() / math.sqrt(kappa)
            kraus.append(op)
    return Channel(kraus)


@dataclass(frozen=True)
class BranchSelection:
    """Outcome of collapsing a classically assisted scheme onto one branch."""

    index: int
    weights: np.ndarray
    renormalised_fidelities: np.ndarray
    assisted_fidelity: float
    encoder: Channel
    decoder: Channel
    unassisted_fidelity: float

    @property
    def certified(self) -> bool:
        return self.unassisted_fidelity >= self.assisted_fidelity**2 - 1e-9


def best_branch(instrument: Instrument, decoders: Sequence[CPMap], t: CPMap, rho=None) -> BranchSelection:
    """Pick the branch mu with the largest renormalised fidelity and upgrade it.

    With e_l = tr E_l(rho) and F~_l = F_e(rho, D_l T E_l)/e_l, the branch
    mu = argmax F~ satisfies F~_mu >= sum_l F_e(rho, D_l T E_l). The encoder
    E_mu/e_mu is then replaced by an isometric upgrade, giving an unassisted
    scheme with F_e >= (assisted fidelity)^2. ``rho`` defaults to 1/d, where
    F_e is the channel fidelity.
    """
    if len(decoders) != len(instrument):
        raise ValidationError("need one decoder per instrument branch")
    d = instrument.branches[0].dim_in
    rho = ops.maximally_mixed(d) if rho is None else ops.density_operator(rho)
    weights = np.array([float(np.trace(b(rho)).real) for b in instrument.branches])
    if np.all(weights <= 1e-12):
        raise ValidationError("all branches have zero weight")
    chains = [compose(dec, compose(t, b)) for b, dec in zip(instrument.branches, decoders)]
    fids = np.array([entanglement_fidelity(rho, c) for c in chains])
    renorm = np.where(weights > 1e-12, fids / np.where(weights > 1e-12, weights, 1.0), -np.inf)
    mu = int(np.argmax(renorm))
    dec_t = compose(decoders[mu], t)
    enc = isometric_upgrade(rho, instrument.branches[mu].scaled(1 / weights[mu]), dec_t)
    final = entanglement_fidelity(rho, compose(dec_t, enc))
    decoder = decoders[mu] if isinstance(decoders[mu], Channel) else Channel(decoders[mu].kraus)
    return BranchSelection(mu, weights, renorm, float(fids.sum()), enc, decoder, final)


def separable_side_channel_branches(encoder: CPMap, decoder: CPMap, t_dims: tuple[int, int],
                                    prepared: Sequence[np.ndarray]):
    """Split a scheme around T (x) R, R(tau) = sum_l <l|tau|l> omega_l, into branches.

    ``encoder`` maps into C^{t_in} (x) C^L and ``decoder`` acts on
    C^{t_out} (x) C^{L'}, with ``prepared`` the L states omega_l on C^{L'}.
    Returns ``(instrument, decoders)`` with E_l = <l| E(.) |l> on the side
    register and D_l(tau) = D(tau (x) omega_l).
    """
    t_in, t_out = t_dims
    n_lab = len(prepared)
    if encoder.dim_out != t_in * n_lab:
        raise DimensionError("encoder output must be C^t_in (x) C^L")
    branches = []
    for lab in range(n_lab):
        proj = np.kron(np.eye(t_in), ops.basis_vector(n_lab, lab)[None, :])
        branches.append(CPMap([proj @ k for k in encoder.kraus]))
    decs = []
    for omega in prepared:
        omega = ops.density_operator(omega)
        lp = omega.shape[0]
        if decoder.dim_in != t_out * lp:
            raise DimensionError("decoder input must be C^t_out (x) C^L'")
        evals, evecs = np.linalg.eigh(omega)
        kraus = [np.sqrt(p) * k @ np.kron(np.eye(t_out), v[:, None])
                 for p, v in zip(evals, evecs.T) if p > ops.EIG_CLAMP for k in decoder.kraus]
        decs.append(Channel(kraus, atol=1e-8))
    return Instrument(branches), decs


def haar_assist_bridge(t: CPMap, e: CPMap, d: CPMap, samples: int = 100_000, seed: int = 0, psi=None):
    """Monte-Carlo view of the Haar-assisted scheme against the average fidelity.

    Returns ``((assisted_mean, assisted_se), (average_mean, average_se))``: the
    first averages <psi|U* D T E(U psi psi* U*) U|psi> over Haar U for a fixed
    reference psi, the second averages <phi|D T E(|phi><phi|)|phi> over Haar
    phi, both with independent streams derived from ``seed``.
    """
    chain = compose(d, compose(t, e))
    if chain.dim_in != chain.dim_out:
        raise DimensionError("D T E must map the code space to itself")
    if samples < 2:
        raise ValidationError("need at least two samples")
    n = chain.dim_in
    psi = ops.basis_vector(n, 0) if psi is None else ops.unit_vector(psi)
    s_assist, s_avg = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(s_assist)
    kraus = chain.kraus_array
    vals = []
    left = samples
    while left:
        m = min(left, 20000)
        u = ops.haar_unitaries(m, n, rng)
        phi = u @ psi
        out = np.einsum("kab,nb->nka", kraus, phi)
        # <psi|U* D T E(U psi psi* U*) U|psi> = sum_k |<U psi| t_k |U psi>|^2
        vals.append(np.sum(np.abs(np.einsum("na,nka->nk", phi.conj(), out)) ** 2, axis=1))
        left -= m
    v = np.concatenate(vals)
    assisted = (float(v.mean()), float(v.std(ddof=1) / math.sqrt(samples)))
    return assisted, average_fidelity_mc(chain, samples, s_avg)


# ---------------------------------------------------------------------------
# Hashing formulas
# ---------------------------------------------------------------------------


def is_prime(d: int) -> bool:
    """Deterministic trial division."""
    if d < 2:
        return False
    if d % 2 == 0:
        return d == 2
    f = 3
    while f * f <= d:
        if d % f == 0:
            return False
        f += 2
    return True


def _require_prime(d: int) -> None:
    if not is_prime(int(d)):
        raise ValidationError(f"local dimension {d} is not prime")


def hashing_feasible(d_prime: int, n: int, f: int, m: int) -> tuple[bool, float]:
    """Random graph code condition (m/n + 4f/n - 1) ld d + H2(2f/n) < 0."""
    _require_prime(d_prime)
    if n < 1 or not 0 <= m <= n or f < 0 or 2 * f > n:
        raise ValidationError("need n >= 1, 0 <= m <= n and 0 <= 2f <= n")
    margin = (m / n + 4 * f / n - 1) * math.log2(d_prime) + ops.binary_entropy(2 * f / n)
    return margin < 0, margin


def rare_to_small_bound(cb_error: float, n: int, f: int) -> float:
    """(2^{H2((f+1)/n)} cb_error^{(f+1)/n})^n."""
    if cb_error < 0:
        raise ValidationError("cb error must be non-negative")
    if n < 1 or f < 0 or f + 1 > n:
        raise ValidationError("need n >= 1 and 0 <= f < n")
    if cb_error == 0:
        return 0.0
    x = (f + 1) / n
    return float(2.0 ** (n * ops.binary_entropy(x) + (f + 1) * math.log2(cb_error)))


def hashing_capacity_bound(d_prime: int, N: int, delta: float) -> float:
    """(ld d / N)(1 - 4 e delta) - H2(2 e delta)/N, for delta < 1/(2e); not clamped."""
    _require_prime(d_prime)
    if N < 1:
        raise ValidationError("N must be positive")
    if not 0 <= delta < 1 / (2 * math.e):
        raise ValidationError(f"delta = {delta!r} must lie in [0, 1/(2e))")
    return math.log2(d_prime) / N * (1 - 4 * math.e * delta) - ops.binary_entropy(2 * math.e * delta) / N


def epsilon_capacity_sandwich(q_epsilon: float, epsilon: float) -> tuple[float, float]:
    """Interval (Q_eps (1 - 4 e eps), Q_eps) that contains Q."""
    if not 0 <= epsilon < 1 / (4 * math.e):
        raise ValidationError("epsilon must lie in [0, 1/(4e))")
    return q_epsilon * (1 - 4 * math.e * epsilon), q_epsilon


def hashing_table(d_prime: int, N: int, deltas: Sequence[float]) -> list[dict]:
    rows = []
    for delta in deltas:
        raw = hashing_capacity_bound(d_prime, N, delta)
        rows.append({"delta": delta, "raw": raw, "clamped": max(0.0, raw)})
    return rows
