"""Equivalence of the error criteria for a channel close to the identity.

* :func:`pure_distance_bound` -- trace distance of a state to a pure state,
  bounded by the fidelity.
* :func:`equivalence_chain` -- the five-term chain linking worst-case
  entanglement fidelity, minimum fidelity, the 1->1 norm and the cb-norm.
* :func:`pinch_analysis` -- channel fidelity tends to one while the norm
  distance stays at one.
* :func:`compress_channel` -- recursive peeling of low-fidelity directions,
  producing a subspace with guaranteed minimum fidelity.
* :func:`qaep_typical_mass` and :func:`entropy_boost_source` -- finite-n
  typicality and the unconstrained-source counterexample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import operators as ops
from .channels import Channel, CPMap, difference, identity_super, kraus_from_choi, pinch_channel
from .errors import DimensionError, ValidationError
from .fidelity import (
    channel_fidelity,
    entanglement_fidelity,
    inf_entanglement_fidelity,
    min_fidelity,
    min_fidelity_on_subspace,
)
from .supnorms import cb_norm, superop_norm

CHAIN_SLACK = 1e-6
MAX_CHAIN_DIM = 8
PINV_CUTOFF = 1e-12
_MAX_TYPES = 5_000_000


def pure_distance_bound(rho, psi) -> tuple[float, float]:
    """``(||rho - |psi><psi| ||_1, 2 sqrt(1 - <psi|rho|psi>))``; the first never exceeds the second."""
    rho = ops.density_operator(rho)
    psi = ops.unit_vector(psi)
    if psi.size != rho.shape[0]:
        raise DimensionError("state and vector dimensions differ")
    lhs = ops.trace_norm(rho - ops.projector(psi))
    overlap = float(np.real(psi.conj() @ rho @ psi))
    rhs = 2 * math.sqrt(max(0.0, 1 - overlap))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Chain report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainConfig:
    fidelity_restarts: int = 16
    norm_restarts: int = 32
    seed: int = 0
    slack: float = CHAIN_SLACK


@dataclass(frozen=True)
class ChainLink:
    lhs: str
    rhs: str
    passed: bool
    certified: bool
    basis: str


@dataclass(frozen=True)
class ChainReport:
    """Estimates entering the chain a <= b <= c <= d <= e.

    a = 1 - inf F_e, b = 4 sqrt(1 - F), c = 4 sqrt(||T - id||),
    d = 4 sqrt(||T - id||_cb), e = 8 (1 - inf F_e)^(1/4).

    Every underlying estimate is a value attained at a witness: the fidelities
    are upper bounds on their infima and the norms are lower bounds, so each
    chain entry is a lower bound on its exact value.
    """

    inf_fe: float
    min_fidelity: float
    opnorm: float
    cbnorm: float
    one_minus_inf_fe: float
    four_sqrt_one_minus_F: float
    four_sqrt_opnorm: float
    four_sqrt_cbnorm: float
    eight_fourth_root: float
    links: tuple
    config: ChainConfig
    ancilla_dim: int
    seeds: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(link.passed for link in self.links)

    @staticmethod
    def entries(inf_fe: float, min_f: float, opnorm: float, cbnorm: float) -> tuple:
        return (
            1 - inf_fe,
            4 * math.sqrt(max(0.0, 1 - min_f)),
            4 * math.sqrt(max(0.0, opnorm)),
            4 * math.sqrt(max(0.0, cbnorm)),
            8 * max(0.0, 1 - inf_fe) ** 0.25,
        )

    def recompute(self) -> tuple:
        return self.entries(self.inf_fe, self.min_fidelity, self.opnorm, self.cbnorm)

    def to_dict(self) -> dict:
        return {
            "inputs": {
                "inf_entanglement_fidelity": self.inf_fe,
                "min_fidelity": self.min_fidelity,
                "opnorm_T_minus_id": self.opnorm,
                "cbnorm_T_minus_id": self.cbnorm,
            },
            "chain": {
                "one_minus_inf_fe": self.one_minus_inf_fe,
                "four_sqrt_one_minus_F": self.four_sqrt_one_minus_F,
                "four_sqrt_opnorm": self.four_sqrt_opnorm,
                "four_sqrt_cbnorm": self.four_sqrt_cbnorm,
                "eight_fourth_root": self.eight_fourth_root,
            },
            "links": [
                {"lhs": l.lhs, "rhs": l.rhs, "passed": l.passed, "certified": l.certified, "basis": l.basis}
                for l in self.links
            ],
            "passed": self.passed,
            "estimator": {
                "fidelity_restarts": self.config.fidelity_restarts,
                "norm_restarts": self.config.norm_restarts,
                "seed": self.config.seed,
                "slack": self.config.slack,
                "seeds": self.seeds,
                "ancilla_dim": self.ancilla_dim,
                "bound_directions": {
                    "inf_entanglement_fidelity": "upper",
                    "min_fidelity": "upper",
                    "opnorm_T_minus_id": "lower",
                    "cbnorm_T_minus_id": "lower",
                },
            },
        }


_NAMES = ("one_minus_inf_fe", "four_sqrt_one_minus_F", "four_sqrt_opnorm", "four_sqrt_cbnorm", "eight_fourth_root")
_BASIS = (
    (False, "both sides are estimates from below; checked with slack"),
    (True, "norm search is seeded with the min-fidelity witness, so ||T-id|| >= 2(1-F) at that witness"),
    (True, "cb search starts from the lifted 1->1 witness, so the cb estimate dominates"),
    (False, "both sides are estimates from below; checked with slack"),
)


def equivalence_chain(t: Channel, config: ChainConfig = ChainConfig()) -> ChainReport:
    """Evaluate all five chain quantities for a channel on C^d, d <= 8."""
    if t.dim_in != t.dim_out:
        raise DimensionError("the chain compares a channel with the identity; it must be square")
    d = t.dim_in
    if d > MAX_CHAIN_DIM:
        raise DimensionError(f"dimension {d} exceeds the supported {MAX_CHAIN_DIM}")
    s_min, s_inf, s_norm = (int(x) for x in np.random.SeedSequence(config.seed).generate_state(3))
    mf = min_fidelity(t, config.fidelity_restarts, s_min)
    inf = inf_entanglement_fidelity(t, config.fidelity_restarts, s_inf, warm_start=mf.witness)
    err = difference(t.to_superoperator(), identity_super(d))
    w = mf.witness
    op = superop_norm(err, config.norm_restarts, s_norm, seeds=[(w, w)])
    cb = cb_norm(err, d, config.norm_restarts, s_norm, seeds=[(w, w)])
    vals = ChainReport.entries(inf.value, mf.value, op.value, cb.value)
    links = tuple(
        ChainLink(_NAMES[i], _NAMES[i + 1], bool(vals[i] <= vals[i + 1] + config.slack), *_BASIS[i])
        for i in range(4)
    )
    return ChainReport(
        inf.value, mf.value, op.value, cb.value, *vals, links=links, config=config, ancilla_dim=d,
        seeds={"min_fidelity": s_min, "inf_entanglement_fidelity": s_inf, "norms": s_norm},
    )


# ---------------------------------------------------------------------------
# Pinching counterexample
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PinchAnalysis:
    d: int
    channel_fidelity: float
    closed_form: float
    opnorm_lower: float


def pinch_analysis(d: int) -> PinchAnalysis:
    """Channel fidelity of the pinching and the norm witness rho~ = |psi_1+psi_2><psi_1+psi_2|/2."""
    t = pinch_channel(d)
    fc = channel_fidelity(t)
    closed = (d * d - 2 * d + 2) / d**2
    v = ops.basis_vector(d, 0) + ops.basis_vector(d, 1)
    rho = ops.projector(v) / 2
    lower = ops.trace_norm(t(rho) - rho)
    return PinchAnalysis(d, fc, closed, lower)


# ---------------------------------------------------------------------------
# Compressed channel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompressedChannelResult:
    """Output of the peeling construction.

    ``basis`` has orthonormal columns spanning P_k H. ``bound_*`` equal
    1 - (1 - F_e)/(1 - q*) or ``-inf`` when that q* is at least one.
    """

    k: int
    basis: np.ndarray
    channel: Channel
    entanglement_fidelity: float
    q: np.ndarray
    peel_fidelities: np.ndarray
    peeled: np.ndarray
    tail_weight: float
    q_star_norm: float
    q_star_entropy: float
    bound_norm: float
    bound_entropy: float
    subspace_fidelity_lower: float
    min_fidelity: float
    min_fidelity_witness: np.ndarray
    restarts: int
    seed: int

    @property
    def bound(self) -> float:
        return max(self.bound_norm, self.bound_entropy)

    @property
    def holds(self) -> bool:
        """The searched minimum fidelity of T_k respects both bounds."""
        return self.min_fidelity >= self.bound - 1e-9


def _support(rho: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    return evecs[:, evals > PINV_CUTOFF]


def _pinv_expectation(rho: np.ndarray, phi: np.ndarray) -> float:
    evals, evecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    keep = evals > PINV_CUTOFF
    amp = evecs[:, keep].conj().T @ phi
    return float(np.sum(np.abs(amp) ** 2 / evals[keep]))


def _peel(t: CPMap, rho: np.ndarray, restarts: int, seed: int):
    """phi_i minimises f on supp(rho_{i-1}); rho_i = rho_{i-1} - q_i |phi_i><phi_i|.

    When a later step finds a lower fidelity than an earlier one, that vector
    was also available at the earlier step; the peeling restarts there with
    it as a warm start, so the returned fidelities are nondecreasing.
    """
    rank = _support(rho).shape[1]
    warm: list[list[np.ndarray]] = [[] for _ in range(rank)]
    streams = np.random.SeedSequence(seed).generate_state(rank)
    start = 0
    phis: list[np.ndarray] = []
    qs: list[float] = []
    fs: list[float] = []
    states = [np.array(rho, dtype=complex)]
    for _ in range(4 * rank * rank + 1):
        phis, qs, fs, states = phis[:start], qs[:start], fs[:start], states[: start + 1]
        redo = None
        for i in range(start, rank):
            cur = states[i]
            basis = _support(cur)
            if basis.shape[1] == 0:
                raise ValidationError("support exhausted before the rank was reached")
            res = min_fidelity_on_subspace(t, basis, restarts, int(streams[i]), starts=warm[i])
            phi = res.witness
            q = 1.0 / _pinv_expectation(cur, phi)
            nxt = cur - q * ops.projector(phi)
            states.append((nxt + nxt.conj().T) / 2)
            phis.append(phi)
            qs.append(q)
            fs.append(res.value)
            lower = [j for j in range(i) if fs[j] > res.value + 1e-12]
            if lower:
                redo = lower[0]
                warm[redo].append(phi)
                break
        if redo is None:
            return np.array(phis).T, np.array(qs), np.array(fs)
        start = redo
    raise RuntimeError("peeling did not settle")


def _compressed(t: CPMap, v: np.ndarray) -> Channel:
    """T_k(s) = P T(s) P + tr((1 - P) T(s)) P / k in the coordinates of the columns of ``v``."""
    d, k = v.shape
    q, _ = np.linalg.qr(np.hstack([v, np.eye(d)]))
    comp = q[:, k:d]
    kraus = [v.conj().T @ tk @ v for tk in t.kraus]
    for tk in t.kraus:
        leak = comp.conj().T @ tk @ v
        for a in range(k):
            for c in range(d - k):
                m = np.zeros((k, k), dtype=complex)
                m[a, :] = leak[c, :] / math.sqrt(k)
                kraus.append(m)
    kraus = [m for m in kraus if np.any(np.abs(m) > 0)]
    ch = CPMap(kraus)
    return Channel(kraus_from_choi(ch.choi(), k, k), atol=1e-8)


def _q_star_bound(fe: float, q_star: float) -> float:
    return -math.inf if q_star >= 1 else 1 - (1 - fe) / (1 - q_star)


def compress_channel(t: Channel, rho, k: int, restarts: int = 32, seed: int = 0) -> CompressedChannelResult:
    """Peel off low-fidelity directions of ``rho`` and compress T onto the last ``k`` of them."""
    if t.dim_in != t.dim_out:
        raise DimensionError("compression needs a square channel")
    rho = ops.density_operator(rho)
    d = t.dim_in
    if rho.shape[0] != d:
        raise DimensionError("state and channel dimensions differ")
    rank = _support(rho).shape[1]
    if not 1 <= k <= rank:
        raise ValidationError(f"k = {k} must lie between 1 and rank(rho) = {rank}")
    s_peel, s_check = (int(x) for x in np.random.SeedSequence(seed).generate_state(2))
    phis, qs, fs = _peel(t, rho, restarts, s_peel)
    tail = phis[:, rank - k:]
    v, _ = np.linalg.qr(tail)
    tk = _compressed(t, v)
    fe = entanglement_fidelity(rho, t)
    q_norm = k * ops.op_norm(rho)
    ld_gap = math.log2(d) - math.log2(k)
    q_ent = math.inf if ld_gap <= 0 else (1 + math.log2(d) - ops.von_neumann_entropy(rho)) / ld_gap
    mf = min_fidelity(tk, restarts, s_check)
    return CompressedChannelResult(
        k=k, basis=v, channel=tk, entanglement_fidelity=fe, q=qs, peel_fidelities=fs, peeled=phis,
        tail_weight=float(np.sum(qs[rank - k:])), q_star_norm=q_norm, q_star_entropy=q_ent,
        bound_norm=_q_star_bound(fe, q_norm), bound_entropy=_q_star_bound(fe, q_ent),
        subspace_fidelity_lower=float(fs[rank - k]), min_fidelity=mf.value,
        min_fidelity_witness=v @ mf.witness, restarts=restarts, seed=seed,
    )


# ---------------------------------------------------------------------------
# Typicality and the entropy-boost source
# ---------------------------------------------------------------------------


def _types(n: int, length: int):
    """All compositions of n into ``length`` non-negative parts, as an array."""
    if length == 1:
        return np.array([[n]])
    if length == 2:
        j = np.arange(n + 1)
        return np.column_stack([j, n - j])
    rows = []
    for head in range(n + 1):
        sub = _types(n - head, length - 1)
        rows.append(np.column_stack([np.full(len(sub), head), sub]))
    return np.vstack(rows)


def qaep_typical_mass(p: Sequence[float], n: int, rate: float, epsilon: float) -> float:
    """Weight of the eigenvalues of rho^{(x)n} inside [2^{-n(R+eps)}, 2^{-n(R-eps)}].

    ``p`` is the spectrum of rho. Eigenvalues are grouped by type class and
    counted with multinomial multiplicities in log space.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1) > 1e-10:
        raise ValidationError("p must be a probability vector")
    if n < 1 or epsilon < 0:
        raise ValidationError("need n >= 1 and epsilon >= 0")
    p = p[p > 0]
    if math.comb(n + len(p) - 1, len(p) - 1) > _MAX_TYPES:
        raise ValidationError("too many type classes for exact counting")
    types = _types(n, len(p))
    log_mult = gammaln(n + 1) - np.sum(gammaln(types + 1), axis=1)
    log2_lam = types @ np.log2(p)
    slack = 1e-9 * n
    inside = (log2_lam >= -n * (rate + epsilon) - slack) & (log2_lam <= -n * (rate - epsilon) + slack)
    log_mass = log_mult + log2_lam * math.log(2)
    return float(min(1.0, np.sum(np.exp(log_mass[inside]))))


@dataclass(frozen=True)
class EntropyBoostRow:
    n: int
    epsilon: float
    entropy: float
    lower_bound: float
    entropy_rate: float

    @property
    def holds(self) -> bool:
        return self.entropy >= self.lower_bound - 1e-9


def entropy_boost_source(base_log_dims: Sequence[float], epsilons: Sequence[float],
                         boost_log_dims: Sequence[float], start: int = 1) -> list[EntropyBoostRow]:
    """Entropy of (1 - eps_n) 1/dim H_n (+) eps_n 1/dim K_n from log2 dimensions.

    Dimensions enter only through ``ld dim H_n`` and ``ld dim K_n``, so huge
    spaces are never built. Rows are numbered from ``start``.
    """
    if not len(base_log_dims) == len(epsilons) == len(boost_log_dims):
        raise ValidationError("sequences must have equal length")
    rows = []
    for i, (lh, eps, lk) in enumerate(zip(base_log_dims, epsilons, boost_log_dims)):
        n = start + i
        if not 0.0 <= eps < 1.0:
            raise ValidationError(f"epsilon {eps!r} outside [0, 1)")
        if lh < 0 or lk < 0:
            raise ValidationError("log-dimensions must be non-negative")
        s = ops.binary_entropy(eps) + (1 - eps) * lh + eps * lk
        lb = 0.0 if eps == 0 else eps * (-math.log2(eps) + lk)
        rows.append(EntropyBoostRow(n, float(eps), s, lb, s / n))
    return rows


def entropy_boost_demo(n_values: Sequence[int], boost_exponent: int = 3) -> list[EntropyBoostRow]:
    """eps_n = 1/n, ld dim H_n = n, ld dim K_n = n^boost_exponent."""
    rows = []
    for n in n_values:
        rows += entropy_boost_source([float(n)], [1.0 / n], [float(n) ** boost_exponent], start=n)
    return rows

