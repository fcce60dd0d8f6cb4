"""Fidelity measures of a channel against the identity.

Minimum fidelity over pure inputs, Haar-average fidelity (closed form and Monte
Carlo), entanglement fidelity, channel fidelity and the entanglement-generation
fidelity of a given bipartite input. Worst-case quantities are nonconvex
searches; they return the best witness found and its exact objective value,
which is an upper bound on the true infimum.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from . import operators as ops
from .channels import CPMap
from .errors import DimensionError, ValidationError

DEFAULT_RESTARTS = 64
#: Candidates whose values differ by less than this count as ties.
TIE_TOL = 1e-12
_MC_CHUNK = 20000


class FidelityWitness(NamedTuple):
    value: float
    witness: np.ndarray


def _require_square(t: CPMap) -> None:
    if t.dim_in != t.dim_out:
        raise DimensionError(f"fidelity needs dim_in == dim_out, got {t.dim_in} -> {t.dim_out}")


def entanglement_fidelity(rho, t: CPMap) -> float:
    """F_e(rho, T) = sum_i |tr(rho t_i)|^2."""
    _require_square(t)
    rho = ops.density_operator(rho)
    if rho.shape[0] != t.dim_in:
        raise DimensionError("state and channel dimensions differ")
    a = np.einsum("ij,kji->k", rho, t.kraus_array)
    return float(np.sum(np.abs(a) ** 2))


def entanglement_fidelity_purified(rho, t: CPMap) -> float:
    """F_e via <psi|(T (x) id)(|psi><psi|)|psi> for the purification psi of rho."""
    _require_square(t)
    rho = ops.density_operator(rho)
    d = t.dim_in
    psi = ops.purify(rho)
    eye = np.eye(d)
    amps = [psi.conj() @ (np.kron(k, eye) @ psi) for k in t.kraus]
    return float(np.sum(np.abs(amps) ** 2))


def channel_fidelity(t: CPMap) -> float:
    """F_c(T) = F_e(1/d, T) = d^{-2} sum_i |tr t_i|^2."""
    _require_square(t)
    tr = np.trace(t.kraus_array, axis1=1, axis2=2)
    return float(np.sum(np.abs(tr) ** 2) / t.dim_in**2)


def entgen_fidelity(gamma, t: CPMap) -> float:
    """<Omega|(T (x) id)(|Gamma><Gamma|)|Omega> for a bipartite input Gamma."""
    _require_square(t)
    d = t.dim_in
    gamma = ops.unit_vector(gamma)
    if gamma.size != d * d:
        raise DimensionError(f"input vector must live on C^{d} (x) C^{d}")
    omega = ops.maximally_entangled(d)
    g = gamma.reshape(d, d)
    amps = [omega.conj() @ (k @ g).reshape(-1) for k in t.kraus]
    return float(np.sum(np.abs(amps) ** 2))


def fidelity_at(t: CPMap, psi) -> float:
    """<psi|T(|psi><psi|)|psi> for a unit vector psi."""
    _require_square(t)
    psi = ops.unit_vector(psi, tol=1e-8)
    psi = psi / np.linalg.norm(psi)
    a = np.einsum("i,kij,j->k", psi.conj(), t.kraus_array, psi)
    return float(np.sum(np.abs(a) ** 2))


def average_fidelity_closed(t: CPMap) -> float:
    """Haar-average pure-state fidelity (d F_c + 1)/(d + 1)."""
    d = t.dim_in
    return (d * channel_fidelity(t) + 1) / (d + 1)


def _pure_fidelities(kraus: np.ndarray, psis: np.ndarray) -> np.ndarray:
    a = np.einsum("ni,kij,nj->nk", psis.conj(), kraus, psis)
    return np.sum(np.abs(a) ** 2, axis=1)


def average_fidelity_mc(t: CPMap, samples: int = 100_000, seed=0) -> tuple[float, float]:
    """Monte-Carlo Haar average of <psi|T(|psi><psi|)|psi>.

    Returns ``(mean, standard_error)``.
    """
    _require_square(t)
    if samples < 2:
        raise ValidationError("need at least two samples for a standard error")
    rng = np.random.default_rng(seed)
    kraus = t.kraus_array
    vals = []
    left = samples
    while left:
        n = min(left, _MC_CHUNK)
        vals.append(_pure_fidelities(kraus, ops.haar_vectors(n, t.dim_in, rng)))
        left -= n
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(samples))


def twirl(rho, samples: int = 100_000, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo average of (U (x) U)(rho (x) rho)(U (x) U)* over Haar U.

    Returns ``(mean, standard_error)`` as entrywise ``d^2 x d^2`` arrays; the
    error array holds the standard errors of the real and imaginary parts.
    """
    rho = ops.density_operator(rho)
    if samples < 2:
        raise ValidationError("need at least two samples for a standard error")
    d = rho.shape[0]
    rng = np.random.default_rng(seed)
    total = np.zeros((d * d, d * d), dtype=complex)
    sq_re = np.zeros((d * d, d * d))
    sq_im = np.zeros((d * d, d * d))
    left = samples
    while left:
        n = min(left, _MC_CHUNK)
        u = ops.haar_unitaries(n, d, rng)
        s = u @ rho @ u.conj().transpose(0, 2, 1)
        prod = np.einsum("nab,ncd->nacbd", s, s).reshape(n, d * d, d * d)
        total += prod.sum(axis=0)
        sq_re += np.sum(prod.real**2, axis=0)
        sq_im += np.sum(prod.imag**2, axis=0)
        left -= n
    mean = total / samples
    var_re = (sq_re - samples * mean.real**2) / (samples - 1)
    var_im = (sq_im - samples * mean.imag**2) / (samples - 1)
    stderr = np.sqrt(np.clip(var_re, 0, None) / samples) + 1j * np.sqrt(np.clip(var_im, 0, None) / samples)
    return mean, stderr


# ---------------------------------------------------------------------------
# Worst-case searches
# ---------------------------------------------------------------------------


def _quartic(z: np.ndarray, mats: np.ndarray, mats_h: np.ndarray):
    """f(x) = sum_k |x* m_k x|^2 / (x* x)^2 and its gradient in (Re x, Im x)."""
    r = z.size // 2
    x = z[:r] + 1j * z[r:]
    nrm = np.vdot(x, x).real
    mx = mats @ x
    a = mx @ x.conj()
    num = np.sum(np.abs(a) ** 2)
    dnum = a.conj() @ mx + a @ (mats_h @ x)
    g = dnum / nrm**2 - 2 * num * x / nrm**3
    return num / nrm**2, 2 * np.concatenate([g.real, g.imag])


def _canonical_phase(x: np.ndarray) -> np.ndarray:
    x = x / np.linalg.norm(x)
    i = int(np.argmax(np.abs(x) > 1e-9 * np.abs(x).max()))
    return x * (abs(x[i]) / x[i])


def _lex_key(x: np.ndarray) -> tuple:
    return tuple(np.round(np.column_stack([x.real, x.imag]).reshape(-1), 12))


def minimize_quartic(mats: Sequence[np.ndarray], restarts: int, rng: np.random.Generator, starts=()) -> np.ndarray:
    """Multi-start L-BFGS minimization of sum_k |<x|m_k|x>|^2 over unit vectors.

    ``starts`` are extra initial vectors tried before the random ones. Returns
    the best unit vector; ties go to the phase-normalised amplitude vector
    that is lexicographically largest in (Re, Im) order, so earlier basis
    vectors win.
    """
    if restarts < 1:
        raise ValidationError("restarts must be a positive integer")
    mats = np.asarray(mats, dtype=complex)
    mats_h = mats.conj().transpose(0, 2, 1)
    r = mats.shape[1]
    inits = [np.asarray(s, dtype=complex) for s in starts]
    inits += list(ops.haar_vectors(restarts, r, rng))
    best_val, best_x = np.inf, None
    for x0 in inits:
        res = minimize(
            _quartic, np.concatenate([x0.real, x0.imag]), args=(mats, mats_h), jac=True,
            method="L-BFGS-B", options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 500},
        )
        x = _canonical_phase(res.x[:r] + 1j * res.x[r:])
        val, _ = _quartic(np.concatenate([x.real, x.imag]), mats, mats_h)
        if val < best_val - TIE_TOL or (abs(val - best_val) <= TIE_TOL and _lex_key(x) > _lex_key(best_x)):
            best_val, best_x = val, x
    return best_x


def min_fidelity(t: CPMap, restarts: int = DEFAULT_RESTARTS, seed=0) -> FidelityWitness:
    """Smallest <psi|T(|psi><psi|)|psi> found over unit vectors psi.

    The value is recomputed at the returned witness, so it is an upper bound
    on the true minimum fidelity.
    """
    _require_square(t)
    if restarts < 1:
        raise ValidationError("restarts must be a positive integer")
    rng = np.random.default_rng(seed)
    basis = [ops.basis_vector(t.dim_in, i) for i in range(t.dim_in)]
    w = minimize_quartic(t.kraus_array, restarts, rng, starts=basis)
    return FidelityWitness(fidelity_at(t, w), w)


def min_fidelity_on_subspace(t: CPMap, basis, restarts: int = DEFAULT_RESTARTS, seed=0, starts=()) -> FidelityWitness:
    """Minimum fidelity restricted to unit vectors in the span of the orthonormal columns of ``basis``.

    ``starts`` are extra initial vectors in the full space; they are projected
    onto the subspace.
    """
    _require_square(t)
    b = ops.as_matrix(basis)
    if b.shape[0] != t.dim_in:
        raise DimensionError("subspace basis lives in the wrong space")
    rng = np.random.default_rng(seed)
    mats = b.conj().T @ t.kraus_array @ b
    inits = [b.conj().T @ np.asarray(v, dtype=complex) for v in starts]
    inits = [v for v in inits if np.linalg.norm(v) > 1e-8]
    inits += [ops.basis_vector(b.shape[1], i) for i in range(b.shape[1])]
    y = minimize_quartic(mats, restarts, rng, starts=inits)
    w = b @ y
    w = w / np.linalg.norm(w)
    return FidelityWitness(fidelity_at(t, w), w)


def inf_entanglement_fidelity(t: CPMap, restarts: int = DEFAULT_RESTARTS, seed=0, warm_start=None) -> FidelityWitness:
    """Smallest F_e(rho, T) found over states rho.

    Searches unit vectors psi on H (x) H (ancilla dimension dim H) for the
    minimum of <psi|(T (x) id)(|psi><psi|)|psi>. The witness is the reduced
    state of the best psi and the value is F_e at that state. An optional
    ``warm_start`` vector on H seeds the search with the product psi (x) |0>.
    """
    _require_square(t)
    if restarts < 1:
        raise ValidationError("restarts must be a positive integer")
    d = t.dim_in
    rng = np.random.default_rng(seed)
    eye = np.eye(d)
    mats = np.stack([np.kron(k, eye) for k in t.kraus])
    starts = [ops.maximally_entangled(d), np.kron(ops.basis_vector(d, 0), ops.basis_vector(d, 0))]
    if warm_start is not None:
        starts.append(np.kron(np.asarray(warm_start, dtype=complex), ops.basis_vector(d, 0)))
    psi = minimize_quartic(mats, restarts, rng, starts=starts)
    rho = ops.partial_trace(ops.projector(psi), (d, d), keep=0)
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    return FidelityWitness(entanglement_fidelity(rho, t), rho)
