"""Complex-matrix utilities: Schatten norms, purification, partial traces,
entropies and the flip operator.

Matrices are plain ``numpy`` arrays. Functions that need a density operator or a
unit vector validate their input with :func:`density_operator` /
:func:`unit_vector`, which reject (rather than repair) anything outside the
fixed tolerances. All logarithms are base two.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from .errors import DimensionError, ValidationError

#: Tolerance for hermiticity, positivity and normalisation checks.
STATE_TOL = 1e-10
#: Eigenvalues in ``[-EIG_CLAMP, 0)`` are treated as numerical zeros.
EIG_CLAMP = 1e-10


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def as_square(a) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


def density_operator(rho, tol: float = STATE_TOL) -> np.ndarray:
    """Validate ``rho`` as a density operator and return a read-only copy.

    Raises :class:`ValidationError` if ``rho`` is not Hermitian, has an
    eigenvalue below ``-tol`` or trace different from one (all within ``tol``).
    """
    rho = as_square(rho)
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > tol:
        raise ValidationError("density operator is not Hermitian")
    herm = (rho + rho.conj().T) / 2
    if abs(np.trace(herm).real - 1.0) > tol:
        raise ValidationError(f"density operator has trace {np.trace(herm).real!r}, expected 1")
    evals = np.linalg.eigvalsh(herm)
    if evals[0] < -tol:
        raise ValidationError(f"density operator has negative eigenvalue {evals[0]:.3e}")
    return _frozen(herm)


def unit_vector(psi, tol: float = STATE_TOL) -> np.ndarray:
    """Validate ``psi`` as a normalised vector and return a read-only copy."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size == 0 or not np.all(np.isfinite(psi)):
        raise ValidationError("unit vector must be finite and non-empty")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"vector has norm {norm!r}, expected 1")
    return _frozen(psi)


def projector(psi) -> np.ndarray:
    """|psi><psi| for a (not necessarily validated) vector."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def basis_vector(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def maximally_entangled(d: int) -> np.ndarray:
    """Omega = d^{-1/2} sum_i |i, i>."""
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


# ---------------------------------------------------------------------------
# Schatten norms
# ---------------------------------------------------------------------------


def trace_norm(a) -> float:
    """Sum of singular values, tr sqrt(A* A)."""
    a = as_square(a)
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def hs_norm(a) -> float:
    """Hilbert-Schmidt norm sqrt(tr A* A)."""
    a = as_matrix(a)
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def op_norm(a) -> float:
    """Largest singular value."""
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


# ---------------------------------------------------------------------------
# Bipartite structure
# ---------------------------------------------------------------------------


def partial_trace(rho, dims: Tuple[int, int], keep: int = 0) -> np.ndarray:
    """Partial trace of an operator on C^{d1} (x) C^{d2}.

    ``keep=0`` traces out the second factor, ``keep=1`` the first.
    """
    d1, d2 = dims
    rho = as_square(rho)
    if rho.shape[0] != d1 * d2:
        raise DimensionError(f"operator of size {rho.shape[0]} does not factor as {d1}x{d2}")
    r = rho.reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("ajbj->ab", r)
    if keep == 1:
        return np.einsum("iaib->ab", r)
    raise ValueError("keep must be 0 or 1")


def _clamped_eigh(rho: np.ndarray):
    evals, evecs = np.linalg.eigh(rho)
    evals = np.where((evals < 0) & (evals >= -EIG_CLAMP), 0.0, evals)
    return evals, evecs


def purify(rho) -> np.ndarray:
    """Purification psi = sum_i sqrt(lambda_i) |e_i> (x) |i> on C^d (x) C^d.

    The ancilla basis is the computational basis of a second copy of the space;
    tracing out the second factor recovers ``rho``.
    """
    rho = density_operator(rho)
    evals, evecs = _clamped_eigh(rho)
    d = rho.shape[0]
    amp = evecs * np.sqrt(np.clip(evals, 0.0, None))[None, :]
    return amp.reshape(d * d)


def schmidt(psi, dims: Tuple[int, int]):
    """Schmidt decomposition of a vector on C^{d1} (x) C^{d2}.

    Returns ``(coeffs, left, right)`` with ``coeffs`` non-increasing and
    ``psi = sum_j coeffs[j] left[:, j] (x) right[:, j]``.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    d1, d2 = dims
    if d1 * d2 != psi.size:
        raise DimensionError(f"vector of length {psi.size} does not factor as {d1}x{d2}")
    u, s, vh = np.linalg.svd(psi.reshape(d1, d2), full_matrices=False)
    return s, u, vh.T


def flip_operator(d: int) -> np.ndarray:
    """The swap F = sum_{n,m} |n,m><m,n| on C^d (x) C^d."""
    if d < 1:
        raise DimensionError("dimension must be positive")
    f = np.zeros((d, d, d, d), dtype=complex)
    for n in range(d):
        for m in range(d):
            f[n, m, m, n] = 1.0
    return f.reshape(d * d, d * d)


# ---------------------------------------------------------------------------
# Entropies
# ---------------------------------------------------------------------------


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho) -> float:
    """S(rho) = -tr rho ld rho in bits, with 0 ld 0 := 0."""
    rho = density_operator(rho)
    evals, _ = _clamped_eigh(rho)
    return max(shannon_entropy(evals), 0.0)


def binary_entropy(p: float) -> float:
    """H_2(p) = -p ld p - (1-p) ld(1-p)."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"probability {p!r} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def _entropy_of_psd(a: np.ndarray) -> float:
    """Entropy of a PSD trace-one matrix without the strict validation (internal)."""
    evals = np.linalg.eigvalsh((a + a.conj().T) / 2)
    return max(shannon_entropy(np.clip(evals, 0.0, None)), 0.0)


# ---------------------------------------------------------------------------
# Random objects (Haar measure)
# ---------------------------------------------------------------------------


def haar_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random unit vector in C^d (normalised complex Gaussian)."""
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def haar_vectors(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent Haar vectors as rows of an ``(n, d)`` array."""
    v = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre
    matrix, with the phases of R's diagonal absorbed into Q."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph[None, :]


def haar_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Random isometry C^cols -> C^rows (first columns of a Haar unitary)."""
    if cols > rows:
        raise DimensionError("an isometry needs cols <= rows")
    return haar_unitary(rows, rng)[:, :cols]


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density operator G G* / tr(G G*) with G of shape (d, rank)."""
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def haar_unitaries(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent Haar unitaries stacked into an ``(n, d, d)`` array."""
    z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]
