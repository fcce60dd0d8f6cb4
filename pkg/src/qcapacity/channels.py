"""Channels, superoperators and instruments.

A :class:`CPMap` is a completely positive map held in Kraus form; a
:class:`Channel` is a CP map that is also trace preserving. Maps that need not
be positive (differences of channels, the transposition) are
:class:`Superoperator` objects held by their Choi matrix

    J = sum_{ij} L(|i><j|) (x) |i><j|        (output factor first),

so that ``J[(a, i), (b, j)] = <a| L(|i><j|) |b>``. With this convention the
Choi matrix of the transposition is exactly the flip operator.

Constructive encoders/decoders used in coding arguments (ideal embedding,
isometric encoding, homomorphic decoding) live here as well.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from . import operators as ops
from .errors import DimensionError, ValidationError

#: Trace-preservation tolerance for in-memory channels.
TP_TOL = 1e-9
#: Choi eigenvalues below this are dropped when extracting Kraus operators.
CHOI_CLAMP = 1e-10


def _freeze(a) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


class CPMap:
    """Completely positive map rho -> sum_k K rho K*, not necessarily trace preserving."""

    def __init__(self, kraus: Sequence[np.ndarray]):
        kraus = [ops.as_matrix(k) for k in kraus]
        if not kraus:
            raise ValidationError("a CP map needs at least one Kraus operator")
        shape = kraus[0].shape
        for k in kraus:
            if k.shape != shape:
                raise DimensionError(f"Kraus operators have mismatched shapes {k.shape} vs {shape}")
        self.dim_out, self.dim_in = shape
        self.kraus = tuple(_freeze(k) for k in kraus)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim_in={self.dim_in}, dim_out={self.dim_out}, n_kraus={len(self.kraus)})"

    @property
    def kraus_array(self) -> np.ndarray:
        return np.stack(self.kraus)

    def __call__(self, rho) -> np.ndarray:
        rho = ops.as_square(rho)
        if rho.shape[0] != self.dim_in:
            raise DimensionError(f"input of size {rho.shape[0]} for a map on C^{self.dim_in}")
        k = self.kraus_array
        return np.einsum("kai,ij,kbj->ab", k, rho, k.conj())

    def choi(self) -> np.ndarray:
        v = self.kraus_array.reshape(len(self.kraus), -1)
        return v.T @ v.conj()

    def heisenberg(self, x) -> np.ndarray:
        """Adjoint map X -> sum_k K* X K."""
        k = self.kraus_array
        return np.einsum("kai,ab,kbj->ij", k.conj(), ops.as_square(x), k)

    def trace_residual(self) -> float:
        """Operator-norm distance of sum K*K from the identity."""
        k = self.kraus_array
        s = np.einsum("kai,kaj->ij", k.conj(), k)
        return ops.op_norm(s - np.eye(self.dim_in))

    def to_superoperator(self) -> "Superoperator":
        return Superoperator(self.choi(), self.dim_in, self.dim_out)

    def simplified(self) -> "CPMap":
        """Same map with a minimal Kraus set taken from the Choi eigendecomposition."""
        return type(self)(kraus_from_choi(self.choi(), self.dim_in, self.dim_out))

    def scaled(self, factor: float) -> "CPMap":
        if factor < 0:
            raise ValidationError("CP maps can only be scaled by non-negative factors")
        return CPMap([np.sqrt(factor) * k for k in self.kraus])


class Channel(CPMap):
    """Completely positive trace-preserving map in Kraus form."""

    def __init__(self, kraus: Sequence[np.ndarray], atol: float = TP_TOL):
        super().__init__(kraus)
        residual = self.trace_residual()
        if residual > atol:
            raise ValidationError(
                f"Kraus operators are not trace preserving: ||sum K*K - 1|| = {residual:.3e}"
            )


class Superoperator:
    """Arbitrary linear map on operators, stored as its Choi matrix."""

    def __init__(self, choi, dim_in: int, dim_out: int):
        choi = ops.as_square(choi)
        if choi.shape[0] != dim_in * dim_out:
            raise DimensionError(
                f"Choi matrix of size {choi.shape[0]} for a map C^{dim_in} -> C^{dim_out}"
            )
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.choi = _freeze(choi)

    def __repr__(self) -> str:
        return f"Superoperator(dim_in={self.dim_in}, dim_out={self.dim_out})"

    @property
    def choi4(self) -> np.ndarray:
        """Choi tensor indexed ``[a, i, b, j] = <a|L(|i><j|)|b>``."""
        return self.choi.reshape(self.dim_out, self.dim_in, self.dim_out, self.dim_in)

    def natural(self) -> np.ndarray:
        """Matrix S with vec(L(X)) = S vec(X) for row-major vec."""
        return self.choi4.transpose(0, 2, 1, 3).reshape(self.dim_out**2, self.dim_in**2)

    @classmethod
    def from_natural(cls, s, dim_in: int, dim_out: int) -> "Superoperator":
        s = np.asarray(s, dtype=complex).reshape(dim_out, dim_out, dim_in, dim_in)
        return cls(s.transpose(0, 2, 1, 3).reshape(dim_out * dim_in, dim_out * dim_in), dim_in, dim_out)

    def __call__(self, x) -> np.ndarray:
        x = ops.as_square(x)
        if x.shape[0] != self.dim_in:
            raise DimensionError(f"input of size {x.shape[0]} for a map on C^{self.dim_in}")
        return np.einsum("aibj,ij->ab", self.choi4, x)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return difference(self, other)


# ---------------------------------------------------------------------------
# Conversions and algebra
# ---------------------------------------------------------------------------


def kraus_from_choi(choi, dim_in: int, dim_out: int, clamp: float = CHOI_CLAMP) -> list[np.ndarray]:
    """Kraus operators sqrt(lambda) * reshape(v) from the Choi eigendecomposition.

    Eigenvalues in ``[-clamp, clamp]`` are discarded; anything more negative
    means the map is not completely positive.
    """
    choi = ops.as_square(choi)
    evals, evecs = np.linalg.eigh((choi + choi.conj().T) / 2)
    if evals[0] < -clamp * max(1.0, evals[-1]):
        raise ValidationError(f"Choi matrix has negative eigenvalue {evals[0]:.3e}; map is not CP")
    keep = evals > clamp
    if not np.any(keep):
        return [np.zeros((dim_out, dim_in), dtype=complex)]
    return [np.sqrt(lam) * evecs[:, i].reshape(dim_out, dim_in) for i, lam in enumerate(evals) if keep[i]]


def channel_from_choi(choi, dim_in: int, dim_out: int, atol: float = TP_TOL) -> Channel:
    return Channel(kraus_from_choi(choi, dim_in, dim_out), atol=atol)


def to_superoperator(t: CPMap) -> Superoperator:
    return t.to_superoperator()


def apply(t: CPMap, rho) -> np.ndarray:
    """Output state T(rho); ``rho`` must be a valid density operator."""
    rho = ops.density_operator(rho)
    if rho.shape[0] != t.dim_in:
        raise DimensionError(f"state on C^{rho.shape[0]} for a channel on C^{t.dim_in}")
    out = t(rho)
    return (out + out.conj().T) / 2


def _max_kraus(dim_in: int, dim_out: int) -> int:
    return dim_in * dim_out


def compose(t2: CPMap, t1: CPMap) -> CPMap:
    """The map t2 o t1 (apply ``t1`` first)."""
    if t1.dim_out != t2.dim_in:
        raise DimensionError(f"cannot compose: {t1.dim_out}-dim output into {t2.dim_in}-dim input")
    kraus = [k2 @ k1 for k2 in t2.kraus for k1 in t1.kraus]
    cls = Channel if isinstance(t1, Channel) and isinstance(t2, Channel) else CPMap
    out = cls(kraus) if cls is CPMap else Channel(kraus, atol=10 * TP_TOL)
    if len(kraus) > _max_kraus(out.dim_in, out.dim_out):
        out = out.simplified()
    return out


def tensor(t1: CPMap, t2: CPMap) -> CPMap:
    """The map t1 (x) t2 acting on C^{d1} (x) C^{d2}."""
    kraus = [np.kron(k1, k2) for k1 in t1.kraus for k2 in t2.kraus]
    if isinstance(t1, Channel) and isinstance(t2, Channel):
        out: CPMap = Channel(kraus, atol=10 * TP_TOL)
    else:
        out = CPMap(kraus)
    if len(kraus) > _max_kraus(out.dim_in, out.dim_out):
        out = out.simplified()
    return out


def tensor_power(t: CPMap, n: int) -> CPMap:
    if n < 1:
        raise ValueError("tensor power needs n >= 1")
    return reduce(tensor, [t] * n)


def compose_super(a: Superoperator, b: Superoperator) -> Superoperator:
    """Choi matrix of a o b (apply ``b`` first)."""
    if b.dim_out != a.dim_in:
        raise DimensionError(f"cannot compose: {b.dim_out}-dim output into {a.dim_in}-dim input")
    return Superoperator.from_natural(a.natural() @ b.natural(), b.dim_in, a.dim_out)


def tensor_super(a: Superoperator, b: Superoperator) -> Superoperator:
    j = np.einsum("aibj,ckdl->acikbdjl", a.choi4, b.choi4)
    din, dout = a.dim_in * b.dim_in, a.dim_out * b.dim_out
    return Superoperator(j.reshape(dout * din, dout * din), din, dout)


def difference(a: Superoperator, b: Superoperator) -> Superoperator:
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise DimensionError("superoperators act between different spaces")
    return Superoperator(a.choi - b.choi, a.dim_in, a.dim_out)


def identity_super(d: int) -> Superoperator:
    v = np.eye(d, dtype=complex).reshape(-1)
    return Superoperator(np.outer(v, v), d, d)


def transposition_map(d: int) -> Superoperator:
    """Matrix transposition in the computational basis; its Choi matrix is the flip."""
    return Superoperator(ops.flip_operator(d), d, d)


# ---------------------------------------------------------------------------
# Concrete channels
# ---------------------------------------------------------------------------


def identity_channel(d: int) -> Channel:
    return Channel([np.eye(d, dtype=complex)])


def unitary_channel(u) -> Channel:
    u = ops.as_square(u)
    if ops.op_norm(u.conj().T @ u - np.eye(u.shape[0])) > TP_TOL:
        raise ValidationError("matrix is not unitary")
    return Channel([u])


def pinch_channel(d: int, psi1=None) -> Channel:
    """rho -> P+ rho P+ + P- rho P- with P+ = |psi1><psi1| (default |0>)."""
    if d < 2:
        raise DimensionError("pinching needs d >= 2")
    psi1 = ops.basis_vector(d, 0) if psi1 is None else ops.unit_vector(psi1)
    if psi1.size != d:
        raise DimensionError("projector axis has the wrong dimension")
    p_plus = ops.projector(psi1)
    return Channel([p_plus, np.eye(d) - p_plus])


def _weyl_operators(d: int) -> list[np.ndarray]:
    """The d^2 unitary clock-and-shift operators (Pauli matrices for d = 2)."""
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) for a in range(d) for b in range(d)]


def depolarizing_channel(d: int, p: float) -> Channel:
    """rho -> (1 - p) rho + p tr(rho) 1/d, as a Kraus mixture of Weyl unitaries."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError("depolarizing parameter must lie in [0, 1]")
    weyl = _weyl_operators(d)
    weights = [1 - p + p / d**2] + [p / d**2] * (d**2 - 1)
    kraus = [np.sqrt(w) * u for w, u in zip(weights, weyl) if w > 0]
    return Channel(kraus)


def random_channel(dim_in: int, dim_out: int, kraus_rank: int, rng: np.random.Generator) -> Channel:
    """Random channel from a Haar isometry C^dim_in -> C^dim_out (x) C^kraus_rank.

    Tracing out the environment of an exact isometry guarantees an exact CPTP map.
    """
    if dim_out * kraus_rank < dim_in:
        raise DimensionError(f"Kraus rank {kraus_rank} too small to dilate C^{dim_in} into C^{dim_out}")
    v = ops.haar_isometry(dim_out * kraus_rank, dim_in, rng)
    v = v.reshape(dim_out, kraus_rank, dim_in)
    return Channel([v[:, k, :] for k in range(kraus_rank)])


# ---------------------------------------------------------------------------
# Coding constructions
# ---------------------------------------------------------------------------


def ideal_embed_encoder(m: int, n: int) -> Channel:
    """Embed C^m into C^n (m <= n) by padding with zeros."""
    if m > n:
        raise DimensionError(f"cannot embed C^{m} into C^{n}")
    return Channel([np.eye(n, m, dtype=complex)])


def ideal_restrict_decoder(n: int, m: int) -> Channel:
    """rho -> P rho P + tr((1 - P) rho)/m * P for the projection P onto C^m within C^n."""
    if m > n:
        raise DimensionError(f"cannot restrict C^{n} to a larger space C^{m}")
    kraus = [np.eye(m, n, dtype=complex)]
    for c in range(m, n):
        for a in range(m):
            k = np.zeros((m, n), dtype=complex)
            k[a, c] = 1 / np.sqrt(m)
            kraus.append(k)
    return Channel(kraus)


def _check_isometry(v) -> np.ndarray:
    v = ops.as_matrix(v)
    if v.shape[1] > v.shape[0] or ops.op_norm(v.conj().T @ v - np.eye(v.shape[1])) > TP_TOL:
        raise ValidationError("matrix is not an isometry (V*V != 1)")
    return v


def _complement_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) of the orthocomplement of range(v)."""
    rows, cols = v.shape
    if cols == rows:
        return np.zeros((rows, 0), dtype=complex)
    q, _ = np.linalg.qr(np.hstack([v, np.eye(rows, dtype=complex)]))
    return q[:, cols:rows]


def isometric_encoder(v) -> Channel:
    """rho -> V rho V* for an isometry V."""
    return Channel([_check_isometry(v)])


def homomorphic_decoder(v, rho0) -> Channel:
    """Schrodinger-picture decoder whose Heisenberg form is

        X -> V (X (x) 1) V* + tr(rho0 X) (1 - V V*).

    ``V`` maps C^h (x) C^a into the channel output space C^k (``h`` is the
    dimension of ``rho0``); the Schrodinger map is
    sigma -> tr_a(V* sigma V) + tr((1 - V V*) sigma) rho0.
    """
    v = _check_isometry(v)
    rho0 = ops.density_operator(rho0)
    h = rho0.shape[0]
    k, ha = v.shape
    if ha % h:
        raise DimensionError(f"isometry input {ha} is not a multiple of the decoded dimension {h}")
    a = ha // h
    vd = v.conj().T.reshape(h, a, k)
    kraus = [vd[:, j, :] for j in range(a)]
    comp = _complement_basis(v)
    evals, evecs = np.linalg.eigh(rho0)
    for p, e in zip(evals, evecs.T):
        if p <= ops.EIG_CLAMP:
            continue
        for c in range(comp.shape[1]):
            kraus.append(np.sqrt(p) * np.outer(e, comp[:, c].conj()))
    return Channel(kraus)


@dataclass(frozen=True)
class CodingScheme:
    """Encoder/decoder pair around ``block_uses`` parallel uses of a channel."""

    encoder: Channel
    decoder: Channel
    block_uses: int
    code_dim: int

    def __post_init__(self):
        if self.block_uses < 1 or self.code_dim < 1:
            raise ValidationError("block_uses and code_dim must be positive")
        if self.encoder.dim_in != self.code_dim or self.decoder.dim_out != self.code_dim:
            raise DimensionError("encoder input and decoder output must both be the code space")

    def check_chain(self, t: CPMap) -> None:
        if self.encoder.dim_out != t.dim_in**self.block_uses:
            raise DimensionError(
                f"encoder output {self.encoder.dim_out} != channel input {t.dim_in}^{self.block_uses}"
            )
        if self.decoder.dim_in != t.dim_out**self.block_uses:
            raise DimensionError(
                f"decoder input {self.decoder.dim_in} != channel output {t.dim_out}^{self.block_uses}"
            )

    def corrected(self, t: CPMap) -> CPMap:
        """D o T^{(x)n} o E."""
        self.check_chain(t)
        return compose(self.decoder, compose(tensor_power(t, self.block_uses), self.encoder))


# ---------------------------------------------------------------------------
# Instruments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instrument:
    """Discrete family of CP maps whose sum is a channel."""

    branches: tuple

    def __init__(self, branches: Sequence[CPMap]):
        branches = tuple(b if isinstance(b, CPMap) else CPMap(b) for b in branches)
        if not branches:
            raise ValidationError("an instrument needs at least one branch")
        din, dout = branches[0].dim_in, branches[0].dim_out
        if any((b.dim_in, b.dim_out) != (din, dout) for b in branches):
            raise DimensionError("instrument branches act between different spaces")
        object.__setattr__(self, "branches", branches)
        instrument_sum(self)

    def __len__(self) -> int:
        return len(self.branches)


def instrument_sum(inst: Instrument) -> Channel:
    """The channel obtained by forgetting the classical outcome."""
    return Channel([k for b in inst.branches for k in b.kraus])


def branch_weight(inst: Instrument, label: int, rho) -> float:
    """Probability tr E_label(rho) of observing branch ``label``."""
    rho = ops.density_operator(rho)
    return float(np.trace(inst.branches[label](rho)).real)
