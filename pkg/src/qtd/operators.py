"""Dense Hermitian operator algebra on a finite-dimensional Hilbert space.

All value types hold read-only numpy arrays so they can be shared freely.
The matrix exponential goes through the eigendecomposition, which is exact
for Hermitian generators and keeps the canonical operator well conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TOL, UNIT, PhysicalConstants
from .errors import InvalidOperator, InvalidState


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Self-adjoint N x N complex matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidOperator(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidOperator("matrix has non-finite entries")
        dev = np.abs(m - m.conj().T)
        scale = max(1.0, float(np.max(np.abs(m))))
        if dev.max() > TOL.hermitian * scale:
            j, k = np.unravel_index(int(np.argmax(dev)), dev.shape)
            raise InvalidOperator(
                f"matrix is not Hermitian: |H[{j},{k}] - conj(H[{k},{j}])| = {dev[j, k]:.3e}"
            )
        # store the exactly Hermitian part
        object.__setattr__(self, "matrix", _frozen(0.5 * (m + m.conj().T)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def diag(cls, values) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def zeros(cls, n: int) -> "HermitianOperator":
        return cls(np.zeros((n, n)))

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix + as_matrix(other))

    def __mul__(self, c: float) -> "HermitianOperator":
        return HermitianOperator(self.matrix * float(c))

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """N orthonormal column vectors; ``vectors[:, j]`` is the j-th state."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InvalidState(f"basis must be N x N, got shape {v.shape}")
        err = gram_error(v)
        if err > TOL.orthonormal:
            raise InvalidState(f"basis is not orthonormal (Gram deviation {err:.3e})")
        object.__setattr__(self, "vectors", _frozen(v))

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def standard(cls, n: int) -> "OrthonormalBasis":
        return cls(np.eye(n, dtype=complex))

    def __getitem__(self, j: int) -> np.ndarray:
        return self.vectors[:, j]

    def __repr__(self):
        return f"OrthonormalBasis(dim={self.dim})"


def as_matrix(H) -> np.ndarray:
    if isinstance(H, HermitianOperator):
        return H.matrix
    return np.asarray(H, dtype=complex)


def as_hermitian(H) -> HermitianOperator:
    return H if isinstance(H, HermitianOperator) else HermitianOperator(H)


def gram_error(vectors: np.ndarray) -> float:
    """Max-abs deviation of the Gram matrix from the identity."""
    v = np.asarray(vectors)
    g = v.conj().T @ v
    return float(np.max(np.abs(g - np.eye(v.shape[1]))))


def reorthonormalize(vectors: np.ndarray) -> np.ndarray:
    """Nearest matrix with orthonormal columns (polar factor)."""
    u, _, vh = np.linalg.svd(np.asarray(vectors), full_matrices=False)
    return u @ vh


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # first component of maximal modulus made real positive
    mags = np.abs(v)
    k = int(np.argmax(mags > mags.max() * (1 - 1e-8)))
    return v * (abs(v[k]) / v[k])


def _canonical_cluster_basis(V: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(V) by Gram-Schmidt on projected e_0, e_1, ..."""
    n, m = V.shape
    P = V @ V.conj().T
    out = []
    for k in range(n):
        w = P[:, k].copy()
        for u in out:
            w -= (u.conj() @ w) * u
        for u in out:  # second pass for stability
            w -= (u.conj() @ w) * u
        nrm = np.linalg.norm(w)
        if nrm > 1e-6:
            out.append(w / nrm)
            if len(out) == m:
                break
    return np.column_stack(out)


def eigendecompose(H) -> tuple[np.ndarray, OrthonormalBasis]:
    """Ascending eigenvalues and a reproducible orthonormal eigenbasis.

    Degenerate clusters (gap below ``TOL.degenerate_gap``) are re-orthonormalized
    against the canonical coordinates so repeated runs give identical vectors.
    """
    H = as_hermitian(H)
    lam, V = np.linalg.eigh(H.matrix)
    V = V.astype(complex)
    n = len(lam)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and lam[stop] - lam[stop - 1] < TOL.degenerate_gap:
            stop += 1
        if stop - start > 1:
            V[:, start:stop] = _canonical_cluster_basis(V[:, start:stop])
        else:
            V[:, start] = _fix_phase(V[:, start])
        start = stop
    return _frozen(lam), OrthonormalBasis(V)


def unitary(H, dt: float, constants: PhysicalConstants = UNIT) -> np.ndarray:
    """exp(-i H dt / hbar) through the eigendecomposition."""
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    m = as_matrix(H)
    lam, V = np.linalg.eigh(0.5 * (m + m.conj().T))
    phase = np.exp(-1j * lam * (dt / constants.hbar))
    return (V * phase) @ V.conj().T


def evolve_basis(H, basis: OrthonormalBasis, dt: float,
                 constants: PhysicalConstants = UNIT) -> OrthonormalBasis:
    """Advance every basis vector by the Schrodinger propagator with H frozen over dt."""
    return OrthonormalBasis(unitary(H, dt, constants) @ basis.vectors)


def expectation(H, v) -> float:
    """<v|H v> for a unit vector ``v``."""
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > TOL.unit_norm:
        raise InvalidState(f"vector norm {nrm!r} is not 1")
    val = np.vdot(v, as_matrix(H) @ v)
    if abs(val.imag) > TOL.imag_error:
        raise InvalidOperator(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def diagonal_in(H, basis: OrthonormalBasis) -> np.ndarray:
    """The vector h_j = <Phi^j|H Phi^j> over all basis vectors."""
    V = basis.vectors
    d = np.einsum("ij,ij->j", V.conj(), as_matrix(H) @ V)
    if np.max(np.abs(d.imag), initial=0.0) > TOL.imag_error:
        raise InvalidOperator("diagonal elements are not real")
    return d.real


def commutator(A, B) -> np.ndarray:
    a, b = as_matrix(A), as_matrix(B)
    return a @ b - b @ a


def reassemble(eigenvalues, basis: OrthonormalBasis) -> np.ndarray:
    V = basis.vectors
    return (V * np.asarray(eigenvalues)) @ V.conj().T
