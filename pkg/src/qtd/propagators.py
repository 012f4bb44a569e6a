"""Constitutive closure of the weight rates.

The isolated part is ``pdot_iso = B f^I`` with a symmetric, negative
semi-definite, singular map ``B`` whose kernel contains ``e`` (trace) and
``h`` (energy).  The exchange part is the minimum-norm vector ``x`` with

    e.x = 0,   f.x = 0,   h.x = Qdot

which is then certified by the antisymmetric ``A = (x f^T - f x^T)/(f.f)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import ConstitutiveViolation, DegenerateSystem, InfeasibleExchange

# relative size below which a direction is treated as numerically zero
_SPAN_RTOL = 1e-10


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _span_basis(vectors, rtol: float = _SPAN_RTOL) -> np.ndarray:
    """Orthonormal columns spanning the given vectors (modified Gram-Schmidt, two passes)."""
    cols = []
    for v in vectors:
        w = np.array(v, dtype=float)
        scale = np.linalg.norm(w)
        if scale == 0:
            continue
        for _ in range(2):
            for q in cols:
                w -= (q @ w) * q
        if np.linalg.norm(w) > rtol * scale:
            cols.append(w / np.linalg.norm(w))
    n = len(vectors[0])
    return np.column_stack(cols) if cols else np.zeros((n, 0))


@dataclass(frozen=True, eq=False)
class IrreversibilityMap:
    B: np.ndarray
    beta: float
    kernel: np.ndarray | None = None  # orthonormal basis of the protected span

    def __post_init__(self):
        object.__setattr__(self, "B", _frozen(self.B))

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    def violations(self, h=None) -> list[str]:
        B = self.B
        out = []
        scale = max(1.0, float(np.max(np.abs(B), initial=0.0)))
        if np.max(np.abs(B - B.T), initial=0.0) > TOL.map_symmetry * scale:
            out.append("symmetric")
        if np.linalg.eigvalsh(0.5 * (B + B.T)).max() > TOL.map_kernel * scale:
            out.append("negative-semidefinite")
        e = np.ones(self.dim)
        if np.linalg.norm(B @ e) > TOL.map_kernel * scale * np.sqrt(self.dim):
            out.append("kernel-contains-e")
        if h is not None:
            h = np.asarray(h, dtype=float)
            if np.linalg.norm(B @ h) > TOL.map_kernel * scale * max(1.0, np.linalg.norm(h)):
                out.append("kernel-contains-h")
        return out

    def validate(self, h=None) -> "IrreversibilityMap":
        bad = self.violations(h)
        if bad:
            raise ConstitutiveViolation("irreversibility map violates: " + ", ".join(bad))
        return self


def build_irreversibility_map(h, beta: float) -> IrreversibilityMap:
    """B = -beta * (I - P) where P projects onto span{e, h}."""
    h = np.asarray(h, dtype=float)
    n = h.size
    if n < 2:
        raise DegenerateSystem("a one-level system has no irreversible dynamics")
    if not beta >= 0:
        raise ValueError(f"beta must be non-negative, got {beta!r}")
    Q = _span_basis([np.ones(n), h])
    comp = np.eye(n) - Q @ Q.T
    B = -beta * 0.5 * (comp + comp.T)
    return IrreversibilityMap(B, float(beta), _frozen(Q))


def custom_irreversibility_map(B, h=None) -> IrreversibilityMap:
    """Wrap a user-supplied matrix after checking every constitutive constraint."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ConstitutiveViolation(f"B must be square, got shape {B.shape}")
    beta = float(-np.linalg.eigvalsh(0.5 * (B + B.T)).min()) if B.size else 0.0
    return IrreversibilityMap(B, beta).validate(h)


def iso_rate(bmap: IrreversibilityMap, fI) -> np.ndarray:
    """pdot_iso = B f^I."""
    fI = np.asarray(fI, dtype=float)
    if bmap.kernel is not None:
        # same as B @ fI, but exactly orthogonal to the kernel
        Q = bmap.kernel
        r = fI - Q @ (Q.T @ fI)
        r = r - Q @ (Q.T @ r)
        return -bmap.beta * r
    x = bmap.B @ fI
    return x - x.mean()


@dataclass(frozen=True, eq=False)
class ExchangeConstruction:
    Qdot: float
    pdot_ex: np.ndarray
    A: np.ndarray | None  # None when f vanished and no realization exists

    def __post_init__(self):
        object.__setattr__(self, "pdot_ex", _frozen(self.pdot_ex))
        if self.A is not None:
            object.__setattr__(self, "A", _frozen(self.A))


def exchange_rate(f, h, Qdot: float) -> ExchangeConstruction:
    """Minimum-norm exchange rate carrying heat flux ``Qdot`` orthogonal to ``f`` and ``e``."""
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    n = h.size
    if Qdot == 0.0:
        return ExchangeConstruction(0.0, np.zeros(n), np.zeros((n, n)))
    hc = h - h.mean()
    fc = f - f.mean()
    # below this the direction of fc is round-off; dropping it keeps |x.f| within 1e-13 |x| |f|
    keep_f = np.linalg.norm(fc) > 1e-13 * np.linalg.norm(f) + 1e-15
    w = hc.copy()
    if keep_f:
        u = fc / np.linalg.norm(fc)
        for _ in range(2):
            w -= (u @ w) * u
    hscale = max(np.linalg.norm(hc), np.abs(h).max(initial=0.0))
    if np.linalg.norm(w) <= _SPAN_RTOL * hscale or hscale == 0.0:
        raise InfeasibleExchange(
            "energy vector lies in span{e, f}: no exchange rate can carry heat "
            "while keeping pdot_ex . f = 0"
        )
    x = Qdot * w / (w @ w)
    x -= x.mean()
    if not np.any(f):
        return ExchangeConstruction(float(Qdot), x, None)
    A = (np.outer(x, f) - np.outer(f, x)) / (f @ f)
    return ExchangeConstruction(float(Qdot), x, A)


@dataclass(frozen=True, eq=False)
class PropagatorSplit:
    pdot_iso: np.ndarray
    pdot_ex: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pdot_iso", _frozen(self.pdot_iso))
        object.__setattr__(self, "pdot_ex", _frozen(self.pdot_ex))

    @property
    def pdot(self) -> np.ndarray:
        return self.pdot_iso + self.pdot_ex


def isolate(split: PropagatorSplit) -> PropagatorSplit:
    """An isolating partition removes the exchange part and leaves the rest alone."""
    return PropagatorSplit(split.pdot_iso, np.zeros_like(split.pdot_ex))
