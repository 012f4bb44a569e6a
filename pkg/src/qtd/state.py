"""Weights over a moving orthonormal basis, the density operator, Shannon entropy."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import TOL, UNIT
from .errors import InvalidRate, InvalidState
from .operators import HermitianOperator, OrthonormalBasis

log = logging.getLogger(__name__)


def check_simplex(p, tol: float = TOL.simplex) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise InvalidState("weights must be a non-empty vector")
    if not np.all(np.isfinite(p)):
        raise InvalidState("weights contain non-finite values")
    if p.min() < -tol or p.max() > 1 + tol:
        raise InvalidState(f"weights outside [0, 1]: min={p.min()!r}, max={p.max()!r}")
    s = p.sum()
    if abs(s - 1.0) > tol:
        raise InvalidState(f"weights sum to {s!r}, not 1")
    return p


def check_rate(pdot, tol: float = TOL.rate_sum) -> np.ndarray:
    pdot = np.asarray(pdot, dtype=float)
    s = pdot.sum()
    if abs(s) > tol * max(1.0, float(np.abs(pdot).sum())):
        raise InvalidRate(f"weight rates sum to {s!r}, not 0")
    return pdot


@dataclass(frozen=True, eq=False)
class DensityState:
    """rho = sum_j p_j |Phi^j><Phi^j| with normalization parameter Z (default N)."""

    basis: OrthonormalBasis
    weights: np.ndarray
    Z: float | None = None
    clamp_events: int = field(default=0, compare=False)

    def __post_init__(self):
        p = check_simplex(self.weights)
        if p.size != self.basis.dim:
            raise InvalidState(f"{p.size} weights for a {self.basis.dim}-dimensional basis")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "weights", p)
        Z = float(p.size) if self.Z is None else float(self.Z)
        if not (Z > 0 and np.isfinite(Z)):
            raise InvalidState(f"Z must be a positive real, got {self.Z!r}")
        object.__setattr__(self, "Z", Z)

    @property
    def dim(self) -> int:
        return self.weights.size

    def with_weights(self, p, clamp_events: int = 0) -> "DensityState":
        return DensityState(self.basis, p, self.Z, self.clamp_events + clamp_events)

    def with_basis(self, basis: OrthonormalBasis) -> "DensityState":
        return DensityState(basis, self.weights, self.Z, self.clamp_events)


def assemble_density(state: DensityState) -> HermitianOperator:
    V = state.basis.vectors
    return HermitianOperator((V * state.weights) @ V.conj().T)


def assemble_propagator(basis: OrthonormalBasis, rate) -> HermitianOperator:
    """The traceless operator sum_j pdot_j |Phi^j><Phi^j|."""
    pdot = check_rate(rate)
    V = basis.vectors
    return HermitianOperator((V * pdot) @ V.conj().T)


def shannon_entropy(p, kB: float = UNIT.kB) -> float:
    p = check_simplex(p)
    nz = p[p > 0]
    return float(-kB * np.sum(nz * np.log(nz)))


def log_weights(p, Z: float | None = None, kB: float = UNIT.kB,
                floor: float = TOL.weight_floor) -> np.ndarray:
    """kB ln(Z p_j), with p_j clamped to ``floor`` first (logged)."""
    p = np.asarray(p, dtype=float)
    Z = float(p.size) if Z is None else float(Z)
    if not Z > 0:
        raise InvalidState(f"Z must be positive, got {Z!r}")
    low = p < floor
    if low.any():
        log.debug("log_weights: clamped %d weight(s) to %g", int(low.sum()), floor)
        p = np.where(low, floor, p)
    return kB * np.log(Z * p)
