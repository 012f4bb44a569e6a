"""Named numerical tolerances and physical constants."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    real_eigen: float = 1e-10
    eigen_residual: float = 1e-9
    orthonormal: float = 1e-10
    basis_drift: float = 1e-13
    degenerate_gap: float = 1e-9
    unit_norm: float = 1e-10
    imag_discard: float = 1e-10
    imag_error: float = 1e-8
    simplex: float = 1e-12
    trace: float = 1e-10
    rate_sum: float = 1e-12
    weight_floor: float = 1e-12
    sigma_slack: float = 1e-10
    balance: float = 1e-9
    exchange: float = 1e-10
    map_symmetry: float = 1e-12
    map_kernel: float = 1e-12
    theta_rtol: float = 1e-12
    theta_denominator: float = 1e-14
    equilibrium: float = 1e-8
    renorm_drift: float = 1e-12
    reject_sigma: float = 1e-8
    reject_simplex: float = 1e-8
    max_halvings: int = 40


TOL = Tolerances()


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.kB > 0):
            raise ValueError("hbar and kB must be strictly positive")


UNIT = PhysicalConstants()
