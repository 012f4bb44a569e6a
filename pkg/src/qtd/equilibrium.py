"""Equilibrium constructors, equilibrium detection and process classification."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .config import TOL, UNIT
from .errors import DegenerateSystem, InvalidTemperature
from .operators import HermitianOperator, commutator, eigendecompose
from .state import assemble_density

ISOLATED_EQUILIBRIUM = "isolated-equilibrium"
CLOSED_EQUILIBRIUM = "closed-equilibrium"
CLOSED_CANDIDATE = "closed-equilibrium-candidate"
REVERSIBLE_POINT = "reversible-point"
IRREVERSIBLE = "irreversible"
CONVENTIONAL_QM = "conventional-QM"

EQUILIBRIA = (ISOLATED_EQUILIBRIUM, CLOSED_EQUILIBRIUM, CLOSED_CANDIDATE)


def microcanonical(n: int) -> np.ndarray:
    if n < 1:
        raise DegenerateSystem("need at least one level")
    return np.full(n, 1.0 / n)


def canonical(H, T: float, kB: float = UNIT.kB):
    """Canonical operator exp(-H/kB T)/Z.

    Returns ``(rho, Z, p, basis)`` where ``p`` are Boltzmann weights in the
    ascending eigenbasis.  Energies are shifted by the ground level before
    exponentiation; ``Z`` is reported for the unshifted spectrum.
    """
    if not T > 0:
        raise InvalidTemperature(f"temperature must be positive, got {T!r}")
    lam, basis = eigendecompose(H)
    shifted = np.exp(-(lam - lam[0]) / (kB * T))
    zs = shifted.sum()
    p = shifted / zs
    log_z = np.log(zs) - lam[0] / (kB * T)
    V = basis.vectors
    rho = HermitianOperator((V * p) @ V.conj().T)
    return rho, float(np.exp(log_z)), p, basis


def canonical_weights(h, T: float, kB: float = UNIT.kB) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    w = np.exp(-(h - h.min()) / (kB * T))
    return w / w.sum()


@dataclass(frozen=True)
class EquilibriumReport:
    adot_zero: bool
    rho_dot_zero: bool
    pdot_zero: bool
    pdot_iso_zero: bool
    f_zero: bool
    fI_zero: bool
    commutator_norm: float
    theta_matches_tbox: bool | None
    classification: str

    @property
    def is_equilibrium(self) -> bool:
        return self.classification in EQUILIBRIA

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EquilibriumReport":
        return cls(**d)


def _inf_norm(x) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x), initial=0.0))


def detect_equilibrium(state, split, adot, fI, f, H, rho=None, theta=None, tbox=None,
                       isolated: bool = False, tol: float = TOL.equilibrium,
                       hbar: float = UNIT.hbar, sigma_tol: float | None = None) -> EquilibriumReport:
    """Check every equilibrium condition at one trajectory instant.

    ``f`` is judged up to the free normalization Z: a constant vector counts
    as vanishing, since a different Z removes it.  ``fI`` is judged as given.
    """
    pdot = split.pdot
    if rho is None:
        rho = assemble_density(state)
    comm = commutator(H, rho)
    cnorm = float(np.linalg.norm(comm, 2))
    V = state.basis.vectors
    rho_dot = -1j / hbar * comm + (V * pdot) @ V.conj().T
    flags = dict(
        adot_zero=_inf_norm(adot) <= tol,
        rho_dot_zero=float(np.linalg.norm(rho_dot, 2)) <= tol,
        pdot_zero=_inf_norm(pdot) <= tol,
        pdot_iso_zero=_inf_norm(split.pdot_iso) <= tol,
        f_zero=_inf_norm(np.asarray(f) - np.mean(f)) <= tol,
        fI_zero=_inf_norm(fI) <= tol,
    )
    match = None
    if tbox is not None and theta is not None:
        match = bool(abs(theta - tbox) <= tol)
    elif tbox is not None:
        match = False

    sigma = float(-np.dot(split.pdot_iso, fI))
    stol = tol if sigma_tol is None else sigma_tol
    base = flags["adot_zero"] and flags["pdot_zero"] and flags["pdot_iso_zero"]
    if base and flags["fI_zero"]:
        cls = ISOLATED_EQUILIBRIUM
    elif base and flags["f_zero"] and cnorm <= tol and match is not False:
        cls = CLOSED_CANDIDATE if isolated or match is None else CLOSED_EQUILIBRIUM
    elif flags["pdot_zero"] and _inf_norm(pdot) == 0.0:
        cls = CONVENTIONAL_QM
    elif sigma > stol:
        cls = IRREVERSIBLE
    else:
        cls = REVERSIBLE_POINT
    return EquilibriumReport(commutator_norm=cnorm, theta_matches_tbox=match,
                             classification=cls, **flags)


@dataclass(frozen=True)
class ProcessClass:
    tag: str
    adiabatic: bool

    def __str__(self):
        return f"{self.tag}+adiabatic" if self.adiabatic else self.tag


def classify_process(record, split, adot=(), tol: float = TOL.equilibrium) -> ProcessClass:
    """Reversible / irreversible / conventional-QM tag plus an adiabatic flag."""
    pdot = split.pdot
    driven = _inf_norm(adot) > tol
    adiabatic = driven and abs(record.Qdot) <= tol
    if not np.any(pdot):
        return ProcessClass(CONVENTIONAL_QM, adiabatic)
    if record.Sigma > tol:
        return ProcessClass(IRREVERSIBLE, adiabatic)
    return ProcessClass(REVERSIBLE_POINT, adiabatic)
