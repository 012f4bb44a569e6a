"""Energy, power and heat exchange, entropy rate and its exchange/production split."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .config import TOL, UNIT
from .errors import (ConstitutiveViolation, InvalidProtocol, InvalidState,
                     InvalidTemperature, NumericalInconsistency)
from .operators import as_matrix
from .state import check_rate, log_weights

SCALAR_FIELDS = ("t", "E", "Wdot", "Qdot", "S", "Sdot", "Xi", "Sigma", "Theta")


@dataclass(frozen=True, eq=False)
class ThermoRecord:
    t: float
    E: float
    Wdot: float
    Qdot: float
    S: float
    Sdot: float
    Xi: float
    Sigma: float
    Theta: float
    fI: np.ndarray = field(repr=False)
    fII: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)

    def violations(self) -> list[str]:
        bad = []
        if self.Sigma < -TOL.sigma_slack:
            bad.append("entropy-production")
        if abs(self.Sdot - self.Xi - self.Sigma) > TOL.balance * max(1.0, abs(self.Sdot)):
            bad.append("entropy-balance")
        if np.max(np.abs(self.f - self.fI - self.fII), initial=0.0) > TOL.map_symmetry:
            bad.append("force-sum")
        return bad

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in SCALAR_FIELDS)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("fI", "fII", "f"):
            d[k] = [float(x) for x in d[k]]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ThermoRecord":
        kw = {k: float(d[k]) for k in SCALAR_FIELDS}
        kw.update({k: np.asarray(d[k], dtype=float) for k in ("fI", "fII", "f")})
        return cls(**kw)


def energy(H, rho) -> float:
    """E = Tr(H rho)."""
    r = as_matrix(rho)
    tr = np.trace(r)
    if abs(tr - 1.0) > TOL.trace:
        raise InvalidState(f"density operator has trace {tr!r}")
    e = np.sum(as_matrix(H) * r.T)
    if abs(e.imag) > TOL.imag_error:
        raise NumericalInconsistency(f"Tr(H rho) has imaginary part {e.imag:.3e}")
    return float(e.real)


def generalized_forces(dH_da, rho) -> np.ndarray:
    r = as_matrix(rho)
    out = np.array([np.sum(as_matrix(d) * r.T) for d in dH_da], dtype=complex)
    if out.size and np.max(np.abs(out.imag)) > TOL.imag_error:
        raise NumericalInconsistency("generalized force is not real")
    return out.real


def power_exchange(dH_da, rho, adot) -> float:
    """Wdot = sum_m Tr(dH/da_m rho) adot_m."""
    adot = np.atleast_1d(np.asarray(adot, dtype=float))
    if len(dH_da) != adot.size:
        raise InvalidProtocol(f"{len(dH_da)} derivative operators for {adot.size} work rates")
    if adot.size == 0:
        return 0.0
    return float(generalized_forces(dH_da, rho) @ adot)


def heat_exchange(h, pdot) -> float:
    """Qdot = sum_j pdot_j h_j."""
    return float(np.dot(check_rate(pdot), np.asarray(h, dtype=float)))


def force_I(p, Z: float | None = None, kB: float = UNIT.kB) -> np.ndarray:
    return log_weights(p, Z, kB)


def force_II(h, Theta: float) -> np.ndarray:
    if not Theta > 0:
        raise InvalidTemperature(f"contact temperature must be positive, got {Theta!r}")
    return np.asarray(h, dtype=float) / Theta


def entropy_rate(pdot, fI) -> float:
    """Sdot = -pdot . f^I (independent of Z because sum pdot = 0)."""
    return float(-np.dot(check_rate(pdot), fI))


def entropy_exchange(pdot_ex, fII) -> float:
    return float(np.dot(check_rate(pdot_ex), fII))


def entropy_production(pdot_iso, fI, strict: bool = False) -> float:
    """Sigma = -pdot_iso . f^I.

    With ``strict`` a value below the numerical slack raises, which is how the
    default closure reports a broken map.
    """
    sigma = float(-np.dot(check_rate(pdot_iso), fI))
    if strict and sigma < -TOL.sigma_slack:
        raise ConstitutiveViolation(f"negative entropy production {sigma!r}")
    return sigma


def first_law_residual(prev: ThermoRecord, cur: ThermoRecord, nxt: ThermoRecord) -> float:
    """|centered dE/dt - (Wdot + Qdot)| at the middle record."""
    dE = (nxt.E - prev.E) / (nxt.t - prev.t)
    return abs(dE - (cur.Wdot + cur.Qdot))


def entropy_rate_fd(prev: ThermoRecord, nxt: ThermoRecord) -> float:
    """Centered difference of S, kept as a diagnostic next to the algebraic rate."""
    return (nxt.S - prev.S) / (nxt.t - prev.t)
