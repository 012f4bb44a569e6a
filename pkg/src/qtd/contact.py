"""Contact temperature.

The contact temperature is the reservoir temperature at which the heat flux
into the system changes sign.  Under the reciprocal-temperature Fourier flux
used by the dynamics that is the temperature whose canonical mean energy
equals the current mean energy ``p . h``; it is found by bracketed bisection
in the inverse temperature followed by a safeguarded Newton polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import TOL, UNIT
from .errors import (DegenerateSpectrum, GroundStateDomain, InversionDomain,
                     UndefinedAtEquilibrium)
from .operators import HermitianOperator, eigendecompose

CANONICAL_MATCH = "canonical-energy-match"
EXCHANGE_RATIO = "exchange-ratio"
PRESCRIBED = "prescribed"


@dataclass(frozen=True)
class ContactTemperature:
    Theta: float
    method: str = CANONICAL_MATCH

    def __post_init__(self):
        if not (self.Theta > 0 and math.isfinite(self.Theta)):
            raise ValueError(f"contact temperature must be positive and finite, got {self.Theta!r}")

    def __float__(self):
        return self.Theta


def _moments(eps: np.ndarray, x: float) -> tuple[float, float]:
    """Canonical mean and variance of the shifted energies ``eps >= 0`` at inverse temperature x."""
    w = np.exp(-x * eps)
    z = w.sum()
    m = (w @ eps) / z
    v = (w @ (eps - m) ** 2) / z
    return m, v


def canonical_mean_energy(h, T: float, kB: float = UNIT.kB) -> float:
    h = np.asarray(h, dtype=float)
    m, _ = _moments(h - h.min(), 1.0 / (kB * T))
    return m + h.min()


def contact_temperature(h, p, kB: float = UNIT.kB) -> ContactTemperature:
    """Temperature whose canonical mean energy over ``h`` equals ``p . h``.

    ``h`` may also be a Hermitian operator; its eigenvalues are used and ``p``
    is read in the ascending eigenbasis.
    """
    if isinstance(h, HermitianOperator):
        h, _ = eigendecompose(h)
    h = np.asarray(h, dtype=float)
    p = np.asarray(p, dtype=float)
    lo, hi = h.min(), h.max()
    span = hi - lo
    if span <= 1e-12 * max(1.0, abs(hi)):
        raise DegenerateSpectrum("all energies coincide; no heat can be exchanged")
    eps = (h - lo) / span  # dimensionless, in [0, 1]
    target = float(p @ eps)
    mean_inf = float(eps.mean())
    if target >= mean_inf:
        raise InversionDomain(
            f"mean energy is not below the uniform average ({target * span + lo!r} >= "
            f"{mean_inf * span + lo!r}); no positive contact temperature"
        )
    if target <= 0.0:
        raise GroundStateDomain("mean energy equals the ground-state energy")

    # x = span / (kB T); canonical mean is strictly decreasing in x
    def g(x):
        m, v = _moments(eps, x)
        return m - target, v

    x_lo, x_hi = 1e-6, 1e6
    g_lo, _ = g(x_lo)
    g_hi, _ = g(x_hi)
    if g_lo < 0 or g_hi > 0:
        # outside the guaranteed bracket: energy within 1e-6 of a limit
        raise (InversionDomain if g_lo < 0 else GroundStateDomain)(
            "mean energy outside the representable temperature range"
        )
    # geometric bisection until the bracket spans less than a factor 1.5
    while x_hi / x_lo > 1.5:
        mid = math.sqrt(x_lo * x_hi)
        gm, _ = g(mid)
        if gm > 0:
            x_lo = mid
        else:
            x_hi = mid
    x = math.sqrt(x_lo * x_hi)
    last = math.inf
    for _ in range(200):
        gx, var = g(x)
        if gx > 0:
            x_lo = x
        else:
            x_hi = x
        x_new = x + gx / var if var > 0 else math.inf
        if not (x_lo < x_new < x_hi):
            x_new = 0.5 * (x_lo + x_hi)
        last = abs(x_new - x)
        x = x_new
        if last <= 1e-10 * x:
            break
    # quadratic regime: plain Newton down to round-off
    for _ in range(4):
        gx, var = g(x)
        if var <= 0:
            break
        last = abs(gx / var)
        x += gx / var
        if last <= 4 * np.finfo(float).eps * x:
            break
    if last > TOL.theta_rtol * x:
        raise ArithmeticError(f"contact temperature did not converge (last step {last / x:.2e})")
    return ContactTemperature(span / (kB * x), CANONICAL_MATCH)


def theta_from_exchange(pdot_ex, fI, h, kB: float = UNIT.kB) -> ContactTemperature:
    """Reciprocal temperature as the ratio -(pdot_ex . f^I)/(pdot_ex . h).

    ``fI`` already carries the factor kB; the argument is kept for symmetry
    with the other constructors.
    """
    pdot_ex = np.asarray(pdot_ex, dtype=float)
    den = float(pdot_ex @ np.asarray(h, dtype=float))
    if abs(den) <= TOL.theta_denominator:
        raise UndefinedAtEquilibrium("Tr(H rho_ex) vanishes; the ratio is undefined")
    inv = -float(pdot_ex @ np.asarray(fI, dtype=float)) / den
    if not inv > 0:
        raise UndefinedAtEquilibrium(f"ratio gives non-positive reciprocal temperature {inv!r}")
    return ContactTemperature(1.0 / inv, EXCHANGE_RATIO)


def contact_inequality_check(Qdot: float, Theta: float, Tbox: float) -> float:
    """Qdot (1/Theta - 1/Tbox); non-negative for an admissible flux model."""
    return float(Qdot) * (1.0 / Theta - 1.0 / Tbox)
