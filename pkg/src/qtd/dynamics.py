"""Time integration of the basis (Schrodinger) and weight (constitutive) dynamics.

The basis is advanced with the exact unitary of H(a) frozen at the step
midpoint.  Weights follow ``dp/dt = B f^I(p) + pdot_ex(p)`` with classic RK4;
``h``, ``B`` and the contact temperature are re-evaluated at every stage.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import TOL, UNIT, PhysicalConstants
from .contact import contact_temperature
from .errors import (ContactTemperatureError, InfeasibleExchange, IntegrationFailure,
                     InvalidProtocol, InvalidTemperature)
from .equilibrium import EquilibriumReport, detect_equilibrium
from .operators import (HermitianOperator, OrthonormalBasis, diagonal_in, gram_error,
                        reorthonormalize, unitary)
from .propagators import (IrreversibilityMap, PropagatorSplit, build_irreversibility_map,
                          exchange_rate, iso_rate)
from .state import DensityState, assemble_density, log_weights, shannon_entropy
from .thermo import ThermoRecord, generalized_forces

log = logging.getLogger(__name__)

RESERVOIR = "reservoir"
ISOLATED = "isolated"
ADIABATIC = "adiabatic"
THETA_SLAVED = "theta-slaved"
MODES = (RESERVOIR, ISOLATED, ADIABATIC, THETA_SLAVED)

FOURIER = "fourier"
LINEAR = "linear"


# -- schedules ---------------------------------------------------------------

class Schedule:
    """A vector-valued function of time with its derivative."""

    size: int = 1

    def value(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def rate(self, t: float) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Schedule):
    values: tuple[float, ...]

    @property
    def size(self):
        return len(self.values)

    def value(self, t):
        return np.array(self.values, dtype=float)

    def rate(self, t):
        return np.zeros(len(self.values))


@dataclass(frozen=True)
class Sinusoid(Schedule):
    """offset + amplitude * sin(omega t + phase), one entry per work variable."""

    amplitude: tuple[float, ...]
    omega: tuple[float, ...]
    phase: tuple[float, ...]
    offset: tuple[float, ...]

    @property
    def size(self):
        return len(self.amplitude)

    def value(self, t):
        A, w, ph, c = (np.asarray(x, dtype=float) for x in
                       (self.amplitude, self.omega, self.phase, self.offset))
        return c + A * np.sin(w * t + ph)

    def rate(self, t):
        A, w, ph = (np.asarray(x, dtype=float) for x in (self.amplitude, self.omega, self.phase))
        return A * w * np.cos(w * t + ph)


class Knots(Schedule):
    """Piecewise polynomial through knots: degree 1 (linear) or 3 (cubic spline).

    Held constant outside the knot range.
    """

    def __init__(self, times: Sequence[float], values, degree: int = 3):
        from scipy.interpolate import CubicSpline, make_interp_spline

        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise InvalidProtocol("knot times must be strictly increasing with at least two entries")
        if v.shape[0] != t.size:
            raise InvalidProtocol("one value row per knot time is required")
        if degree == 3 and t.size >= 3:
            self._pp = CubicSpline(t, v, axis=0, bc_type="not-a-knot")
        elif degree in (1, 3):
            self._pp = make_interp_spline(t, v, k=1, axis=0)
        else:
            raise InvalidProtocol(f"unsupported knot degree {degree}")
        self._d = self._pp.derivative()
        self.t0, self.t1 = float(t[0]), float(t[-1])
        self.size = v.shape[1]
        self.times, self.degree = t, degree

    def value(self, t):
        return np.asarray(self._pp(min(max(t, self.t0), self.t1)), dtype=float)

    def rate(self, t):
        if t < self.t0 or t > self.t1:
            return np.zeros(self.size)
        return np.asarray(self._d(t), dtype=float)


def scalar_schedule(s) -> Callable[[float], float]:
    if isinstance(s, Schedule):
        return lambda t: float(s.value(t)[0])
    if callable(s):
        return s
    c = float(s)
    return lambda t: c


# -- protocol and environment -----------------------------------------------

@dataclass(frozen=True, eq=False)
class WorkProtocol:
    """H(a) = H0 + sum_m a_m V_m with a work schedule a(t)."""

    H0: HermitianOperator
    V: tuple[HermitianOperator, ...] = ()
    schedule: Schedule | None = None

    def __post_init__(self):
        n = self.H0.dim
        for k, v in enumerate(self.V):
            if v.dim != n:
                raise InvalidProtocol(f"V[{k}] has dimension {v.dim}, expected {n}")
        if self.V and self.schedule is None:
            raise InvalidProtocol("work operators given without a schedule")
        if self.schedule is not None and self.schedule.size != len(self.V):
            raise InvalidProtocol(
                f"schedule has {self.schedule.size} components for {len(self.V)} work operators")

    @property
    def dim(self) -> int:
        return self.H0.dim

    @property
    def driven(self) -> bool:
        return bool(self.V)

    def a(self, t: float) -> np.ndarray:
        return self.schedule.value(t) if self.V else np.zeros(0)

    def adot(self, t: float) -> np.ndarray:
        return self.schedule.rate(t) if self.V else np.zeros(0)

    def H(self, t: float) -> np.ndarray:
        m = self.H0.matrix
        if self.V:
            a = self.a(t)
            m = m + sum(ak * v.matrix for ak, v in zip(a, self.V))
        return m

    def dH_da(self) -> tuple[HermitianOperator, ...]:
        return self.V

    def check_rates(self, t0: float, t1: float, samples: int = 7, rtol: float = 1e-6) -> None:
        """Compare adot with a centered difference of a(t) at interior sample points."""
        if not self.V or t1 <= t0:
            return
        breaks = getattr(self.schedule, "times", None)
        ts = np.linspace(t0, t1, samples + 2)[1:-1]
        for t in ts:
            hstep = 1e-5 * max(1.0, abs(t1 - t0))
            if breaks is not None:
                # stay inside one polynomial piece
                d = np.min(np.abs(breaks - t))
                if d < 2 * hstep:
                    continue
            fd = (self.a(t + hstep) - self.a(t - hstep)) / (2 * hstep)
            an = self.adot(t)
            err = np.abs(fd - an)
            if np.any(err > rtol * np.maximum(1.0, np.abs(an))):
                raise InvalidProtocol(f"adot inconsistent with a(t) at t={t:g} (error {err.max():.3e})")


@dataclass(frozen=True, eq=False)
class EnvironmentModel:
    mode: str = ISOLATED
    Tbox: Callable[[float], float] | float | None = None
    kappa: float = 0.0
    flux_model: str = FOURIER
    theta_mode: str = "canonical_match"
    theta: Callable[[float], float] | float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown environment mode {self.mode!r}")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.flux_model not in (FOURIER, LINEAR):
            raise ValueError(f"unknown flux model {self.flux_model!r}")
        if self.mode == RESERVOIR and self.Tbox is None:
            raise ValueError("reservoir mode needs a temperature schedule")
        if self.theta_mode not in ("canonical_match", "prescribed"):
            raise ValueError(f"unknown theta mode {self.theta_mode!r}")
        if self.theta_mode == "prescribed" and self.theta is None:
            raise ValueError("prescribed theta mode needs theta_value or theta_schedule")
        object.__setattr__(self, "_tbox", None if self.Tbox is None else scalar_schedule(self.Tbox))
        object.__setattr__(self, "_theta", None if self.theta is None else scalar_schedule(self.theta))

    def tbox(self, t: float) -> float | None:
        return None if self._tbox is None else self._tbox(t)

    def prescribed_theta(self, t: float) -> float:
        return self._theta(t)


def heat_flux(Theta: float, Tbox: float, kappa: float, model: str = FOURIER) -> float:
    """Heat flux into the system, vanishing with a sign change at Theta = Tbox."""
    if not (Theta > 0 and Tbox > 0):
        raise InvalidTemperature(f"temperatures must be positive (Theta={Theta!r}, Tbox={Tbox!r})")
    if kappa == 0:
        return 0.0
    if model == LINEAR:
        if math.isinf(Theta):
            raise InvalidTemperature("linear flux model needs a finite contact temperature")
        return kappa * (Tbox - Theta)
    return kappa * (1.0 / Theta - 1.0 / Tbox)


@dataclass(frozen=True, eq=False)
class Constitutive:
    beta: float = 1.0
    B: np.ndarray | None = None  # custom map; must keep e and every h in its kernel

    def bmap(self, h) -> IrreversibilityMap:
        if self.B is not None:
            from .propagators import custom_irreversibility_map
            return custom_irreversibility_map(self.B, h)
        return build_irreversibility_map(h, self.beta)


@dataclass(frozen=True)
class Integration:
    t0: float = 0.0
    t1: float = 1.0
    dt: float = 1e-2
    adaptive: bool = False
    output_every: int = 1
    stop_at_equilibrium: bool = True
    equilibrium_tol: float = TOL.equilibrium
    equilibrium_records: int = 10


# -- instantaneous evaluation -------------------------------------------------

@dataclass(frozen=True, eq=False)
class Evaluation:
    """Everything the right-hand side and the record need at one instant."""

    t: float
    h: np.ndarray
    fI: np.ndarray
    fII: np.ndarray
    f: np.ndarray
    Theta: float
    Tbox: float | None
    Qdot: float
    split: PropagatorSplit


def _theta_canonical(h, p, kB) -> float:
    try:
        return contact_temperature(h, p, kB).Theta
    except ContactTemperatureError as exc:
        h = np.asarray(h)
        E, avg = float(p @ h), float(h.mean())
        span = float(h.max() - h.min())
        if span > 0 and abs(E - avg) <= 1e-12 * max(1.0, span):
            return math.inf
        log.debug("contact temperature undefined: %s", exc)
        return math.nan


def evaluate(p, h, t, env: EnvironmentModel, const: Constitutive,
             Z: float | None, constants: PhysicalConstants = UNIT,
             bmap: IrreversibilityMap | None = None) -> Evaluation:
    kB = constants.kB
    p = np.asarray(p, dtype=float)
    h = np.asarray(h, dtype=float)
    fI = log_weights(p, Z, kB)
    if env.theta_mode == "prescribed":
        theta = float(env.prescribed_theta(t))
        if not theta > 0:
            raise InvalidTemperature(f"prescribed contact temperature {theta!r} at t={t}")
    else:
        theta = _theta_canonical(h, p, kB)
    if math.isnan(theta):
        fII = np.zeros_like(h)
    else:
        fII = h / theta  # zero at infinite temperature
    f = fI + fII

    tbox = None
    Qdot = 0.0
    if env.mode == RESERVOIR:
        tbox = float(env.tbox(t))
        if math.isnan(theta):
            raise IntegrationFailure(
                f"contact temperature undefined at t={t:g} (inverted or degenerate state) "
                "in reservoir mode")
        Qdot = heat_flux(theta, tbox, env.kappa, env.flux_model)
    elif env.mode == THETA_SLAVED:
        tbox = theta

    if bmap is None:
        bmap = const.bmap(h)
    x_iso = iso_rate(bmap, fI)
    if Qdot != 0.0:
        try:
            x_ex = exchange_rate(f, h, Qdot).pdot_ex
        except InfeasibleExchange as exc:
            raise IntegrationFailure(f"t={t:g}: {exc}") from exc
    else:
        x_ex = np.zeros_like(h)
    return Evaluation(t, h, fI, fII, f, theta, tbox, Qdot, PropagatorSplit(x_iso, x_ex))


def make_record(state: DensityState, ev: Evaluation, protocol: WorkProtocol,
                rho: np.ndarray, constants: PhysicalConstants = UNIT) -> ThermoRecord:
    p = state.weights
    split = ev.split
    pdot = split.pdot
    adot = protocol.adot(ev.t)
    Wdot = float(generalized_forces(protocol.dH_da(), rho) @ adot) if adot.size else 0.0
    return ThermoRecord(
        t=float(ev.t),
        E=float(p @ ev.h),
        Wdot=Wdot,
        Qdot=float(pdot @ ev.h),
        S=shannon_entropy(p, constants.kB),
        Sdot=float(-pdot @ ev.fI),
        Xi=float(split.pdot_ex @ ev.fII),
        Sigma=float(-split.pdot_iso @ ev.fI),
        Theta=float(ev.Theta),
        fI=ev.fI, fII=ev.fII, f=ev.f,
    )


# -- stepping -----------------------------------------------------------------

@dataclass
class Diagnostics:
    clamp_events: int = 0
    renormalizations: int = 0
    rejections: int = 0
    steps: int = 0
    max_renorm_drift: float = 0.0


class StepRejected(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def _project_weights(p: np.ndarray, diag: Diagnostics) -> np.ndarray:
    low = p < TOL.weight_floor
    if low.any():
        diag.clamp_events += int(low.sum())
        log.debug("clamped %d weight(s) to %g", int(low.sum()), TOL.weight_floor)
        p = np.clip(p, TOL.weight_floor, 1.0)
    drift = abs(p.sum() - 1.0)
    if drift > TOL.renorm_drift:
        diag.renormalizations += 1
        diag.max_renorm_drift = max(diag.max_renorm_drift, drift)
        log.debug("renormalized weights (drift %.3e)", drift)
        p = p / p.sum()
    return p


def step(state: DensityState, t: float, dt: float, protocol: WorkProtocol,
         environment: EnvironmentModel, constitutive: Constitutive,
         constants: PhysicalConstants = UNIT, first: Evaluation | None = None,
         diagnostics: Diagnostics | None = None):
    """One accepted step. Returns ``(state', split', record', evaluation')`` at t + dt.

    Raises ``StepRejected`` when the candidate violates positivity of the
    weights or of the entropy production beyond the rejection thresholds.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    diag = diagnostics if diagnostics is not None else Diagnostics()
    hb = constants
    V0 = state.basis.vectors
    U_half = unitary(protocol.H(t + 0.25 * dt), 0.5 * dt, hb)
    U_full = unitary(protocol.H(t + 0.5 * dt), dt, hb)
    basis_half = U_half @ V0
    basis_full = U_full @ V0
    if gram_error(basis_full) > TOL.basis_drift:
        # round-off from many short steps; snap back before it reaches the validity check
        basis_full = reorthonormalize(basis_full)
    H_half = protocol.H(t + 0.5 * dt)
    H_full = protocol.H(t + dt)
    h_half = np.real(np.einsum("ij,ij->j", basis_half.conj(), H_half @ basis_half))
    h_full = np.real(np.einsum("ij,ij->j", basis_full.conj(), H_full @ basis_full))

    Z = state.Z
    if first is None:
        h0 = np.real(np.einsum("ij,ij->j", V0.conj(), protocol.H(t) @ V0))
        first = evaluate(state.weights, h0, t, environment, constitutive, Z, constants)
    b_half = constitutive.bmap(h_half)

    def rate(p, h, tc, bmap):
        return evaluate(p, h, tc, environment, constitutive, Z, constants, bmap).split.pdot

    p = state.weights
    k1 = first.split.pdot
    k2 = rate(p + 0.5 * dt * k1, h_half, t + 0.5 * dt, b_half)
    k3 = rate(p + 0.5 * dt * k2, h_half, t + 0.5 * dt, b_half)
    k4 = rate(p + dt * k3, h_full, t + dt, None)
    p_new = p + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    if p_new.min() < -TOL.reject_simplex or abs(p_new.sum() - 1.0) > TOL.reject_simplex:
        raise StepRejected(f"simplex violation (min p = {p_new.min():.3e}, "
                           f"sum drift = {p_new.sum() - 1.0:.3e})")
    p_new = _project_weights(p_new, diag)
    new_state = DensityState(OrthonormalBasis(basis_full), p_new, state.Z)
    ev = evaluate(p_new, h_full, t + dt, environment, constitutive, Z, constants)
    rho = assemble_density(new_state).matrix
    rec = make_record(new_state, ev, protocol, rho, constants)
    if rec.Sigma < -TOL.reject_sigma:
        raise StepRejected(f"negative entropy production {rec.Sigma:.3e}")
    diag.steps += 1
    return new_state, ev.split, rec, ev


# -- trajectories -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrajectoryPoint:
    t: float
    state: DensityState
    split: PropagatorSplit
    record: ThermoRecord
    report: EquilibriumReport
    Tbox: float | None = None
    adot: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(eq=False)
class Trajectory:
    points: list[TrajectoryPoint] = field(default_factory=list)
    status: str = "completed"
    mode: str = ISOLATED
    name: str = ""
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def records(self) -> list[ThermoRecord]:
        return [pt.record for pt in self.points]

    @property
    def times(self) -> np.ndarray:
        return np.array([pt.t for pt in self.points])

    def column(self, key: str) -> np.ndarray:
        return np.array([getattr(pt.record, key) for pt in self.points])

    @property
    def weights(self) -> np.ndarray:
        return np.array([pt.state.weights for pt in self.points])


def _point(state, ev, protocol, env, constants, integ) -> TrajectoryPoint:
    rho = assemble_density(state).matrix
    rec = make_record(state, ev, protocol, rho, constants)
    adot = protocol.adot(ev.t)
    theta = ev.Theta if math.isfinite(ev.Theta) else None
    rep = detect_equilibrium(
        state, ev.split, adot, ev.fI, ev.f, protocol.H(ev.t), rho,
        theta=theta, tbox=ev.Tbox if env.mode == RESERVOIR else None,
        isolated=env.mode in (ISOLATED, ADIABATIC, THETA_SLAVED),
        tol=integ.equilibrium_tol, hbar=constants.hbar)
    return TrajectoryPoint(ev.t, state, ev.split, rec, rep, ev.Tbox, adot)


def integrate(state: DensityState, protocol: WorkProtocol, environment: EnvironmentModel,
              constitutive: Constitutive, integration: Integration,
              constants: PhysicalConstants = UNIT, name: str = "") -> Trajectory:
    """Integrate from t0 to t1, recording every ``output_every`` accepted steps."""
    integ = integration
    if environment.mode == ISOLATED and protocol.driven:
        raise InvalidProtocol("an isolated system exchanges no work; use adiabatic mode for driving")
    if not integ.dt > 0:
        raise ValueError("dt must be positive")
    diag = Diagnostics()
    traj = Trajectory(mode=environment.mode, name=name, diagnostics=diag)
    t = integ.t0
    h0 = diagonal_in(protocol.H(t), state.basis)
    ev = evaluate(state.weights, h0, t, environment, constitutive, state.Z, constants)
    traj.points.append(_point(state, ev, protocol, environment, constants, integ))
    span = integ.t1 - integ.t0
    if span <= 0:
        return traj

    streak = 1 if traj.points[-1].report.is_equilibrium else 0
    n_nominal = max(1, int(math.ceil(span / integ.dt - 1e-9)))
    accepted = 0

    sub = integ.dt  # persists across nominal steps so stiff stretches do not re-halve from scratch

    def advance(state, t, t_end, ev):
        nonlocal sub
        good = halvings = 0
        while t_end - t > 1e-12 * max(1.0, abs(t_end)):
            h = t_end - t if t_end - t <= sub * (1 + 1e-9) else sub
            try:
                state, _, _, ev = step(state, t, h, protocol, environment, constitutive,
                                       constants, ev, diag)
            except StepRejected as exc:
                diag.rejections += 1
                halvings += 1
                if halvings > TOL.max_halvings:
                    raise IntegrationFailure(
                        f"step at t={t:g} rejected after {TOL.max_halvings} halvings: "
                        f"{exc.reason}") from exc
                log.debug("step rejected at t=%g (%s); halving dt", t, exc.reason)
                sub = 0.5 * h
                good = 0
                continue
            t = t_end if h == t_end - t else t + h
            halvings = 0
            good += 1
            if good >= 4 and sub < integ.dt:
                sub = min(2 * sub, integ.dt)
                good = 0
        return state, ev

    if not integ.adaptive:
        for k in range(n_nominal):
            t_k = integ.t0 + k * integ.dt
            t_next = min(integ.t0 + (k + 1) * integ.dt, integ.t1)
            state, ev = advance(state, t_k, t_next, ev)
            accepted += 1
            if accepted % integ.output_every == 0 or k == n_nominal - 1:
                traj.points.append(_point(state, ev, protocol, environment, constants, integ))
                streak = streak + 1 if traj.points[-1].report.is_equilibrium else 0
                if integ.stop_at_equilibrium and streak >= integ.equilibrium_records:
                    traj.status = "equilibrated"
                    break
        return traj

    dt = integ.dt
    good = 0
    halvings = 0
    while t < integ.t1 - 1e-12 * max(1.0, abs(integ.t1)):
        h = min(dt, integ.t1 - t)
        try:
            state, _, _, ev = step(state, t, h, protocol, environment, constitutive,
                                   constants, ev, diag)
        except StepRejected as exc:
            diag.rejections += 1
            halvings += 1
            if halvings > TOL.max_halvings:
                raise IntegrationFailure(f"step at t={t:g} rejected: {exc.reason}") from exc
            dt *= 0.5
            good = 0
            continue
        t = ev.t
        halvings = 0
        accepted += 1
        good += 1
        if good >= 4 and dt < integ.dt:
            dt = min(2 * dt, integ.dt)
            good = 0
        if accepted % integ.output_every == 0 or t >= integ.t1 - 1e-12 * max(1.0, abs(integ.t1)):
            traj.points.append(_point(state, ev, protocol, environment, constants, integ))
            streak = streak + 1 if traj.points[-1].report.is_equilibrium else 0
            if integ.stop_at_equilibrium and streak >= integ.equilibrium_records:
                traj.status = "equilibrated"
                break
    return traj


def run(scenario) -> Trajectory:
    """Integrate a validated scenario (see :mod:`qtd.scenario`)."""
    state = scenario.initial_state()
    return integrate(state, scenario.protocol, scenario.environment, scenario.constitutive,
                     scenario.integration, scenario.constants, scenario.name)
