"""Scenario documents (JSON, ``schema_version`` 1) and the preset library.

Every problem in a document is collected with its path before anything is
raised, so one validation pass reports all of them.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PhysicalConstants
from .dynamics import (ADIABATIC, FOURIER, ISOLATED, LINEAR, MODES, RESERVOIR, THETA_SLAVED,
                       Constant, Constitutive, EnvironmentModel, Integration, Knots, Schedule,
                       Sinusoid, WorkProtocol)
from .equilibrium import canonical_weights
from .errors import ConfigError, InvalidOperator, QTDError
from .operators import HermitianOperator, OrthonormalBasis, eigendecompose
from .propagators import custom_irreversibility_map
from .state import DensityState, check_simplex

SCHEMA_VERSION = 1


class ScenarioOperatorError(ConfigError, InvalidOperator):
    """A matrix in the document is not Hermitian."""

    code = "invalid-operator"


class _Issues:
    def __init__(self):
        self.items: list[tuple[str, str, bool]] = []

    def add(self, path: str, msg: str, operator: bool = False):
        self.items.append((path, msg, operator))

    def raise_if_any(self):
        if not self.items:
            return
        cls = ScenarioOperatorError if any(op for _, _, op in self.items) else ConfigError
        lines = [f"{p}: {m}" for p, m, _ in self.items]
        err = cls("; ".join(lines) if len(lines) > 1 else self.items[0][1], self.items[0][0])
        err.issues = [(p, m) for p, m, _ in self.items]
        raise err


_KEYS = {
    "": {"schema_version", "name", "seed", "constants", "system", "constitutive",
         "environment", "protocol", "integration", "description"},
    "constants": {"hbar", "kB"},
    "system": {"N", "H0", "V", "weights", "basis"},
    "constitutive": {"beta", "B", "Z"},
    "environment": {"mode", "Tbox", "kappa", "flux_model", "theta_mode", "theta_value",
                    "theta_schedule"},
    "integration": {"t0", "t1", "dt", "adaptive", "output_every", "stop_at_equilibrium",
                    "equilibrium_tol", "equilibrium_records"},
}


def _check_keys(d, section, issues):
    path = section or "$"
    if not isinstance(d, dict):
        issues.add(path, "expected an object")
        return False
    for k in d:
        if k not in _KEYS[section]:
            issues.add(f"{section + '.' if section else ''}{k}", "unknown key")
    return True


def _number(d, key, path, issues, required=True, default=None, positive=False,
            nonnegative=False):
    if key not in d:
        if required:
            issues.add(path, "missing required value")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        issues.add(path, f"expected a finite number, got {v!r}")
        return default
    if positive and not v > 0:
        issues.add(path, f"must be positive, got {v!r}")
        return default
    if nonnegative and v < 0:
        issues.add(path, f"must be non-negative, got {v!r}")
        return default
    return float(v)


def _matrix(node, path, issues, hermitian=True):
    """Real nested list, {"re": .., "im": ..} or {"diag": [..]}."""
    try:
        if isinstance(node, dict):
            extra = set(node) - {"re", "im", "diag"}
            if extra:
                issues.add(path, f"unknown matrix keys {sorted(extra)}")
                return None
            if "diag" in node:
                m = np.diag(np.asarray(node["diag"], dtype=float)).astype(complex)
            else:
                m = np.asarray(node["re"], dtype=float).astype(complex)
                if "im" in node:
                    m = m + 1j * np.asarray(node["im"], dtype=float)
        else:
            m = np.asarray(node, dtype=float).astype(complex)
    except (TypeError, ValueError, KeyError) as exc:
        issues.add(path, f"not a numeric matrix ({exc})")
        return None
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        issues.add(path, f"expected a square matrix, got shape {m.shape}")
        return None
    if not np.all(np.isfinite(m)):
        issues.add(path, "non-finite entries")
        return None
    if hermitian:
        dev = np.abs(m - m.conj().T)
        if dev.max() > 1e-12 * max(1.0, float(np.abs(m).max())):
            j, k = np.unravel_index(int(np.argmax(dev)), dev.shape)
            issues.add(path, f"not Hermitian at indices ({j}, {k}) and ({k}, {j})", operator=True)
            return None
    return m


def _schedule(node, path, issues, size=None) -> Schedule | None:
    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return Constant((float(node),))
    if not isinstance(node, dict) or "type" not in node:
        issues.add(path, "expected a number or an object with a 'type'")
        return None
    kind = node["type"]
    allowed = {"constant": {"type", "values"},
               "sinusoid": {"type", "amplitude", "omega", "phase", "offset"},
               "knots": {"type", "times", "values", "degree"}}
    if kind not in allowed:
        issues.add(f"{path}.type", f"unknown schedule type {kind!r}")
        return None
    for k in set(node) - allowed[kind]:
        issues.add(f"{path}.{k}", "unknown key")

    def vec(key, default=None):
        if key not in node:
            if default is None:
                issues.add(f"{path}.{key}", "missing required value")
            return default
        v = np.atleast_1d(np.asarray(node[key], dtype=float))
        return tuple(float(x) for x in v)

    try:
        if kind == "constant":
            vals = vec("values")
            return None if vals is None else Constant(vals)
        if kind == "sinusoid":
            amp = vec("amplitude")
            if amp is None:
                return None
            m = len(amp)
            omega = vec("omega", (1.0,) * m)
            phase = vec("phase", (0.0,) * m)
            offset = vec("offset", (0.0,) * m)
            if not all(len(x) == m for x in (omega, phase, offset)):
                issues.add(path, "sinusoid parameters must have equal lengths")
                return None
            return Sinusoid(amp, omega, phase, offset)
        times = node.get("times")
        values = node.get("values")
        if times is None or values is None:
            issues.add(path, "knots need 'times' and 'values'")
            return None
        return Knots(times, values, int(node.get("degree", 3)))
    except (TypeError, ValueError, QTDError) as exc:
        issues.add(path, str(exc))
        return None


@dataclass(eq=False)
class Scenario:
    name: str
    protocol: WorkProtocol
    environment: EnvironmentModel
    constitutive: Constitutive
    integration: Integration
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    weights: np.ndarray | None = None
    weights_preset: dict | None = None
    basis: np.ndarray | None = None
    Z: float | None = None
    seed: int = 0
    document: dict | None = None

    @property
    def dim(self) -> int:
        return self.protocol.dim

    def initial_state(self) -> DensityState:
        """Weights over the given basis, or over the ascending eigenbasis of H(a(t0))."""
        t0 = self.integration.t0
        if self.basis is None:
            h, basis = eigendecompose(HermitianOperator(self.protocol.H(t0)))
        else:
            basis = OrthonormalBasis(self.basis)
            h = np.real(np.einsum("ij,ij->j", basis.vectors.conj(),
                                  self.protocol.H(t0) @ basis.vectors))
        p = self.weights if self.weights is not None else self._preset_weights(h)
        return DensityState(basis, p, self.Z)

    def _preset_weights(self, h) -> np.ndarray:
        node = self.weights_preset
        n = self.dim
        kind = node["preset"]
        if kind == "uniform":
            return np.full(n, 1.0 / n)
        if kind == "canonical":
            return canonical_weights(h, node["temperature"], self.constants.kB)
        if kind == "ground":
            p = np.zeros(n)
            p[int(np.argmin(h))] = 1.0
            return p
        rng = np.random.default_rng(self.seed)
        p = rng.dirichlet(np.ones(n))
        if node.get("sorted", False):
            # largest weight on the lowest energy: never inverted
            p = np.sort(p)[::-1][np.argsort(np.argsort(h, kind="stable"))]
        return p / p.sum()


def parse_scenario(doc) -> Scenario:
    """Validate a scenario document (dict, JSON text, or path) into a :class:`Scenario`."""
    if isinstance(doc, Path):
        doc = doc.read_text()
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON: {exc}", "$") from exc
    doc = copy.deepcopy(doc)
    issues = _Issues()
    if not _check_keys(doc, "", issues):
        issues.raise_if_any()

    if doc.get("schema_version") != SCHEMA_VERSION:
        issues.add("schema_version", f"required and must equal {SCHEMA_VERSION}")
    name = doc.get("name", "")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        issues.add("seed", "must be an integer")
        seed = 0

    consts = doc.get("constants", {})
    hbar = kB = 1.0
    if _check_keys(consts, "constants", issues):
        hbar = _number(consts, "hbar", "constants.hbar", issues, False, 1.0, positive=True)
        kB = _number(consts, "kB", "constants.kB", issues, False, 1.0, positive=True)

    # system
    sysd = doc.get("system")
    H0 = None
    V: list = []
    weights = preset = basis = None
    if sysd is None:
        issues.add("system", "missing required section")
    elif _check_keys(sysd, "system", issues):
        if "H0" not in sysd:
            issues.add("system.H0", "missing required value")
        else:
            H0 = _matrix(sysd["H0"], "system.H0", issues)
        n = None if H0 is None else H0.shape[0]
        if "N" in sysd and n is not None and sysd["N"] != n:
            issues.add("system.N", f"declared {sysd['N']!r} but H0 is {n} x {n}")
        for k, vm in enumerate(sysd.get("V", [])):
            m = _matrix(vm, f"system.V[{k}]", issues)
            if m is not None and n is not None and m.shape[0] != n:
                issues.add(f"system.V[{k}]", f"dimension {m.shape[0]} does not match H0 ({n})")
                m = None
            V.append(m)
        w = sysd.get("weights")
        if w is None:
            issues.add("system.weights", "missing required value")
        elif isinstance(w, dict):
            extra = set(w) - {"preset", "temperature", "sorted"}
            for k in extra:
                issues.add(f"system.weights.{k}", "unknown key")
            if w.get("preset") not in ("uniform", "canonical", "random", "ground"):
                issues.add("system.weights.preset",
                           "must be one of uniform, canonical, random, ground")
            elif w["preset"] == "canonical":
                _number(w, "temperature", "system.weights.temperature", issues, positive=True)
            preset = w
        else:
            try:
                weights = check_simplex(np.asarray(w, dtype=float))
            except (QTDError, TypeError, ValueError) as exc:
                issues.add("system.weights", str(exc))
            if weights is not None and n is not None and weights.size != n:
                issues.add("system.weights", f"{weights.size} weights for dimension {n}")
        if "basis" in sysd and sysd["basis"] != "eigen":
            b = _matrix(sysd["basis"], "system.basis", issues, hermitian=False)
            if b is not None:
                try:
                    basis = OrthonormalBasis(b).vectors
                except QTDError as exc:
                    issues.add("system.basis", str(exc))

    # constitutive
    cd = doc.get("constitutive")
    constitutive = None
    Z = None
    if cd is None:
        issues.add("constitutive", "missing required section")
    elif _check_keys(cd, "constitutive", issues):
        beta = _number(cd, "beta", "constitutive.beta", issues, required="B" not in cd,
                       default=0.0, nonnegative=True)
        Bm = None
        if "B" in cd:
            try:
                Bm = np.asarray(cd["B"], dtype=float)
                h_probe = None
                if H0 is not None and not V:
                    h_probe = np.linalg.eigvalsh(H0)
                custom_irreversibility_map(Bm, h_probe)
            except (TypeError, ValueError) as exc:
                issues.add("constitutive.B", f"not a numeric matrix ({exc})")
                Bm = None
            except QTDError as exc:
                issues.add("constitutive.B", str(exc))
                Bm = None
        Z = _number(cd, "Z", "constitutive.Z", issues, required=False, positive=True)
        constitutive = Constitutive(beta or 0.0, Bm)

    # environment
    ed = doc.get("environment")
    environment = None
    if ed is None:
        issues.add("environment", "missing required section")
    elif _check_keys(ed, "environment", issues):
        mode = ed.get("mode")
        if mode not in MODES:
            issues.add("environment.mode", f"must be one of {', '.join(MODES)}")
        kappa = 0.0
        tbox = None
        if mode == RESERVOIR:
            kappa = _number(ed, "kappa", "environment.kappa", issues, nonnegative=True, default=0.0)
            if "Tbox" not in ed:
                issues.add("environment.Tbox", "missing required value")
            else:
                tbox = _schedule(ed["Tbox"], "environment.Tbox", issues)
                if isinstance(tbox, Constant) and not tbox.values[0] > 0:
                    issues.add("environment.Tbox", "must be positive")
        else:
            for k in ("kappa", "Tbox"):
                if k in ed:
                    issues.add(f"environment.{k}", f"not used in {mode!r} mode")
        flux = ed.get("flux_model", FOURIER)
        if flux not in (FOURIER, LINEAR):
            issues.add("environment.flux_model", "must be 'fourier' or 'linear'")
        tmode = ed.get("theta_mode", "canonical_match")
        theta = None
        if tmode not in ("canonical_match", "prescribed"):
            issues.add("environment.theta_mode", "must be 'canonical_match' or 'prescribed'")
        elif tmode == "prescribed":
            if "theta_value" in ed:
                theta = _number(ed, "theta_value", "environment.theta_value", issues, positive=True)
            elif "theta_schedule" in ed:
                theta = _schedule(ed["theta_schedule"], "environment.theta_schedule", issues)
            else:
                issues.add("environment", "prescribed theta needs theta_value or theta_schedule")
        if not issues.items:
            try:
                environment = EnvironmentModel(mode, tbox, kappa, flux, tmode, theta)
            except ValueError as exc:
                issues.add("environment", str(exc))

    # protocol
    schedule = None
    if "protocol" in doc:
        schedule = _schedule(doc["protocol"], "protocol", issues)
        if schedule is not None and schedule.size != len(V):
            issues.add("protocol", f"{schedule.size} work variables for {len(V)} operators in system.V")
    elif V:
        issues.add("protocol", "system.V given without a protocol")

    # integration
    idoc = doc.get("integration")
    integration = None
    if idoc is None:
        issues.add("integration", "missing required section")
    elif _check_keys(idoc, "integration", issues):
        t0 = _number(idoc, "t0", "integration.t0", issues, default=0.0)
        t1 = _number(idoc, "t1", "integration.t1", issues, default=0.0)
        dt = _number(idoc, "dt", "integration.dt", issues, positive=True, default=1e-2)
        if t0 is not None and t1 is not None and t1 < t0:
            issues.add("integration.t1", "must not precede t0")
        every = idoc.get("output_every", 1)
        if isinstance(every, bool) or not isinstance(every, int) or every < 1:
            issues.add("integration.output_every", "must be a positive integer")
            every = 1
        nrec = idoc.get("equilibrium_records", 10)
        if isinstance(nrec, bool) or not isinstance(nrec, int) or nrec < 1:
            issues.add("integration.equilibrium_records", "must be a positive integer")
            nrec = 10
        flags = {}
        for k, default in (("adaptive", False), ("stop_at_equilibrium", True)):
            v = idoc.get(k, default)
            if not isinstance(v, bool):
                issues.add(f"integration.{k}", "must be true or false")
                v = default
            flags[k] = v
        etol = _number(idoc, "equilibrium_tol", "integration.equilibrium_tol", issues,
                       required=False, default=1e-8, positive=True)
        integration = Integration(t0 or 0.0, t1 or 0.0, dt or 1e-2, flags["adaptive"], every,
                                  flags["stop_at_equilibrium"], etol, nrec)

    issues.raise_if_any()

    Vops = tuple(HermitianOperator(m) for m in V)
    protocol = WorkProtocol(HermitianOperator(H0), Vops, schedule if V else None)
    if environment.mode == ISOLATED and protocol.driven:
        issues.add("environment.mode", "isolated systems exchange no work; use 'adiabatic' when driving")
    try:
        protocol.check_rates(integration.t0, integration.t1)
    except QTDError as exc:
        issues.add("protocol", str(exc))
    if (environment.mode == RESERVOIR and not protocol.driven and constitutive.B is None
            and np.ptp(np.linalg.eigvalsh(protocol.H0.matrix)) == 0
            and environment.kappa > 0):
        issues.add("system.H0", "fully degenerate spectrum cannot exchange heat with a reservoir")
    issues.raise_if_any()

    scen = Scenario(name=name, protocol=protocol, environment=environment,
                    constitutive=constitutive, integration=integration,
                    constants=PhysicalConstants(hbar, kB), weights=weights,
                    weights_preset=preset, basis=basis, Z=Z, seed=seed, document=doc)
    try:
        scen.initial_state()
    except QTDError as exc:
        raise ConfigError(str(exc), "system") from exc
    return scen


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}", str(path)) from exc
    return parse_scenario(text)


# -- presets --------------------------------------------------------------------

def _doc(name, description, system, constitutive, environment, integration, protocol=None, seed=0):
    d = {"schema_version": SCHEMA_VERSION, "name": name, "description": description,
         "seed": seed, "system": system, "constitutive": constitutive,
         "environment": environment, "integration": integration}
    if protocol is not None:
        d["protocol"] = protocol
    return d


_COUPLING = [[0.0, 0.3, 0.0], [0.3, 0.0, 0.3], [0.0, 0.3, 0.0]]

PRESETS: dict[str, dict] = {
    "isolated-uniform": _doc(
        "isolated-uniform", "three levels at the micro-canonical point; nothing moves",
        {"H0": {"diag": [0, 1, 2]}, "weights": {"preset": "uniform"}},
        {"beta": 1.0}, {"mode": ISOLATED},
        {"t0": 0, "t1": 5, "dt": 0.01, "stop_at_equilibrium": False}),
    "isolated-relaxation": _doc(
        "isolated-relaxation", "three levels relaxing at fixed energy toward canonical weights",
        {"H0": {"diag": [0, 1, 2]}, "weights": [0.5, 0.3, 0.2]},
        {"beta": 1.0}, {"mode": ISOLATED},
        {"t0": 0, "t1": 20, "dt": 0.01}),
    "isolated-degenerate": _doc(
        "isolated-degenerate", "four degenerate levels relaxing to the micro-canonical point",
        {"H0": {"diag": [1, 1, 1, 1]}, "weights": {"preset": "random"}},
        {"beta": 1.0}, {"mode": ISOLATED},
        {"t0": 0, "t1": 20, "dt": 0.01}, seed=7),
    "reservoir-contact": _doc(
        "reservoir-contact", "three levels in Fourier contact with a reservoir at T=1",
        {"H0": {"diag": [0, 1, 2]}, "weights": [0.5, 0.3, 0.2]},
        {"beta": 1.0}, {"mode": RESERVOIR, "Tbox": 1.0, "kappa": 0.5},
        {"t0": 0, "t1": 40, "dt": 0.01}),
    "two-level-reservoir": _doc(
        "two-level-reservoir", "two levels: no production, pure exchange toward the reservoir",
        {"H0": {"diag": [0, 1]}, "weights": [0.75, 0.25]},
        {"beta": 1.0}, {"mode": RESERVOIR, "Tbox": 1.0, "kappa": 1.0},
        {"t0": 0, "t1": 30, "dt": 0.01}),
    "conventional-qm": _doc(
        "conventional-qm", "driven three levels with frozen weights (plain von Neumann)",
        {"H0": {"diag": [0, 1, 2]}, "V": [_COUPLING], "weights": [0.5, 0.3, 0.2]},
        {"beta": 0.0}, {"mode": ADIABATIC},
        {"t0": 0, "t1": 10, "dt": 0.01},
        protocol={"type": "sinusoid", "amplitude": [1.0], "omega": [1.0]}),
    "driven-reservoir": _doc(
        "driven-reservoir", "driven three levels in reservoir contact at T=1",
        {"H0": {"diag": [0, 1, 2]}, "V": [_COUPLING], "weights": [0.5, 0.3, 0.2]},
        {"beta": 1.0}, {"mode": RESERVOIR, "Tbox": 1.0, "kappa": 0.5},
        {"t0": 0, "t1": 10, "dt": 0.01},
        protocol={"type": "sinusoid", "amplitude": [0.5], "omega": [1.0]}),
    "theta-slaved": _doc(
        "theta-slaved", "environment temperature follows the contact temperature: no heat flows",
        {"H0": {"diag": [0, 1, 2]}, "weights": [0.5, 0.3, 0.2]},
        {"beta": 1.0}, {"mode": THETA_SLAVED},
        {"t0": 0, "t1": 20, "dt": 0.01, "stop_at_equilibrium": False}),
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_document(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}", "preset")
    return copy.deepcopy(PRESETS[name])


def preset(name: str) -> Scenario:
    return parse_scenario(preset_document(name))
