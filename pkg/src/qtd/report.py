"""Worst-case residuals of the thermodynamic laws along a trajectory.

Tolerances (absolute unless noted):

    simplex               |sum p - 1| <= 1e-10 and p >= 0
    propagator-trace      |sum pdot| <= 1e-12
    split-trace           |sum pdot_iso|, |sum pdot_ex| <= 1e-12
    entropy-production    Sigma >= -1e-10
    entropy-balance       |Sdot - Xi - Sigma| <= 1e-9 max(1, |Sdot|)
    force-sum             |f - fI - fII| <= 1e-12
    exchange-two-route    |Xi - Qdot/Theta| <= 1e-10 max(1, |Xi|)     (finite Theta)
    isolation             |pdot_ex . f| <= 1e-10 |pdot_ex| |f| + 1e-15
    contact-inequality    Qdot (1/Theta - 1/Tbox) >= -1e-12           (reservoir mode)
    first-law             |dE/dt - Wdot - Qdot| <= 1.0 dt^2 max(1, max|E|) + 1e-12
                          (centered differences over equally spaced records)
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .io import StoredTrajectory
from .thermo import first_law_residual

FIRST_LAW_C = 1.0


@dataclass
class InvariantResult:
    name: str
    worst: float
    tolerance: float
    passed: bool
    checked: int
    detail: str = ""


@dataclass
class InvariantReport:
    results: list[InvariantResult]
    records: int
    status: str

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    def __getitem__(self, name: str) -> InvariantResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "records": self.records, "status": self.status,
                "invariants": [{k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
                                for k, v in asdict(r).items()} for r in self.results]}

    def text(self) -> str:
        lines = []
        for r in self.results:
            mark = "PASS" if r.passed else "FAIL"
            lines.append(f"{mark}  {r.name:<20} worst={r.worst:.3e}  tol={r.tolerance:.1e}  "
                         f"n={r.checked}{'  ' + r.detail if r.detail else ''}")
        lines.append("--- json ---")
        lines.append(json.dumps(self.to_dict(), sort_keys=True))
        return "\n".join(lines)


def _result(name, residuals, tol, detail=""):
    residuals = [float(x) for x in residuals]
    worst = max(residuals) if residuals else 0.0
    ok = all(x <= tol for x in residuals)
    return InvariantResult(name, worst, tol, ok, len(residuals), detail)


def invariant_report(trajectory) -> InvariantReport:
    st = StoredTrajectory.from_trajectory(trajectory)
    if not st.rows:
        raise ValueError("empty trajectory")
    rows = st.rows
    out = []

    simplex = [max(abs(r.p.sum() - 1.0), max(0.0, -float(r.p.min()))) for r in rows]
    out.append(_result("simplex", simplex, 1e-10))
    out.append(_result("propagator-trace", [abs((r.pdot_iso + r.pdot_ex).sum()) for r in rows], 1e-12))
    out.append(_result("split-trace", [max(abs(r.pdot_iso.sum()), abs(r.pdot_ex.sum()))
                                       for r in rows], 1e-12))
    # stored as a deficit so "worst <= tol" reads uniformly
    out.append(_result("entropy-production", [-r.record.Sigma for r in rows], 1e-10,
                       "residual is -Sigma"))
    out.append(_result("entropy-balance",
                       [abs(r.record.Sdot - r.record.Xi - r.record.Sigma) / max(1.0, abs(r.record.Sdot))
                        for r in rows], 1e-9, "relative to max(1, |Sdot|)"))
    out.append(_result("force-sum", [float(np.max(np.abs(r.record.f - r.record.fI - r.record.fII),
                                                  initial=0.0)) for r in rows], 1e-12))
    two = [abs(r.record.Xi - r.record.Qdot / r.record.Theta) / max(1.0, abs(r.record.Xi))
           for r in rows if math.isfinite(r.record.Theta) and r.record.Theta > 0]
    out.append(_result("exchange-two-route", two, 1e-10))
    iso = []
    for r in rows:
        bound = 1e-10 * np.linalg.norm(r.pdot_ex) * np.linalg.norm(r.record.f) + 1e-15
        iso.append(abs(float(r.pdot_ex @ r.record.f)) / bound)
    out.append(_result("isolation", iso, 1.0, "|pdot_ex.f| as a fraction of its bound"))
    if st.mode == "reservoir":
        ci = [-(r.record.Qdot * (1.0 / r.record.Theta - 1.0 / r.Tbox)) for r in rows]
        out.append(_result("contact-inequality", ci, 1e-12, "residual is -Qdot(1/Theta - 1/Tbox)"))

    fl = []
    emax = max(1.0, max(abs(r.record.E) for r in rows))
    for i in range(1, len(rows) - 1):
        a, b, c = rows[i - 1].record, rows[i].record, rows[i + 1].record
        d1, d2 = b.t - a.t, c.t - b.t
        if d1 <= 0 or abs(d1 - d2) > 1e-9 * max(d1, d2):
            continue
        tol = FIRST_LAW_C * d1 * d1 * emax + 1e-12
        fl.append(first_law_residual(a, b, c) / tol)
    out.append(_result("first-law", fl, 1.0, "residual as a fraction of C dt^2 max(1,|E|)"))
    return InvariantReport(out, len(rows), st.status)
