"""Trajectory serialization: CSV for plotting, JSON for exact round trips.

JSON floats use Python's shortest round-trip repr, so re-reading reproduces
every value bit for bit.  Non-finite values are written as the strings
"inf", "-inf" and "nan" to stay within strict JSON.
"""

from __future__ import annotations

import io as _io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .equilibrium import EquilibriumReport
from .errors import IoError
from .thermo import SCALAR_FIELDS, ThermoRecord

TRAJECTORY_SCHEMA = 1
_NONFINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def _enc(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_enc(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_enc(v) for v in x]
    if isinstance(x, dict):
        return {k: _enc(v) for k, v in x.items()}
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dec(x):
    if isinstance(x, str) and x in _NONFINITE:
        return _NONFINITE[x]
    if isinstance(x, list):
        return [_dec(v) for v in x]
    return x


def _vec(x) -> np.ndarray:
    return np.asarray(_dec(x), dtype=float)


@dataclass(eq=False)
class StoredRecord:
    """One serialized trajectory row: thermodynamics plus the raw vectors."""

    record: ThermoRecord
    p: np.ndarray
    pdot_iso: np.ndarray
    pdot_ex: np.ndarray
    Tbox: float | None
    adot: np.ndarray
    equilibrium: EquilibriumReport | None = None

    def to_dict(self) -> dict:
        d = self.record.to_dict()
        d.update(p=self.p, pdot_iso=self.pdot_iso, pdot_ex=self.pdot_ex,
                 Tbox=self.Tbox, adot=self.adot,
                 equilibrium=None if self.equilibrium is None else self.equilibrium.to_dict())
        return _enc(d)

    @classmethod
    def from_dict(cls, d: dict) -> "StoredRecord":
        rec = ThermoRecord(
            **{k: float(_dec(d[k])) for k in SCALAR_FIELDS},
            fI=_vec(d["fI"]), fII=_vec(d["fII"]), f=_vec(d["f"]))
        tb = d.get("Tbox")
        eq = d.get("equilibrium")
        return cls(rec, _vec(d["p"]), _vec(d["pdot_iso"]), _vec(d["pdot_ex"]),
                   None if tb is None else float(_dec(tb)), _vec(d.get("adot", [])),
                   None if eq is None else EquilibriumReport.from_dict(eq))


@dataclass(eq=False)
class StoredTrajectory:
    rows: list[StoredRecord] = field(default_factory=list)
    mode: str = "isolated"
    status: str = "completed"
    name: str = ""
    N: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    @property
    def records(self) -> list[ThermoRecord]:
        return [r.record for r in self.rows]

    @classmethod
    def from_trajectory(cls, traj) -> "StoredTrajectory":
        if isinstance(traj, StoredTrajectory):
            return traj
        rows = [StoredRecord(pt.record, np.asarray(pt.state.weights), pt.split.pdot_iso,
                             pt.split.pdot_ex, pt.Tbox, np.asarray(pt.adot), pt.report)
                for pt in traj.points]
        n = rows[0].p.size if rows else 0
        return cls(rows, traj.mode, traj.status, traj.name, n, dict(vars(traj.diagnostics)))

    def to_dict(self) -> dict:
        return {"schema_version": TRAJECTORY_SCHEMA, "name": self.name, "mode": self.mode,
                "status": self.status, "N": self.N, "diagnostics": _enc(self.diagnostics),
                "records": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "StoredTrajectory":
        if d.get("schema_version") != TRAJECTORY_SCHEMA:
            raise IoError(f"unsupported trajectory schema {d.get('schema_version')!r}")
        rows = [StoredRecord.from_dict(r) for r in d["records"]]
        return cls(rows, d.get("mode", "isolated"), d.get("status", "completed"),
                   d.get("name", ""), int(d.get("N", rows[0].p.size if rows else 0)),
                   d.get("diagnostics", {}))


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def to_csv(traj) -> str:
    st = StoredTrajectory.from_trajectory(traj)
    if not st.rows:
        raise IoError("cannot emit an empty trajectory")
    n = st.rows[0].p.size
    buf = _io.StringIO()
    buf.write(",".join(list(SCALAR_FIELDS) + [f"p_{j}" for j in range(n)]) + "\n")
    for r in st.rows:
        buf.write(",".join(fmt(v) for v in (*r.record.row(), *r.p)) + "\n")
    return buf.getvalue()


def to_json(traj) -> str:
    st = StoredTrajectory.from_trajectory(traj)
    if not st.rows:
        raise IoError("cannot emit an empty trajectory")
    return json.dumps(st.to_dict(), allow_nan=False)


def emit(traj, format: str = "csv", destination=None) -> str:
    """Write a trajectory as CSV or JSON to a path or text stream; returns the text."""
    if format == "csv":
        text = to_csv(traj)
    elif format == "json":
        text = to_json(traj)
    else:
        raise ValueError(f"unknown format {format!r}")
    if destination is None:
        return text
    if hasattr(destination, "write"):
        destination.write(text)
        return text
    try:
        Path(destination).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {destination}: {exc}") from exc
    return text


def read_json(source) -> StoredTrajectory:
    try:
        text = source.read() if hasattr(source, "read") else Path(source).read_text()
        return StoredTrajectory.from_dict(json.loads(text))
    except OSError as exc:
        raise IoError(f"cannot read {source}: {exc}") from exc
    except (KeyError, ValueError, TypeError) as exc:
        raise IoError(f"malformed trajectory: {exc}") from exc
