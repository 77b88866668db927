"""CSV and report files. All CSVs: one header row, comma-delimited, trailing newline."""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .runner import COLUMNS, INT_COLUMNS, TimeSeries


class MalformedInput(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_timeseries(ts: TimeSeries, path) -> Path:
    cols = [ts[c] for c in COLUMNS]
    return write_csv(path, COLUMNS, zip(*cols))


def read_timeseries(path, n: int | None = None) -> TimeSeries:
    """Read a timeseries CSV. Population size defaults to the row-0 compartment total."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MalformedInput("empty file")
    header = rows[0]
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise MalformedInput(f"missing columns {missing}", row=1)
    pos = {c: header.index(c) for c in COLUMNS}
    data = {c: [] for c in COLUMNS}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MalformedInput(f"expected {len(header)} fields, got {len(row)}", row=r)
        for c in COLUMNS:
            raw = row[pos[c]]
            try:
                v = int(raw) if c in INT_COLUMNS else float(raw)
            except ValueError:
                raise MalformedInput(f"bad value {raw!r} in column {c}", row=r) from None
            if c not in INT_COLUMNS and not math.isfinite(v):
                raise MalformedInput(f"non-finite value in column {c}", row=r)
            data[c].append(v)
    if not data["day"]:
        raise MalformedInput("no data rows")
    arrays = {c: np.asarray(v, dtype=np.int64 if c in INT_COLUMNS else float)
              for c, v in data.items()}
    if n is None:
        n = int(sum(arrays[c][0] for c in ("S", "E", "U", "R", "V1", "V2", "V3", "outside")))
    return TimeSeries(arrays, n)


def write_summary(summary: dict, path) -> Path:
    keys = ("day", "I_mean", "I_q05", "I_q95")
    return write_csv(path, keys, zip(*(summary[k] for k in keys)))


def write_proportions(ts: TimeSeries, path) -> Path:
    """Susceptible, infected and vaccinated shares per day (plot-ready)."""
    n = ts.n
    v = ts["V1"] + ts["V2"] + ts["V3"]
    return write_csv(path, ("day", "S", "I", "V"),
                     zip(ts["day"], ts["S"] / n, ts["I"], v / n))


def write_dose_log(log, path) -> Path:
    return write_csv(path, ("day", "agent_id", "dose_number", "succeeded"), log.rows())


def write_outside(traj: np.ndarray, path) -> Path:
    days = np.arange(traj.shape[0])
    return write_csv(path, ("day", "s_o", "i_o", "r_o"),
                     zip(days, traj[:, 0], traj[:, 1], traj[:, 2]))


def write_ccf(ccf, path) -> Path:
    return write_csv(path, ("lag", "rho"), zip(ccf.lags, ccf.rho))


def write_aic(aic: dict, path) -> Path:
    return write_csv(path, ("lag", "aic"), sorted(aic.items()))


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seeds: list
    started: str
    finished: str | None = None
    status: str = "running"
    message: str = ""
    outputs: list = field(default_factory=list)
    version: str = ""
    python: str = field(default_factory=platform.python_version)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path
