"""Run logs, CSV persistence, and supervised windowing.

A run log is the 10 Hz record of one simulation: per coupling variable
the actual value, the delayed value, the predicted-history values, and
the delayed derivatives, plus vehicle pose, slip, and applied commands.
Floats are serialized with repr so a written log reads back bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import COUPLING_VARS, SAMPLE_DT
from .errors import ParseError

# feature column group per coupling variable: delayed value, delayed
# predictor history, delayed derivative, delayed predictor-history rate
FEATURE_COLS = {
    "x_mv": ["x_mv_del", "x_mv_p_del", "xdot_mv_del", "xdot_mv_p_del"],
    "x_momega": ["x_momega_del", "x_momega_p_del", "xdot_momega_del", "xdot_momega_p_del"],
    "f_ev": ["f_ev_del", "f_ev_p_del", "xdot_ev_del", "xdot_ev_p_del"],
    "f_eomega": ["f_eomega_del", "f_eomega_p_del", "xdot_eomega_del", "xdot_eomega_p_del"],
}

LOG_COLUMNS = ["t"]
for _v in COUPLING_VARS:
    LOG_COLUMNS.append(_v)
    LOG_COLUMNS.extend(FEATURE_COLS[_v])
LOG_COLUMNS += ["pose_x", "pose_y", "heading", "s_r", "s_l", "u_sv", "u_somega"]
FLOAT_COLUMNS = list(LOG_COLUMNS)
LOG_COLUMNS += ["case", "seed"]


@dataclass
class RunLog:
    case: str
    seed: int
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name in FLOAT_COLUMNS:
            self.columns.setdefault(name, np.empty(0))

    def __len__(self) -> int:
        return len(self.columns["t"])

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    @staticmethod
    def from_rows(case: str, seed: int, rows: list[dict]) -> "RunLog":
        cols = {
            name: np.array([r[name] for r in rows], dtype=float)
            for name in FLOAT_COLUMNS
        }
        return RunLog(case=case, seed=seed, columns=cols)


def write_log(path, log: RunLog) -> None:
    lines = [",".join(LOG_COLUMNS)]
    n = len(log)
    cols = [log.columns[c] for c in FLOAT_COLUMNS]
    for i in range(n):
        parts = [repr(float(col[i])) for col in cols]
        parts.append(log.case)
        parts.append(str(log.seed))
        lines.append(",".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def read_log(path) -> RunLog:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    header = lines[0].split(",")
    if header != LOG_COLUMNS:
        raise ParseError(f"{path}: unexpected header", line=1)
    ncol = len(LOG_COLUMNS)
    data = [[] for _ in FLOAT_COLUMNS]
    case = None
    seed = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != ncol:
            raise ParseError(
                f"{path}: expected {ncol} fields, found {len(parts)}", line=lineno
            )
        try:
            for j in range(len(FLOAT_COLUMNS)):
                data[j].append(float(parts[j]))
            row_seed = int(parts[-1])
        except ValueError as e:
            raise ParseError(f"{path}: {e}", line=lineno) from None
        row_case = parts[-2]
        if case is None:
            case, seed = row_case, row_seed
        elif case != row_case or seed != row_seed:
            raise ParseError(f"{path}: mixed case/seed values", line=lineno)
    if case is None:
        case, seed = "ideal", 0
    cols = {
        name: np.array(vals, dtype=float)
        for name, vals in zip(FLOAT_COLUMNS, data)
    }
    return RunLog(case=case, seed=seed, columns=cols)


# ---------------------------------------------------------------------------
# supervised windows
# ---------------------------------------------------------------------------

@dataclass
class WindowSet:
    """Sliding windows for one coupling variable, in physical units.

    sequences: (N, n, 4); targets: (N,); target_feats: (N, 4) the feature
    row at each target's own timestamp (the collocation data);
    target_times: (N,).
    """

    sequences: np.ndarray
    targets: np.ndarray
    target_feats: np.ndarray
    target_times: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)


def window(log: RunLog, n: int, variable: str) -> WindowSet:
    """Windows of n consecutive feature rows; target is the actual value
    one row past each window's end."""
    if variable not in FEATURE_COLS:
        raise ValueError(f"unknown coupling variable {variable!r}")
    rows = len(log)
    if rows < n:
        raise ValueError(f"log has {rows} rows, need at least {n}")
    feats = np.stack([log.columns[c] for c in FEATURE_COLS[variable]], axis=1)
    actual = log.columns[variable]
    n_windows = rows - n
    if n_windows == 0:
        return WindowSet(
            sequences=np.empty((0, n, 4)), targets=np.empty(0),
            target_feats=np.empty((0, 4)), target_times=np.empty(0),
        )
    idx = np.arange(n_windows)[:, None] + np.arange(n)[None, :]
    return WindowSet(
        sequences=feats[idx],
        targets=actual[n:],
        target_feats=feats[n:],
        target_times=log.t[n:],
    )


def split_windows(ws: WindowSet, ratio: float) -> tuple[WindowSet, WindowSet]:
    """Temporal split: the first floor(N*ratio) windows train."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must lie strictly between 0 and 1")
    n_train = int(len(ws) * ratio)
    def take(sl):
        return WindowSet(
            sequences=ws.sequences[sl], targets=ws.targets[sl],
            target_feats=ws.target_feats[sl], target_times=ws.target_times[sl],
        )
    return take(slice(0, n_train)), take(slice(n_train, None))


def concat_window_sets(sets: list[WindowSet]) -> WindowSet:
    """Concatenate runs block-wise; the non-consecutive target times at
    block boundaries keep physics residuals from straddling runs."""
    sets = [s for s in sets if len(s) > 0]
    if not sets:
        raise ValueError("no windows to concatenate")
    return WindowSet(
        sequences=np.concatenate([s.sequences for s in sets]),
        targets=np.concatenate([s.targets for s in sets]),
        target_feats=np.concatenate([s.target_feats for s in sets]),
        target_times=np.concatenate([s.target_times for s in sets]),
    )


__all__ = [
    "RunLog", "WindowSet", "FEATURE_COLS", "LOG_COLUMNS", "FLOAT_COLUMNS",
    "write_log", "read_log", "window", "split_windows", "concat_window_sets",
]
