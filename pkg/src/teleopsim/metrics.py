"""Quantitative evaluation of runs and predictors.

Conventions: the normalized compensation ratio compares prediction error
against delayed-signal error, both relative to the ideal-case reference
(0% perfect, 100% no better than the raw delayed signal); run-level
tracking norms are plain L2 over the sampled series, per axis.
"""

from __future__ import annotations

import numpy as np

from .dynamics import HapticDeviceParams
from .tracks import TrackSpec

DNF = None  # completion sentinel: did not finish


def delta_n(predicted, delayed, ideal) -> float | None:
    """Prediction-error norm over delayed-error norm, in percent.

    Returns None (not applicable) when the delayed signal already equals
    the reference, which would put a zero in the denominator.
    """
    predicted = np.asarray(predicted, dtype=float)
    delayed = np.asarray(delayed, dtype=float)
    ideal = np.asarray(ideal, dtype=float)
    if not (predicted.shape == delayed.shape == ideal.shape):
        raise ValueError("series must share one shape")
    den = float(np.linalg.norm(delayed - ideal))
    if den == 0.0:
        return None
    num = float(np.linalg.norm(predicted - ideal))
    return 100.0 * num / den


def rmse(preds, targets) -> float:
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.size == 0:
        raise ValueError("rmse of empty series")
    if preds.shape != targets.shape:
        raise ValueError("shape mismatch")
    return float(np.sqrt(np.mean((preds - targets) ** 2)))


def normalized_rmse(preds, targets) -> float:
    """RMSE scaled by the target range, comparable across signal types."""
    targets = np.asarray(targets, dtype=float)
    span = float(targets.max() - targets.min())
    if span == 0.0:
        raise ValueError("constant target series has no scale")
    return rmse(preds, targets) / span


def omega_gamma(x_m, v_slave, f_h, f_e) -> dict:
    """Per-axis velocity-tracking and force-tracking L2 norms of one run.

    x_m, v_slave, f_h, f_e: (N, 2) aligned series; columns are the
    linear and angular axes.
    """
    x_m = np.asarray(x_m, dtype=float)
    v_slave = np.asarray(v_slave, dtype=float)
    f_h = np.asarray(f_h, dtype=float)
    f_e = np.asarray(f_e, dtype=float)
    for name, arr in (("x_m", x_m), ("v_slave", v_slave), ("f_h", f_h), ("f_e", f_e)):
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] != x_m.shape[0]:
            raise ValueError(f"{name} must be (N, 2) aligned with the rest")
    dv = x_m - v_slave
    df = f_h - f_e
    return {
        "omega_v": float(np.linalg.norm(dv[:, 0])),
        "omega_w": float(np.linalg.norm(dv[:, 1])),
        "gamma_v": float(np.linalg.norm(df[:, 0])),
        "gamma_w": float(np.linalg.norm(df[:, 1])),
    }


def estimate_fh(x_m, u_m, params: HapticDeviceParams, dt: float) -> np.ndarray:
    """Operator force reconstructed from the master model.

    f_h = m_bar xdot_m + c_bar x_m - u_m over each sample interval, with
    the rate taken by backward difference and the stiffness term at the
    interval midpoint so the first-order discretization bias cancels.
    The first sample has no interval and reuses the instantaneous form.
    ``u_m`` must be the full motor force applied to the device, local
    control included.
    """
    x_m = np.asarray(x_m, dtype=float)
    u_m = np.asarray(u_m, dtype=float)
    if x_m.shape != u_m.shape or x_m.ndim != 2 or x_m.shape[1] != 2:
        raise ValueError("x_m and u_m must be matching (N, 2) series")
    if dt <= 0:
        raise ValueError("dt must be positive")
    xdot = np.zeros_like(x_m)
    xdot[1:] = (x_m[1:] - x_m[:-1]) / dt
    x_mid = x_m.copy()
    x_mid[1:] = 0.5 * (x_m[1:] + x_m[:-1])
    return params.m_bar * xdot + params.c_bar * x_mid - u_m


def completion_time(t, poses, track: TrackSpec) -> float | None:
    """First time the vehicle crosses the end mark inside the corridor.

    Walks the sampled trajectory in order; leaving the corridor before
    the end mark, or running out of samples, is a did-not-finish (None).
    """
    t = np.asarray(t, dtype=float)
    poses = np.asarray(poses, dtype=float)
    if poses.ndim != 2 or poses.shape[0] != t.shape[0]:
        raise ValueError("poses must be (N, >=2) aligned with t")
    half = track.width / 2.0
    for i in range(len(t)):
        z, lat = track.project(poses[i, :2])
        if abs(lat) > half:
            return DNF
        if z >= track.length - 1e-9:
            return float(t[i])
    return DNF


__all__ = [
    "delta_n", "rmse", "normalized_rmse", "omega_gamma",
    "estimate_fh", "completion_time", "DNF",
]
