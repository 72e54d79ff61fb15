"""Loss terms: data MAE, delay-equation residual, and their gradients.

The data term lives in scaled space.  The physics term lives in physical
units: consecutive predictions are differenced into a rate and held
against the forcing that the delayed data implies, so the network's
outputs must obey the same first-order delay dynamics the model-free
predictor integrates.  Collocation points are the batch's own target
timestamps; only consecutive rows one sample apart contribute.
"""

from __future__ import annotations

import numpy as np

from .. import SAMPLE_DT
from ..predict_conv import FORWARD_ALPHA, FORWARD_BETA
from .network import ModelParams, backward, forward
from .scaling import Scaler

GAP_TOL = 1e-6


def data_loss(preds: np.ndarray, targets: np.ndarray) -> float:
    """Mean absolute error; both arguments in the same (scaled) space."""
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.size == 0 or preds.shape != targets.shape:
        raise ValueError("data_loss needs equal-length nonempty arrays")
    return float(np.mean(np.abs(preds - targets)))


def dde_forcing(target_feats: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Right-hand side of the predictor dynamics from a feature row.

    Rows are [x_del, x_p_del, xdot_del, xdot_p_del] in physical units.
    """
    f = np.asarray(target_feats, dtype=float)
    return f[..., 2] + beta * (f[..., 0] - f[..., 1]) + alpha * (f[..., 2] - f[..., 3])


def residual_mask(target_times: np.ndarray, dt: float = SAMPLE_DT) -> np.ndarray:
    """True at j where row j-1 is exactly one sample earlier (so the
    backward difference of predictions is a valid rate).  Index 0 is
    always False."""
    t = np.asarray(target_times, dtype=float)
    mask = np.zeros(t.shape, dtype=bool)
    if t.size > 1:
        mask[1:] = np.abs(np.diff(t) - dt) < GAP_TOL
    return mask


def physics_loss(
    phys_preds: np.ndarray,
    target_times: np.ndarray,
    forcing: np.ndarray,
    dt: float = SAMPLE_DT,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean squared delay-equation residual over the valid collocation
    points.  Returns (loss, residuals, mask); residuals are zero where
    masked.  Raises if no point is valid."""
    phi = np.asarray(phys_preds, dtype=float)
    mask = residual_mask(target_times, dt)
    m = int(mask.sum())
    if m == 0:
        raise ValueError("physics_loss: no valid collocation points in batch")
    r = np.zeros_like(phi)
    r[1:] = (phi[1:] - phi[:-1]) / dt - np.asarray(forcing, dtype=float)[1:]
    r[~mask] = 0.0
    return float(np.sum(r * r) / m), r, mask


def total_loss(l_data: float, l_phys: float, physics_weight: float) -> float:
    if physics_weight < 0:
        raise ValueError("physics_weight must be non-negative")
    return l_data + physics_weight * l_phys


def batch_loss_and_grad(
    params: ModelParams,
    sequences: np.ndarray,
    targets_scaled: np.ndarray,
    target_feats: np.ndarray,
    target_times: np.ndarray,
    scaler: Scaler,
    physics_weight: float,
    alpha: float = FORWARD_ALPHA,
    beta: float = FORWARD_BETA,
    dt: float = SAMPLE_DT,
    want_grad: bool = True,
):
    """Total loss (and raw gradient) of one contiguous batch.

    ``sequences``/``targets_scaled`` are in scaled space; ``target_feats``
    and ``target_times`` describe the collocation rows in physical units.
    Returns (loss, l_data, l_phys, grads); grads is None when not wanted.
    """
    B = len(targets_scaled)
    if want_grad:
        preds, cache = forward(params, sequences, return_cache=True)
    else:
        preds = forward(params, sequences)

    err = preds - np.asarray(targets_scaled, dtype=float)
    l_data = float(np.mean(np.abs(err)))
    dy = np.sign(err) / B

    l_phys = 0.0
    if physics_weight > 0.0:
        mask = residual_mask(target_times, dt)
        m = int(mask.sum())
        if m > 0:
            phi = scaler.unscale_target(preds)
            forcing = dde_forcing(target_feats, alpha, beta)
            r = np.zeros_like(phi)
            r[1:] = (phi[1:] - phi[:-1]) / dt - forcing[1:]
            r[~mask] = 0.0
            l_phys = float(np.sum(r * r) / m)
            # d l_phys / d phi_j = (2/(M dt)) (r_j - r_{j+1})
            dphi = np.zeros_like(phi)
            dphi += r
            dphi[:-1] -= r[1:]
            dphi *= 2.0 / (m * dt)
            dy = dy + physics_weight * scaler.target_gain * dphi

    loss = l_data + physics_weight * l_phys
    if not want_grad:
        return loss, l_data, l_phys, None
    grads = backward(params, cache, dy)
    return loss, l_data, l_phys, grads


__all__ = [
    "data_loss", "dde_forcing", "residual_mask", "physics_loss",
    "total_loss", "batch_loss_and_grad", "GAP_TOL",
]
