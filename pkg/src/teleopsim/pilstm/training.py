"""Mini-batch training loop: Adam, contiguous batches, validation
checkpointing, and early stopping.

Batches are contiguous runs of windows (required by the physics term,
whose residuals difference consecutive predictions); only the order of
the batches is shuffled between epochs.  The parameters reported at the
end are the ones with the best validation norm, not the last ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError
from ..predict_conv import FORWARD_ALPHA, FORWARD_BETA
from .losses import batch_loss_and_grad, dde_forcing, physics_loss
from .network import ModelParams, NetworkTopology, clip_global_norm, forward, init_params
from .scaling import Scaler


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0023
    grad_clip: float = 0.07
    physics_weight: float = 0.1
    batch_size: int = 64
    epochs: int = 200
    patience: int = 30
    val_split: float = 0.3
    seed: int = 0
    dde_alpha: float = FORWARD_ALPHA
    dde_beta: float = FORWARD_BETA

    def __post_init__(self):
        if self.learning_rate <= 0 or self.grad_clip <= 0:
            raise ValueError("learning_rate and grad_clip must be positive")
        if self.physics_weight < 0:
            raise ValueError("physics_weight must be non-negative")
        if not 0.0 < self.val_split < 1.0:
            raise ValueError("val_split must lie in (0, 1)")
        if self.batch_size < 2 or self.epochs < 1:
            raise ValueError("batch_size >= 2 and epochs >= 1 required")


class Adam:
    """Adam with bias correction, state keyed by parameter name."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: ModelParams, grads: ModelParams) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for (name, p), (_, g) in zip(params.items(), grads.items()):
            if name not in self._m:
                self._m[name] = np.zeros_like(p)
                self._v[name] = np.zeros_like(p)
            m = self._m[name]; v = self._v[name]
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


@dataclass
class TrainingLog:
    l_data: list = field(default_factory=list)
    l_phys: list = field(default_factory=list)
    l_total: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_residual: list = field(default_factory=list)
    best_epoch: int = -1
    best_val: float = np.inf
    stopped_epoch: int = -1

    def to_dict(self) -> dict:
        return {
            "l_data": self.l_data, "l_phys": self.l_phys, "l_total": self.l_total,
            "val_loss": self.val_loss, "val_residual": self.val_residual,
            "best_epoch": self.best_epoch, "best_val": self.best_val,
            "stopped_epoch": self.stopped_epoch,
        }


def predict_in_chunks(params: ModelParams, sequences: np.ndarray, chunk: int = 512) -> np.ndarray:
    outs = [forward(params, sequences[i:i + chunk]) for i in range(0, len(sequences), chunk)]
    return np.concatenate(outs) if outs else np.empty(0)


def _contiguous_batches(n_windows: int, batch_size: int) -> list[slice]:
    slices = []
    for start in range(0, n_windows, batch_size):
        stop = min(start + batch_size, n_windows)
        if stop - start >= 2:
            slices.append(slice(start, stop))
    return slices


def train(windows, topology: NetworkTopology, config: TrainConfig):
    """Train on a WindowSet; returns (best params, scaler, log).

    The split is temporal (first portion trains), the scaler is fitted on
    the training portion only, and the checkpoint rule keeps whichever
    epoch's parameters minimized the validation prediction norm.
    """
    from ..dataset import split_windows  # local import: dataset pulls no pilstm code

    train_w, val_w = split_windows(windows, 1.0 - config.val_split)
    scaler = Scaler.fit(train_w.sequences, train_w.targets)

    Xtr = scaler.scale_features(train_w.sequences)
    ytr = scaler.scale_target(train_w.targets)
    Xva = scaler.scale_features(val_w.sequences)
    yva = scaler.scale_target(val_w.targets)

    params = init_params(topology, config.seed)
    opt = Adam(config.learning_rate)
    rng = np.random.default_rng(config.seed + 1)
    batches = _contiguous_batches(len(ytr), config.batch_size)
    log = TrainingLog()
    best = params.copy()
    since_best = 0

    for epoch in range(config.epochs):
        order = rng.permutation(len(batches))
        ep_d = ep_p = ep_t = 0.0
        for bi in order:
            sl = batches[bi]
            loss, l_d, l_p, grads = batch_loss_and_grad(
                params, Xtr[sl], ytr[sl], train_w.target_feats[sl],
                train_w.target_times[sl], scaler, config.physics_weight,
                alpha=config.dde_alpha, beta=config.dde_beta,
            )
            if not np.isfinite(loss):
                raise NumericError(
                    f"training diverged at epoch {epoch}, batch {bi}: loss={loss}"
                )
            clip_global_norm(grads, config.grad_clip)
            opt.step(params, grads)
            ep_d += l_d; ep_p += l_p; ep_t += loss
        nb = len(batches)
        log.l_data.append(ep_d / nb)
        log.l_phys.append(ep_p / nb)
        log.l_total.append(ep_t / nb)

        preds_va = predict_in_chunks(params, Xva)
        vloss = float(np.linalg.norm(preds_va - yva))
        if not np.isfinite(vloss):
            raise NumericError(f"validation diverged at epoch {epoch}")
        log.val_loss.append(vloss)
        log.val_residual.append(validation_residual(
            scaler.unscale_target(preds_va), val_w,
            config.dde_alpha, config.dde_beta,
        ))

        if vloss < log.best_val:
            log.best_val = vloss
            log.best_epoch = epoch
            best = params.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best > config.patience:
                log.stopped_epoch = epoch
                break

    return best, scaler, log


def validation_residual(phys_preds: np.ndarray, window_set, alpha: float, beta: float) -> float:
    """Mean squared delay-equation residual of predictions on a window
    set, in physical units."""
    forcing = dde_forcing(window_set.target_feats, alpha, beta)
    try:
        loss, _, _ = physics_loss(phys_preds, window_set.target_times, forcing)
    except ValueError:
        return float("nan")
    return loss


__all__ = [
    "TrainConfig", "TrainingLog", "Adam", "train",
    "predict_in_chunks", "validation_residual",
]
