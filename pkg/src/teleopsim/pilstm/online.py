"""Streaming single-step inference for closed-loop and replay use.

The online wrapper assembles the same feature rows the network was
trained on, with one difference in provenance: the predicted-history
features come from this predictor's own past outputs, looked up at the
per-packet measured delay.  While the feature ring (or the output
history at the needed depth) is still filling, the delayed value passes
straight through, matching the model-free predictor's warm-up rule.
"""

from __future__ import annotations

import numpy as np

from .. import SAMPLE_DT
from .network import ModelParams, forward
from .scaling import Scaler


class OnlinePredictor:
    """One coupling variable's network plus its rolling state."""

    def __init__(self, params: ModelParams, scaler: Scaler, dt: float = SAMPLE_DT,
                 history_horizon: float = 4.0):
        self.params = params
        self.scaler = scaler
        self.dt = dt
        self.n = params.topology.input_len
        self._ring = np.zeros((self.n, 4))
        self._ring_count = 0
        cap = int(np.ceil(history_horizon / dt)) + 1
        self._out_hist = np.zeros(cap)
        self._out_count = 0
        self._out_cap = cap
        self.last_xp_del = 0.0
        self.last_xdotp_del = 0.0

    def reset(self) -> None:
        self._ring[:] = 0.0
        self._ring_count = 0
        self._out_hist[:] = 0.0
        self._out_count = 0
        self.last_xp_del = 0.0
        self.last_xdotp_del = 0.0

    def _own_output(self, steps_back: int) -> float | None:
        if steps_back >= self._out_count or steps_back >= self._out_cap:
            return None
        idx = (self._out_count - 1 - steps_back) % self._out_cap
        return float(self._out_hist[idx])

    def _push_output(self, y: float) -> None:
        self._out_hist[self._out_count % self._out_cap] = y
        self._out_count += 1

    def _push_features(self, row: np.ndarray) -> None:
        if self._ring_count < self.n:
            self._ring[self._ring_count] = row
        else:
            self._ring = np.roll(self._ring, -1, axis=0)
            self._ring[-1] = row
        self._ring_count += 1

    @property
    def warm(self) -> bool:
        return self._ring_count >= self.n

    def current_window(self) -> np.ndarray:
        """The feature window the next prediction will consume."""
        return self._ring.copy()

    def step(self, x_del: float, xdot_del: float, delay: float) -> float:
        """Advance one sample period; returns the current-state estimate.

        The prediction is made from the ring BEFORE this sample's feature
        row is appended, matching the training alignment (a window of n
        rows targets the row after it).
        """
        d = int(round(delay / self.dt))
        xp_del = self._own_output(d - 1) if d > 0 else self._own_output(0)
        if xp_del is None:
            xp_del, xdotp_del = x_del, xdot_del
        else:
            prev = self._own_output(d) if d > 0 else self._own_output(1)
            xdotp_del = 0.0 if prev is None else (xp_del - prev) / self.dt
        self.last_xp_del = xp_del
        self.last_xdotp_del = xdotp_del

        if self.warm:
            window = self.scaler.scale_features(self._ring)
            y_scaled = forward(self.params, window[None, :, :])[0]
            y = float(self.scaler.unscale_target(y_scaled))
        else:
            y = x_del  # warm-up passthrough

        self._push_features(np.array([x_del, xp_del, xdot_del, xdotp_del]))
        self._push_output(y)
        return y


__all__ = ["OnlinePredictor"]
