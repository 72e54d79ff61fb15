"""Model-free dynamic predictor reconstructing an undelayed signal.

Given a delayed measurement and its derivative, the predictor integrates
its own estimate forward through a correction law driven by the mismatch
between the delayed measurement and the estimate's own delayed history:

    xdot_p(t) = xdot(t-T) + beta [x(t-T) - x_p(t-T)]
                          + alpha [xdot(t-T) - xdot_p(t-T)]

One instance per coupling variable; the history ring holds the estimate
trajectory so the delayed self-terms can be looked up at the measured
per-packet delay, rounded to the sample grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

FORWARD_ALPHA = 0.57
FORWARD_BETA = 1.12
BACKWARD_ALPHA = 0.64
BACKWARD_BETA = 0.91


@dataclass(frozen=True)
class ConvPredictorParams:
    alpha: float
    beta: float
    dt: float = 0.1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @staticmethod
    def forward(dt: float = 0.1) -> "ConvPredictorParams":
        return ConvPredictorParams(FORWARD_ALPHA, FORWARD_BETA, dt)

    @staticmethod
    def backward(dt: float = 0.1) -> "ConvPredictorParams":
        return ConvPredictorParams(BACKWARD_ALPHA, BACKWARD_BETA, dt)


def estimate_derivative(buffer: np.ndarray, dt: float) -> float:
    """Backward-difference rate of the last two samples; 0 with one sample."""
    buffer = np.asarray(buffer, dtype=float)
    if buffer.size < 2:
        return 0.0
    return float((buffer[-1] - buffer[-2]) / dt)


class ConvPredictor:
    """Scalar predictor instance with its own estimate history ring.

    After each ``step`` the delayed self-terms actually used by the
    recursion are kept in ``last_xp_del`` / ``last_xdotp_del`` so a data
    logger can record features identical to the predictor's internals.
    """

    def __init__(self, params: ConvPredictorParams, t_max: float = 2.0):
        self.params = params
        self.capacity = int(np.ceil(t_max / params.dt)) + 1
        self._xp = np.zeros(self.capacity)
        self._xdotp = np.zeros(self.capacity)
        self._count = 0  # samples stored so far
        self.last_xp_del = 0.0
        self.last_xdotp_del = 0.0

    def reset(self) -> None:
        self._xp[:] = 0.0
        self._xdotp[:] = 0.0
        self._count = 0
        self.last_xp_del = 0.0
        self.last_xdotp_del = 0.0

    @property
    def warm_samples(self) -> int:
        return self._count

    def _lookup(self, steps_back: int) -> tuple[float, float]:
        # index 0 = most recent stored sample
        idx = (self._count - 1 - steps_back) % self.capacity
        return float(self._xp[idx]), float(self._xdotp[idx])

    def _store(self, xp: float, xdotp: float) -> None:
        idx = self._count % self.capacity
        self._xp[idx] = xp
        self._xdotp[idx] = xdotp
        self._count += 1

    def delay_steps(self, delay: float) -> int:
        steps = int(round(delay / self.params.dt))
        if steps < 0:
            raise ConfigurationError(f"negative delay {delay}")
        if steps >= self.capacity:
            raise ConfigurationError(
                f"delay {delay:.3f}s exceeds history capacity "
                f"({self.capacity} samples at dt={self.params.dt})"
            )
        return steps

    def step(self, x_del: float, xdot_del: float, delay: float) -> float:
        """Advance one sample period; returns the current-state estimate.

        ``delay`` is the measured age of the delayed sample in seconds.
        During warm-up (own history shorter than the delay) the delayed
        value passes through unchanged so closed-loop startup stays
        defined.
        """
        p = self.params
        steps = self.delay_steps(delay)

        if self._count < max(steps, 1):
            # warm-up: seed the ring with the delayed signal itself
            xdotp = xdot_del if self._count > 0 else 0.0
            self._store(x_del, xdotp)
            self.last_xp_del = x_del
            self.last_xdotp_del = xdotp
            return x_del

        # after the store below, the latest entry is x_p(t); right now it
        # is x_p(t-dt), so t-steps*dt sits steps-1 entries back
        if steps > 0:
            xp_del, xdotp_del = self._lookup(steps - 1)
        else:
            xp_del, xdotp_del = self._lookup(0)
        xp_prev, _ = self._lookup(0)
        xdotp = (
            xdot_del
            + p.beta * (x_del - xp_del)
            + p.alpha * (xdot_del - xdotp_del)
        )
        xp = xp_prev + p.dt * xdotp
        self._store(xp, xdotp)
        self.last_xp_del = xp_del
        self.last_xdotp_del = xdotp_del
        return xp


__all__ = [
    "ConvPredictorParams", "ConvPredictor", "estimate_derivative",
    "FORWARD_ALPHA", "FORWARD_BETA", "BACKWARD_ALPHA", "BACKWARD_BETA",
]
