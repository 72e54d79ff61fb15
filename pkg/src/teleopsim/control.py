"""Teleoperation coupling laws and the one-pole coupling filter.

The master maps the received environmental force to a motor command, the
slave maps the received master state to a velocity command with the
linear axis saturated, and every signal that crosses the channel passes
through a first-order low-pass discretized at the sample clock.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ControllerGains:
    """Coupling gains; the same scalar defaults serve both axes."""

    k_mv: float = 5.0
    k_momega: float = 5.0
    k_sv: float = 1.0
    k_somega: float = 1.0
    v_max: float = 0.1  # linear command saturation (m/s)

    def __post_init__(self):
        if min(self.k_mv, self.k_momega, self.k_sv, self.k_somega) <= 0:
            raise ValueError("controller gains must be strictly positive")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")


def master_control(gains: ControllerGains, f_in: np.ndarray) -> np.ndarray:
    """Force-reflecting master command, u_m = (-k_mv f_v, -k_momega f_w).

    ``f_in`` is whatever feedback signal the loop routes here: the raw
    delayed force or a predictor's reconstruction.
    """
    f_in = np.asarray(f_in, dtype=float)
    return np.array([-gains.k_mv * f_in[0], -gains.k_momega * f_in[1]])


def slave_control(gains: ControllerGains, x_in: np.ndarray) -> np.ndarray:
    """Velocity command at the slave, linear axis clamped to v_max."""
    x_in = np.asarray(x_in, dtype=float)
    u_sv = float(np.clip(gains.k_sv * x_in[0], -gains.v_max, gains.v_max))
    u_somega = gains.k_somega * x_in[1]
    return np.array([u_sv, u_somega])


class LowPassFilter:
    """One-pole IIR low-pass, y_k = y_{k-1} + a (x_k - y_{k-1}).

    The coefficient comes from the first-order RC discretization
    a = dt/(dt + 1/(2 pi f_c)).  At the 10 Hz coupling clock with the
    default 0.8 Hz corner this is a deliberately heavy smoother.
    """

    def __init__(self, f_cutoff_hz: float, dt: float, n_channels: int = 1):
        if f_cutoff_hz <= 0 or dt <= 0:
            raise ValueError("cutoff and dt must be positive")
        if f_cutoff_hz >= 0.5 / dt:
            raise ValueError("cutoff must sit below the Nyquist rate")
        self.f_cutoff_hz = f_cutoff_hz
        self.dt = dt
        tau = 1.0 / (2.0 * np.pi * f_cutoff_hz)
        self.alpha = dt / (dt + tau)
        self._y = np.zeros(n_channels)

    def reset(self) -> None:
        self._y[:] = 0.0

    def apply(self, x: np.ndarray | float) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != self._y.shape:
            raise ValueError(f"expected {self._y.shape} channels, got {x.shape}")
        self._y = self._y + self.alpha * (x - self._y)
        return self._y.copy()

    @property
    def state(self) -> np.ndarray:
        return self._y.copy()


__all__ = ["ControllerGains", "master_control", "slave_control", "LowPassFilter"]
