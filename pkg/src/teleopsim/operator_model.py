"""Scripted operator surrogate closing the human side of the loop.

The operator pushes the master device toward a pure-pursuit reference
computed from the vehicle pose they can currently see, yields to the
force feedback reflected into the device, and throttles their target
speed when that feedback gets turbulent.  All randomness comes from the
persona's own seeded generator, so a persona is fully reproducible.

The applied-force law is

    f_h = k_track (x_ref - x_m) + k_feel u_m_felt + noise

with u_m_felt the reflected motor force as perceived after the persona's
reaction delay.  The feedback term enters positively: a backward
(negative) reflected force lowers f_h, so the operator backs off when
the vehicle resists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import SAMPLE_DT
from .tracks import TrackSpec


@dataclass(frozen=True)
class OperatorParams:
    k_track: float = 4.0          # intent-tracking stiffness
    k_feel: float = 2.2           # compliance to reflected force
    reaction_delay: float = 0.3   # s, perception-to-action latency
    noise_amp: float = 0.03       # uniform command-force noise half-width
    noise_tau: float = 1.5        # s, correlation time of the noise drift
    caution_gain: float = 25.0    # speed throttle vs feedback turbulence
    caution_floor: float = 0.8    # lowest speed fraction caution can reach
    intent_tau: float = 0.6       # s, smoothing of the pursued reference
    pace_amp: float = 0.0         # fractional depth of the throttle rhythm
    pace_period: float = 9.0      # s, period of the throttle rhythm
    seed: int = 0

    def __post_init__(self):
        if min(self.k_track, self.k_feel, self.caution_gain) < 0:
            raise ValueError("operator gains must be non-negative")
        if self.reaction_delay < 0 or self.noise_amp < 0:
            raise ValueError("reaction_delay and noise_amp must be non-negative")
        if self.intent_tau < 0 or self.noise_tau < 0:
            raise ValueError("time constants must be non-negative")
        if not 0.0 <= self.caution_floor <= 1.0:
            raise ValueError("caution_floor must lie in [0, 1]")
        if not 0.0 <= self.pace_amp < 1.0 or self.pace_period <= 0:
            raise ValueError("pace_amp must lie in [0, 1) and pace_period be positive")


def operator_step(
    params: OperatorParams,
    x_ref: np.ndarray,
    x_m: np.ndarray,
    u_m_felt: np.ndarray,
    dt: float,
    rng: np.random.Generator | None = None,
    f_limit: float | None = None,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """One application of the force law; stateless.

    ``x_ref`` is the reference at the operator's lookahead, ``u_m_felt``
    the reflected force after the reaction delay (the caller owns both
    delays).  Monotone in u_m_felt: pushing the handle back never raises
    the applied force.  A precomputed ``noise`` vector wins over drawing
    fresh from ``rng``.
    """
    x_ref = np.asarray(x_ref, dtype=float)
    x_m = np.asarray(x_m, dtype=float)
    u_m_felt = np.asarray(u_m_felt, dtype=float)
    f_h = params.k_track * (x_ref - x_m) + params.k_feel * u_m_felt
    if noise is not None:
        f_h = f_h + np.asarray(noise, dtype=float)
    elif rng is not None and params.noise_amp > 0:
        f_h = f_h + rng.uniform(-params.noise_amp, params.noise_amp, size=2)
    if f_limit is not None:
        f_h = np.clip(f_h, -f_limit, f_limit)
    return f_h


@dataclass
class ReferenceSchedule:
    """Pure-pursuit reference over a track at a scheduled cruise speed.

    ``pace``, when set, maps arclength to a speed multiplier in (0, 1];
    a course can prescribe slow zones without touching the pursuit law.
    """

    track: TrackSpec
    target_speed: float
    lookahead: float = 0.35
    pace: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.target_speed <= 0:
            raise ValueError("target_speed must be positive")
        if self.lookahead <= 0:
            raise ValueError("lookahead must be positive")

    def at_pose(self, pose) -> np.ndarray:
        """(v_ref, omega_ref) for a vehicle at [x, y, heading]."""
        pose = np.asarray(pose, dtype=float)
        z, _ = self.track.project(pose[:2])
        v = self.target_speed
        if self.pace is not None:
            v *= float(self.pace(z))
        z_t = z + self.lookahead
        if z_t <= self.track.length:
            target = self.track.point_at(z_t)
        else:
            # extend the path virtually past the finish line; otherwise the
            # pursuit distance collapses near the end and 2v/d blows up
            end = self.track.pose_at(self.track.length)
            over = z_t - self.track.length
            target = end[:2] + over * np.array([np.cos(end[2]), np.sin(end[2])])
        delta = target - pose[:2]
        dist = float(np.hypot(delta[0], delta[1]))
        if dist < 1e-9:
            return np.array([v, 0.0])
        bearing = np.arctan2(delta[1], delta[0])
        alpha = _wrap_angle(bearing - pose[2])
        omega_ref = 2.0 * v * np.sin(alpha) / dist
        return np.array([v, omega_ref])

    def at_arclength(self, z: float) -> np.ndarray:
        """Reference as seen from the centerline itself (analysis aid)."""
        return self.at_pose(self.track.pose_at(z))


def make_reference(track: TrackSpec, target_speed: float,
                   v_max: float = 0.1, lookahead: float = 0.35,
                   pace: Callable[[float], float] | None = None) -> ReferenceSchedule:
    if target_speed > v_max + 1e-12:
        raise ValueError(f"target_speed {target_speed} exceeds the {v_max} limit")
    return ReferenceSchedule(track, target_speed, lookahead, pace)


def _wrap_angle(a: float) -> float:
    return float((a + np.pi) % (2.0 * np.pi) - np.pi)


class Operator:
    """Stateful persona: owns the reaction-delay ring, the turbulence
    estimate, and the persona RNG.

    The caller hands in the reflected motor force each tick; this class
    delays it by ``reaction_delay``, tracks its rolling power with a ~2 s
    first-order filter, and converts that into a caution factor scaling
    the commanded cruise speed.  Turbulent or strongly negative feedback
    therefore slows the persona down, calm feedback lets it cruise.
    """

    TURBULENCE_TAU = 2.0  # s

    def __init__(self, params: OperatorParams, schedule: ReferenceSchedule,
                 dt: float = SAMPLE_DT, f_limit: float = 3.0):
        self.params = params
        self.schedule = schedule
        self.dt = dt
        self.f_limit = f_limit
        self.rng = np.random.default_rng(params.seed)
        n_delay = int(round(params.reaction_delay / dt))
        self._felt_ring = [np.zeros(2) for _ in range(max(n_delay, 0) + 1)]
        self._turb = 0.0
        self._intent = np.zeros(2)
        self._noise = np.zeros(2)
        self._t = 0.0

    def reset(self) -> None:
        self.rng = np.random.default_rng(self.params.seed)
        self._felt_ring = [np.zeros(2) for _ in range(len(self._felt_ring))]
        self._turb = 0.0
        self._intent = np.zeros(2)
        self._noise = np.zeros(2)
        self._t = 0.0

    @property
    def pace(self) -> float:
        """Throttle-rhythm multiplier; 1 when the persona has no rhythm."""
        p = self.params
        if p.pace_amp <= 0:
            return 1.0
        phase = 2.0 * np.pi * self._t / p.pace_period
        return 1.0 - p.pace_amp * (0.5 - 0.5 * float(np.cos(phase)))

    @property
    def caution(self) -> float:
        """Speed multiplier in [floor, 1]; shrinks as feedback power grows."""
        raw = 1.0 / (1.0 + self.params.caution_gain * np.sqrt(self._turb))
        lo = self.params.caution_floor
        return lo + (1.0 - lo) * raw

    def step(self, perceived_pose, x_m: np.ndarray, u_m_now: np.ndarray) -> np.ndarray:
        """Applied force for this tick given the pose the operator sees."""
        self._felt_ring.append(np.asarray(u_m_now, dtype=float).copy())
        u_m_felt = self._felt_ring.pop(0)

        a = self.dt / (self.dt + self.TURBULENCE_TAU)
        power = float(u_m_felt @ u_m_felt)
        self._turb += a * (power - self._turb)

        raw_ref = self.schedule.at_pose(perceived_pose)
        raw_ref = np.array([raw_ref[0] * self.caution * self.pace, raw_ref[1]])
        self._t += self.dt
        # deliberate-motion smoothing: a human does not retarget at the
        # sample rate, so chase the pursuit point through a ~0.6 s lag
        if self.params.intent_tau > 0:
            b = self.dt / (self.dt + self.params.intent_tau)
            self._intent += b * (raw_ref - self._intent)
        else:
            self._intent = raw_ref
        # hand tremor/drift as filtered uniform noise: slow wander, not
        # white force jitter, so commands stay humanly smooth
        if self.params.noise_amp > 0:
            draw = self.rng.uniform(-self.params.noise_amp,
                                    self.params.noise_amp, size=2)
            if self.params.noise_tau > 0:
                c = self.dt / (self.dt + self.params.noise_tau)
                self._noise += c * (draw - self._noise)
            else:
                self._noise = draw
        return operator_step(
            self.params, self._intent, x_m, u_m_felt, self.dt,
            f_limit=self.f_limit, noise=self._noise,
        )


# ---------------------------------------------------------------------------
# persona roster
# ---------------------------------------------------------------------------
# Five evaluation personas with spread-out styles, three data-collection
# personas, and three held-out test personas.  Tuples: (k_track, k_feel,
# noise_amp, caution_gain, seed).

EVAL_PERSONAS = {
    1: OperatorParams(k_track=4.0, k_feel=2.2, noise_amp=0.015, caution_gain=25.0, caution_floor=0.9, seed=101),
    2: OperatorParams(k_track=3.2, k_feel=2.3, noise_amp=0.026, caution_gain=30.0, caution_floor=0.9, seed=102),
    3: OperatorParams(k_track=5.0, k_feel=1.8, noise_amp=0.012, caution_gain=20.0, caution_floor=0.9, seed=103),
    4: OperatorParams(k_track=3.6, k_feel=2.4, noise_amp=0.032, caution_gain=30.0, caution_floor=0.9, seed=104),
    5: OperatorParams(k_track=4.5, k_feel=2.8, noise_amp=0.015, caution_gain=28.0, caution_floor=0.9, seed=105),
}

TRAIN_PERSONAS = {
    1: OperatorParams(k_track=5.6, k_feel=0.9, noise_amp=0.022, noise_tau=2.2, caution_gain=25.0,
                      pace_amp=0.40, pace_period=7.0, seed=201),
    2: OperatorParams(k_track=5.0, k_feel=0.8, noise_amp=0.018, noise_tau=2.2, caution_gain=30.0,
                      pace_amp=0.45, pace_period=9.0, seed=202),
    3: OperatorParams(k_track=4.5, k_feel=2.2, noise_amp=0.030, noise_tau=1.5, caution_gain=22.0, seed=203),
}

TEST_PERSONAS = {
    1: OperatorParams(k_track=5.4, k_feel=0.9, noise_amp=0.020, noise_tau=2.2, caution_gain=25.0,
                      pace_amp=0.42, pace_period=8.0, seed=301),
    2: OperatorParams(k_track=5.2, k_feel=0.85, noise_amp=0.024, noise_tau=2.2, caution_gain=28.0,
                      pace_amp=0.38, pace_period=9.5, seed=302),
    3: OperatorParams(k_track=5.8, k_feel=0.95, noise_amp=0.016, noise_tau=2.2, caution_gain=22.0,
                      pace_amp=0.44, pace_period=10.5, seed=303),
}


__all__ = [
    "OperatorParams", "Operator", "ReferenceSchedule",
    "operator_step", "make_reference",
    "EVAL_PERSONAS", "TRAIN_PERSONAS", "TEST_PERSONAS",
]
