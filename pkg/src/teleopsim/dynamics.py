"""Continuous-time models of the haptic master, the slipping UGV, and the terrain.

All models are pure state-transition functions integrated by explicit
Euler at a fixed internal step.  The master is the first-order blended
joint model of the haptic device; the slave is a differential-drive
vehicle whose wheels slip on soft terrain.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import StateIntegrityError


def _check_finite(name: str, value) -> None:
    if not np.all(np.isfinite(value)):
        raise StateIntegrityError(f"non-finite {name}: {value!r}")


# ---------------------------------------------------------------------------
# Haptic master
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HapticDeviceParams:
    """Equivalent first-order parameters of the 2-DOF haptic master.

    ``m_bar`` and ``c_bar`` are the equivalent mass and damping diagonals
    of the blended joint variable; they satisfy m_bar = m_raw/lambda_blend
    and c_bar = c_raw/lambda_blend for the stored raw diagonals.
    """

    m_raw: np.ndarray = field(default_factory=lambda: np.array([0.03, 0.03]))
    c_raw: np.ndarray = field(default_factory=lambda: np.array([0.02, 0.02]))
    lambda_blend: float = 0.1
    b_vi: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5]))
    b_p: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5]))
    f_h_limit: float = 3.0  # device force clamp per joint

    def __post_init__(self):
        for name in ("m_raw", "c_raw", "b_vi", "b_p"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} diagonal entries must be positive")
        if not 0.0 < self.lambda_blend < 1.0:
            raise ValueError("lambda_blend must lie in (0, 1)")

    @property
    def m_bar(self) -> np.ndarray:
        return self.m_raw / self.lambda_blend

    @property
    def c_bar(self) -> np.ndarray:
        return self.c_raw / self.lambda_blend


@dataclass(frozen=True)
class MasterState:
    """Blended joint state of the master: x_m = lambda*q_dot + q."""

    x_m: np.ndarray = field(default_factory=lambda: np.zeros(2))
    q_m: np.ndarray = field(default_factory=lambda: np.zeros(2))
    q_m_dot: np.ndarray = field(default_factory=lambda: np.zeros(2))


def local_master_control(params: HapticDeviceParams, state: MasterState) -> np.ndarray:
    """Centering controller on the raw joints, -(B_vi q_dot + B_p q).

    The negative-feedback form is what keeps the blended first-order
    dynamics stable around the device's home position.
    """
    return -(params.b_vi * state.q_m_dot + params.b_p * state.q_m)


def step_master(
    params: HapticDeviceParams,
    state: MasterState,
    u_m: np.ndarray,
    f_h: np.ndarray,
    dt: float,
) -> MasterState:
    """Advance the blended master dynamics by one explicit Euler step.

    m_bar * x_m' + c_bar * x_m = u_m + f_h, with the raw joints recovered
    from q_dot = (x_m - q)/lambda so the blend definition holds exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    u_m = np.asarray(u_m, dtype=float)
    f_h = np.asarray(f_h, dtype=float)
    _check_finite("u_m", u_m)
    _check_finite("f_h", f_h)
    _check_finite("x_m", state.x_m)

    xdot = (u_m + f_h - params.c_bar * state.x_m) / params.m_bar
    x_new = state.x_m + dt * xdot
    q_new = state.q_m + dt * (state.x_m - state.q_m) / params.lambda_blend
    qdot_new = (x_new - q_new) / params.lambda_blend
    return MasterState(x_m=x_new, q_m=q_new, q_m_dot=qdot_new)


# ---------------------------------------------------------------------------
# Terrain
# ---------------------------------------------------------------------------

PHI_FIRM = 0.95  # internal friction angle of firm ground (rad)
PHI_SOFT = 0.50  # softest admissible terrain (rad)


@dataclass(frozen=True)
class TerrainProfile:
    """Piecewise-linear internal friction angle over track arclength.

    Slip ratio is linear in phi: firm ground (phi_max) slips not at all,
    the softest ground (phi_min) slips at s_max.
    """

    z_knots: np.ndarray
    phi_knots: np.ndarray
    phi_min: float = PHI_SOFT
    phi_max: float = PHI_FIRM
    s_max: float = 0.6

    def __post_init__(self):
        object.__setattr__(self, "z_knots", np.asarray(self.z_knots, dtype=float))
        object.__setattr__(self, "phi_knots", np.asarray(self.phi_knots, dtype=float))
        if self.z_knots.shape != self.phi_knots.shape or self.z_knots.ndim != 1:
            raise ValueError("z_knots and phi_knots must be 1-d arrays of equal length")
        if np.any(np.diff(self.z_knots) <= 0):
            raise ValueError("z_knots must be strictly increasing")
        if np.any(self.phi_knots < self.phi_min - 1e-12) or np.any(
            self.phi_knots > self.phi_max + 1e-12
        ):
            raise ValueError("phi values must lie within [phi_min, phi_max]")
        if not 0.0 <= self.s_max < 1.0:
            raise ValueError("s_max must lie in [0, 1)")

    def phi_at(self, z: float) -> float:
        """Friction angle at arclength z, clamped at the track ends."""
        return float(np.interp(z, self.z_knots, self.phi_knots))

    @staticmethod
    def uniform(length: float, phi: float = PHI_FIRM, s_max: float = 0.6) -> "TerrainProfile":
        return TerrainProfile(np.array([0.0, length]), np.array([phi, phi]), s_max=s_max)


def slip_at(profile: TerrainProfile, z: float) -> float:
    """Nominal slip ratio at arclength z, in [0, s_max]."""
    phi = profile.phi_at(z)
    frac = (profile.phi_max - phi) / (profile.phi_max - profile.phi_min)
    return float(np.clip(profile.s_max * frac, 0.0, profile.s_max))


# ---------------------------------------------------------------------------
# UGV (slave)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UgvParams:
    b_half_track: float = 0.25  # half wheel separation (m)
    wheel_radius: float = 0.1
    v_max: float = 0.1  # max allowable body speed (m/s)

    def __post_init__(self):
        if self.b_half_track <= 0 or self.v_max <= 0:
            raise ValueError("b_half_track and v_max must be positive")

    @property
    def e_matrix(self) -> np.ndarray:
        """Wheel-to-body transformation, implemented literally as printed."""
        b = self.b_half_track
        return np.array([[0.5, 0.5], [-1.0 / (2 * b), 1.0 / (2 * b)]])

    @property
    def e_inv(self) -> np.ndarray:
        b = self.b_half_track
        return np.array([[1.0, -b], [1.0, b]])


@dataclass(frozen=True)
class UgvState:
    v_s: float = 0.0
    omega_s: float = 0.0
    pose: np.ndarray = field(default_factory=lambda: np.zeros(3))  # x, y, heading
    v_r: float = 0.0
    v_l: float = 0.0
    s_r: float = 0.0
    s_l: float = 0.0


def ffc_compensate(
    v_desired: np.ndarray,
    s_est: np.ndarray,
    v_cmd_limit: float | None = None,
) -> np.ndarray:
    """Feedforward slip compensation of desired wheel speeds.

    Scales each commanded wheel speed by (1 + s_est) so the realized speed
    v_cmd/(1 + s_true) matches the desired one when the estimate is exact.
    ``v_cmd_limit`` caps the command magnitude so an overestimated slip
    cannot push the realized body speed past the allowable maximum.
    """
    v_desired = np.asarray(v_desired, dtype=float)
    s_est = np.asarray(s_est, dtype=float)
    if np.any(s_est < 0):
        raise ValueError("slip estimates must be non-negative")
    v_cmd = v_desired * (1.0 + s_est)
    if v_cmd_limit is not None:
        v_cmd = np.clip(v_cmd, -v_cmd_limit, v_cmd_limit)
    return v_cmd


def step_slave(
    params: UgvParams,
    state: UgvState,
    u_s: np.ndarray,
    profile: TerrainProfile,
    dt: float,
    s_est: np.ndarray | None = None,
    slip_noise: np.ndarray | None = None,
    wheel_arclengths: tuple[float, float] | None = None,
    n_substeps: int = 10,
) -> UgvState:
    """Advance the slipping differential-drive slave over one sample period.

    Desired wheel speeds come from E(b)^-1 u_s, get feedforward-compensated
    with ``s_est``, and slip against the terrain: v = v_cmd/(1 + s) with s
    sampled at each wheel's own arclength (plus optional per-wheel noise).
    The realized body twist is E(b)[v_r, v_l]; the pose integrates by
    explicit Euler at dt/n_substeps.
    """
    u_s = np.asarray(u_s, dtype=float)
    _check_finite("u_s", u_s)
    _check_finite("pose", state.pose)

    v_des = params.e_inv @ u_s  # [v_rd, v_ld]
    if s_est is None:
        s_est = np.zeros(2)
    v_cmd_limit = params.v_max * (1.0 + profile.s_max)
    v_cmd = ffc_compensate(v_des, s_est, v_cmd_limit)

    if wheel_arclengths is None:
        z = _straight_arclength(state.pose)
        z_r = z_l = z
    else:
        z_r, z_l = wheel_arclengths
    s_r = slip_at(profile, z_r)
    s_l = slip_at(profile, z_l)
    if slip_noise is not None:
        s_r = max(0.0, s_r + float(slip_noise[0]))
        s_l = max(0.0, s_l + float(slip_noise[1]))

    v_r = v_cmd[0] / (1.0 + s_r)
    v_l = v_cmd[1] / (1.0 + s_l)
    v_s, omega_s = params.e_matrix @ np.array([v_r, v_l])

    pose = state.pose.astype(float).copy()
    sub = dt / n_substeps
    for _ in range(n_substeps):
        pose[0] += sub * v_s * np.cos(pose[2])
        pose[1] += sub * v_s * np.sin(pose[2])
        pose[2] += sub * omega_s
    return UgvState(
        v_s=float(v_s), omega_s=float(omega_s), pose=pose,
        v_r=float(v_r), v_l=float(v_l), s_r=float(s_r), s_l=float(s_l),
    )


def _straight_arclength(pose: np.ndarray) -> float:
    # fallback when no track projection is supplied: distance along +x
    return float(pose[0])


def environment_force(u_s: np.ndarray, state: UgvState) -> np.ndarray:
    """Terrain-induced velocity loss felt as the environmental force.

    Both closed forms agree: [u_sv - v_s, u_somega - omega_s] equals
    E(b)[v_rd - v_r, v_ld - v_l] identically.
    """
    u_s = np.asarray(u_s, dtype=float)
    return np.array([u_s[0] - state.v_s, u_s[1] - state.omega_s])


def environment_force_wheel_form(
    params: UgvParams, u_s: np.ndarray, state: UgvState
) -> np.ndarray:
    """Wheel-loss form of the environmental force, for consistency checks."""
    v_des = params.e_inv @ np.asarray(u_s, dtype=float)
    loss = v_des - np.array([state.v_r, state.v_l])
    return params.e_matrix @ loss


@dataclass
class SlipEstimator:
    """Per-wheel slip estimate for the FFC, smoothed over ~1 s.

    Measures s = (v_cmd - v_real)/v_real from the previous step and tracks
    it with a first-order filter, so patch transitions leave a transient
    velocity loss instead of being cancelled instantly.
    """

    time_constant: float = 1.0
    s_hat: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def update(self, v_cmd: np.ndarray, v_real: np.ndarray, dt: float) -> np.ndarray:
        meas = np.zeros(2)
        for i in range(2):
            if abs(v_real[i]) > 1e-9:
                meas[i] = max(0.0, (v_cmd[i] - v_real[i]) / v_real[i])
        alpha = dt / (dt + self.time_constant)
        self.s_hat = self.s_hat + alpha * (meas - self.s_hat)
        return self.s_hat

    def estimate(self) -> np.ndarray:
        return self.s_hat.copy()


def make_slip_noise(rng: np.random.Generator, half_width: float) -> np.ndarray:
    """Zero-mean uniform per-wheel slip noise, drawn once per sample period."""
    if half_width <= 0:
        return np.zeros(2)
    return rng.uniform(-half_width, half_width, size=2)


__all__ = [
    "HapticDeviceParams", "MasterState", "UgvParams", "UgvState",
    "TerrainProfile", "SlipEstimator",
    "step_master", "local_master_control", "slip_at", "step_slave",
    "environment_force", "environment_force_wheel_form", "ffc_compensate",
    "make_slip_noise", "PHI_FIRM", "PHI_SOFT",
]
