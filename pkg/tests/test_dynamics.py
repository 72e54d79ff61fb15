"""Master/slave/terrain model tests with hand-derived expected values."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teleopsim.dynamics import (
    HapticDeviceParams, MasterState, UgvParams, UgvState, TerrainProfile,
    SlipEstimator, step_master, slip_at, step_slave, environment_force,
    environment_force_wheel_form, ffc_compensate,
)
from teleopsim.errors import StateIntegrityError

PARAMS = HapticDeviceParams()
UGV = UgvParams()


def flat_terrain(phi, length=100.0):
    return TerrainProfile(np.array([0.0, length]), np.array([phi, phi]))


# -- master ----------------------------------------------------------------

def test_master_equilibrium_stays_zero():
    s = MasterState()
    for _ in range(100):
        s = step_master(PARAMS, s, np.zeros(2), np.zeros(2), 0.01)
    assert np.all(s.x_m == 0.0)


def test_master_steady_state_is_fh_over_cbar():
    # x_ss = c_bar^-1 f_h; with m_bar=0.3, c_bar=0.2, f_h=(0.1, 0) -> 0.5
    assert np.allclose(PARAMS.m_bar, [0.3, 0.3])
    assert np.allclose(PARAMS.c_bar, [0.2, 0.2])
    s = MasterState()
    f_h = np.array([0.1, 0.0])
    for _ in range(5000):
        s = step_master(PARAMS, s, np.zeros(2), f_h, 0.01)
    assert abs(s.x_m[0] - 0.5) < 1e-6
    assert abs(s.x_m[1]) < 1e-12


def test_master_single_euler_step_hand_value():
    # x' = x (1 - dt c/m) = 0.5 (1 - 0.01*0.2/0.3)
    s = MasterState(x_m=np.array([0.5, 0.0]))
    s2 = step_master(PARAMS, s, np.zeros(2), np.zeros(2), 0.01)
    expected = 0.5 * (1.0 - 0.01 * 0.2 / 0.3)
    assert abs(s2.x_m[0] - expected) < 1e-15
    assert abs(expected - 0.49667) < 1e-4


def test_master_rejects_nonfinite():
    s = MasterState(x_m=np.array([np.nan, 0.0]))
    with pytest.raises(StateIntegrityError):
        step_master(PARAMS, s, np.zeros(2), np.zeros(2), 0.01)
    with pytest.raises(StateIntegrityError):
        step_master(PARAMS, MasterState(), np.array([np.inf, 0]), np.zeros(2), 0.01)


def test_blend_definition_holds_after_steps():
    s = MasterState()
    rng = np.random.default_rng(0)
    for _ in range(200):
        s = step_master(PARAMS, s, rng.normal(size=2) * 0.1, rng.normal(size=2) * 0.1, 0.01)
        blend = PARAMS.lambda_blend * s.q_m_dot + s.q_m
        assert np.max(np.abs(blend - s.x_m)) < 1e-12


@given(x0=st.floats(-2, 2), x1=st.floats(-2, 2))
@settings(max_examples=50, deadline=None)
def test_master_unforced_decay(x0, x1):
    s = MasterState(x_m=np.array([x0, x1]))
    prev = np.linalg.norm(s.x_m)
    for _ in range(50):
        s = step_master(PARAMS, s, np.zeros(2), np.zeros(2), 0.01)
        cur = np.linalg.norm(s.x_m)
        assert cur <= prev + 1e-15
        prev = cur


# -- terrain ---------------------------------------------------------------

def test_slip_firm_ground_zero():
    assert slip_at(flat_terrain(0.95), 1.0) == 0.0


def test_slip_softest_ground_smax():
    assert slip_at(flat_terrain(0.50), 1.0) == pytest.approx(0.6, abs=1e-12)


def test_slip_midpoint():
    # phi = 0.725 is the midpoint of [0.50, 0.95] -> s = 0.3
    assert slip_at(flat_terrain(0.725), 1.0) == pytest.approx(0.3, abs=1e-12)


def test_slip_monotone_in_phi():
    phis = np.linspace(0.50, 0.95, 40)
    slips = [slip_at(flat_terrain(p), 0.0) for p in phis]
    assert all(a >= b - 1e-15 for a, b in zip(slips, slips[1:]))


def test_terrain_interpolation_and_clamping():
    prof = TerrainProfile(np.array([0.0, 2.0, 4.0]), np.array([0.95, 0.50, 0.95]))
    assert prof.phi_at(1.0) == pytest.approx(0.725)
    assert prof.phi_at(-5.0) == pytest.approx(0.95)  # clamped at ends
    assert prof.phi_at(99.0) == pytest.approx(0.95)


def test_terrain_rejects_phi_out_of_range():
    with pytest.raises(ValueError):
        TerrainProfile(np.array([0.0, 1.0]), np.array([0.3, 0.95]))


# -- slave -----------------------------------------------------------------

def test_slave_symmetric_no_slip():
    firm = flat_terrain(0.95)
    st0 = UgvState()
    out = step_slave(UGV, st0, np.array([0.1, 0.0]), firm, 0.1)
    assert out.v_s == pytest.approx(0.1, abs=1e-12)
    assert out.omega_s == pytest.approx(0.0, abs=1e-12)


def test_wheel_slip_inversion():
    # v_d = 0.1 at s = 0.25 -> realized 0.08
    assert 0.1 / (1 + 0.25) == pytest.approx(0.08, abs=1e-12)
    prof = flat_terrain(0.7625)  # s = 0.6*(0.95-0.7625)/0.45 = 0.25
    assert slip_at(prof, 0.0) == pytest.approx(0.25, abs=1e-12)
    out = step_slave(UGV, UgvState(), np.array([0.1, 0.0]), prof, 0.1)
    assert out.v_r == pytest.approx(0.08, abs=1e-12)
    assert out.v_l == pytest.approx(0.08, abs=1e-12)


def test_body_twist_from_wheel_speeds():
    # direct E(b) arithmetic: v_r=0.1, v_l=0.05, b=0.25
    vs, ws = UGV.e_matrix @ np.array([0.1, 0.05])
    assert vs == pytest.approx(0.075, abs=1e-15)
    assert ws == pytest.approx(-0.1, abs=1e-15)


def test_kinematic_consistency_after_step():
    prof = flat_terrain(0.80)
    state = UgvState()
    rng = np.random.default_rng(3)
    for _ in range(100):
        u = np.array([rng.uniform(-0.1, 0.1), rng.uniform(-0.5, 0.5)])
        state = step_slave(UGV, state, u, prof, 0.1,
                           slip_noise=rng.uniform(-0.02, 0.02, 2))
        twist = UGV.e_matrix @ np.array([state.v_r, state.v_l])
        assert np.max(np.abs(twist - [state.v_s, state.omega_s])) < 1e-12


def test_environment_force_dual_forms():
    prof = flat_terrain(0.70)
    u = np.array([0.1, 0.2])
    out = step_slave(UGV, UgvState(), u, prof, 0.1)
    f1 = environment_force(u, out)
    f2 = environment_force_wheel_form(UGV, u, out)
    assert np.max(np.abs(f1 - f2)) < 1e-12


def test_environment_force_hand_values():
    # symmetric loss 0.02 -> (0.02, 0); one-sided right loss -> (0.01, -0.04)
    loss_sym = UGV.e_matrix @ np.array([0.02, 0.02])
    assert np.allclose(loss_sym, [0.02, 0.0], atol=1e-15)
    loss_r = UGV.e_matrix @ np.array([0.02, 0.0])
    assert np.allclose(loss_r, [0.01, -0.04], atol=1e-15)


@given(
    vr=st.floats(-0.15, 0.15), vl=st.floats(-0.15, 0.15),
    usv=st.floats(-0.1, 0.1), usw=st.floats(-0.5, 0.5),
)
@settings(max_examples=200, deadline=None)
def test_dual_form_equality_random(vr, vl, usv, usw):
    vs, ws = UGV.e_matrix @ np.array([vr, vl])
    state = UgvState(v_s=vs, omega_s=ws, v_r=vr, v_l=vl)
    u = np.array([usv, usw])
    f1 = environment_force(u, state)
    f2 = environment_force_wheel_form(UGV, u, state)
    assert np.max(np.abs(f1 - f2)) < 1e-12


# -- feedforward compensation ---------------------------------------------

def test_ffc_identity_at_zero_estimate():
    v = np.array([0.1, 0.05])
    assert np.array_equal(ffc_compensate(v, np.zeros(2)), v)


def test_ffc_exact_estimate_recovers_desired():
    v_cmd = ffc_compensate(np.array([0.1, 0.1]), np.array([0.25, 0.25]))
    realized = v_cmd / 1.25
    assert np.allclose(realized, 0.1, atol=1e-15)


def test_ffc_mismatch_hand_value():
    v_cmd = ffc_compensate(np.array([0.1, 0.1]), np.array([0.25, 0.25]))
    realized = v_cmd / 1.5  # true slip 0.5
    assert realized[0] == pytest.approx(0.125 / 1.5, abs=1e-15)
    assert realized[0] == pytest.approx(0.0833, abs=1e-4)


def test_ffc_rejects_negative_estimate():
    with pytest.raises(ValueError):
        ffc_compensate(np.array([0.1, 0.1]), np.array([-0.1, 0.0]))


def test_perfect_compensation_limit():
    # with the estimator converged on constant terrain the realized body
    # speed tracks the command almost exactly
    prof = flat_terrain(0.725)  # s = 0.3
    s_true = slip_at(prof, 0.0)
    state = UgvState()
    u = np.array([0.08, 0.0])
    out = step_slave(UGV, state, u, prof, 0.1, s_est=np.array([s_true, s_true]))
    assert abs(u[0] - out.v_s) < 1e-9


def test_slip_estimator_converges():
    est = SlipEstimator(time_constant=1.0)
    for _ in range(100):
        s_hat = est.update(np.array([0.12, 0.12]), np.array([0.1, 0.1]), 0.1)
    assert np.allclose(s_hat, 0.2, atol=1e-3)


def test_ffc_saturation_caps_command():
    prof = flat_terrain(0.50)  # worst slip 0.6
    cap = UGV.v_max * (1 + prof.s_max)
    v_cmd = ffc_compensate(np.array([0.1, 0.1]), np.array([5.0, 5.0]), cap)
    assert np.all(np.abs(v_cmd) <= cap + 1e-15)
