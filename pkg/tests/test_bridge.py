"""Cockpit service: message decoding, live session stepping, socket layer."""

import json
import time

import numpy as np
import pytest

from teleopsim.bridge import (
    DEADMAN_S, FRAME_PERIOD, MODES, Cockpit, LiveSession, decode_command,
)
from teleopsim.errors import ConfigurationError


# ---------------------------------------------------------------------------
# message decoding
# ---------------------------------------------------------------------------

def test_decode_cmd_roundtrip():
    msg = decode_command(json.dumps(
        {"type": "cmd", "seq": 3, "v": 0.5, "w": -0.2}))
    assert msg == {"type": "cmd", "seq": 3, "v": 0.5, "w": -0.2,
                   "client_time": None}


def test_decode_clamps_axes():
    msg = decode_command('{"type": "cmd", "seq": 1, "v": 99, "w": -99}')
    assert msg["v"] == 1.0 and msg["w"] == -1.0


def test_decode_mode_with_overrides():
    msg = decode_command(json.dumps(
        {"type": "mode", "mode": "predicted", "predictor": "conv",
         "jitter": 0.0}))
    assert msg["mode"] == "predicted" and msg["jitter"] == 0.0


@pytest.mark.parametrize("junk", [
    "not json",
    "[1, 2]",
    '{"no_type": 1}',
    '{"type": "mystery"}',
    '{"type": "cmd", "v": 1}',
    '{"type": "cmd", "seq": 1, "v": "wild"}',
    '{"type": "cmd", "seq": 1, "v": NaN}',
    '{"type": "mode", "mode": "turbo"}',
    '{"type": "mode", "mode": "predicted", "predictor": "magic"}',
])
def test_decode_rejects_junk(junk):
    with pytest.raises(ConfigurationError):
        decode_command(junk)


# ---------------------------------------------------------------------------
# live session
# ---------------------------------------------------------------------------

FRAME_KEYS = {
    "type", "schema", "seq", "server_time", "sim_time", "mode", "pose",
    "v_s", "omega_s", "s_r", "s_l", "x_m", "f_h", "feedback", "delay",
    "backlog", "omega", "gamma", "drive", "track",
}


def test_frame_shape_and_size():
    s = LiveSession(mode="delayed", jitter=0.0, seed=42)
    frame = None
    for _ in range(30):
        frame = s.step(0.8, 0.1)
    assert set(frame) == FRAME_KEYS
    assert len(json.dumps(frame)) < 2048


def test_session_is_deterministic():
    def run():
        s = LiveSession(mode="delayed", jitter=0.25, seed=7)
        frames = []
        for k in range(40):
            f = s.step(0.5 if k > 5 else 0.0, 0.1)
            f.pop("server_time")
            frames.append(f)
        return frames
    assert run() == run()


def test_ideal_mode_reports_zero_ages():
    s = LiveSession(mode="ideal", seed=3)
    f = s.step(0.4, 0.0)
    assert f["delay"] == {"fwd": 0.0, "bwd": 0.0}


def test_feedback_roundtrip_is_twice_the_base_delay():
    s = LiveSession(mode="delayed", base_delay=1.0, jitter=0.0, seed=9)
    for _ in range(20):
        f = s.step(0.0, 0.0)
    assert f["feedback"] == [0.0, 0.0]
    t0 = s.sim_time
    onset = None
    for _ in range(40):
        f = s.step(0.8, 0.0)
        if onset is None and abs(f["feedback"][0]) > 1e-9:
            onset = f["sim_time"] - t0
    assert onset == pytest.approx(2.0, abs=0.15)


def test_mode_switch_resets_everything():
    s = LiveSession(mode="delayed", base_delay=1.0, jitter=0.0, seed=9)
    for _ in range(30):
        f = s.step(0.7, 0.0)
    assert f["backlog"] == {"fwd": 10, "bwd": 10}
    s.apply_mode({"type": "mode", "mode": "delayed", "jitter": 0.25})
    f2 = s.step(0.0, 0.0)
    assert f2["sim_time"] == 0.0
    assert f2["backlog"] == {"fwd": 0, "bwd": 0}
    assert s.jitter == 0.25


def test_predicted_mode_needs_models_only_for_pilstm():
    s = LiveSession(mode="predicted", predictor="conv", jitter=0.0, seed=1)
    assert s.step(0.5, 0.0)["mode"] == "predicted"
    with pytest.raises(ConfigurationError):
        LiveSession(mode="predicted", predictor="pilstm")


# ---------------------------------------------------------------------------
# cockpit arbitration
# ---------------------------------------------------------------------------

def test_single_writer_and_stale_sequences():
    cockpit = Cockpit(LiveSession(mode="ideal", seed=1))
    cid1, _, w1 = cockpit.attach()
    cid2, _, w2 = cockpit.attach()
    assert w1 and not w2

    ok = cockpit.handle(cid1, {"type": "cmd", "seq": 1, "v": 0.5, "w": 0.0})
    assert ok is None
    err = cockpit.handle(cid2, {"type": "cmd", "seq": 2, "v": 1.0, "w": 0.0})
    assert err is not None and "read-only" in err["message"]
    stale = cockpit.handle(cid1, {"type": "cmd", "seq": 1, "v": 0.9, "w": 0.0})
    assert stale is not None and "stale" in stale["message"]


def test_deadman_ramps_drive_to_zero():
    cockpit = Cockpit(LiveSession(mode="ideal", seed=1))
    cid, _, _ = cockpit.attach()
    cockpit.handle(cid, {"type": "cmd", "seq": 1, "v": 1.0, "w": 0.0})
    for _ in range(10):
        cockpit._advance_drive()
    assert cockpit.drive[0] == pytest.approx(1.0)
    # silence: the input must ramp back out within the dead-man horizon
    cockpit.last_cmd_wall = time.monotonic() - DEADMAN_S - 0.1
    steps = int(round(DEADMAN_S / FRAME_PERIOD))
    for _ in range(steps):
        cockpit._advance_drive()
    assert cockpit.drive[0] == pytest.approx(0.0)


def test_detach_revokes_writer():
    cockpit = Cockpit(LiveSession(mode="ideal", seed=1))
    cid, _, _ = cockpit.attach()
    cockpit.detach(cid)
    assert cockpit.writer_id is None
    assert cockpit.last_cmd_wall is None


def test_mode_message_applies_on_next_tick():
    cockpit = Cockpit(LiveSession(mode="delayed", jitter=0.0, seed=2))
    cid, _, _ = cockpit.attach()
    cockpit.handle(cid, {"type": "mode", "mode": "ideal"})
    frame = cockpit.run_tick()
    assert frame["mode"] == "ideal"
    assert np.all(cockpit.drive == 0.0)


# ---------------------------------------------------------------------------
# socket layer
# ---------------------------------------------------------------------------

def test_websocket_hello_frames_and_errors():
    starlette = pytest.importorskip("starlette.testclient")
    from teleopsim.bridge import build_app

    app = build_app(session_kwargs={"mode": "delayed", "jitter": 0.0, "seed": 5})
    with starlette.TestClient(app) as client:
        with client.websocket_connect("/teleop") as ws:
            hello = json.loads(ws.receive_text())
            assert hello["type"] == "hello" and hello["writer"] is True
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "frame"

            ws.send_text("garbage")
            msg = {"type": None}
            for _ in range(30):
                msg = json.loads(ws.receive_text())
                if msg["type"] == "error":
                    break
            assert msg["type"] == "error"

            with client.websocket_connect("/teleop") as ws2:
                h2 = json.loads(ws2.receive_text())
                assert h2["writer"] is False


def test_modes_tuple_is_the_contract():
    assert MODES == ("ideal", "delayed", "predicted")
