"""Websocket cockpit service: a human drives the simulated UGV live.

One asyncio task advances the simulation a tick every 100 ms of wall
time and broadcasts a state frame; websocket handlers only decode
messages and deposit them for the loop to consume, so the simulation
state itself is never touched concurrently.  The first connected client
holds the controls, later ones observe; when the writer vanishes the
drive input ramps to zero within half a second.

The remote-side quantities in a frame (pose, slip, feedback) are what
the operator is entitled to see in the active mode: fresh in ideal,
aged by the base delay otherwise.  Mode switches rebuild the channel,
filter, predictor, and vehicle state from scratch.
"""

from __future__ import annotations

import asyncio
import json
import math
import time
from pathlib import Path

import numpy as np

from . import INNER_DT, SAMPLE_DT
from .channel import ChannelConfig, DelayChannel
from .control import ControllerGains, LowPassFilter, master_control, slave_control
from .dynamics import (
    HapticDeviceParams, MasterState, SlipEstimator, UgvParams, UgvState,
    environment_force, ffc_compensate, local_master_control, make_slip_noise,
    step_master, step_slave,
)
from .errors import ConfigurationError
from .harness import _STREAM_BWD, _STREAM_FWD, _STREAM_SLIP, LPF_CUTOFF_HZ, _conv_bank, _load_pilstm_bank
from .tracks import get_track, uniform_soft_profile

SCHEMA_VERSION = 1
FRAME_PERIOD = SAMPLE_DT           # 10 Hz broadcast, one sim tick per frame
DEADMAN_S = 0.5                    # stale-input ramp-out horizon
MODES = ("ideal", "delayed", "predicted")

_DRIVE_GAIN = 30.0                 # input servo: f_h = gain * (x_des - x_m)


def decode_command(text: str) -> dict:
    """Parse one client JSON message; raises ConfigurationError on junk."""
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"not JSON: {e}") from e
    if not isinstance(msg, dict) or "type" not in msg:
        raise ConfigurationError("message must be an object with a 'type'")
    kind = msg["type"]
    if kind == "cmd":
        if "seq" not in msg:
            raise ConfigurationError("cmd message missing 'seq'")
        try:
            seq = int(msg["seq"])
            v = float(msg.get("v", 0.0))
            w = float(msg.get("w", 0.0))
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"bad cmd field: {e}") from e
        if not (math.isfinite(v) and math.isfinite(w)):
            raise ConfigurationError("cmd axes must be finite")
        return {"type": "cmd", "seq": seq,
                "v": min(1.0, max(-1.0, v)), "w": min(1.0, max(-1.0, w)),
                "client_time": msg.get("client_time")}
    if kind == "mode":
        mode = msg.get("mode")
        if mode not in MODES:
            raise ConfigurationError(f"unknown mode {mode!r}")
        out = {"type": "mode", "mode": mode}
        for key in ("base_delay", "jitter", "seed"):
            if key in msg:
                try:
                    out[key] = float(msg[key])
                except (TypeError, ValueError) as e:
                    raise ConfigurationError(f"bad {key}: {e}") from e
        if "predictor" in msg:
            if msg["predictor"] not in ("conv", "pilstm"):
                raise ConfigurationError(f"unknown predictor {msg['predictor']!r}")
            out["predictor"] = msg["predictor"]
        return out
    raise ConfigurationError(f"unknown message type {kind!r}")


class LiveSession:
    """Simulation state for the cockpit; advanced only by the pacing task."""

    def __init__(self, *, mode: str = "delayed", base_delay: float = 1.0,
                 jitter: float = 0.25, seed: int = 424242,
                 predictor: str = "conv", model_dir=None,
                 track_id: str = "A", slip_noise: float = 0.0):
        self.mode = mode
        self.base_delay = base_delay
        self.jitter = jitter
        self.seed = int(seed)
        self.predictor = predictor
        self.model_dir = model_dir
        self.track_id = track_id
        self.slip_noise = slip_noise
        self.track = get_track(track_id)
        self.terrain = uniform_soft_profile(self.track.length)
        self.reset()

    def reset(self) -> None:
        """Fresh channels, filters, predictors, device and vehicle state."""
        cfg = ChannelConfig(self.base_delay, self.jitter)
        self.chan_f = DelayChannel(cfg, np.random.default_rng([self.seed, _STREAM_FWD]))
        self.chan_b = DelayChannel(cfg, np.random.default_rng([self.seed, _STREAM_BWD]))
        self.rng_slip = np.random.default_rng([self.seed, _STREAM_SLIP])
        self.lpf_fwd = LowPassFilter(LPF_CUTOFF_HZ, SAMPLE_DT, 2)
        self.lpf_bwd = LowPassFilter(LPF_CUTOFF_HZ, SAMPLE_DT, 2)
        self.master = MasterState()
        self.ugv = UgvState()
        self.estimator = SlipEstimator()
        self.hp = HapticDeviceParams()
        self.gains = ControllerGains()
        self.ugvp = UgvParams()

        self.predictors = None
        if self.mode == "predicted":
            t_hist = self.base_delay + self.jitter + 0.5
            if self.predictor == "pilstm":
                if self.model_dir is None:
                    raise ConfigurationError("pilstm mode needs a model directory")
                self.predictors = _load_pilstm_bank(self.model_dir, SAMPLE_DT)
            else:
                self.predictors = _conv_bank(SAMPLE_DT, t_hist)

        self.sim_time = 0.0
        self.tick = 0
        self.f_del_prev = np.zeros(2)
        self.x_del_prev = np.zeros(2)
        self.fb_ideal_prev = np.zeros(2)
        self.fb = np.zeros(2)
        self.age_b = 0.0
        self.age_f = 0.0
        self.u_s = np.zeros(2)
        self.f_e = np.zeros(2)
        vis = 0 if self.mode == "ideal" else int(round(self.base_delay / SAMPLE_DT))
        self.vis_steps = vis
        # remote view ring: (pose, v_s, omega_s, s_r, s_l) snapshots
        snap = (self.ugv.pose.copy(), 0.0, 0.0, 0.0, 0.0)
        self.view_ring = [snap] * (vis + 1)
        self.sum_sq_omega = np.zeros(2)
        self.sum_sq_gamma = np.zeros(2)

    def apply_mode(self, msg: dict) -> None:
        self.mode = msg["mode"]
        self.base_delay = float(msg.get("base_delay", self.base_delay))
        self.jitter = float(msg.get("jitter", self.jitter))
        self.seed = int(msg.get("seed", self.seed))
        self.predictor = msg.get("predictor", self.predictor)
        self.reset()

    def describe(self) -> dict:
        """Static geometry for a newly connected client: the corridor
        centerline and the terrain softness profile along it."""
        z = np.arange(0.0, self.track.length + 0.25, 0.25)
        z[-1] = self.track.length
        pts = [self.track.point_at(float(s)) for s in z]
        return {
            "id": self.track_id,
            "length": float(self.track.length),
            "width": float(self.track.width),
            "centerline": [[float(p[0]), float(p[1])] for p in pts],
            "terrain": {
                "z": [float(v) for v in self.terrain.z_knots],
                "phi": [float(v) for v in self.terrain.phi_knots],
                "phi_min": float(self.terrain.phi_min),
                "phi_max": float(self.terrain.phi_max),
                "s_max": float(self.terrain.s_max),
            },
        }

    def step(self, drive_v: float, drive_w: float) -> dict:
        """One 10 Hz tick with the given normalized drive input."""
        t = self.sim_time
        dt = SAMPLE_DT
        # in-flight packets as of tick entry, so the first frame after a
        # mode switch reports the flushed channels rather than its own sends
        backlog = {"fwd": self.chan_f.pending(), "bwd": self.chan_b.pending()}

        # --- master station -------------------------------------------
        if self.mode == "ideal":
            f_del = self.fb_ideal_prev
            self.age_b = 0.0
        else:
            pkt = self.chan_b.receive(t)
            if pkt is not None:
                f_del = np.array(pkt.payload, dtype=float)
                self.age_b = t - pkt.send_time
            else:
                f_del = np.zeros(2)
                self.age_b = self.base_delay
        fdot_del = (f_del - self.f_del_prev) / dt
        self.f_del_prev = f_del.copy()
        if self.mode == "predicted":
            self.fb = np.array([
                self.predictors["f_ev"].step(f_del[0], fdot_del[0], self.age_b),
                self.predictors["f_eomega"].step(f_del[1], fdot_del[1], self.age_b),
            ])
        else:
            self.fb = f_del
        u_m_teleop = master_control(self.gains, self.fb)

        x_des = np.array([drive_v * self.gains.v_max, drive_w * self.gains.v_max])
        f_h = np.clip(_DRIVE_GAIN * (x_des - self.master.x_m),
                      -self.hp.f_h_limit, self.hp.f_h_limit)

        n_inner = int(round(dt / INNER_DT))
        for _ in range(n_inner):
            u_m_total = u_m_teleop + local_master_control(self.hp, self.master)
            self.master = step_master(self.hp, self.master, u_m_total, f_h, INNER_DT)
        x_f = self.lpf_fwd.apply(self.master.x_m)
        if self.mode != "ideal":
            self.chan_f.send(t, (float(x_f[0]), float(x_f[1])))

        # --- slave station --------------------------------------------
        if self.mode == "ideal":
            x_del = x_f.copy()
            self.age_f = 0.0
        else:
            pktf = self.chan_f.receive(t)
            if pktf is not None:
                x_del = np.array(pktf.payload, dtype=float)
                self.age_f = t - pktf.send_time
            else:
                x_del = np.zeros(2)
                self.age_f = self.base_delay
        xdot_del = (x_del - self.x_del_prev) / dt
        self.x_del_prev = x_del.copy()

        if self.mode == "predicted":
            cmd = np.array([
                self.predictors["x_mv"].step(x_del[0], xdot_del[0], self.age_f),
                self.predictors["x_momega"].step(x_del[1], xdot_del[1], self.age_f),
            ])
        else:
            cmd = x_del
        self.u_s = slave_control(self.gains, cmd)

        s_est = self.estimator.estimate()
        noise = make_slip_noise(self.rng_slip, self.slip_noise)
        half_b = self.ugvp.b_half_track
        lateral = np.array([-np.sin(self.ugv.pose[2]), np.cos(self.ugv.pose[2])])
        z_r, _ = self.track.project(self.ugv.pose[:2] - half_b * lateral)
        z_l, _ = self.track.project(self.ugv.pose[:2] + half_b * lateral)
        self.ugv = step_slave(self.ugvp, self.ugv, self.u_s, self.terrain, dt,
                              s_est, noise, (z_r, z_l))
        v_cmd = ffc_compensate(self.ugvp.e_inv @ self.u_s, s_est,
                               self.ugvp.v_max * (1.0 + self.terrain.s_max))
        self.estimator.update(v_cmd, np.array([self.ugv.v_r, self.ugv.v_l]), dt)

        self.f_e = environment_force(self.u_s, self.ugv)
        f_ef = self.lpf_bwd.apply(self.f_e)
        if self.mode != "ideal":
            self.chan_b.send(t, (float(f_ef[0]), float(f_ef[1])))
        else:
            self.fb_ideal_prev = f_ef.copy()

        # --- running metrics and the operator's view ------------------
        err_v = self.master.x_m - np.array([self.ugv.v_s, self.ugv.omega_s])
        err_f = f_h - self.f_e
        self.sum_sq_omega += err_v ** 2
        self.sum_sq_gamma += err_f ** 2

        snap = (self.ugv.pose.copy(), float(self.ugv.v_s),
                float(self.ugv.omega_s), float(self.ugv.s_r), float(self.ugv.s_l))
        self.view_ring.append(snap)
        if len(self.view_ring) > self.vis_steps + 1:
            self.view_ring.pop(0)
        seen = self.view_ring[0]

        self.sim_time = round(self.sim_time + dt, 10)
        self.tick += 1

        return {
            "type": "frame",
            "schema": SCHEMA_VERSION,
            "seq": self.tick,
            "server_time": time.time(),
            "sim_time": t,
            "mode": self.mode,
            "pose": [float(seen[0][0]), float(seen[0][1]), float(seen[0][2])],
            "v_s": seen[1], "omega_s": seen[2],
            "s_r": seen[3], "s_l": seen[4],
            "x_m": [float(self.master.x_m[0]), float(self.master.x_m[1])],
            "f_h": [float(f_h[0]), float(f_h[1])],
            "feedback": [float(self.fb[0]), float(self.fb[1])],
            "delay": {"fwd": float(self.age_f), "bwd": float(self.age_b)},
            "backlog": backlog,
            "omega": [float(np.sqrt(self.sum_sq_omega[0])),
                      float(np.sqrt(self.sum_sq_omega[1]))],
            "gamma": [float(np.sqrt(self.sum_sq_gamma[0])),
                      float(np.sqrt(self.sum_sq_gamma[1]))],
            "drive": [drive_v, drive_w],
            "track": {
                "id": self.track_id,
                "length": float(self.track.length),
                "width": float(self.track.width),
            },
        }


class Cockpit:
    """Connection registry plus the 10 Hz pacing task."""

    def __init__(self, session: LiveSession):
        self.session = session
        self.clients: dict[int, asyncio.Queue] = {}
        self.writer_id: int | None = None
        self._next_id = 1
        self.drive = np.zeros(2)
        self._target = np.zeros(2)
        self.last_seq = -1
        self.last_cmd_wall: float | None = None
        self._pending_mode: dict | None = None
        self._task: asyncio.Task | None = None

    # -- connection management ----------------------------------------
    def attach(self) -> tuple[int, asyncio.Queue, bool]:
        cid = self._next_id
        self._next_id += 1
        q: asyncio.Queue = asyncio.Queue(maxsize=32)
        self.clients[cid] = q
        if self.writer_id is None:
            self.writer_id = cid
        return cid, q, cid == self.writer_id

    def detach(self, cid: int) -> None:
        self.clients.pop(cid, None)
        if cid == self.writer_id:
            self.writer_id = None
            self.last_cmd_wall = None  # dead-man: input ramps out below

    # -- message intake ------------------------------------------------
    def handle(self, cid: int, msg: dict) -> dict | None:
        """Apply a decoded message; returns an error dict or None."""
        if msg["type"] == "cmd":
            if cid != self.writer_id:
                return {"type": "error", "message": "read-only client"}
            if msg["seq"] <= self.last_seq:
                return {"type": "error",
                        "message": f"stale seq {msg['seq']} <= {self.last_seq}"}
            self.last_seq = msg["seq"]
            self._target = np.array([msg["v"], msg["w"]])
            self.last_cmd_wall = time.monotonic()
            return None
        if msg["type"] == "mode":
            if self.writer_id is not None and cid != self.writer_id:
                return {"type": "error", "message": "read-only client"}
            self._pending_mode = msg
            return None
        return {"type": "error", "message": f"unhandled type {msg['type']!r}"}

    # -- pacing --------------------------------------------------------
    def _advance_drive(self) -> None:
        """Move drive toward the target, or to zero when input is stale."""
        now = time.monotonic()
        stale = (self.last_cmd_wall is None
                 or now - self.last_cmd_wall > DEADMAN_S)
        target = np.zeros(2) if stale else self._target
        max_step = FRAME_PERIOD / DEADMAN_S  # full-scale ramp in 0.5 s
        delta = np.clip(target - self.drive, -max_step, max_step)
        self.drive = self.drive + delta

    def run_tick(self) -> dict:
        if self._pending_mode is not None:
            self.session.apply_mode(self._pending_mode)
            self._pending_mode = None
            self.drive = np.zeros(2)
            self._target = np.zeros(2)
        self._advance_drive()
        return self.session.step(float(self.drive[0]), float(self.drive[1]))

    async def pace(self) -> None:
        loop = asyncio.get_running_loop()
        next_at = loop.time() + FRAME_PERIOD
        while True:
            frame = self.run_tick()
            text = json.dumps(frame)
            for q in list(self.clients.values()):
                if q.full():
                    try:
                        q.get_nowait()  # drop the oldest for a slow reader
                    except asyncio.QueueEmpty:
                        pass
                q.put_nowait(text)
            delay = next_at - loop.time()
            if delay < -1.0:
                next_at = loop.time() + FRAME_PERIOD  # resync after a stall
                delay = FRAME_PERIOD
            await asyncio.sleep(max(delay, 0.0))
            next_at += FRAME_PERIOD

    def start(self) -> None:
        self._task = asyncio.get_running_loop().create_task(self.pace())

    async def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
            self._task = None


def build_app(model_dir=None, *, session_kwargs: dict | None = None):
    """FastAPI app exposing ws /teleop and the static cockpit bundle."""
    from contextlib import asynccontextmanager

    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.staticfiles import StaticFiles

    kwargs = dict(session_kwargs or {})
    if model_dir is not None:
        kwargs.setdefault("model_dir", model_dir)
    session = LiveSession(**kwargs)
    cockpit = Cockpit(session)

    @asynccontextmanager
    async def lifespan(app):
        cockpit.start()
        try:
            yield
        finally:
            await cockpit.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.cockpit = cockpit

    async def teleop(ws):
        await ws.accept()
        cid, queue, is_writer = cockpit.attach()
        await ws.send_text(json.dumps(
            {"type": "hello", "schema": SCHEMA_VERSION,
             "client_id": cid, "writer": is_writer,
             "track": session.describe()}))

        async def pump_frames():
            while True:
                await ws.send_text(await queue.get())

        sender = asyncio.get_running_loop().create_task(pump_frames())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = decode_command(text)
                except ConfigurationError as e:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": str(e)}))
                    continue
                err = cockpit.handle(cid, msg)
                if err is not None:
                    await ws.send_text(json.dumps(err))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            cockpit.detach(cid)

    # the module-wide future-annotations import turns an inline `ws:
    # WebSocket` hint into a string fastapi cannot resolve against this
    # module's globals, so the parameter type is attached as a live class
    teleop.__annotations__ = {"ws": WebSocket}
    app.websocket("/teleop")(teleop)

    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        app.mount("/", StaticFiles(directory=str(dist), html=True), name="cockpit")
    return app


__all__ = ["build_app", "LiveSession", "Cockpit", "decode_command",
           "SCHEMA_VERSION", "FRAME_PERIOD", "DEADMAN_S", "MODES"]
