"""Track geometry: polyline centerlines, arclength projection, corridors.

A track is a 2 m wide corridor around a polyline centerline with a start
mark at arclength 0 and an end mark at the full length.  Projection of a
world point returns its arclength along the centerline and its signed
lateral offset (positive to the left of the direction of travel), which
is everything the corridor check, the terrain lookup, and the operator's
steering reference need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import PHI_FIRM, PHI_SOFT, TerrainProfile


@dataclass(frozen=True)
class TrackSpec:
    name: str
    centerline: np.ndarray  # (K, 2) vertices, metres
    width: float = 2.0

    # derived, filled in __post_init__
    _seg_vec: np.ndarray = field(init=False, repr=False)
    _seg_len: np.ndarray = field(init=False, repr=False)
    _cum_len: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.centerline, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ValueError("centerline must be a (K, 2) array with K >= 2")
        if self.width <= 0:
            raise ValueError("width must be positive")
        vec = np.diff(pts, axis=0)
        seg_len = np.hypot(vec[:, 0], vec[:, 1])
        if np.any(seg_len <= 0):
            raise ValueError("centerline has zero-length segments")
        object.__setattr__(self, "centerline", pts)
        object.__setattr__(self, "_seg_vec", vec)
        object.__setattr__(self, "_seg_len", seg_len)
        object.__setattr__(self, "_cum_len", np.concatenate([[0.0], np.cumsum(seg_len)]))

    @property
    def length(self) -> float:
        return float(self._cum_len[-1])

    def point_at(self, z: float) -> np.ndarray:
        """Centerline point at arclength z, clamped to the track ends."""
        z = float(np.clip(z, 0.0, self.length))
        i = int(np.searchsorted(self._cum_len, z, side="right") - 1)
        i = min(i, len(self._seg_len) - 1)
        frac = (z - self._cum_len[i]) / self._seg_len[i]
        return self.centerline[i] + frac * self._seg_vec[i]

    def heading_at(self, z: float) -> float:
        """Tangent direction at arclength z (radians)."""
        z = float(np.clip(z, 0.0, self.length))
        i = int(np.searchsorted(self._cum_len, z, side="right") - 1)
        i = min(max(i, 0), len(self._seg_len) - 1)
        v = self._seg_vec[i]
        return float(np.arctan2(v[1], v[0]))

    def pose_at(self, z: float) -> np.ndarray:
        """On-centerline pose [x, y, heading] at arclength z."""
        p = self.point_at(z)
        return np.array([p[0], p[1], self.heading_at(z)])

    def project(self, xy) -> tuple[float, float]:
        """Nearest-point projection of a world point onto the centerline.

        Returns (arclength, signed lateral offset); the offset is
        positive when the point lies to the left of the local direction
        of travel.
        """
        p = np.asarray(xy, dtype=float)[:2]
        rel = p[None, :] - self.centerline[:-1]
        t = np.einsum("kd,kd->k", rel, self._seg_vec) / (self._seg_len ** 2)
        t = np.clip(t, 0.0, 1.0)
        closest = self.centerline[:-1] + t[:, None] * self._seg_vec
        d2 = np.sum((p[None, :] - closest) ** 2, axis=1)
        i = int(np.argmin(d2))
        z = float(self._cum_len[i] + t[i] * self._seg_len[i])
        tang = self._seg_vec[i] / self._seg_len[i]
        off = p - closest[i]
        lateral = float(tang[0] * off[1] - tang[1] * off[0])  # left positive
        return z, lateral

    def in_corridor(self, xy) -> bool:
        _, lat = self.project(xy)
        return abs(lat) <= self.width / 2.0


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _append_straight(pts: list, heading: float, dist: float, step: float = 0.25):
    x, y = pts[-1]
    n = max(1, int(np.ceil(dist / step)))
    for i in range(1, n + 1):
        d = dist * i / n
        pts.append((x + d * np.cos(heading), y + d * np.sin(heading)))
    return heading


def _append_arc(pts: list, heading: float, radius: float, sweep: float,
                step_deg: float = 5.0):
    """Arc tangent to the current heading; sweep > 0 turns left."""
    x, y = pts[-1]
    sign = 1.0 if sweep > 0 else -1.0
    cx = x - sign * radius * np.sin(heading)
    cy = y + sign * radius * np.cos(heading)
    n = max(2, int(np.ceil(abs(sweep) / np.deg2rad(step_deg))))
    for i in range(1, n + 1):
        h = heading + sweep * i / n
        pts.append((cx + sign * radius * np.sin(h), cy - sign * radius * np.cos(h)))
    return heading + sweep


def track_a() -> TrackSpec:
    """Straight 10 m corridor."""
    return TrackSpec("A", np.array([[0.0, 0.0], [10.0, 0.0]]))


def track_b() -> TrackSpec:
    """~10 m course with two 90 degree right turns (radius 1.5 m)."""
    pts = [(0.0, 0.0)]
    h = 0.0
    h = _append_straight(pts, h, 2.0)
    h = _append_arc(pts, h, 1.5, -np.pi / 2)
    h = _append_straight(pts, h, 1.5)
    h = _append_arc(pts, h, 1.5, -np.pi / 2)
    _append_straight(pts, h, 2.0)
    return TrackSpec("B", np.array(pts))


def track_c() -> TrackSpec:
    """~10 m course mixing one right and one left turn (radius 1.5 m)."""
    pts = [(0.0, 0.0)]
    h = 0.0
    h = _append_straight(pts, h, 2.0)
    h = _append_arc(pts, h, 1.5, -np.pi / 2)
    h = _append_straight(pts, h, 1.5)
    h = _append_arc(pts, h, 1.5, np.pi / 2)
    _append_straight(pts, h, 2.0)
    return TrackSpec("C", np.array(pts))


def track_data(index: int, length: float = 40.0) -> TrackSpec:
    """Long gently-winding course for training-data collection runs.

    Heading follows a two-tone sine in arclength, so the angular channel
    stays persistently excited without the curvature ever exceeding what
    the vehicle can follow at full speed.
    """
    if index < 1:
        raise ValueError("data track index starts at 1")
    amp = 0.35 + 0.1 * index
    p1 = 9.0 + 2.0 * index
    p2 = 3.5 + 0.7 * index
    zs = np.arange(0.0, length + 0.25, 0.25)
    heading = amp * np.sin(2 * np.pi * zs / p1) + 0.4 * amp * np.sin(2 * np.pi * zs / p2)
    pts = [(0.0, 0.0)]
    for i in range(1, len(zs)):
        dz = zs[i] - zs[i - 1]
        h = heading[i - 1]
        x, y = pts[-1]
        pts.append((x + dz * np.cos(h), y + dz * np.sin(h)))
    # data courses are open ground, not judged runs: wide corridor so a
    # collection drive is never cut short by the boundary
    return TrackSpec(f"D{index}", np.array(pts), width=8.0)


TRACKS = {
    "A": track_a,
    "B": track_b,
    "C": track_c,
    "D1": lambda: track_data(1),
    "D2": lambda: track_data(2),
    "D3": lambda: track_data(3),
}


def get_track(track_id: str) -> TrackSpec:
    if track_id not in TRACKS:
        raise ValueError(f"unknown track {track_id!r}; choose from {sorted(TRACKS)}")
    return TRACKS[track_id]()


# ---------------------------------------------------------------------------
# terrain layouts
# ---------------------------------------------------------------------------

def patchy_profile(length: float, s_max: float = 0.6) -> TerrainProfile:
    """Evaluation terrain: firm ground with two soft patches.

    Short 0.12 m edge ramps make patch entry an abrupt slip transient,
    which is what the feedback loop has to cope with.
    """
    z = [0.0, 2.0, 2.12, 3.88, 4.0, 6.0, 6.12, 7.88, 8.0, max(length, 8.5)]
    phi = [PHI_FIRM, PHI_FIRM, 0.68, 0.68, PHI_FIRM,
           PHI_FIRM, 0.58, 0.58, PHI_FIRM, PHI_FIRM]
    return TerrainProfile(np.array(z), np.array(phi), s_max=s_max)


def rolling_profile(length: float, index: int = 1, s_max: float = 0.6) -> TerrainProfile:
    """Training terrain: slow friction wander plus abrupt soft patches.

    The wander (knots every 2 m) exercises the slip estimator gently;
    the sharp-edged patches (0.12 m ramps, like the evaluation terrain)
    put step-like force transients into the collected data.  All knots
    come from a generator seeded by the track index, so each data track
    exposes a different but reproducible slip history.
    """
    rng = np.random.default_rng(7000 + index)
    # firm shoulder over the opening stretch, slow wander beyond it
    z = np.concatenate([[0.0, 3.5], np.arange(4.0, length + 2.0, 2.0)])
    phi = np.concatenate([[PHI_FIRM, PHI_FIRM],
                          rng.uniform(0.55, PHI_FIRM, size=len(z) - 2)])
    knots = list(zip(z, phi))
    # two short deep patches sit in the opening stretch so even a slow
    # 30 s drive from the start line crosses several abrupt transitions
    starts = [rng.uniform(0.75, 0.95), rng.uniform(1.70, 1.95)]
    widths = [rng.uniform(0.45, 0.60), rng.uniform(0.45, 0.60)]
    mids = np.sort(rng.uniform(4.5, length - 6.0, size=2))
    mids[1] = max(mids[1], mids[0] + 3.0)
    for s in mids:
        starts.append(float(s))
        widths.append(rng.uniform(1.0, 2.0))
    for start, width in zip(starts, widths):
        depth = rng.uniform(PHI_SOFT + 0.05, 0.65)
        patch = [(start, None), (start + 0.12, depth),
                 (start + width - 0.12, depth), (start + width, None)]
        kept = [(zz, pp) for zz, pp in knots if not start < zz < start + width]
        base = np.interp([start, start + width], z, phi)
        patch[0] = (start, base[0])
        patch[-1] = (start + width, base[1])
        knots = sorted(kept + patch, key=lambda kv: kv[0])
    zs = np.array([kv[0] for kv in knots])
    ps = np.array([kv[1] for kv in knots])
    return TerrainProfile(zs, ps, s_max=s_max)


def uniform_soft_profile(length: float, phi: float = 0.65, s_max: float = 0.6) -> TerrainProfile:
    """Uniformly soft ground, used by the interactive service scenario."""
    return TerrainProfile(np.array([0.0, length]), np.array([phi, phi]), s_max=s_max)


__all__ = [
    "TrackSpec", "TRACKS", "get_track",
    "track_a", "track_b", "track_c", "track_data",
    "patchy_profile", "rolling_profile", "uniform_soft_profile",
]
