"""Min-max feature scaling to [-1, 1], fitted on training data only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Scaler:
    """Per-column min/max statistics for the 4 features plus the target.

    A constant column gets span 1 so the transform stays finite; the
    round trip is still exact (the column maps to -1 and back to its
    minimum, which is its only value).
    """

    feat_min: np.ndarray
    feat_max: np.ndarray
    y_min: float
    y_max: float

    @staticmethod
    def fit(features: np.ndarray, targets: np.ndarray) -> "Scaler":
        """``features`` is (N, n, 4) or (N, 4); ``targets`` is (N,)."""
        f = np.asarray(features, dtype=float).reshape(-1, features.shape[-1])
        return Scaler(
            feat_min=f.min(axis=0), feat_max=f.max(axis=0),
            y_min=float(np.min(targets)), y_max=float(np.max(targets)),
        )

    def _span(self, lo, hi):
        span = np.asarray(hi, dtype=float) - lo
        return np.where(span == 0.0, 1.0, span)

    def scale_features(self, features: np.ndarray) -> np.ndarray:
        span = self._span(self.feat_min, self.feat_max)
        return 2.0 * (features - self.feat_min) / span - 1.0

    def unscale_features(self, scaled: np.ndarray) -> np.ndarray:
        span = self._span(self.feat_min, self.feat_max)
        return self.feat_min + (scaled + 1.0) * span / 2.0

    def scale_target(self, y):
        span = float(self._span(self.y_min, self.y_max))
        return 2.0 * (np.asarray(y, dtype=float) - self.y_min) / span - 1.0

    def unscale_target(self, y_scaled):
        span = float(self._span(self.y_min, self.y_max))
        return self.y_min + (np.asarray(y_scaled, dtype=float) + 1.0) * span / 2.0

    @property
    def target_gain(self) -> float:
        """d(physical)/d(scaled) for the target: half the target span."""
        return float(self._span(self.y_min, self.y_max)) / 2.0

    def to_dict(self) -> dict:
        return {
            "feat_min": list(self.feat_min), "feat_max": list(self.feat_max),
            "y_min": self.y_min, "y_max": self.y_max,
        }

    @staticmethod
    def from_dict(d: dict) -> "Scaler":
        return Scaler(
            feat_min=np.array(d["feat_min"], dtype=float),
            feat_max=np.array(d["feat_max"], dtype=float),
            y_min=float(d["y_min"]), y_max=float(d["y_max"]),
        )


__all__ = ["Scaler"]
