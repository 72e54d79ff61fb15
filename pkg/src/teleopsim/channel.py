"""Delayed communication channel between master and slave stations.

Packets enter a FIFO with a per-packet delivery time of
send + base_delay + U(-jitter, +jitter), clamped so delivery order
matches send order (no overtaking).  The receiver is zero-order-hold:
it returns the newest packet whose delivery time has passed and holds
it until the next one lands.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ClockError

ORDER_EPS = 1e-3  # minimum spacing between consecutive deliveries (s)


@dataclass(frozen=True)
class ChannelConfig:
    base_delay: float = 1.0
    jitter: float = 0.25
    drop_prob: float = 0.0

    def __post_init__(self):
        if self.base_delay < 0 or self.jitter < 0:
            raise ValueError("base_delay and jitter must be non-negative")
        if self.jitter > self.base_delay:
            raise ValueError("jitter may not exceed base_delay")
        if not 0.0 <= self.drop_prob < 1.0:
            raise ValueError("drop_prob must lie in [0, 1)")


@dataclass(frozen=True)
class Packet:
    send_time: float
    deliver_time: float
    payload: Any


@dataclass
class DelayChannel:
    """One direction of the communication link.

    Deterministic for a fixed RNG seed: jitter draws and drop decisions
    consume the generator in send order only.
    """

    config: ChannelConfig
    rng: np.random.Generator
    _queue: deque = field(default_factory=deque)
    _last_deliver: float = -np.inf
    _last_send: float = -np.inf
    _held: Packet | None = None

    def send(self, t: float, payload: Any) -> None:
        """Enqueue a payload stamped at send time t."""
        if t < self._last_send:
            raise ClockError(f"send time went backwards: {t} < {self._last_send}")
        self._last_send = t
        jitter = self.rng.uniform(-self.config.jitter, self.config.jitter)
        dropped = (
            self.config.drop_prob > 0.0
            and self.rng.random() < self.config.drop_prob
        )
        if dropped:
            return
        deliver = t + self.config.base_delay + jitter
        if deliver < self._last_deliver + ORDER_EPS:
            deliver = self._last_deliver + ORDER_EPS
        self._last_deliver = deliver
        self._queue.append(Packet(send_time=t, deliver_time=deliver, payload=payload))

    def receive(self, t: float) -> Packet | None:
        """Newest packet delivered at or before t, held until superseded.

        Returns None before the first delivery arrives.
        """
        while self._queue and self._queue[0].deliver_time <= t:
            self._held = self._queue.popleft()
        return self._held

    def pending(self) -> int:
        """Packets sent but not yet delivered."""
        return len(self._queue)

    def reset(self) -> None:
        """Drop all in-flight packets and the held value."""
        self._queue.clear()
        self._held = None
        # delivery/send clocks persist: time does not restart on a flush


def measured_age(packet: Packet, t: float) -> float:
    """Age of the held packet's payload relative to now."""
    return t - packet.send_time


__all__ = ["ChannelConfig", "Packet", "DelayChannel", "measured_age", "ORDER_EPS"]
