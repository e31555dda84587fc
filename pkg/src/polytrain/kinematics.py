"""Planar angle and speed kinematics for two-handed circle drawing.

Everything downstream (scores, guidance, analysis) consumes the outputs of
this module: continuous unwrapped angles measured clockwise from the +y
axis, planar speed magnitudes, and fixed-capacity moving averages.

Orientation convention: the drawing plane is (y, z) with +y up and +z to
the right. theta = atan2(dz, dy) in degrees mapped to [0, 360), so 0 deg
points up and the angle grows clockwise. Both hands use the same
convention, which is all the relative metrics require.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

FULL_TURN = 360.0

DEFAULT_DEAD_ZONE_MM = 1.0


class DeadZoneError(ValueError):
    """Point too close to the circle center to define an angle."""


@dataclass(frozen=True)
class PlanarPoint:
    """A position in the drawing plane, millimeters."""

    y: float
    z: float

    def distance_to(self, other: "PlanarPoint") -> float:
        return math.hypot(self.y - other.y, self.z - other.z)


@dataclass(frozen=True)
class UnwrappedAngle:
    """Continuous angle in degrees plus the count of completed re-base periods.

    ``degrees`` is kept within [0, period) by re-basing: every time the
    accumulated angle passes the period it is reduced by one period and
    ``basis`` is incremented (decremented for counter-rotation). Downstream
    angle arithmetic is unaffected because everything it feeds is periodic
    in the re-base period.
    """

    degrees: float
    basis: int = 0


def raw_angle(pos: PlanarPoint, center: PlanarPoint, dead_zone: float = DEFAULT_DEAD_ZONE_MM) -> float:
    """Clockwise angle from +y of ``pos`` around ``center``, in [0, 360).

    Raises DeadZoneError when the point sits within ``dead_zone`` mm of the
    center; the caller is expected to hold its previous angle in that case.
    """
    dy = pos.y - center.y
    dz = pos.z - center.z
    if math.hypot(dy, dz) <= dead_zone:
        raise DeadZoneError(f"point within {dead_zone} mm of center, angle undefined")
    return math.degrees(math.atan2(dz, dy)) % FULL_TURN


def shortest_arc(from_deg: float, to_deg: float) -> float:
    """Signed shortest arc from one circle angle to another, in (-180, 180]."""
    delta = (to_deg - from_deg) % FULL_TURN
    if delta > 180.0:
        delta -= FULL_TURN
    return delta


def unwrap_step(state: UnwrappedAngle, new_raw: float, period: float) -> UnwrappedAngle:
    """Advance an unwrapped angle by the shortest signed arc to ``new_raw``.

    Per-frame raw deltas are interpreted as the shortest arc, which is valid
    as long as true motion stays under half a turn per frame (over 8000
    deg/s at a 100 Hz frame rate). The result is re-based into [0, period).
    """
    degrees = state.degrees + shortest_arc(state.degrees % FULL_TURN, new_raw)
    basis = state.basis
    while degrees >= period:
        degrees -= period
        basis += 1
    while degrees < 0.0:
        degrees += period
        basis -= 1
    return UnwrappedAngle(degrees, basis)


class AngleTracker:
    """Stateful unwrapper for one hand around a fixed center.

    The first in-range sample initializes the unwrapped angle to its raw
    angle. Samples inside the dead zone hold the previous angle (angle 0
    if nothing has been seen yet), so the track stays defined from the
    first frame on.
    """

    def __init__(self, center: PlanarPoint, period: float, dead_zone: float = DEFAULT_DEAD_ZONE_MM):
        if period <= 0.0:
            raise ValueError("re-base period must be positive")
        self.center = center
        self.period = period
        self.dead_zone = dead_zone
        self._state: UnwrappedAngle | None = None

    @property
    def state(self) -> UnwrappedAngle:
        return self._state if self._state is not None else UnwrappedAngle(0.0, 0)

    def update(self, pos: PlanarPoint) -> UnwrappedAngle:
        try:
            raw = raw_angle(pos, self.center, self.dead_zone)
        except DeadZoneError:
            return self.state
        if self._state is None:
            self._state = UnwrappedAngle(raw % self.period, 0)
        else:
            self._state = unwrap_step(self._state, raw, self.period)
        return self._state


def speed_yz(vy: float, vz: float) -> float:
    """Planar speed magnitude sqrt(vy^2 + vz^2) in mm/s; any depth axis is ignored."""
    return math.hypot(vy, vz)


class MovingWindow:
    """Fixed-capacity moving average; partial means while the window fills.

    The mean is recomputed over the retained samples on every push rather
    than kept as a running sum, so it matches a from-scratch arithmetic
    mean to float precision at every step.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.capacity = capacity
        self._buf: deque[float] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._buf)

    def push(self, sample: float) -> float:
        """Append ``sample`` (evicting the oldest at capacity) and return the mean."""
        self._buf.append(sample)
        return math.fsum(self._buf) / len(self._buf)

    def average(self) -> float | None:
        if not self._buf:
            return None
        return math.fsum(self._buf) / len(self._buf)

    def clear(self) -> None:
        self._buf.clear()
