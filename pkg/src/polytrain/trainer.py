"""Reference trajectories and guidance forces for the four training methods.

The trainer moves two reference points on fixed circles (the dominant one
at q/p times the non-dominant angular speed) and pulls each hand toward
its reference with a power-scaled proportional spring, capped at the
device's maximum exertable force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum, IntEnum

from .kinematics import PlanarPoint, UnwrappedAngle
from .scoring import PolyrhythmRatio

MAX_FORCE_N = 3.3
MAX_SPRING_N_PER_MM = 2.31

DEFAULT_SPRING_N_PER_MM = 1.0
DEFAULT_RADIUS_MM = 30.0
DEFAULT_ND_SPEED_DEG_S = 180.0  # one non-dominant cycle every 2 s


class TrainingMode(IntEnum):
    """The four training methods; TEST applies zero force to both hands."""

    FULL = 1
    ADAPTIVE = 2
    HALF = 3
    TEST = 4


class Hand(str, Enum):
    """Hand labels used across the engine, protocol, and logs."""

    ND = "nd"
    DOM = "dom"


@dataclass(frozen=True)
class GuidanceForce:
    """Planar force in newtons; magnitude never exceeds MAX_FORCE_N."""

    fy: float
    fz: float

    def magnitude(self) -> float:
        return math.hypot(self.fy, self.fz)


ZERO_FORCE = GuidanceForce(0.0, 0.0)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Two clockwise circular references locked to the polyrhythm ratio.

    ``phase_base`` is each hand's reference angle at t = 0; the angle at
    time t is ``phase_base + angular_speed * t``, so re-syncing is just a
    matter of rewriting the bases.
    """

    ratio: PolyrhythmRatio
    nd_center: PlanarPoint
    dom_center: PlanarPoint
    nd_radius: float = DEFAULT_RADIUS_MM
    dom_radius: float = DEFAULT_RADIUS_MM
    nd_angular_speed: float = DEFAULT_ND_SPEED_DEG_S
    nd_phase_base: float = 0.0
    dom_phase_base: float = 0.0

    @property
    def dom_angular_speed(self) -> float:
        return self.nd_angular_speed * self.ratio.multiplier

    def center(self, hand: Hand) -> PlanarPoint:
        return self.nd_center if hand is Hand.ND else self.dom_center

    def radius(self, hand: Hand) -> float:
        return self.nd_radius if hand is Hand.ND else self.dom_radius

    def angular_speed(self, hand: Hand) -> float:
        return self.nd_angular_speed if hand is Hand.ND else self.dom_angular_speed

    def phase_base(self, hand: Hand) -> float:
        return self.nd_phase_base if hand is Hand.ND else self.dom_phase_base


def training_power(mode: TrainingMode, current_score: float) -> tuple[float, float]:
    """Per-hand guidance power (non-dominant, dominant) in [0, 100] for a mode.

    ADAPTIVE backs the dominant hand off as the windowed current score
    rises (power = 100 - current score); the non-dominant hand is always
    fully guided outside TEST.
    """
    if mode is TrainingMode.FULL:
        powers = (100.0, 100.0)
    elif mode is TrainingMode.ADAPTIVE:
        powers = (100.0, 100.0 - current_score)
    elif mode is TrainingMode.HALF:
        powers = (100.0, 0.0)
    else:
        powers = (0.0, 0.0)
    return tuple(min(100.0, max(0.0, p)) for p in powers)


def reference_angle(traj: ReferenceTrajectory, t: float, hand: Hand) -> float:
    """Continuous clockwise-from-+y reference angle at time t, degrees."""
    return traj.phase_base(hand) + traj.angular_speed(hand) * t


def reference_state(
    traj: ReferenceTrajectory, t: float, hand: Hand
) -> tuple[PlanarPoint, tuple[float, float]]:
    """Reference point on the circle and its tangential velocity (vy, vz) in mm/s."""
    angle = math.radians(reference_angle(traj, t, hand))
    r = traj.radius(hand)
    center = traj.center(hand)
    target = PlanarPoint(center.y + r * math.cos(angle), center.z + r * math.sin(angle))
    omega = math.radians(traj.angular_speed(hand))
    velocity = (-r * omega * math.sin(angle), r * omega * math.cos(angle))
    return target, velocity


def cap_force(fy: float, fz: float, cap: float = MAX_FORCE_N) -> GuidanceForce:
    """Scale a force down to ``cap`` newtons if needed, preserving direction."""
    mag = math.hypot(fy, fz)
    if mag > cap:
        scale = cap / mag
        return GuidanceForce(fy * scale, fz * scale)
    return GuidanceForce(fy, fz)


def guidance_force(
    power: float,
    target: PlanarPoint,
    pos: PlanarPoint,
    spring: float = DEFAULT_SPRING_N_PER_MM,
    cap: float = MAX_FORCE_N,
) -> GuidanceForce:
    """Power-scaled spring pull toward the target, magnitude-capped.

    F = (power/100) * spring * (target - pos), then clipped to ``cap`` N.
    Zero exactly when power is 0 or the hand sits on the target.
    """
    scale = (power / 100.0) * spring
    return cap_force(scale * (target.y - pos.y), scale * (target.z - pos.z), cap)


def guidance_force_with_feedforward(
    power: float,
    target: PlanarPoint,
    target_vel: tuple[float, float],
    pos: PlanarPoint,
    vel: tuple[float, float],
    spring: float = DEFAULT_SPRING_N_PER_MM,
    feedforward_gain: float = 0.0,
    cap: float = MAX_FORCE_N,
) -> GuidanceForce:
    """Spring pull plus an optional velocity-matching term, capped as one force.

    The feedforward gain is in N·s/mm and defaults to 0, which reduces to
    the plain spring law.
    """
    scale = power / 100.0
    fy = scale * (spring * (target.y - pos.y) + feedforward_gain * (target_vel[0] - vel[0]))
    fz = scale * (spring * (target.z - pos.z) + feedforward_gain * (target_vel[1] - vel[1]))
    return cap_force(fy, fz, cap)


def resync_reference(
    traj: ReferenceTrajectory, nd_unwrapped: UnwrappedAngle, t: float
) -> ReferenceTrajectory:
    """Re-base both references to the user's actual non-dominant angle at time t.

    The non-dominant reference is placed on the user's current angle and
    the dominant reference at ratio-times that angle, so the correct
    polyrhythmic phase relation is re-established relative to where the
    non-dominant hand really is (an indirect position reset).
    """
    nd_angle_now = nd_unwrapped.degrees
    dom_angle_now = nd_angle_now * traj.ratio.multiplier
    return replace(
        traj,
        nd_phase_base=nd_angle_now - traj.nd_angular_speed * t,
        dom_phase_base=dom_angle_now - traj.dom_angular_speed * t,
    )
