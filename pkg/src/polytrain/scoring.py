"""Relative-position, relative-velocity, and combined scores.

Three 0-100 metrics per frame:

* position: circular error between the dominant hand's angle and the
  desired angle (non-dominant unwrapped angle times the cycle ratio),
  mapped linearly so that 180 degrees of error scores 0.
* velocity: Gaussian falloff ``A * exp(-B * x^2)`` of the error between
  the window-averaged dominant/non-dominant speed ratio and the target
  ratio.
* total: the plain average of the two, with a 20-frame moving average of
  totals serving as the "current score" that drives adaptive guidance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .kinematics import FULL_TURN, AngleTracker, MovingWindow, PlanarPoint, UnwrappedAngle, speed_yz

MAX_POSITION_ERROR_DEG = 180.0

DEFAULT_SCORE_AMPLITUDE = 100.0
DEFAULT_SCORE_FALLOFF = 1.0
DEFAULT_STALL_SPEED_MM_S = 1.0
CURRENT_SCORE_WINDOW = 20
VELOCITY_WINDOW = 40


class StalledError(ValueError):
    """Non-dominant hand effectively stopped; the speed ratio is undefined."""


class PositionErrorMode(str, Enum):
    """How angle errors beyond half a turn are handled."""

    FOLD = "fold"    # circular distance: reduce mod 360, fold into [0, 180]
    CLAMP = "clamp"  # absolute difference clamped at 180


@dataclass(frozen=True)
class PolyrhythmRatio:
    """Coprime cycle counts: non-dominant completes ``p`` cycles per ``q`` dominant cycles.

    Rejects harmonic ratios (terms that are integer multiples of each
    other, e.g. 1:2 or 2:1); those never need unwrapping past one turn and
    are not polyrhythms.
    """

    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("cycle counts must be positive integers")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"{self.p}:{self.q} is not coprime")
        if self.p == self.q or self.q % self.p == 0 or self.p % self.q == 0:
            raise ValueError(f"{self.p}:{self.q} is harmonic, not a polyrhythm")

    @property
    def multiplier(self) -> float:
        """Desired dominant angle per degree of non-dominant angle (also the target speed ratio)."""
        return self.q / self.p

    @property
    def rebase_period(self) -> float:
        """The non-dominant angle repeats its role every p full turns."""
        return self.p * FULL_TURN


@dataclass(frozen=True)
class ScoreSample:
    """Per-frame score bundle; all values in [0, 100], total = (position + velocity) / 2."""

    position_score: float
    velocity_score: float
    total_score: float
    current_score: float


def desired_angle(nd_unwrapped: UnwrappedAngle, ratio: PolyrhythmRatio) -> float:
    """Where the dominant hand should be for the non-dominant's unwrapped angle."""
    return nd_unwrapped.degrees * ratio.multiplier


def position_score(
    dom_unwrapped_deg: float,
    desired_deg: float,
    mode: PositionErrorMode = PositionErrorMode.FOLD,
) -> float:
    """Relative-position score: 100 at zero error, 0 at 180 degrees of error.

    FOLD treats the error as a circular distance (any representative of
    either angle gives the same score); CLAMP takes the plain absolute
    difference and bottoms out at 0 for errors of 180 degrees or more.
    """
    error = abs(dom_unwrapped_deg - desired_deg)
    if mode is PositionErrorMode.FOLD:
        error = error % FULL_TURN
        if error > MAX_POSITION_ERROR_DEG:
            error = FULL_TURN - error
    else:
        error = min(error, MAX_POSITION_ERROR_DEG)
    return (1.0 - error / MAX_POSITION_ERROR_DEG) * 100.0


def relative_velocity(
    dom_avg_speed: float,
    nd_avg_speed: float,
    stall_threshold: float = DEFAULT_STALL_SPEED_MM_S,
) -> float:
    """Window-averaged dominant speed over non-dominant speed.

    Raises StalledError when the non-dominant average drops below the
    stall threshold; the caller scores that frame's velocity as 0, the
    limit of the falloff curve as the ratio error grows.
    """
    if nd_avg_speed < stall_threshold:
        raise StalledError(f"non-dominant average speed {nd_avg_speed:.3f} mm/s below stall threshold")
    return dom_avg_speed / nd_avg_speed


def velocity_score(
    rel_v: float,
    ratio: PolyrhythmRatio,
    amplitude: float = DEFAULT_SCORE_AMPLITUDE,
    falloff: float = DEFAULT_SCORE_FALLOFF,
) -> float:
    """Relative-velocity score ``A * exp(-B * x^2)`` with x the ratio error."""
    x = rel_v - ratio.multiplier
    return amplitude * math.exp(-falloff * x * x)


def total_score(pos: float, vel: float) -> float:
    """Equal-weight combination of the position and velocity scores."""
    return (pos + vel) / 2.0


@dataclass(frozen=True)
class ScoringConfig:
    """Knobs for the per-frame scoring pipeline."""

    ratio: PolyrhythmRatio
    nd_center: PlanarPoint
    dom_center: PlanarPoint
    error_mode: PositionErrorMode = PositionErrorMode.FOLD
    amplitude: float = DEFAULT_SCORE_AMPLITUDE
    falloff: float = DEFAULT_SCORE_FALLOFF
    stall_threshold: float = DEFAULT_STALL_SPEED_MM_S
    current_window: int = CURRENT_SCORE_WINDOW
    velocity_window: int = VELOCITY_WINDOW
    dead_zone: float = 1.0


class ScorePipeline:
    """Stateful frame-by-frame scorer shared by the live engine and replay.

    Owns both hands' angle trackers and the speed/current-score windows, so
    feeding the same kinematic stream through two instances with the same
    config reproduces every sample bit for bit.
    """

    def __init__(self, config: ScoringConfig):
        self.config = config
        ratio = config.ratio
        self.nd_angle = AngleTracker(config.nd_center, ratio.rebase_period, config.dead_zone)
        # The dominant hand re-bases over its own cycle count; only its
        # angle mod 360 reaches the folded position error.
        self.dom_angle = AngleTracker(config.dom_center, ratio.q * FULL_TURN, config.dead_zone)
        self.nd_speed = MovingWindow(config.velocity_window)
        self.dom_speed = MovingWindow(config.velocity_window)
        self.totals = MovingWindow(config.current_window)

    def reset_windows(self) -> None:
        self.nd_speed.clear()
        self.dom_speed.clear()
        self.totals.clear()

    def update(
        self,
        nd_pos: PlanarPoint,
        nd_vel: tuple[float, float],
        dom_pos: PlanarPoint,
        dom_vel: tuple[float, float],
    ) -> ScoreSample:
        cfg = self.config
        nd_ang = self.nd_angle.update(nd_pos)
        dom_ang = self.dom_angle.update(dom_pos)

        desired = desired_angle(nd_ang, cfg.ratio)
        pos = position_score(dom_ang.degrees, desired, cfg.error_mode)

        nd_avg = self.nd_speed.push(speed_yz(*nd_vel))
        dom_avg = self.dom_speed.push(speed_yz(*dom_vel))
        try:
            rel_v = relative_velocity(dom_avg, nd_avg, cfg.stall_threshold)
            vel = velocity_score(rel_v, cfg.ratio, cfg.amplitude, cfg.falloff)
        except StalledError:
            vel = 0.0

        total = total_score(pos, vel)
        current = self.totals.push(total)
        return ScoreSample(pos, vel, total, current)
