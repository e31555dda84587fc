"""Interactive training session: alternating guided training and silent testing.

A session starts with one block of adaptive training, then switches to
testing. Every completed testing block is averaged and compared against
the best block so far: fall below the threshold fraction of the best and
the session inserts another training block, otherwise testing simply
continues. Sessions end at the configured duration cap or on an external
stop.

The engine is frame-driven: each call to :meth:`SessionEngine.step` feeds
one sensed sample of both hands through scoring, computes guidance forces
for the current mode, appends to the session log, and reports any mode
transitions that took effect on that frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .kinematics import PlanarPoint
from .scoring import (
    PolyrhythmRatio,
    PositionErrorMode,
    ScorePipeline,
    ScoreSample,
    ScoringConfig,
)
from .trainer import (
    GuidanceForce,
    Hand,
    ReferenceTrajectory,
    TrainingMode,
    ZERO_FORCE,
    guidance_force,
    guidance_force_with_feedforward,
    reference_state,
    resync_reference,
    training_power,
)

LOG_VERSION = 1


class OutOfWorkspaceError(ValueError):
    """Sensed position outside the workspace bounds; the frame is rejected."""


class SessionOverError(RuntimeError):
    """step() called after the session already ended."""


class EmptyLogError(ValueError):
    """No frames to summarize."""


class Phase(Enum):
    TRAINING = "training"
    TESTING = "testing"


class BlockDecision(str, Enum):
    STAY_TESTING = "StayTesting"
    GO_TRAINING = "GoTraining"


@dataclass(frozen=True)
class TrainerConfig:
    """Guidance constants: spring stiffness, force cap, and reference geometry."""

    spring: float = 1.0            # N/mm, device stiffness range tops out at 2.31
    force_cap: float = 3.3         # N, device maximum
    radius: float = 30.0           # mm, both reference circles
    nd_angular_speed: float = 180.0  # deg/s, one non-dominant cycle per 2 s
    velocity_feedforward: bool = False
    feedforward_gain: float = 0.01   # N*s/mm, only used when feedforward is on


@dataclass(frozen=True)
class ScoreConstants:
    """Scoring knobs carried by the session config."""

    error_mode: PositionErrorMode = PositionErrorMode.FOLD
    amplitude: float = 100.0
    falloff: float = 1.0
    stall_threshold: float = 1.0   # mm/s
    current_window: int = 20       # frames
    velocity_window: int = 40      # frames


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session needs: schedule, geometry, trainer and scoring constants."""

    ratio: PolyrhythmRatio = field(default_factory=lambda: PolyrhythmRatio(2, 3))
    frame_rate: float = 100.0      # Hz
    train_block: float = 10.0      # s
    test_block: float = 20.0       # s
    threshold_fraction: float = 0.8
    max_duration: float = 300.0    # s
    initial_best: float | None = None  # pre-seeded best block score; None = first block seeds it
    reset_windows_on_transition: bool = False
    workspace_limit: float = 200.0  # mm, |y| and |z| bound
    dead_zone: float = 1.0          # mm
    nd_center: PlanarPoint = field(default_factory=lambda: PlanarPoint(0.0, -40.0))
    dom_center: PlanarPoint = field(default_factory=lambda: PlanarPoint(0.0, 40.0))
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    scoring: ScoreConstants = field(default_factory=ScoreConstants)

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        if self.train_block <= 0 or self.test_block <= 0:
            raise ValueError("train_block and test_block must be positive")
        if not (0.0 < self.threshold_fraction <= 1.0):
            raise ValueError("threshold_fraction must be in (0, 1]")
        if self.max_duration < self.train_block + self.test_block:
            raise ValueError("max_duration must cover at least one train + test block")

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate

    @property
    def train_frames(self) -> int:
        return round(self.train_block * self.frame_rate)

    @property
    def test_frames(self) -> int:
        return round(self.test_block * self.frame_rate)

    @property
    def max_frames(self) -> int:
        return round(self.max_duration * self.frame_rate)

    def scoring_config(self) -> ScoringConfig:
        s = self.scoring
        return ScoringConfig(
            ratio=self.ratio,
            nd_center=self.nd_center,
            dom_center=self.dom_center,
            error_mode=s.error_mode,
            amplitude=s.amplitude,
            falloff=s.falloff,
            stall_threshold=s.stall_threshold,
            current_window=s.current_window,
            velocity_window=s.velocity_window,
            dead_zone=self.dead_zone,
        )

    def reference_trajectory(self) -> ReferenceTrajectory:
        t = self.trainer
        return ReferenceTrajectory(
            ratio=self.ratio,
            nd_center=self.nd_center,
            dom_center=self.dom_center,
            nd_radius=t.radius,
            dom_radius=t.radius,
            nd_angular_speed=t.nd_angular_speed,
        )


@dataclass(frozen=True)
class HandSample:
    """Sensed kinematics for one hand: position in mm, velocity in mm/s."""

    pos: PlanarPoint
    vy: float
    vz: float


@dataclass(frozen=True)
class SensedInput:
    """One frame of sensed input for both hands."""

    nd: HandSample
    dom: HandSample
    client_t: float | None = None


@dataclass(frozen=True)
class SessionEvent:
    t: float
    kind: str  # TrainStart | TestStart | BlockEvaluated | SessionEnd
    payload: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"t": self.t, "event": self.kind, **self.payload}


@dataclass(frozen=True)
class StepResult:
    """Outcome of one engine frame: forces to apply, the frame's scores, transitions."""

    t: float
    mode: TrainingMode
    sample: ScoreSample
    forces: dict[Hand, GuidanceForce]
    powers: tuple[float, float]  # (nd, dom), 0-100
    targets: dict[Hand, PlanarPoint] | None  # None outside training
    events: list[SessionEvent]


def evaluate_block(
    block_avg: float, best: float | None, threshold_fraction: float = 0.8
) -> tuple[BlockDecision, float]:
    """Apply the threshold-of-best rule to one completed testing block.

    The first completed block seeds the best score and always stays in
    testing. Afterwards a block below ``threshold_fraction`` of the best
    sends the session back to training; the best only ever ratchets up.
    """
    if best is None:
        return BlockDecision.STAY_TESTING, block_avg
    if block_avg < threshold_fraction * best:
        decision = BlockDecision.GO_TRAINING
    else:
        decision = BlockDecision.STAY_TESTING
    return decision, max(best, block_avg)


def summarize_records(records: list[dict], frame_rate: float, subject: str) -> dict:
    """Build the session summary from log records (frames and events).

    Contains the per-frame score series, every testing segment with its
    mean, segment-to-segment percent changes, the final score over all
    testing frames, and the training-block count.
    """
    from .analysis import percent_change, segment_tests

    frames = [r for r in records if "mode" in r]
    if not frames:
        raise EmptyLogError("no frames in session log")
    segments = segment_tests(records)
    segment_means = [seg.mean for seg in segments]
    test_scores = [s for seg in segments for s in seg.scores]
    final_score = math.fsum(test_scores) / len(test_scores) if test_scores else None
    return {
        "subject": subject,
        "frames": len(frames),
        "duration": len(frames) / frame_rate,
        "final_score": final_score,
        "test_frames": len(test_scores),
        "training_blocks": sum(1 for r in records if r.get("event") == "TrainStart"),
        "testing_segments": [
            {
                "index": seg.index,
                "start_t": seg.start_t,
                "end_t": seg.end_t,
                "mean": seg.mean,
                "frames": seg.frame_count,
            }
            for seg in segments
        ],
        "segment_means": segment_means,
        "percent_change": percent_change(segment_means) if len(segment_means) >= 2 else [],
        "series": {
            "t": [f["t"] for f in frames],
            "mode": [f["mode"] for f in frames],
            "pos": [f["scores"]["pos"] for f in frames],
            "vel": [f["scores"]["vel"] for f in frames],
            "total": [f["scores"]["total"] for f in frames],
            "current": [f["scores"]["current"] for f in frames],
        },
    }


class SessionEngine:
    """Single-session control loop: scoring, mode schedule, guidance, log.

    One engine instance is owned by one caller (the live server or a
    simulation loop); every step is a pure function of the config and the
    sensed input stream, so replaying a recorded stream reproduces the
    session exactly.
    """

    def __init__(self, config: SessionConfig, subject: str = "anon", seeds: dict | None = None):
        self.config = config
        self.subject = subject
        self.pipeline = ScorePipeline(config.scoring_config())
        self.traj = config.reference_trajectory()
        self.phase = Phase.TRAINING
        self.frames_in_phase = 0
        self.best: float | None = config.initial_best
        self.block_index = 0
        self._block_sum = 0.0
        self._block_count = 0
        self.frame_index = 0
        self._started = False
        self._ended = False
        self._pending_resync = False
        self.records: list[dict] = [
            {
                "header": {
                    "version": LOG_VERSION,
                    "subject": subject,
                    "config": config_to_dict(config),
                    "seeds": seeds,
                }
            }
        ]
        self._summary: dict | None = None

    @property
    def t(self) -> float:
        return self.frame_index * self.config.dt

    @property
    def ended(self) -> bool:
        return self._ended

    def step(self, sensed: SensedInput) -> StepResult:
        if self._ended:
            raise SessionOverError("session already ended")
        cfg = self.config
        self._check_workspace(sensed)

        events: list[SessionEvent] = []
        t = self.t
        if not self._started:
            self._started = True
            self._enter_training(t, events)
        else:
            self._advance_schedule(t, events)

        mode = TrainingMode.ADAPTIVE if self.phase is Phase.TRAINING else TrainingMode.TEST
        sample = self.pipeline.update(
            sensed.nd.pos, (sensed.nd.vy, sensed.nd.vz), sensed.dom.pos, (sensed.dom.vy, sensed.dom.vz)
        )

        if self.phase is Phase.TRAINING:
            if self._pending_resync:
                self.traj = resync_reference(self.traj, self.pipeline.nd_angle.state, t)
                self._pending_resync = False
            powers = training_power(mode, sample.current_score)
            targets = {}
            forces = {}
            for hand, power, hand_sample in (
                (Hand.ND, powers[0], sensed.nd),
                (Hand.DOM, powers[1], sensed.dom),
            ):
                target, target_vel = reference_state(self.traj, t, hand)
                targets[hand] = target
                trainer = cfg.trainer
                if trainer.velocity_feedforward:
                    forces[hand] = guidance_force_with_feedforward(
                        power, target, target_vel, hand_sample.pos,
                        (hand_sample.vy, hand_sample.vz),
                        trainer.spring, trainer.feedforward_gain, trainer.force_cap,
                    )
                else:
                    forces[hand] = guidance_force(
                        power, target, hand_sample.pos, trainer.spring, trainer.force_cap
                    )
        else:
            powers = (0.0, 0.0)
            targets = None
            forces = {Hand.ND: ZERO_FORCE, Hand.DOM: ZERO_FORCE}
            self._block_sum += sample.total_score
            self._block_count += 1

        for event in events:
            self.records.append(event.to_record())
        self.records.append(self._frame_record(t, mode, sensed, forces, sample))

        self.frames_in_phase += 1
        self.frame_index += 1
        if self.frame_index >= cfg.max_frames:
            end_event = self._end(cfg.max_duration, "max_duration")
            events.append(end_event)

        return StepResult(t, mode, sample, forces, powers, targets, events)

    def finish(self, reason: str = "stopped") -> dict:
        """End the session (idempotent) and return its summary."""
        if not self._ended:
            self._end(self.t, reason)
        return self.summary()

    def summary(self) -> dict:
        if not self._ended:
            raise SessionOverError("session still running; call finish() first")
        if self._summary is None:
            self._summary = summarize_records(self.records, self.config.frame_rate, self.subject)
        return self._summary

    def _end(self, t: float, reason: str) -> SessionEvent:
        event = SessionEvent(t, "SessionEnd", {"reason": reason})
        self.records.append(event.to_record())
        self._ended = True
        return event

    def _check_workspace(self, sensed: SensedInput) -> None:
        limit = self.config.workspace_limit
        for hand, hand_sample in ((Hand.ND, sensed.nd), (Hand.DOM, sensed.dom)):
            pos = hand_sample.pos
            if not (math.isfinite(pos.y) and math.isfinite(pos.z)) or abs(pos.y) > limit or abs(pos.z) > limit:
                raise OutOfWorkspaceError(
                    f"{hand.value} position ({pos.y:.1f}, {pos.z:.1f}) outside workspace bound {limit} mm"
                )

    def _enter_training(self, t: float, events: list[SessionEvent]) -> None:
        if self._started and self.config.reset_windows_on_transition:
            self.pipeline.reset_windows()
        self.phase = Phase.TRAINING
        self.frames_in_phase = 0
        self._pending_resync = True
        events.append(SessionEvent(t, "TrainStart"))

    def _advance_schedule(self, t: float, events: list[SessionEvent]) -> None:
        cfg = self.config
        if self.phase is Phase.TRAINING and self.frames_in_phase >= cfg.train_frames:
            if cfg.reset_windows_on_transition:
                self.pipeline.reset_windows()
            self.phase = Phase.TESTING
            self.frames_in_phase = 0
            self._block_sum = 0.0
            self._block_count = 0
            events.append(SessionEvent(t, "TestStart"))
        elif self.phase is Phase.TESTING and self.frames_in_phase >= cfg.test_frames:
            block_avg = self._block_sum / self._block_count
            decision, self.best = evaluate_block(block_avg, self.best, cfg.threshold_fraction)
            self.block_index += 1
            events.append(
                SessionEvent(
                    t,
                    "BlockEvaluated",
                    {"block_avg": block_avg, "best": self.best, "decision": decision.value},
                )
            )
            if decision is BlockDecision.GO_TRAINING:
                self._enter_training(t, events)
            else:
                self.frames_in_phase = 0
                self._block_sum = 0.0
                self._block_count = 0

    def _frame_record(
        self,
        t: float,
        mode: TrainingMode,
        sensed: SensedInput,
        forces: dict[Hand, GuidanceForce],
        sample: ScoreSample,
    ) -> dict:
        return {
            "t": t,
            "mode": int(mode),
            "nd": {"y": sensed.nd.pos.y, "z": sensed.nd.pos.z, "vy": sensed.nd.vy, "vz": sensed.nd.vz},
            "dom": {"y": sensed.dom.pos.y, "z": sensed.dom.pos.z, "vy": sensed.dom.vy, "vz": sensed.dom.vz},
            "forces": {
                "nd": {"fy": forces[Hand.ND].fy, "fz": forces[Hand.ND].fz},
                "dom": {"fy": forces[Hand.DOM].fy, "fz": forces[Hand.DOM].fz},
            },
            "scores": {
                "pos": sample.position_score,
                "vel": sample.velocity_score,
                "total": sample.total_score,
                "current": sample.current_score,
            },
        }


def config_to_dict(config: SessionConfig) -> dict:
    """Plain-dict form of a session config, as stored in log headers and config files."""
    return {
        "ratio": {"non_dominant": config.ratio.p, "dominant": config.ratio.q},
        "frame_rate": config.frame_rate,
        "train_block": config.train_block,
        "test_block": config.test_block,
        "threshold_fraction": config.threshold_fraction,
        "max_duration": config.max_duration,
        "initial_best": config.initial_best,
        "reset_windows_on_transition": config.reset_windows_on_transition,
        "workspace_limit": config.workspace_limit,
        "dead_zone": config.dead_zone,
        "nd_center": {"y": config.nd_center.y, "z": config.nd_center.z},
        "dom_center": {"y": config.dom_center.y, "z": config.dom_center.z},
        "trainer": {
            "spring": config.trainer.spring,
            "force_cap": config.trainer.force_cap,
            "radius": config.trainer.radius,
            "nd_angular_speed": config.trainer.nd_angular_speed,
            "velocity_feedforward": config.trainer.velocity_feedforward,
            "feedforward_gain": config.trainer.feedforward_gain,
        },
        "scoring": {
            "error_mode": config.scoring.error_mode.value,
            "amplitude": config.scoring.amplitude,
            "falloff": config.scoring.falloff,
            "stall_threshold": config.scoring.stall_threshold,
            "current_window": config.scoring.current_window,
            "velocity_window": config.scoring.velocity_window,
        },
    }


def config_from_dict(data: dict) -> SessionConfig:
    """Inverse of :func:`config_to_dict`; rejects unknown keys."""
    top_keys = {
        "ratio", "frame_rate", "train_block", "test_block", "threshold_fraction",
        "max_duration", "initial_best", "reset_windows_on_transition",
        "workspace_limit", "dead_zone", "nd_center", "dom_center", "trainer", "scoring",
    }
    unknown = set(data) - top_keys
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    defaults = SessionConfig()

    def point(d: dict, fallback: PlanarPoint) -> PlanarPoint:
        return PlanarPoint(float(d.get("y", fallback.y)), float(d.get("z", fallback.z)))

    ratio = defaults.ratio
    if "ratio" in data:
        r = data["ratio"]
        unknown = set(r) - {"non_dominant", "dominant"}
        if unknown:
            raise ValueError(f"unknown ratio keys: {sorted(unknown)}")
        ratio = PolyrhythmRatio(int(r["non_dominant"]), int(r["dominant"]))

    trainer = defaults.trainer
    if "trainer" in data:
        tr = dict(data["trainer"])
        known = {"spring", "force_cap", "radius", "nd_angular_speed", "velocity_feedforward", "feedforward_gain"}
        unknown = set(tr) - known
        if unknown:
            raise ValueError(f"unknown trainer keys: {sorted(unknown)}")
        trainer = TrainerConfig(
            spring=float(tr.get("spring", trainer.spring)),
            force_cap=float(tr.get("force_cap", trainer.force_cap)),
            radius=float(tr.get("radius", trainer.radius)),
            nd_angular_speed=float(tr.get("nd_angular_speed", trainer.nd_angular_speed)),
            velocity_feedforward=bool(tr.get("velocity_feedforward", trainer.velocity_feedforward)),
            feedforward_gain=float(tr.get("feedforward_gain", trainer.feedforward_gain)),
        )

    scoring = defaults.scoring
    if "scoring" in data:
        sc = dict(data["scoring"])
        known = {"error_mode", "amplitude", "falloff", "stall_threshold", "current_window", "velocity_window"}
        unknown = set(sc) - known
        if unknown:
            raise ValueError(f"unknown scoring keys: {sorted(unknown)}")
        scoring = ScoreConstants(
            error_mode=PositionErrorMode(sc.get("error_mode", scoring.error_mode.value)),
            amplitude=float(sc.get("amplitude", scoring.amplitude)),
            falloff=float(sc.get("falloff", scoring.falloff)),
            stall_threshold=float(sc.get("stall_threshold", scoring.stall_threshold)),
            current_window=int(sc.get("current_window", scoring.current_window)),
            velocity_window=int(sc.get("velocity_window", scoring.velocity_window)),
        )

    initial_best = data.get("initial_best", defaults.initial_best)
    return SessionConfig(
        ratio=ratio,
        frame_rate=float(data.get("frame_rate", defaults.frame_rate)),
        train_block=float(data.get("train_block", defaults.train_block)),
        test_block=float(data.get("test_block", defaults.test_block)),
        threshold_fraction=float(data.get("threshold_fraction", defaults.threshold_fraction)),
        max_duration=float(data.get("max_duration", defaults.max_duration)),
        initial_best=None if initial_best is None else float(initial_best),
        reset_windows_on_transition=bool(data.get("reset_windows_on_transition", defaults.reset_windows_on_transition)),
        workspace_limit=float(data.get("workspace_limit", defaults.workspace_limit)),
        dead_zone=float(data.get("dead_zone", defaults.dead_zone)),
        nd_center=point(data.get("nd_center", {}), defaults.nd_center),
        dom_center=point(data.get("dom_center", {}), defaults.dom_center),
        trainer=trainer,
        scoring=scoring,
    )
