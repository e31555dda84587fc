"""Simulated subjects: intent oscillators, cross-talk, and hand dynamics.

The model is deliberately simple and openly synthetic. Each hand has an
intent phase advancing at its preferred angular speed; the dominant
intent is pulled toward in-phase 1:1 synchrony with the other hand by a
cross-talk coupling term, the classic between-hand interference that
makes polyrhythms hard. Learning is coupling decay: every guided
training frame shrinks the coupling by a fixed exponential factor.

The physical hand is a point mass tracking its intent point on the
circle through a stiffness/damping pair, and it feels the guidance force
scaled by a compliance factor. With zero coupling and zero noise the
subject performs the target ratio essentially perfectly, which is what
makes it usable as a scoring oracle.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .kinematics import PlanarPoint
from .session import SensedInput, SessionConfig, SessionEngine, HandSample
from .trainer import GuidanceForce, Hand, TrainingMode, ZERO_FORCE

# N/kg to mm/s^2: hand forces are in newtons, positions in millimetres.
_MM_PER_M = 1000.0


class NumericalBlowupError(RuntimeError):
    """Subject state became non-finite; the simulation aborts."""


@dataclass(frozen=True)
class SubjectParams:
    """Tunable subject model constants.

    coupling is the initial cross-talk strength in 1/s; learning_rate is
    its exponential decay per second of guided training; motor_noise is
    white phase noise in deg/sqrt(s). task_coupling is the subject's own
    pull toward the relation they are trying to perform (dominant intent
    corrected toward multiplier * nd phase); it is zero on a perfect
    performance, so it never helps a subject that is already perfect,
    and it does not decay: what learning removes is the interference,
    not the intent. Intent speeds are deg/s per hand. The hand constants
    mirror the guidance spring units: stiffness in N/mm, damping in
    N*s/mm, mass in kg. compliance scales how strongly external guidance
    forces move the hand (1.0 = fully felt).
    """

    coupling: float = 0.0
    learning_rate: float = 0.0
    motor_noise: float = 0.0
    task_coupling: float = 1.0
    nd_intent_speed: float = 180.0
    dom_intent_speed: float = 270.0
    hand_stiffness: float = 0.6
    hand_damping: float = 0.035
    hand_mass: float = 0.5
    compliance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("coupling", "learning_rate", "motor_noise", "task_coupling",
                     "hand_stiffness", "hand_damping", "compliance"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.hand_mass <= 0:
            raise ValueError("hand_mass must be positive")

    @property
    def intent_multiplier(self) -> float:
        """Ratio the subject is trying to hold between the two intent rates."""
        if self.nd_intent_speed == 0.0:
            return 0.0
        return self.dom_intent_speed / self.nd_intent_speed

    @classmethod
    def for_session(cls, config: SessionConfig, **overrides) -> "SubjectParams":
        """Params whose intent speeds match the session's reference circles."""
        nd_speed = config.trainer.nd_angular_speed
        overrides.setdefault("nd_intent_speed", nd_speed)
        overrides.setdefault("dom_intent_speed", nd_speed * config.ratio.multiplier)
        return cls(**overrides)


@dataclass(frozen=True)
class HandState:
    pos: PlanarPoint
    vy: float
    vz: float


@dataclass(frozen=True)
class SubjectState:
    """Intent phases in degrees, physical hand states, current coupling."""

    nd_phase: float
    dom_phase: float
    nd: HandState
    dom: HandState
    coupling: float

    def sensed(self) -> SensedInput:
        return SensedInput(
            nd=HandSample(self.nd.pos, self.nd.vy, self.nd.vz),
            dom=HandSample(self.dom.pos, self.dom.vy, self.dom.vz),
        )


def _intent_point(center: PlanarPoint, radius: float, phase_deg: float) -> PlanarPoint:
    rad = math.radians(phase_deg)
    return PlanarPoint(center.y + radius * math.cos(rad), center.z + radius * math.sin(rad))


def _intent_velocity(radius: float, phase_deg: float, rate_deg_s: float) -> tuple[float, float]:
    rad = math.radians(phase_deg)
    speed = radius * math.radians(rate_deg_s)
    return (-speed * math.sin(rad), speed * math.cos(rad))


def initial_state(
    config: SessionConfig,
    params: SubjectParams,
    nd_phase: float = 0.0,
    dom_phase: float = 0.0,
) -> SubjectState:
    """Subject starting on the reference circles with matched intent velocity."""
    radius = config.trainer.radius
    hands = {}
    for hand, center, phase, rate in (
        (Hand.ND, config.nd_center, nd_phase, params.nd_intent_speed),
        (Hand.DOM, config.dom_center, dom_phase, params.dom_intent_speed),
    ):
        pos = _intent_point(center, radius, phase)
        vy, vz = _intent_velocity(radius, phase, rate)
        hands[hand] = HandState(pos, vy, vz)
    return SubjectState(
        nd_phase=nd_phase,
        dom_phase=dom_phase,
        nd=hands[Hand.ND],
        dom=hands[Hand.DOM],
        coupling=params.coupling,
    )


def _phase_rates(nd_phase: float, dom_phase: float, params: SubjectParams, coupling: float) -> tuple[float, float]:
    # Two pulls on the dominant intent, both in 1/s acting on radian
    # phase differences and converted back to deg/s: cross-talk drags it
    # toward 1:1 synchrony with the other hand (the impairment), while
    # task coupling corrects it toward the relation the subject intends
    # (zero when the ratio is being performed exactly).
    crosstalk = coupling * math.sin(math.radians(nd_phase - dom_phase))
    task = params.task_coupling * math.sin(
        math.radians(params.intent_multiplier * nd_phase - dom_phase)
    )
    return (params.nd_intent_speed, params.dom_intent_speed + math.degrees(crosstalk + task))


def _advance_phases(state: SubjectState, params: SubjectParams, dt: float) -> tuple[float, float]:
    # Classic fourth-order Runge-Kutta on the coupled phase pair; the
    # refinement-stability property leans on the integration order.
    def deriv(nd: float, dom: float) -> tuple[float, float]:
        return _phase_rates(nd, dom, params, state.coupling)

    nd0, dom0 = state.nd_phase, state.dom_phase
    k1 = deriv(nd0, dom0)
    k2 = deriv(nd0 + 0.5 * dt * k1[0], dom0 + 0.5 * dt * k1[1])
    k3 = deriv(nd0 + 0.5 * dt * k2[0], dom0 + 0.5 * dt * k2[1])
    k4 = deriv(nd0 + dt * k3[0], dom0 + dt * k3[1])
    nd = nd0 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    dom = dom0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return nd, dom


def _step_hand(
    hand: HandState,
    center: PlanarPoint,
    radius: float,
    phase: float,
    rate: float,
    force: GuidanceForce,
    params: SubjectParams,
    dt: float,
) -> HandState:
    target = _intent_point(center, radius, phase)
    tvy, tvz = _intent_velocity(radius, phase, rate)
    gain = _MM_PER_M / params.hand_mass
    ay = gain * (
        params.hand_stiffness * (target.y - hand.pos.y)
        + params.hand_damping * (tvy - hand.vy)
        + params.compliance * force.fy
    )
    az = gain * (
        params.hand_stiffness * (target.z - hand.pos.z)
        + params.hand_damping * (tvz - hand.vz)
        + params.compliance * force.fz
    )
    # Semi-implicit Euler: velocity first, then position with the new velocity.
    vy = hand.vy + ay * dt
    vz = hand.vz + az * dt
    pos = PlanarPoint(hand.pos.y + vy * dt, hand.pos.z + vz * dt)
    return HandState(pos, vy, vz)


def subject_step(
    state: SubjectState,
    params: SubjectParams,
    config: SessionConfig,
    forces: dict[Hand, GuidanceForce],
    dt: float,
    mode: TrainingMode,
    noise: tuple[float, float] = (0.0, 0.0),
) -> SubjectState:
    """Advance the subject by one frame under the given guidance forces.

    noise holds pre-drawn phase perturbations in degrees (nd, dom); the
    stateful wrapper draws them from its seeded generators so this core
    stays a pure function.
    """
    nd_phase, dom_phase = _advance_phases(state, params, dt)
    nd_phase += noise[0]
    dom_phase += noise[1]

    nd_rate, dom_rate = _phase_rates(nd_phase, dom_phase, params, state.coupling)
    radius = config.trainer.radius
    nd_hand = _step_hand(
        state.nd, config.nd_center, radius, nd_phase, nd_rate,
        forces.get(Hand.ND, ZERO_FORCE), params, dt,
    )
    dom_hand = _step_hand(
        state.dom, config.dom_center, radius, dom_phase, dom_rate,
        forces.get(Hand.DOM, ZERO_FORCE), params, dt,
    )

    coupling = state.coupling
    if mode is not TrainingMode.TEST:
        coupling *= math.exp(-params.learning_rate * dt)

    new_state = SubjectState(nd_phase, dom_phase, nd_hand, dom_hand, coupling)
    _check_finite(new_state)
    return new_state


def _check_finite(state: SubjectState) -> None:
    values = (
        state.nd_phase, state.dom_phase, state.coupling,
        state.nd.pos.y, state.nd.pos.z, state.nd.vy, state.nd.vz,
        state.dom.pos.y, state.dom.pos.z, state.dom.vy, state.dom.vz,
    )
    if not all(map(math.isfinite, values)):
        raise NumericalBlowupError(
            "non-finite subject state: "
            f"phases=({state.nd_phase}, {state.dom_phase}) "
            f"nd=({state.nd.pos.y}, {state.nd.pos.z}) dom=({state.dom.pos.y}, {state.dom.pos.z}) "
            f"coupling={state.coupling}"
        )


class VirtualSubject:
    """Stateful wrapper pairing SubjectState with seeded noise generators."""

    def __init__(self, config: SessionConfig, params: SubjectParams, state: SubjectState | None = None):
        self.config = config
        self.params = params
        self.state = state if state is not None else initial_state(config, params)
        self._nd_rng = random.Random(f"{params.seed}:nd")
        self._dom_rng = random.Random(f"{params.seed}:dom")

    def sensed(self) -> SensedInput:
        return self.state.sensed()

    def step(self, forces: dict[Hand, GuidanceForce], dt: float, mode: TrainingMode) -> SubjectState:
        sigma = self.params.motor_noise
        if sigma > 0.0:
            scale = sigma * math.sqrt(dt)
            noise = (self._nd_rng.gauss(0.0, scale), self._dom_rng.gauss(0.0, scale))
        else:
            noise = (0.0, 0.0)
        self.state = subject_step(self.state, self.params, self.config, forces, dt, mode, noise)
        return self.state


def run_session(
    config: SessionConfig, params: SubjectParams, subject: str = "sim"
) -> SessionEngine:
    """Run one headless session of a virtual subject; returns the ended engine."""
    virtual = VirtualSubject(config, params)
    engine = SessionEngine(config, subject=subject, seeds={"rng": params.seed})
    while not engine.ended:
        try:
            result = engine.step(virtual.sensed())
        except Exception as exc:
            raise type(exc)(f"frame {engine.frame_index}: {exc}") from exc
        virtual.step(result.forces, config.dt, result.mode)
    return engine


@dataclass(frozen=True)
class BatchRun:
    """Outcome of one batch entry: the session records, or the failure."""

    subject: str
    records: list | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def run_batch(entries: list[tuple[SessionConfig, SubjectParams, str]]) -> list[BatchRun]:
    """Run each (config, params, label) headlessly; failures don't abort the batch."""
    results = []
    for config, params, label in entries:
        try:
            engine = run_session(config, params, subject=label)
            results.append(BatchRun(label, engine.records))
        except Exception as exc:
            results.append(BatchRun(label, None, error=f"{type(exc).__name__}: {exc}"))
    return results


_PARAM_KEYS = {
    "coupling", "learning_rate", "motor_noise", "task_coupling",
    "nd_intent_speed", "dom_intent_speed",
    "hand_stiffness", "hand_damping", "hand_mass", "compliance", "seed",
}


def params_to_dict(params: SubjectParams) -> dict:
    return {key: getattr(params, key) for key in sorted(_PARAM_KEYS)}


def params_from_dict(data: dict) -> SubjectParams:
    unknown = set(data) - _PARAM_KEYS - {"label"}
    if unknown:
        raise ValueError(f"unknown subject parameter keys: {sorted(unknown)}")
    kwargs = {key: data[key] for key in _PARAM_KEYS & set(data)}
    if "seed" in kwargs:
        kwargs["seed"] = int(kwargs["seed"])
    return SubjectParams(**kwargs)
