"""Scripted input streams and an independent session-trace checker.

Everything here is deliberately written without reusing engine internals
so it can serve as an oracle: the trace checker reconstructs the mode
schedule from raw log records alone, and the scripted streams are
closed-form circle evaluations.
"""

import math

from polytrain.kinematics import PlanarPoint
from polytrain.session import HandSample, SensedInput, SessionConfig

TEST_MODE_ID = 4


def circular_sample(center: PlanarPoint, radius: float, angle_deg: float, rate_deg_s: float) -> HandSample:
    a = math.radians(angle_deg)
    w = math.radians(rate_deg_s)
    return HandSample(
        pos=PlanarPoint(center.y + radius * math.cos(a), center.z + radius * math.sin(a)),
        vy=-radius * w * math.sin(a),
        vz=radius * w * math.cos(a),
    )


def perfect_frame(config: SessionConfig, i: int, radius: float | None = None,
                  nd_speed: float | None = None) -> SensedInput:
    """Exact 2:3-style frame: dominant angle = multiplier * nd angle."""
    t = i * config.dt
    radius = config.trainer.radius if radius is None else radius
    nd_speed = config.trainer.nd_angular_speed if nd_speed is None else nd_speed
    mult = config.ratio.multiplier
    return SensedInput(
        nd=circular_sample(config.nd_center, radius, nd_speed * t, nd_speed),
        dom=circular_sample(config.dom_center, radius, mult * nd_speed * t, mult * nd_speed),
    )


def mirror_frame(config: SessionConfig, i: int) -> SensedInput:
    """Both hands at the same angular speed (1:1): the always-below subject."""
    t = i * config.dt
    radius = config.trainer.radius
    speed = config.trainer.nd_angular_speed
    return SensedInput(
        nd=circular_sample(config.nd_center, radius, speed * t, speed),
        dom=circular_sample(config.dom_center, radius, speed * t, speed),
    )


def run_scripted(config: SessionConfig, frame_fn, subject: str = "scripted"):
    """Drive a fresh engine with frame_fn(config, i) until it ends."""
    from polytrain.session import SessionEngine

    engine = SessionEngine(config, subject=subject)
    i = 0
    while not engine.ended:
        engine.step(frame_fn(config, i))
        i += 1
    return engine


def check_session_trace(records: list[dict], config: SessionConfig) -> list[str]:
    """Independent validation of a session log's mode schedule and events.

    Rebuilds the phase runs from frame modes alone and checks them against
    the configured block lengths, then cross-checks every event's kind and
    timestamp against the runs. Returns a list of violations (empty = ok).
    """
    problems: list[str] = []
    frames = [r for r in records if "mode" in r]
    events = [r for r in records if "event" in r]
    if not frames:
        return ["no frames"]

    dt = 1.0 / config.frame_rate
    train_frames = round(config.train_block * config.frame_rate)
    test_frames = round(config.test_block * config.frame_rate)
    max_frames = round(config.max_duration * config.frame_rate)

    # Phase runs: (is_test, start_frame_index, length)
    runs = []
    for idx, frame in enumerate(frames):
        is_test = frame["mode"] == TEST_MODE_ID
        if runs and runs[-1][0] == is_test:
            runs[-1][2] += 1
        else:
            runs.append([is_test, idx, 1])

    if runs[0][0]:
        problems.append("session does not start in training")
    for k, (is_test, start, length) in enumerate(runs):
        last = k == len(runs) - 1
        if not is_test:
            if length != train_frames and not (last and length < train_frames):
                problems.append(f"training run {k} has {length} frames, expected {train_frames}")
        else:
            if length % test_frames != 0 and not last:
                problems.append(f"testing run {k} has {length} frames, not a block multiple")
    for a, b in zip(runs, runs[1:]):
        if a[0] == b[0]:
            problems.append("adjacent runs share a mode")
    if len(frames) > max_frames:
        problems.append(f"{len(frames)} frames exceeds the {max_frames} cap")

    # Frame times must advance by exactly one period.
    for i, frame in enumerate(frames):
        if abs(frame["t"] - i * dt) > 1e-9:
            problems.append(f"frame {i} has t={frame['t']}, expected {i * dt}")
            break

    # Events versus runs. An evaluation that would land exactly on the
    # session cap never fires: the boundary check runs before the next
    # frame, and there is no next frame.
    expected = []
    for is_test, start, length in runs:
        expected.append(("TestStart" if is_test else "TrainStart", start * dt))
        if is_test:
            for m in range(1, length // test_frames + 1):
                boundary = start + m * test_frames
                if boundary >= len(frames):
                    continue
                expected.append(("BlockEvaluated", boundary * dt))
    got = [(e["event"], e["t"]) for e in events if e["event"] != "SessionEnd"]
    key = lambda pair: (pair[1], pair[0])
    expected.sort(key=key)
    got.sort(key=key)
    if len(expected) != len(got):
        problems.append(f"expected {len(expected)} schedule events, log has {len(got)}")
    for (ek, et), (gk, gt) in zip(expected, got):
        if ek != gk or abs(et - gt) > 1e-9:
            problems.append(f"event mismatch: expected {ek}@{et}, got {gk}@{gt}")
            break

    ends = [e for e in events if e["event"] == "SessionEnd"]
    if len(ends) != 1:
        problems.append(f"{len(ends)} SessionEnd events")
    elif records and "event" not in records[-1]:
        problems.append("SessionEnd is not the final record")
    return problems
