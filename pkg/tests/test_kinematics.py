import math

import pytest
from hypothesis import given, strategies as st

from polytrain.kinematics import (
    AngleTracker,
    DeadZoneError,
    MovingWindow,
    PlanarPoint,
    UnwrappedAngle,
    raw_angle,
    shortest_arc,
    speed_yz,
    unwrap_step,
)

ORIGIN = PlanarPoint(0.0, 0.0)

angles = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)


def rotate_cw(pos: PlanarPoint, center: PlanarPoint, delta_deg: float) -> PlanarPoint:
    # Clockwise by the module's convention: angle = atan2(dz, dy) increases
    # from +y toward +z, so rotating a point "clockwise" adds to that angle.
    a = math.radians(delta_deg)
    dy, dz = pos.y - center.y, pos.z - center.z
    return PlanarPoint(
        center.y + dy * math.cos(a) - dz * math.sin(a),
        center.z + dy * math.sin(a) + dz * math.cos(a),
    )


class TestRawAngle:
    def test_positive_y_is_zero(self):
        assert raw_angle(PlanarPoint(10.0, 0.0), ORIGIN) == 0.0

    def test_quarter_turn_clockwise(self):
        assert raw_angle(PlanarPoint(0.0, 10.0), ORIGIN) == pytest.approx(90.0)

    def test_negative_y_is_half_turn(self):
        assert raw_angle(PlanarPoint(-10.0, 0.0), ORIGIN) == pytest.approx(180.0)

    def test_range_is_half_open(self):
            assert 0.0 <= raw_angle(PlanarPoint(10.0, -1e-9), ORIGIN) < 360.0

    def test_offset_center(self):
        assert raw_angle(PlanarPoint(5.0, 13.0), PlanarPoint(5.0, 3.0)) == pytest.approx(90.0)

    def test_dead_zone_raises(self):
        with pytest.raises(DeadZoneError):
            raw_angle(PlanarPoint(0.5, 0.5), ORIGIN)

    def test_dead_zone_boundary_is_exclusive(self):
        with pytest.raises(DeadZoneError):
            raw_angle(PlanarPoint(1.0, 0.0), ORIGIN)
        assert raw_angle(PlanarPoint(1.0 + 1e-9, 0.0), ORIGIN) == 0.0

    @given(delta=st.floats(min_value=0.0, max_value=360.0, exclude_max=True))
    def test_rotation_shifts_angle(self, delta):
        pos = PlanarPoint(10.0, 0.0)
        rotated = raw_angle(rotate_cw(pos, ORIGIN, delta), ORIGIN)
        assert rotated == pytest.approx(delta % 360.0, abs=1e-9)


class TestShortestArc:
    def test_wraparound_forward(self):
        assert shortest_arc(350.0, 10.0) == pytest.approx(20.0)

    def test_wraparound_backward(self):
        assert shortest_arc(10.0, 350.0) == pytest.approx(-20.0)

    def test_plain_difference(self):
        assert shortest_arc(30.0, 75.0) == pytest.approx(45.0)

    def test_antipodal_goes_positive(self):
        assert shortest_arc(0.0, 180.0) == pytest.approx(180.0)

    @given(a=angles, b=angles)
    def test_magnitude_bounded(self, a, b):
        arc = shortest_arc(a, b)
        assert -180.0 < arc <= 180.0

    @given(a=angles, b=angles)
    def test_arc_lands_on_target(self, a, b):
        arc = shortest_arc(a, b)
        assert (a + arc) % 360.0 == pytest.approx(b % 360.0, abs=1e-6)


class TestUnwrapStep:
    def test_advance_across_wrap(self):
        state = UnwrappedAngle(350.0)
        state = unwrap_step(state, 10.0, period=720.0)
        assert state.degrees == pytest.approx(370.0)

    def test_counter_rotation(self):
        state = UnwrappedAngle(10.0)
        state = unwrap_step(state, 350.0, period=720.0)
        assert state.degrees == pytest.approx(-10.0)

    def test_monotone_sweep_rebase(self):
        # 0 -> 720 in 1 degree steps: one full re-base period.
        state = UnwrappedAngle(0.0)
        naive = 0.0
        for step in range(1, 721):
            raw = step % 360.0
            state = unwrap_step(state, raw, period=720.0)
            naive += 1.0
            assert state.degrees + 720.0 * state.basis == pytest.approx(naive)
        assert state.degrees == pytest.approx(0.0)
        assert state.basis == 1

    def test_rebase_keeps_range(self):
        state = UnwrappedAngle(719.5)
        state = unwrap_step(state, 0.5, period=720.0)
        assert 0.0 <= state.degrees < 720.0
        assert state.basis == 1

    @given(
        start=st.floats(min_value=0.0, max_value=359.0),
        deltas=st.lists(st.floats(min_value=-170.0, max_value=170.0), min_size=1, max_size=60),
        shift=st.floats(min_value=-300.0, max_value=300.0),
    )
    def test_shift_equivariance(self, start, deltas, shift):
        # Shifting every raw angle by a constant shifts the unwrapped path
        # by the same constant, modulo the re-base period.
        period = 720.0
        a = UnwrappedAngle(start % 360.0)
        b = UnwrappedAngle((start + shift) % 360.0)
        raw_a = start
        for delta in deltas:
            raw_a += delta
            a = unwrap_step(a, raw_a % 360.0, period)
            b = unwrap_step(b, (raw_a + shift) % 360.0, period)
        total_a = a.degrees + period * a.basis
        total_b = b.degrees + period * b.basis
        assert (total_b - total_a) == pytest.approx(shift % 360.0 if shift % 360.0 <= 180 else shift % 360.0 - 360.0, abs=1e-6)


class TestAngleTracker:
    def test_first_sample_initializes(self):
        tracker = AngleTracker(ORIGIN, period=720.0)
        state = tracker.update(PlanarPoint(0.0, 10.0))
        assert state.degrees == pytest.approx(90.0)

    def test_dead_zone_holds_previous(self):
        tracker = AngleTracker(ORIGIN, period=720.0)
        tracker.update(PlanarPoint(0.0, 10.0))
        held = tracker.update(PlanarPoint(0.2, 0.0))
        assert held.degrees == pytest.approx(90.0)

    def test_uninitialized_state_is_zero(self):
        tracker = AngleTracker(ORIGIN, period=720.0)
        assert tracker.state.degrees == 0.0

    def test_tracks_several_turns(self):
        tracker = AngleTracker(ORIGIN, period=1080.0)
        total = None
        for step in range(0, 900, 5):
            state = tracker.update(rotate_cw(PlanarPoint(10.0, 0.0), ORIGIN, step))
            total = state.degrees + 1080.0 * state.basis
        assert total == pytest.approx(895.0)


class TestSpeed:
    def test_three_four_five(self):
        assert speed_yz(3.0, 4.0) == 5.0

    def test_at_rest(self):
        assert speed_yz(0.0, 0.0) == 0.0

    def test_sign_independent(self):
        assert speed_yz(-6.0, 8.0) == 10.0

    @given(
        vy=st.floats(min_value=-1e3, max_value=1e3),
        vz=st.floats(min_value=-1e3, max_value=1e3),
        rot=st.floats(min_value=0.0, max_value=360.0),
        scale=st.floats(min_value=0.0, max_value=50.0),
    )
    def test_rotation_invariant_and_homogeneous(self, vy, vz, rot, scale):
        a = math.radians(rot)
        ry = vy * math.cos(a) - vz * math.sin(a)
        rz = vy * math.sin(a) + vz * math.cos(a)
        assert speed_yz(ry, rz) == pytest.approx(speed_yz(vy, vz), rel=1e-9, abs=1e-9)
        assert speed_yz(scale * vy, scale * vz) == pytest.approx(scale * speed_yz(vy, vz), rel=1e-9, abs=1e-9)


class TestMovingWindow:
    def test_single_sample(self):
        window = MovingWindow(20)
        assert window.push(100.0) == 100.0

    def test_eviction(self):
        window = MovingWindow(3)
        for value in (0.0, 50.0, 100.0):
            window.push(value)
        assert window.push(150.0) == pytest.approx(100.0)

    def test_constant_signal(self):
        window = MovingWindow(40)
        for _ in range(40):
            mean = window.push(7.25)
        assert mean == 7.25

    def test_partial_window_mean(self):
        window = MovingWindow(20)
        window.push(0.0)
        assert window.push(100.0) == pytest.approx(50.0)

    def test_capacity_one(self):
        window = MovingWindow(1)
        window.push(1.0)
        assert window.push(9.0) == 9.0

    def test_average_before_any_push(self):
        assert MovingWindow(5).average() is None

    def test_clear(self):
        window = MovingWindow(5)
        window.push(3.0)
        window.clear()
        assert len(window) == 0
        assert window.average() is None

    @given(
        capacity=st.integers(min_value=1, max_value=8),
        samples=st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=50),
    )
    def test_matches_bruteforce_mean(self, capacity, samples):
        window = MovingWindow(capacity)
        for i, sample in enumerate(samples):
            mean = window.push(sample)
            retained = samples[max(0, i + 1 - capacity) : i + 1]
            assert mean == pytest.approx(sum(retained) / len(retained), rel=1e-12, abs=1e-9)

    def test_rejects_nonpositive_capacity(self):
        with pytest.raises(ValueError):
            MovingWindow(0)
