"""Domain types and codecs: round trips, index maps, validation errors."""

import math

import numpy as np
import pytest

from ridm.core import (
    DemoFormatError,
    Demonstration,
    GainParams,
    RolloutRecord,
    TransitionDataset,
    decode_demonstration,
    decode_gain,
    decode_gains_text,
    encode_demonstration,
    encode_gains,
    format_float,
    gain_arrays,
    rollout_to_csv,
    wrap_angle,
)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


class TestWrapAngle:
    def test_identity_inside_range(self):
        for x in (0.0, 1.0, -1.0, 3.0, math.pi):
            assert wrap_angle(x) == pytest.approx(x, abs=1e-15)

    def test_boundary_maps_to_positive_pi(self):
        # the interval is (-pi, pi]: both endpoints land on +pi
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)

    def test_periodicity(self):
        rng = np.random.default_rng(7)
        xs = rng.uniform(-50, 50, size=200)
        w = wrap_angle(xs)
        assert np.all(w > -math.pi - 1e-12)
        assert np.all(w <= math.pi + 1e-12)
        # same point on the circle
        np.testing.assert_allclose(np.sin(w), np.sin(xs), atol=1e-9)
        np.testing.assert_allclose(np.cos(w), np.cos(xs), atol=1e-9)

    def test_known_values(self):
        assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
        assert wrap_angle(2 * math.pi) == pytest.approx(0.0, abs=1e-12)


class TestFormatFloat:
    def test_round_trip_exact(self):
        values = [0.1, -3.5, 2 / 3, 1e-17, 1e300, -0.0, 123456.789]
        for v in values:
            assert float(format_float(v)) == v

    def test_numpy_scalar_formats_as_plain_decimal(self):
        # numpy scalars must not leak their repr wrapper into files
        s = format_float(np.float64(0.1))
        assert s == "0.1"

    def test_shortest_representation(self):
        assert format_float(0.5) == "0.5"
        assert format_float(1.0) == "1.0"


# ---------------------------------------------------------------------------
# Demonstration
# ---------------------------------------------------------------------------


def make_demo(rows=5, joints=2, env_id="reacher2", dt=0.02):
    rng = np.random.default_rng(0)
    return Demonstration(
        env_id=env_id,
        dt=dt,
        states=rng.uniform(-math.pi, math.pi, size=(rows, joints)),
        source="scripted",
    )


class TestDemonstration:
    def test_rejects_short_trajectories(self):
        with pytest.raises(ValueError):
            Demonstration("dint1", 0.02, np.zeros((1, 1)))

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            Demonstration("dint1", 0.0, np.zeros((3, 1)))
        with pytest.raises(ValueError):
            Demonstration("dint1", -0.1, np.zeros((3, 1)))

    def test_rejects_non_finite(self):
        states = np.zeros((3, 1))
        states[1, 0] = np.nan
        with pytest.raises(ValueError):
            Demonstration("dint1", 0.02, states)

    def test_states_are_read_only(self):
        demo = make_demo()
        with pytest.raises(ValueError):
            demo.states[0, 0] = 99.0

    def test_round_trip_identity(self):
        demo = make_demo(rows=17, joints=3, env_id="reacher3")
        text = encode_demonstration(demo)
        back = decode_demonstration(text)
        assert back == demo
        # and the re-encoding is byte for byte identical
        assert encode_demonstration(back) == text

    def test_round_trip_survives_awkward_floats(self):
        states = np.array([[0.1, 1e-17], [2 / 3, -0.0], [1e3, -math.pi]])
        demo = Demonstration("reacher2", 0.02, states)
        back = decode_demonstration(encode_demonstration(demo))
        assert np.array_equal(back.states, states)

    def test_decode_reports_line_numbers(self):
        text = encode_demonstration(make_demo())
        lines = text.splitlines()
        lines[3] = "0.1 not-a-number"
        with pytest.raises(DemoFormatError, match="line 4"):
            decode_demonstration("\n".join(lines))

    def test_decode_reports_column_mismatch(self):
        text = encode_demonstration(make_demo(joints=2))
        lines = text.splitlines()
        lines[2] = "0.5"
        with pytest.raises(DemoFormatError, match="line 3"):
            decode_demonstration("\n".join(lines))

    def test_decode_rejects_missing_header(self):
        with pytest.raises(DemoFormatError, match="line 1"):
            decode_demonstration("0.0 0.0\n0.1 0.1\n")

    def test_decode_rejects_non_finite_rows(self):
        text = "#ridm-demo v1 env=dint1 dt=0.02 joints=1 source=x\n0.0\nnan\n"
        with pytest.raises(DemoFormatError, match="line 3"):
            decode_demonstration(text)

    def test_decode_accepts_bytes(self):
        demo = make_demo()
        assert decode_demonstration(encode_demonstration(demo).encode()) == demo


# ---------------------------------------------------------------------------
# GainParams
# ---------------------------------------------------------------------------


class TestGainParams:
    @pytest.mark.parametrize(
        "scheme,terms,joints,expected",
        [
            ("local", "p", 1, 1),
            ("local", "pid", 2, 6),
            ("local", "pd", 3, 6),
            ("global", "pid", 7, 3),
            ("global", "p", 2, 1),
        ],
    )
    def test_dimension(self, scheme, terms, joints, expected):
        params = GainParams(scheme, terms, joints, np.zeros(expected))
        assert params.dimension == expected

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError, match="length"):
            GainParams("local", "pid", 2, np.zeros(5))

    def test_rejects_unknown_scheme_or_terms(self):
        with pytest.raises(ValueError):
            GainParams("mixed", "pid", 1, np.zeros(3))
        with pytest.raises(ValueError):
            GainParams("local", "pi", 1, np.zeros(2))

    def test_local_layout_is_joint_major(self):
        # joint 1, derivative term of "pid" lives at flat index 1*3 + 2 = 5
        logs = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 2.0])
        params = GainParams("local", "pid", 2, logs)
        assert decode_gain(params, 1, 2) == pytest.approx(100.0)
        assert decode_gain(params, 0, 2) == pytest.approx(1.0)

    def test_global_shares_gains_across_joints(self):
        params = GainParams("global", "pd", 4, np.array([1.0, -1.0]))
        for j in range(4):
            assert decode_gain(params, j, 0) == pytest.approx(10.0)
            assert decode_gain(params, j, 1) == pytest.approx(0.1)

    def test_decoded_gains_always_positive(self):
        rng = np.random.default_rng(3)
        params = GainParams("local", "pid", 3, rng.normal(0, 5, size=9))
        kp, ki, kd = gain_arrays(params)
        assert np.all(kp > 0) and np.all(ki > 0) and np.all(kd > 0)

    def test_gain_arrays_zero_for_absent_terms(self):
        params = GainParams("local", "p", 2, np.array([1.0, 0.0]))
        kp, ki, kd = gain_arrays(params)
        np.testing.assert_allclose(kp, [10.0, 1.0])
        assert np.all(ki == 0.0)
        assert np.all(kd == 0.0)

    def test_pd_maps_second_letter_to_derivative(self):
        params = GainParams("local", "pd", 1, np.array([0.0, 1.0]))
        kp, ki, kd = gain_arrays(params)
        assert kp[0] == pytest.approx(1.0)
        assert ki[0] == 0.0
        assert kd[0] == pytest.approx(10.0)

    def test_index_bounds_checked(self):
        params = GainParams("local", "p", 2, np.zeros(2))
        with pytest.raises(IndexError):
            decode_gain(params, 2, 0)
        with pytest.raises(IndexError):
            decode_gain(params, 0, 1)

    def test_text_round_trip(self):
        params = GainParams("local", "pid", 2, np.array([0.1, -1.5, 2 / 3, 0.0, 1e-8, 1.99]))
        back = decode_gains_text(encode_gains(params))
        assert back.scheme == params.scheme
        assert back.terms == params.terms
        assert back.joint_count == params.joint_count
        assert np.array_equal(back.log_gains, params.log_gains)


# ---------------------------------------------------------------------------
# RolloutRecord / TransitionDataset
# ---------------------------------------------------------------------------


def make_rollout(steps=4, joints=2, seed=1):
    rng = np.random.default_rng(seed)
    return RolloutRecord.from_steps(
        states=rng.normal(size=(steps + 1, joints)),
        actions=rng.normal(size=(steps, joints)),
        rewards=rng.normal(size=steps),
    )


class TestRolloutRecord:
    def test_cumulative_is_ascending_sum(self):
        record = make_rollout(steps=50)
        total = 0.0
        for r in record.rewards:
            total += float(r)
        assert record.cumulative_reward == total

    def test_rejects_inconsistent_cumulative(self):
        with pytest.raises(ValueError):
            RolloutRecord(
                states=np.zeros((3, 1)),
                actions=np.zeros((2, 1)),
                rewards=np.array([1.0, 2.0]),
                cumulative_reward=3.5,
            )

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            RolloutRecord.from_steps(
                states=np.zeros((3, 1)), actions=np.zeros((3, 1)), rewards=np.zeros(2)
            )

    def test_csv_layout(self):
        record = make_rollout(steps=3, joints=2)
        lines = rollout_to_csv(record).splitlines()
        assert lines[0] == "t,s_0,s_1,a_0,a_1,r"
        assert len(lines) == 1 + 3 + 1
        # final row: terminal state with empty action and reward cells
        final = lines[-1].split(",")
        assert final[0] == "3"
        assert final[3] == "" and final[4] == "" and final[5] == ""

    def test_csv_values_round_trip(self):
        record = make_rollout(steps=5, joints=1)
        lines = rollout_to_csv(record).splitlines()
        for t in range(5):
            cells = lines[1 + t].split(",")
            assert float(cells[1]) == record.states[t, 0]
            assert float(cells[2]) == record.actions[t, 0]
            assert float(cells[3]) == record.rewards[t]


class TestTransitionDataset:
    def test_from_rollout_aligns_triples(self):
        record = make_rollout(steps=6, joints=2)
        ds = TransitionDataset.from_rollout(record)
        assert len(ds) == 6
        assert np.array_equal(ds.states, record.states[:-1])
        assert np.array_equal(ds.next_states, record.states[1:])
        assert np.array_equal(ds.actions, record.actions)

    def test_action_ranges_match_data(self):
        ds = TransitionDataset(
            states=np.zeros((3, 2)),
            actions=np.array([[1.0, -5.0], [2.0, 0.0], [-1.0, 3.0]]),
            next_states=np.zeros((3, 2)),
        )
        ranges = ds.action_ranges
        np.testing.assert_allclose(ranges[0], [-1.0, 2.0])
        np.testing.assert_allclose(ranges[1], [-5.0, 3.0])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            TransitionDataset(
                states=np.zeros((3, 2)), actions=np.zeros((3, 1)), next_states=np.zeros((3, 2))
            )

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            TransitionDataset(
                states=np.zeros((0, 2)), actions=np.zeros((0, 2)), next_states=np.zeros((0, 2))
            )
