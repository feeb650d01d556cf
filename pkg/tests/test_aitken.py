"""The gated delta-squared corrector."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jungckit import (
    AitkenWindow,
    GatePolicy,
    SequenceTooShortError,
    accelerate_sequence,
    aitken_correct,
)
from jungckit.errors import DimensionMismatchError


def geometric(limit, coeff, ratio, length):
    return np.array([limit + coeff * ratio**n for n in range(length)])


class TestWindowCorrection:
    def test_exact_on_geometric_window(self):
        # x_n = 3 + 2*(0.5)^n gives the window (5, 4, 3.5); correction lands on 3
        w = AitkenWindow.build([5.0], [4.0], [3.5])
        assert aitken_correct(w)[0] == pytest.approx(3.0, abs=1e-14)

    def test_constant_window_forces_gate_off(self):
        w = AitkenWindow.build([7.0], [7.0], [7.0])
        assert w.gate.tolist() == [0]
        assert aitken_correct(w)[0] == 7.0

    def test_harmonic_window_quotient(self):
        # (1, 1/2, 1/3): second difference 1/3, correction 1 - (1/4)/(1/3) = 1/4
        w = AitkenWindow.build([1.0], [0.5], [1.0 / 3.0])
        assert aitken_correct(w)[0] == pytest.approx(0.25, rel=1e-14)

    def test_floor_beats_policy(self):
        w = AitkenWindow.build([1.0], [1.0], [1.0 + 1e-15], policy=GatePolicy.always_on())
        assert w.gate.tolist() == [0]

    def test_mismatched_shapes_rejected(self):
        with pytest.raises(DimensionMismatchError):
            AitkenWindow.build([1.0, 2.0], [1.0], [1.0])

    def test_componentwise_gating(self):
        # first component constant (gated), second geometric (corrected)
        w = AitkenWindow.build([7.0, 5.0], [7.0, 4.0], [7.0, 3.5])
        out = aitken_correct(w)
        assert w.gate.tolist() == [0, 1]
        assert out[0] == 7.0
        assert out[1] == pytest.approx(3.0, abs=1e-14)


class TestAccelerateSequence:
    def test_exact_on_geometric(self):
        accel, gates = accelerate_sequence([5.0, 4.0, 3.5, 3.25])
        assert accel.ravel() == pytest.approx([3.0, 3.0], abs=1e-14)
        assert gates.tolist() == [[1], [1]]

    def test_always_off_is_identity(self):
        raw = np.array([[1.0, 2.0], [0.5, 1.5], [0.25, 1.25], [0.125, 1.125]])
        accel, gates = accelerate_sequence(raw, GatePolicy.always_off())
        assert np.array_equal(accel, raw[:2])
        assert not gates.any()

    def test_constant_sequence_gates_off(self):
        accel, gates = accelerate_sequence([1.0, 1.0, 1.0, 1.0], floor_scale=1e-12)
        assert np.array_equal(accel.ravel(), [1.0, 1.0])
        assert not gates.any()

    def test_too_short(self):
        with pytest.raises(SequenceTooShortError):
            accelerate_sequence([1.0, 2.0])

    @given(
        st.floats(min_value=-10, max_value=10),
        st.floats(min_value=0.1, max_value=10),
        st.floats(min_value=0.1, max_value=0.9),
        st.booleans(),
        st.booleans(),
    )
    @settings(max_examples=200, deadline=None)
    def test_exactness_property(self, limit, coeff, ratio, flip_c, flip_r):
        # every corrected term of L + c*r^n equals L, up to the gated tail
        c = -coeff if flip_c else coeff
        r = -ratio if flip_r else ratio
        raw = geometric(limit, c, r, 25)
        accel, _ = accelerate_sequence(raw)
        assert np.all(np.abs(accel.ravel() - limit) <= 1e-10 * (1 + abs(limit)))

    def test_gate_off_components_bit_identical(self):
        rng = np.random.default_rng(3)
        raw = rng.normal(size=(6, 3))
        accel, _ = accelerate_sequence(raw, GatePolicy.always_off())
        assert np.array_equal(accel, raw[:4]) and accel.tobytes() == raw[:4].tobytes()

    def test_finite_output_on_hostile_windows(self):
        # tiny and exactly-zero denominators, huge magnitudes
        cases = [
            [1.0, 1.0, 1.0],
            [1e300, -1e300, 1e300],
            [1.0, 1.0 + 5e-13, 1.0],
            [0.0, 0.0, 0.0],
            [1e-300, 2e-300, 4e-300],
        ]
        for s0, s1, s2 in cases:
            w = AitkenWindow.build([s0], [s1], [s2])
            assert np.isfinite(aitken_correct(w)).all()


class TestAccelerationEffect:
    def test_two_mode_sequence_ratio_shrinks(self):
        # dominant mode 0.7^n plus faster 0.2^n: corrected error must crush raw
        raw = np.array([1.0 + 0.7**n + 0.5 * 0.2**n for n in range(20)])
        accel, _ = accelerate_sequence(raw)
        ratios = np.abs(accel.ravel() - 1.0) / np.abs(raw[:-2] - 1.0)
        assert ratios[10] < 0.05
