"""Limit estimation, acceleration ratios and equivalence."""

import numpy as np
import pytest

from jungckit import (
    JungckConfig,
    LengthMismatchError,
    NotConvergingError,
    Operator,
    Schedule,
    SequenceTooShortError,
    acceleration_ratio,
    accelerate_sequence,
    build_convergence_report,
    estimate_limit,
    limit_identity_residuals,
    make_operator_pair,
    run,
    sequences_equivalent,
)


def geometric(limit, coeff, ratio, length):
    return np.array([limit + coeff * ratio**n for n in range(length)])


class TestEstimateLimit:
    def test_constant_sequence(self):
        est = estimate_limit([4.0] * 8)
        assert est.value[0] == 4.0 and est.method == "last-term"

    def test_geometric_extrapolates_exactly(self):
        est = estimate_limit(geometric(3.0, 2.0, 0.5, 12))
        assert est.method == "extrapolation"
        assert est.value[0] == pytest.approx(3.0, abs=1e-12)

    def test_divergent_raises(self):
        with pytest.raises(NotConvergingError):
            estimate_limit(np.arange(15.0))

    def test_too_short(self):
        with pytest.raises(SequenceTooShortError):
            estimate_limit([1.0, 2.0, 3.0])

    def test_settled_sequence_prefers_last_term(self):
        seq = geometric(1.0, 1.0, 0.5, 80)  # tail fully converged in float64
        est = estimate_limit(seq)
        assert est.method == "last-term"
        assert est.value[0] == seq[-1]

    def test_recovers_limit_across_ratios(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            lim = rng.uniform(-10, 10)
            c = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
            r = rng.uniform(0.1, 0.9) * rng.choice([-1.0, 1.0])
            est = estimate_limit(geometric(lim, c, r, 10))
            assert abs(est.value[0] - lim) <= 1e-9 * (1 + abs(lim))

    def test_vector_sequences(self):
        seq = np.stack([geometric(1.0, 1.0, 0.5, 12), geometric(-2.0, 3.0, 0.3, 12)], axis=1)
        est = estimate_limit(seq)
        assert est.value == pytest.approx([1.0, -2.0], abs=1e-10)


class TestAccelerationRatio:
    def test_geometric_ratios_are_zero(self):
        raw = geometric(3.0, 2.0, 0.5, 10)
        accel, _ = accelerate_sequence(raw)
        ratios = acceleration_ratio(raw, accel, np.array([3.0]))
        assert all(r <= 1e-12 for r in ratios)

    def test_identity_acceleration_gives_ones(self):
        raw = geometric(1.0, 1.0, 0.5, 10)
        ratios = acceleration_ratio(raw, raw[:-2], np.array([1.0]))
        assert all(r == pytest.approx(1.0) for r in ratios)

    def test_two_mode_sequence(self):
        raw = np.array([1.0 + 0.7**n + 0.5 * 0.2**n for n in range(16)])
        accel, _ = accelerate_sequence(raw)
        ratios = acceleration_ratio(raw, accel, np.array([1.0]))
        assert ratios[10] < 0.05

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            acceleration_ratio([1.0, 2.0, 3.0, 4.0], [1.0], np.array([0.0]))

    def test_omits_trailing_entries_at_limit(self):
        raw = np.concatenate([geometric(2.0, 1.0, 0.5, 6), [2.0, 2.0, 2.0]])
        accel, _ = accelerate_sequence(raw)
        ratios = acceleration_ratio(raw, accel, np.array([2.0]))
        assert len(ratios) < len(accel)

    def test_scale_invariance(self):
        raw = geometric(1.0, 1.0, 0.6, 12) + 0.25 * 0.2 ** np.arange(12)
        accel, _ = accelerate_sequence(raw)
        base = acceleration_ratio(raw, accel, np.array([1.0]))
        for s in (2.0, 0.125, 3.7, -5.0):
            scaled = acceleration_ratio(s * raw, s * accel, np.array([s * 1.0]))
            assert scaled == pytest.approx(base[:len(scaled)], rel=1e-12)


class TestEquivalence:
    def test_identical_sequences(self):
        seq = geometric(3.0, 1.0, 0.5, 10)
        assert sequences_equivalent(seq, seq, tol=1e-9)

    def test_same_limit_different_rates(self):
        a = geometric(3.0, 1.0, 0.5, 40)
        b = geometric(3.0, 1.0, 0.9, 40)
        assert sequences_equivalent(a, b, tol=1e-6)

    def test_distinct_limits(self):
        a = geometric(0.0, 1.0, 0.5, 20)
        b = geometric(1.0, 1.0, 0.5, 20)
        assert not sequences_equivalent(a, b, tol=1e-6)

    def test_symmetry_and_reflexivity(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            la, lb = rng.uniform(-5, 5, size=2)
            a = geometric(la, 1.0, 0.4, 20)
            b = geometric(lb, 1.0, 0.7, 20)
            assert sequences_equivalent(a, a, tol=1e-9)
            assert sequences_equivalent(a, b, tol=1e-6) == sequences_equivalent(b, a, tol=1e-6)


class TestLimitIdentityResiduals:
    def contractive_trace(self, a, b, steps=80):
        rng = np.random.default_rng(47)
        raw = rng.normal(size=(3, 3))
        t = Operator.from_matrix(raw * (0.5 / np.linalg.norm(raw, 2)))
        s = Operator.from_matrix(rng.normal(size=(3, 3)) + 3 * np.eye(3))
        cfg = JungckConfig(pair=make_operator_pair(s, t), a=a, b=b,
                           z0=[1.0, -1.0, 2.0], steps=steps)
        return run(cfg)

    def test_zero_outer_blend_compares_limits(self):
        # a = 0 collapses the expression to L_z - L_y at every step
        tr = self.contractive_trace(Schedule.constant(0.0), Schedule.constant(0.6))
        res = limit_identity_residuals(tr)
        assert np.allclose(res, res[0])
        assert res[-1] <= 1e-6

    def test_contractive_config_residuals_shrink(self):
        tr = self.contractive_trace(Schedule.constant(0.5), Schedule.constant(0.5))
        res = limit_identity_residuals(tr)
        assert res[-1] <= 1e-8
        assert res[-1] <= res[0]

    def test_full_blend_tracks_power_images(self):
        # a = b = 1: the expression is L_z - t^n(y_n), which must vanish
        tr = self.contractive_trace(Schedule.constant(1.0), Schedule.constant(1.0))
        res = limit_identity_residuals(tr)
        assert res[-1] <= 1e-10


class TestConvergenceReport:
    def test_report_fields(self):
        raw = geometric(2.0, 1.0, 0.5, 20)
        accel, _ = accelerate_sequence(raw)
        report = build_convergence_report(raw, accel)
        assert report.estimated_limit[0] == pytest.approx(2.0, abs=1e-10)
        assert report.equivalent is True
        assert all(r == pytest.approx(0.5, rel=1e-6) for r in report.step_ratios[:10])
        assert report.accel_ratios[0] <= 1e-12
