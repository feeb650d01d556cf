"""Randomized certificate sweep."""

import numpy as np
import pytest

from jungckit import ScanSpec, run_scan
from jungckit.scan import sample_config, sample_operators


class TestSampling:
    def test_operator_ranges_respected(self):
        spec = ScanSpec(count=1, dim=4, seed=1)
        rng = np.random.default_rng(0)
        for _ in range(10):
            s_op, t_op = sample_operators(rng, spec)
            svals = np.linalg.svd(s_op.matrix, compute_uv=False)
            lo, hi = spec.mu_range
            assert lo - 1e-9 <= svals[-1] <= hi + 1e-9
            tn = np.linalg.norm(t_op.matrix, 2)
            assert spec.t_norm_range[0] - 1e-9 <= tn <= spec.t_norm_range[1] + 1e-9

    def test_config_is_runnable(self):
        spec = ScanSpec(count=1, dim=3, steps=20, horizon=30, seed=2)
        cfg = sample_config(np.random.default_rng(2), spec)
        assert cfg.steps == 20 and cfg.dim == 3


class TestSweep:
    def test_sweep_is_sound_and_deterministic(self):
        spec = ScanSpec(count=20, dim=3, steps=120, horizon=120, seed=99)
        r1 = run_scan(spec)
        r2 = run_scan(spec)
        assert not r1.violations
        assert r1.certified_count >= 5
        assert [o.certified for o in r1.outcomes] == [o.certified for o in r2.outcomes]
        assert [o.final_ratio for o in r1.outcomes] == [o.final_ratio for o in r2.outcomes]

    def test_counts_partition(self):
        spec = ScanSpec(count=15, dim=3, steps=60, horizon=60, seed=4)
        result = run_scan(spec)
        counts = result.counts_by_property()
        assert counts["none"] + result.certified_count == spec.count

    def test_bad_spec_rejected(self):
        with pytest.raises(ValueError):
            ScanSpec(count=0)
        with pytest.raises(ValueError):
            ScanSpec(steps=2)
