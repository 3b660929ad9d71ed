import numpy as np
import pytest

from superbunch.correlator import (
    ComparisonReport,
    CorrAccumulator,
    batch_count,
    compare_curves,
    merge,
)
from superbunch.model import G2Curve


def test_batch_count():
    assert batch_count(1) == 1
    assert batch_count(19) == 1
    assert batch_count(100) == 10
    assert batch_count(200_000) == 100
    assert batch_count(10_000_000) == 100


class TestAccumulate:
    def test_single_sample_degenerate(self):
        acc = CorrAccumulator(np.array([0.0]))
        acc.accumulate(1.0, 1.0)
        curve = acc.finalize()
        assert curve.g2.tolist() == [1.0]
        assert curve.se.tolist() == [0.0]

    def test_constant_intensities_give_one(self):
        acc = CorrAccumulator(np.array([0.0]))
        for _ in range(100):
            acc.accumulate(2.0, 3.0)
        assert acc.finalize().g2[0] == pytest.approx(1.0, rel=1e-14)

    def test_thermal_single_mode_oracle(self):
        # I1 = I2 = |c|^2 with c a standard complex Gaussian: g2 = 2.
        rng = np.random.default_rng(7)
        m = 1_000_000
        c = rng.normal(size=m) + 1j * rng.normal(size=m)
        intensity = (np.abs(c) ** 2)[:, None]
        acc = CorrAccumulator(np.array([0.0]))
        edges = np.linspace(0, m, 101).astype(int)
        for lo, hi in zip(edges[:-1], edges[1:]):
            acc.accumulate_chunk(intensity[lo:hi], intensity[lo:hi])
            acc.close_batch()
        curve = acc.finalize()
        assert abs(curve.g2[0] - 2.0) < 4 * curve.se[0]
        assert curve.se[0] < 0.02

    def test_rejects_negative(self):
        acc = CorrAccumulator(np.array([0.0]))
        with pytest.raises(ValueError, match="non-negative"):
            acc.accumulate(-1.0, 1.0)

    def test_rejects_non_finite(self):
        acc = CorrAccumulator(np.array([0.0]))
        with pytest.raises(ValueError, match="finite"):
            acc.accumulate(np.nan, 1.0)

    def test_empty_finalize(self):
        with pytest.raises(ValueError, match="empty"):
            CorrAccumulator(np.array([0.0])).finalize()

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        I1 = rng.exponential(size=(500, 4))
        I2 = rng.exponential(size=(500, 4))
        dx = np.arange(4.0)
        a = CorrAccumulator(dx).accumulate_chunk(I1, I2).finalize()
        b = CorrAccumulator(dx).accumulate_chunk(7.3e4 * I1, 2.5e-3 * I2).finalize()
        assert np.allclose(a.g2, b.g2, rtol=1e-12)

    def test_g2_nonnegative_thermal_floor(self):
        rng = np.random.default_rng(11)
        m = 50_000
        c = rng.normal(size=(m, 1)) + 1j * rng.normal(size=(m, 1))
        intensity = np.abs(c) ** 2
        acc = CorrAccumulator(np.array([0.0]))
        for part in np.array_split(np.arange(m), 20):
            acc.accumulate_chunk(intensity[part], intensity[part])
            acc.close_batch()
        curve = acc.finalize()
        assert np.all(curve.g2 >= 0)
        assert np.all(curve.g2 >= 1 - 4 * curve.se)

    def test_se_scaling_with_m(self):
        # quadrupling M should halve se (within stochastic slack)
        def run(m, seed):
            rng = np.random.default_rng(seed)
            c = rng.normal(size=(m, 1)) + 1j * rng.normal(size=(m, 1))
            intensity = np.abs(c) ** 2
            acc = CorrAccumulator(np.array([0.0]))
            for part in np.array_split(np.arange(m), 40):
                acc.accumulate_chunk(intensity[part], intensity[part])
                acc.close_batch()
            return acc.finalize().se[0]

        se1 = run(40_000, 5)
        se2 = run(160_000, 6)
        assert se1 / se2 == pytest.approx(2.0, rel=0.2)


class TestMerge:
    def test_identity_element(self):
        dx = np.arange(3.0)
        rng = np.random.default_rng(0)
        x = CorrAccumulator(dx).accumulate_chunk(
            rng.exponential(size=(50, 3)), rng.exponential(size=(50, 3))
        )
        x.close_batch()
        merged = merge(CorrAccumulator(dx), x)
        assert merged.count == x.count
        assert np.array_equal(merged.s12, x.s12)
        assert np.array_equal(merged.finalize().g2, x.finalize().g2)

    def test_counts_add(self):
        dx = np.array([0.0])
        a = CorrAccumulator(dx).accumulate(1.0, 1.0)
        b = CorrAccumulator(dx).accumulate(2.0, 2.0).accumulate(3.0, 1.0)
        assert merge(a, b).count == 3

    def test_merge_equals_single_pass_bitwise(self):
        rng = np.random.default_rng(1)
        I1 = rng.exponential(size=(400, 5))
        I2 = rng.exponential(size=(400, 5))
        dx = np.arange(5.0)
        # single pass, batch boundary at 200
        whole = CorrAccumulator(dx)
        whole.accumulate_chunk(I1[:200], I2[:200])
        whole.close_batch()
        whole.accumulate_chunk(I1[200:], I2[200:])
        whole.close_batch()
        # two halves merged in order
        a = CorrAccumulator(dx)
        a.accumulate_chunk(I1[:200], I2[:200])
        a.close_batch()
        b = CorrAccumulator(dx)
        b.accumulate_chunk(I1[200:], I2[200:])
        b.close_batch()
        combo = merge(a, b)
        cw, cm = whole.finalize(), combo.finalize()
        assert np.array_equal(cw.g2, cm.g2)
        assert np.array_equal(cw.se, cm.se)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError, match="grid mismatch"):
            merge(CorrAccumulator(np.arange(3.0)), CorrAccumulator(np.arange(4.0)))

    def test_associative_fixed_order(self):
        rng = np.random.default_rng(2)
        dx = np.arange(2.0)
        accs = []
        for _ in range(3):
            acc = CorrAccumulator(dx)
            acc.accumulate_chunk(rng.exponential(size=(30, 2)), rng.exponential(size=(30, 2)))
            acc.close_batch()
            accs.append(acc)
        left = merge(merge(accs[0], accs[1]), accs[2]).finalize()
        right = merge(accs[0], merge(accs[1], accs[2])).finalize()
        assert np.allclose(left.g2, right.g2, rtol=1e-12)
        assert left.meta["realizations"] == right.meta["realizations"] == 90


class TestCompareCurves:
    def curve(self, g2, se, dx=None):
        g2 = np.asarray(g2, dtype=float)
        dx = np.arange(len(g2), dtype=float) if dx is None else dx
        return G2Curve(dx=dx, g2=g2, se=np.asarray(se, dtype=float))

    def test_identical_curves(self):
        a = self.curve([2.0, 1.5, 1.0], [0.01, 0.01, 0.01])
        b = self.curve([2.0, 1.5, 1.0], [0.0, 0.0, 0.0])
        rep = compare_curves(a, b)
        assert rep.max_abs_z == 0.0
        assert rep.rmse == 0.0
        assert rep.frac_above_2 == 0.0

    def test_identical_zero_se(self):
        a = self.curve([2.0, 1.0], [0.0, 0.0])
        rep = compare_curves(a, a)
        assert rep.max_abs_z == 0.0

    def test_constant_offset_flagged(self):
        a = self.curve([1.1, 1.1, 1.1], [0.01, 0.01, 0.01])
        b = self.curve([1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
        rep = compare_curves(a, b)
        assert rep.max_abs_z == pytest.approx(10.0, rel=1e-12)
        assert rep.frac_above_2 == 1.0

    def test_grid_mismatch(self):
        a = self.curve([1.0], [0.1], dx=np.array([0.0]))
        b = self.curve([1.0], [0.1], dx=np.array([1.0]))
        with pytest.raises(ValueError, match="grid mismatch"):
            compare_curves(a, b)

    def test_zero_se_nonzero_deviation(self):
        a = self.curve([1.0, 2.0], [0.0, 0.0])
        b = self.curve([1.0, 1.0], [0.0, 0.0])
        with pytest.raises(ValueError, match="zero se"):
            compare_curves(a, b)

    def test_report_text(self):
        a = self.curve([2.0], [0.1])
        b = self.curve([2.1], [0.0])
        text = compare_curves(a, b).to_text()
        assert "max|z|" in text and "rmse" in text
