"""Fold assignment, aggregation, and the paired t-test machinery.

The two-sided tail probability is checked against numerical quadrature of
the t density (an independent oracle), not against its own closed form.
"""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from chunkbench.evaluation import (
    FLAG_SINGLETON_STD,
    FoldAssignment,
    SplitMix64,
    TTestResult,
    aggregate,
    kfold_split,
    paired_t_test,
    regularized_incomplete_beta,
    t_tail_probability,
)


# Oracle: integrate the t density numerically and double the upper tail.

def _tail_by_quadrature(t: float, df: int) -> float:
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    pdf = lambda x: c * (1.0 + x * x / df) ** (-(df + 1) / 2)
    tail, _ = integrate.quad(pdf, abs(t), math.inf)
    return 2.0 * tail


class TestTailProbability:
    def test_matches_quadrature_grid(self):
        worst = 0.0
        for df in range(1, 31):
            for i in range(21):
                t = 0.5 * i
                got = t_tail_probability(t, df)
                want = _tail_by_quadrature(t, df)
                worst = max(worst, abs(got - want))
                assert got == pytest.approx(want, abs=1e-4), (t, df)
        assert worst < 1e-7  # implementation is far tighter than the bound

    def test_frozen_critical_value(self):
        # Two-sided tail at the classic 5% critical point for 4 dof.
        assert t_tail_probability(2.776, 4) == pytest.approx(0.050, abs=5e-4)

    def test_t_zero_is_one(self):
        for df in (1, 5, 29):
            assert t_tail_probability(0.0, df) == 1.0

    def test_symmetry_in_sign(self):
        assert t_tail_probability(-1.7, 6) == t_tail_probability(1.7, 6)

    def test_monotone_decreasing_in_magnitude(self):
        vals = [t_tail_probability(t, 7) for t in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)]
        assert vals == sorted(vals, reverse=True)
        assert all(0.0 <= v <= 1.0 for v in vals)

    def test_infinite_t(self):
        assert t_tail_probability(math.inf, 3) == 0.0

    def test_df_validation(self):
        with pytest.raises(ValueError):
            t_tail_probability(1.0, 0)


class TestIncompleteBeta:
    def test_boundary_values(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0

    def test_uniform_case(self):
        # I_x(1,1) = x exactly.
        for x in (0.1, 0.35, 0.9):
            assert regularized_incomplete_beta(1.0, 1.0, x) == pytest.approx(x, abs=1e-12)

    def test_symmetry_identity(self):
        # I_x(a,b) = 1 - I_{1-x}(b,a).
        for a, b, x in ((2.5, 1.5, 0.3), (0.5, 0.5, 0.7), (4.0, 2.0, 0.55)):
            lhs = regularized_incomplete_beta(a, b, x)
            rhs = 1.0 - regularized_incomplete_beta(b, a, 1.0 - x)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_against_quadrature(self):
        for a, b in ((0.5, 0.5), (1.0, 3.0), (2.5, 2.5), (5.0, 1.5)):
            bnorm = math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
            for x in (0.05, 0.3, 0.5, 0.8, 0.95):
                num, _ = integrate.quad(
                    lambda u: u ** (a - 1) * (1 - u) ** (b - 1), 0.0, x)
                assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                    num / bnorm, abs=1e-9), (a, b, x)


class TestPairedTTest:
    def test_frozen_example(self):
        # Differences [2, 0, 1, 3, -1]: mean 1, sd sqrt(2.5), t = sqrt(2).
        r = paired_t_test([2.0, 0.0, 1.0, 3.0, -1.0], [0.0] * 5)
        assert r.t == pytest.approx(1.4142, abs=1e-3)
        assert r.p == pytest.approx(0.2302, abs=1e-3)
        assert r.df == 4
        assert r.degenerate is False

    def test_pairing_is_positional(self):
        r1 = paired_t_test([3.0, 1.0, 2.0], [1.0, 1.0, 1.0])
        r2 = paired_t_test([2.0, 0.0, 1.0], [0.0, 0.0, 0.0])
        assert r1.t == pytest.approx(r2.t, abs=1e-12)
        assert r1.p == pytest.approx(r2.p, abs=1e-12)

    def test_zero_sd_zero_mean(self):
        r = paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.t == 0.0 and r.p == 1.0 and r.degenerate is False

    def test_zero_sd_nonzero_mean_is_degenerate(self):
        r = paired_t_test([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])
        assert r.degenerate is True
        assert math.isinf(r.t) and r.t > 0
        assert r.p == 0.0
        r = paired_t_test([0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
        assert r.degenerate is True and r.t < 0

    def test_requires_two_pairs_and_equal_lengths(self):
        with pytest.raises(ValueError):
            paired_t_test([1.0], [2.0])
        with pytest.raises(ValueError):
            paired_t_test([1.0, 2.0], [1.0])

    def test_sign_convention(self):
        # First sample larger -> positive t.
        r = paired_t_test([5.0, 6.0, 7.5], [1.0, 2.0, 3.0])
        assert r.t > 0

    def test_result_carries_pairing_label(self):
        r = paired_t_test([1.0, 2.0], [2.0, 1.0], pairing="per_question")
        assert r.pairing == "per_question"
        with pytest.raises(ValueError):
            paired_t_test([1.0, 2.0], [2.0, 1.0], pairing="per_universe")

    @given(st.lists(st.floats(min_value=-50, max_value=50), min_size=2, max_size=12),
           st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=80, deadline=None)
    def test_p_in_unit_interval(self, diffs, seed):
        base = [0.0] * len(diffs)
        r = paired_t_test(diffs, base)
        assert 0.0 <= r.p <= 1.0


class TestKFold:
    def test_18_into_5_sizes(self):
        f = kfold_split(18, 5, seed=42)
        assert sorted(len(fold) for fold in f.folds) == [3, 3, 4, 4, 4]

    def test_partition_exact(self):
        f = kfold_split(18, 5, seed=42)
        seen = sorted(i for fold in f.folds for i in fold)
        assert seen == list(range(18))

    def test_deterministic_per_seed(self):
        assert kfold_split(18, 5, seed=7).folds == kfold_split(18, 5, seed=7).folds
        assert kfold_split(18, 5, seed=7).folds != kfold_split(18, 5, seed=8).folds

    def test_metadata(self):
        f = kfold_split(10, 3, seed=1)
        assert isinstance(f, FoldAssignment)
        assert f.k == 3 and f.seed == 1

    def test_k_equals_n(self):
        f = kfold_split(4, 4, seed=0)
        assert sorted(len(fold) for fold in f.folds) == [1, 1, 1, 1]

    def test_validation(self):
        with pytest.raises(ValueError):
            kfold_split(3, 4, seed=0)
        with pytest.raises(ValueError):
            kfold_split(3, 0, seed=0)

    @given(st.integers(min_value=1, max_value=60), st.integers(min_value=1, max_value=12),
           st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=100, deadline=None)
    def test_partition_property(self, n, k, seed):
        if k > n:
            k = n
        f = kfold_split(n, k, seed)
        assert sorted(i for fold in f.folds for i in fold) == list(range(n))
        sizes = [len(fold) for fold in f.folds]
        assert max(sizes) - min(sizes) <= 1


class TestSplitMix64:
    def test_known_stream_is_stable(self):
        a = [SplitMix64(123).next_u64() for _ in range(3)]
        b = [SplitMix64(123).next_u64() for _ in range(3)]
        assert a == b
        assert all(0 <= x < 2**64 for x in a)

    def test_seed_sensitivity(self):
        assert SplitMix64(1).next_u64() != SplitMix64(2).next_u64()


class TestAggregate:
    def test_mean_and_sample_std(self):
        mean, std = aggregate([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0])
        assert mean == pytest.approx(5.0, abs=1e-12)
        # Sample (n-1) standard deviation of this classic set.
        assert std == pytest.approx(math.sqrt(32.0 / 7.0), abs=1e-12)

    def test_singleton_flags(self):
        flags = set()
        mean, std = aggregate([3.5], flags)
        assert (mean, std) == (3.5, 0.0)
        assert flags == {FLAG_SINGLETON_STD}

    def test_empty_is_an_error(self):
        with pytest.raises(ValueError):
            aggregate([])


def test_ttest_result_is_frozen():
    r = TTestResult(metric="avg_l2", method_a="recursive", method_b="llm",
                    t=1.0, df=4, p=0.4, pairing="per_question")
    with pytest.raises(Exception):
        r.p = 0.5
