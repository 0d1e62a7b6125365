import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sct.simulate import AlternativeSpec
from sct.verify import (
    CHECKS,
    BoundCheckResult,
    check_lemma_g,
    check_lemma_gtilde,
    check_normalizer_bound,
    g_constant,
    g_envelope,
    gtilde_constant,
    gtilde_envelope,
    ks_critical_value,
    ks_null_distribution,
    null_statistics,
    power_trend,
    run_checks,
)

# Cauchy quantile tan(pi (1/2 - p(x))) with p(x) = 2 (1 - Phi(x)), evaluated in closed form
CAUCHY_LHS_AT_3 = 117.89862855265177
CAUCHY_LHS_AT_001 = -39.886537306730055


class TestConstants:
    def test_cauchy_constant(self):
        assert g_constant(1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
        assert g_constant(1.0, 0.0) == pytest.approx(0.39894, abs=1e-5)

    def test_vanishes_at_minus_one(self):
        assert g_constant(1.5, -1.0) == 0.0
        assert g_constant(1.5, -1.0 + 1e-9) < 1e-5
        assert gtilde_constant(1.5, 1.0) == 0.0

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
    def test_symmetric_constants(self, alpha):
        assert g_constant(alpha, 0.0) == gtilde_constant(alpha, 0.0)
        x = np.array([0.02, 0.07])
        assert np.all(gtilde_envelope(alpha, 0.0, x) < 0)
        assert np.all(g_envelope(alpha, 0.0, x) > 0)

    @settings(max_examples=40)
    @given(st.floats(0.05, 1.95), st.floats(-1.0, 1.0))
    def test_mirror_constants(self, alpha, beta):
        assert g_constant(alpha, beta) == pytest.approx(gtilde_constant(alpha, -beta), rel=1e-14)


class TestUpperEnvelope:
    def test_cauchy_point(self):
        r = check_lemma_g(1.0, 0.0, [3.0])
        assert r.lhs[0] == pytest.approx(CAUCHY_LHS_AT_3, rel=1e-12)
        assert r.rhs[0] == pytest.approx(g_constant(1.0, 0.0) * 3 * math.exp(4.5), rel=1e-14)
        assert r.passed and r.margin[0] > 0

    @pytest.mark.parametrize("alpha,beta", [(0.5, 0.0), (1.1, 1.0), (1.5, 0.6), (1.9, -0.8)])
    def test_holds_on_default_grid(self, alpha, beta):
        r = check_lemma_g(alpha, beta)
        assert r.passed
        assert r.crossover == 3.0

    def test_reports_violation(self):
        # 1 - F(g(3)) = 0.00246 < p(3) = 0.0027 for this law, so the bound fails at x = 3
        r = check_lemma_g(0.9, -0.8)
        assert not r.passed
        assert r.first_violation == 3.0
        assert 3.0 < r.crossover <= 3.5

    def test_below_threshold_not_asserted(self):
        r = check_lemma_g(1.0, 0.0, [0.5, 1.0, 3.0, 4.0], x_star=3.0)
        assert list(r.asserted) == [False, False, True, True]

    @pytest.mark.parametrize("args", [(2.0, 0.0), (1.5, -1.0), (1.5, 1.1)])
    def test_rejects_parameters(self, args):
        with pytest.raises(ValueError):
            check_lemma_g(*args)

    def test_rejects_grid(self):
        with pytest.raises(ValueError):
            check_lemma_g(1.5, 0.0, [4.0, 3.0])


class TestLowerEnvelope:
    def test_cauchy_point(self):
        r = check_lemma_gtilde(1.0, 0.0, [0.01])
        assert r.lhs[0] == pytest.approx(CAUCHY_LHS_AT_001, rel=1e-12)
        assert r.rhs[0] == pytest.approx(-100 * g_constant(1.0, 0.0) * math.exp(0.00005), rel=1e-14)
        assert r.passed

    def test_beta_one_uses_dominating_envelope(self):
        r = check_lemma_gtilde(0.5, 1.0, [0.01, 0.02])
        assert np.all(r.rhs < 0)
        assert np.allclose(r.rhs, gtilde_envelope(0.5, 0.0, [0.01, 0.02]))

    def test_reports_violation_near_zero(self):
        # second-order tail term beats the normal slack as x -> 0
        r = check_lemma_gtilde(1.5, 0.0)
        assert not r.passed
        assert r.first_violation == pytest.approx(1e-3)
        assert r.crossover is None

    def test_rejects_grid(self):
        with pytest.raises(ValueError):
            check_lemma_gtilde(1.0, 0.0, [0.05, 0.2])


class TestNormalizerBound:
    def test_equal_weights_attain_bound(self):
        r = check_normalizer_bound([np.full(40, 1 / 40)], [0.5, 1.0])
        assert r.passed
        assert np.allclose(r.lhs, r.rhs)

    def test_skewed_weights(self):
        r = check_normalizer_bound([[0.97, 0.01, 0.01, 0.01]], [1.5])
        assert r.passed and r.lhs[0] >= 1.0

    def test_single_weight(self):
        r = check_normalizer_bound([[1.0]], [0.3, 1.0, 1.9])
        assert np.allclose(r.lhs, 1.0) and r.passed

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 60), st.integers(0, 2**32 - 1), st.floats(0.05, 1.99))
    def test_random_weights(self, n, seed, alpha):
        w = np.random.default_rng(seed).dirichlet(np.full(n, 0.3))
        w = np.maximum(w, 1e-300)
        w /= w.sum()
        assert check_normalizer_bound([w], [alpha]).passed


class TestBoundResult:
    def test_crossover_high(self):
        grid = np.array([1.0, 2.0, 3.0, 4.0])
        margin = np.array([-1.0, 1.0, -1.0, 1.0])
        r = BoundCheckResult("t", grid, margin, np.zeros(4), margin, grid >= 3, 3.0)
        assert r.crossover == 4.0
        assert r.first_violation == 3.0
        assert r.worst_margin == -1.0

    def test_crossover_low(self):
        grid = np.array([0.01, 0.02, 0.03])
        margin = np.array([1.0, 1.0, -1.0])
        r = BoundCheckResult("t", grid, margin, np.zeros(3), margin, grid <= 0.02, 0.02, asymptotic_end="low")
        assert r.passed
        assert r.crossover == 0.02


class TestKs:
    def test_critical_value(self):
        assert ks_critical_value(10_000) == pytest.approx(0.0163)

    @pytest.mark.parametrize("alpha,beta", [(1.0, 0.0), (0.5, 1.0)])
    def test_passes(self, alpha, beta):
        r = ks_null_distribution("sct", alpha, beta, n=40, draws=10_000)
        assert r.passed
        assert r.statistic > 0

    def test_single_pvalue_is_exact(self):
        r = ks_null_distribution("sct", 1.5, 0.6, n=1, draws=4000, seed=2)
        assert r.statistic < ks_critical_value(4000)

    def test_cct_method(self):
        t1 = null_statistics("cct", 1.7, 0.3, 5, 10, seed=4)
        t2 = null_statistics("sct", 1.0, 0.0, 5, 10, seed=4)
        assert np.allclose(t1, t2)

    def test_detects_wrong_law(self):
        # statistics of S(1.5, 0) tested against S(1.5, 0.6) must fail
        t = np.sort(null_statistics("sct", 1.5, 0.0, 40, 10_000))
        from sct.stable import StableParams, cdf

        f = cdf(StableParams.standard(1.5, 0.6), t)
        k = np.arange(1, t.size + 1)
        d = max(np.max(k / t.size - f), np.max(f - (k - 1) / t.size))
        assert d > ks_critical_value(t.size)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            null_statistics("fisher", 1.0, 0.0, 3, 3)


class TestPowerTrend:
    def test_increasing(self):
        r = power_trend(AlternativeSpec(0.43, 0.54), 1.0, 0.0, (40, 200, 1000), reps=500)
        assert r.in_power_regime
        assert r.increasing()

    def test_no_signal_is_flat(self):
        r = power_trend(AlternativeSpec(0.43, 0.0), 1.0, 0.0, (40, 200), reps=500)
        assert all(abs(p - 0.05) < 3 * math.sqrt(0.05 * 0.95 / 500) for p in r.powers)

    def test_near_boundary_alpha(self):
        spec = AlternativeSpec(0.45, 0.55)
        assert spec.in_power_regime(1.9)
        r = power_trend(spec, 1.9, 0.0, (40, 200, 1000), reps=300)
        assert r.nondecreasing()
        assert r.powers[-1] > r.powers[0]


class TestSuite:
    def test_registry(self):
        assert set(CHECKS) == {"lemma_g", "lemma_gtilde", "normalizer", "ks_null", "power_trend"}

    def test_quick_run(self):
        out = list(run_checks(["normalizer", "lemma_g"], quick=True))
        assert [name for name, _, _ in out] == ["normalizer", "lemma_g"]
        assert all(passed for _, _, passed in out)
