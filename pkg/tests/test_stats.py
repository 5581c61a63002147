"""Student-t tail probabilities checked against SciPy as an independent
oracle; the package's own implementation stays dependency-free."""

import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from probfusion.stats import (betainc_regularized, student_t_cdf,
                              student_t_sf)


class TestBetaincRegularized:
    def test_endpoints(self):
        assert betainc_regularized(2.0, 3.0, 0.0) == 0.0
        assert betainc_regularized(2.0, 3.0, 1.0) == 1.0

    def test_symmetric_half(self):
        # I_{1/2}(a, a) = 1/2 for any a.
        for a in (0.5, 1.0, 2.0, 7.5):
            assert betainc_regularized(a, a, 0.5) == pytest.approx(0.5,
                                                                   abs=1e-12)

    def test_matches_scipy_on_grid(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = rng.uniform(0.1, 50.0)
            b = rng.uniform(0.1, 50.0)
            x = rng.uniform(0.0, 1.0)
            ours = betainc_regularized(a, b, x)
            ref = scipy.special.betainc(a, b, x)
            assert ours == pytest.approx(ref, abs=1e-10)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            betainc_regularized(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            betainc_regularized(1.0, -1.0, 0.5)


class TestStudentTCdf:
    def test_symmetry_at_zero(self):
        for dof in (1, 2, 5, 19, 100):
            assert student_t_cdf(0.0, dof) == pytest.approx(0.5, abs=1e-12)

    def test_antisymmetry(self):
        for t in (0.3, 1.0, 2.5, 7.0):
            assert student_t_cdf(t, 7) + student_t_cdf(-t, 7) == \
                pytest.approx(1.0, abs=1e-12)

    def test_infinite_arguments(self):
        assert student_t_cdf(math.inf, 5) == 1.0
        assert student_t_cdf(-math.inf, 5) == 0.0
        assert student_t_sf(math.inf, 5) == 0.0
        assert student_t_sf(-math.inf, 5) == 1.0

    def test_cauchy_special_case(self):
        # dof = 1 is the standard Cauchy: CDF(1) = 3/4.
        assert student_t_cdf(1.0, 1) == pytest.approx(0.75, abs=1e-10)

    def test_matches_scipy_dense_grid(self):
        ts = np.linspace(-8, 8, 81)
        for dof in (1, 2, 3, 5, 10, 19, 30, 100):
            for t in ts:
                ours = student_t_cdf(float(t), dof)
                ref = scipy.stats.t.cdf(t, dof)
                assert ours == pytest.approx(ref, abs=1e-8)

    def test_sf_matches_scipy_far_tail(self):
        # Direct tail evaluation must hold where 1 - CDF would cancel.
        for t in (5.0, 10.0, 20.0, 40.0):
            for dof in (3, 10, 19):
                ours = student_t_sf(t, dof)
                ref = scipy.stats.t.sf(t, dof)
                assert ours == pytest.approx(ref, rel=1e-8)

    def test_invalid_dof(self):
        with pytest.raises(ValueError):
            student_t_cdf(1.0, 0)


class TestRandomSampleOracle:
    def test_twenty_random_t_statistics(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            t = float(rng.uniform(-6, 6))
            dof = int(rng.integers(2, 60))
            assert student_t_sf(t, dof) == \
                pytest.approx(scipy.stats.t.sf(t, dof), abs=1e-6)
