import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc
from scipy.stats import binom

from ocsparse.priors import (
    GAUSSIAN,
    UNKNOWN,
    NoiseConfig,
    PriorConfig,
    cluster_max_support,
    correlation_threshold,
    erfc_inv,
    max_support_size,
    support_prior_log,
)


class TestSupportPriorLog:
    def test_empty_support(self):
        assert support_prior_log(0, 10, 0.3) == pytest.approx(10 * math.log(0.7))

    def test_symmetric_coin(self):
        assert support_prior_log(1, 2, 0.5) == pytest.approx(math.log(0.25))

    def test_matches_direct_product(self):
        got = support_prior_log(8, 800, 0.01)
        direct = math.log(0.01**8 * 0.99**792)
        assert got == pytest.approx(direct, rel=1e-12)

    @pytest.mark.parametrize("N", [1, 5, 12])
    @pytest.mark.parametrize("p", [0.01, 0.3, 0.5, 0.9])
    def test_mass_sums_to_one(self, N, p):
        total = sum(
            math.comb(N, s) * math.exp(support_prior_log(s, N, p))
            for s in range(N + 1)
        )
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_strictly_decreasing_below_half(self):
        vals = [support_prior_log(s, 20, 0.2) for s in range(21)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            support_prior_log(-1, 10, 0.1)
        with pytest.raises(ValueError):
            support_prior_log(11, 10, 0.1)


class TestMaxSupportSize:
    def test_half_tail_gives_ceil_mean(self):
        assert max_support_size(800, 0.01, 0.5) == math.ceil(800 * 0.01)
        assert max_support_size(100, 0.13, 0.5) == math.ceil(100 * 0.13)

    def test_definition_is_smallest_qualifying(self):
        N, p, eps = 800, 0.01, 0.01
        P = max_support_size(N, p, eps)
        sd = math.sqrt(2 * N * p * (1 - p))

        def tail(k):
            return 0.5 * erfc((k - N * p) / sd)

        assert tail(P) <= eps
        assert P == 0 or tail(P - 1) > eps

    def test_against_exact_binomial_tail(self):
        # normal approximation lands within one of the exact binomial answer
        N, p, eps = 800, 0.01, 0.01
        approx = max_support_size(N, p, eps)
        exact = next(k for k in range(N + 1) if binom.sf(k, N, p) <= eps)
        assert abs(approx - exact) <= 1

    def test_monotone_in_tolerance(self):
        assert max_support_size(800, 0.01, 0.001) >= max_support_size(800, 0.01, 0.01)

    def test_reference_value(self):
        assert max_support_size(800, 0.01, 0.01) == 15


class TestClusterMaxSupport:
    def test_reference_values(self):
        assert cluster_max_support(32, 0.01) == 2
        assert cluster_max_support(8, 0.01) == 1
        assert cluster_max_support(16, 0.01) == 2
        assert cluster_max_support(2, 0.1) == 2

    def test_floor_at_one(self):
        assert cluster_max_support(4, 1e-9) == 1

    def test_non_decreasing_in_length(self):
        vals = [cluster_max_support(L, 0.05) for L in range(1, 200)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_closed_form(self):
        for L, p in [(32, 0.01), (64, 0.05), (7, 0.2)]:
            raw = erfc_inv(0.01) * math.sqrt(2 * L * p * (1 - p)) + L * p
            assert cluster_max_support(L, p) == max(1, math.ceil(raw))


class TestCorrelationThreshold:
    def test_half_tail_is_zero(self):
        assert correlation_threshold(1.0, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_sqrt_scaling(self):
        k1 = correlation_threshold(1.0, 0.01)
        k4 = correlation_threshold(4.0, 0.01)
        assert k4 == pytest.approx(2 * k1, rel=1e-12)

    def test_three_sigma_default_tail(self):
        # 0.00135 is the standard-normal tail beyond three sigma
        assert correlation_threshold(1.0, 0.00135) == pytest.approx(3.0, abs=1e-3)

    def test_strictly_decreasing_in_tail(self):
        grid = [0.001, 0.01, 0.1, 0.3, 0.5]
        vals = [correlation_threshold(1.0, q) for q in grid]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestErfcInv:
    def test_center(self):
        assert erfc_inv(1.0) == pytest.approx(0.0, abs=1e-14)

    def test_round_trip(self):
        assert erfc_inv(erfc(1.5)) == pytest.approx(1.5, abs=1e-10)

    def test_reference_value(self):
        assert erfc_inv(0.01) == pytest.approx(1.8214, abs=1e-3)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=-3.0, max_value=3.0))
    def test_round_trip_property(self, x):
        # x-domain round trip only where erfc is well conditioned
        v = erfc(x)
        if not 0 < v < 2:
            return
        assert erfc_inv(v) == pytest.approx(x, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=-12, max_value=-0.01))
    def test_forward_of_inverse_relative(self, log10_v):
        # the contract direction: erfc(erfc_inv(v)) = v to high relative accuracy
        v = 10.0**log10_v
        assert erfc(erfc_inv(v)) == pytest.approx(v, rel=1e-10)

    def test_rejects_outside_domain(self):
        for v in (0.0, 2.0, -0.5, 2.5):
            with pytest.raises(ValueError):
                erfc_inv(v)


class TestConfigs:
    def test_prior_config_validation(self):
        PriorConfig(0.1, 1.0, GAUSSIAN)
        PriorConfig(0.1, 1.0, UNKNOWN)
        with pytest.raises(ValueError):
            PriorConfig(0.0, 1.0)
        with pytest.raises(ValueError):
            PriorConfig(1.0, 1.0)
        with pytest.raises(ValueError):
            PriorConfig(0.1, -1.0)
        with pytest.raises(ValueError):
            PriorConfig(0.1, 1.0, "laplace")

    def test_uniform_halfwidth_matches_variance(self):
        # complex square [-a,a]^2 has E|x|^2 = 2a^2/3
        cfg = PriorConfig(0.1, 2.5, UNKNOWN)
        a = cfg.halfwidth()
        assert 2 * a**2 / 3 == pytest.approx(2.5, rel=1e-12)

    def test_noise_config(self):
        nc = NoiseConfig(2.0, 0.01)
        assert nc.threshold() == pytest.approx(correlation_threshold(2.0, 0.01))
        with pytest.raises(ValueError):
            NoiseConfig(-1.0)
        with pytest.raises(ValueError):
            NoiseConfig(1.0, 0.6)
