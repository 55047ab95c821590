import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from analysis.convergence import (deficiency_statistics, empirical_spec, estimate_c, greedy_monotone_matching,
                                  lb_identity_check, max_deficiency, proxy_opt, quantile_measure_bounds,
                                  reverse_deficiency, subadditivity_check)
from core.errors import InputError
from data_ingestion.instances import DiscreteSpec, PointMassSpec, UniformSpec


def exhaustive_matching(sources, targets):
    """Maximum matching with source <= target, solved as an assignment problem."""
    allowed = np.array([[1.0 if x <= y else 0.0 for y in targets] for x in sources])
    rows, cols = linear_sum_assignment(-allowed)
    return int(allowed[rows, cols].sum())


class TestDeficiency:
    def test_everything_fits(self):
        report = max_deficiency([0.1, 0.2], [0.3, 0.4])
        assert report.max_def == 0 and report.unmatched == 0

    def test_nothing_fits(self):
        report = max_deficiency([0.5, 0.6], [0.1, 0.2])
        assert report.deficiencies == (1, 2)
        assert report.unmatched == 2

    def test_one_left_over(self):
        report = max_deficiency([0.15, 0.5], [0.1, 0.2])
        assert (report.max_def, report.matched) == (1, 1)

    def test_reverse(self):
        report = reverse_deficiency([0.1, 0.2], [0.3, 0.4])
        assert report.unmatched == 2
        assert reverse_deficiency([0.5, 0.6], [0.1, 0.2]).unmatched == 0

    def test_lengths_must_agree(self):
        with pytest.raises(InputError):
            max_deficiency([0.1], [0.1, 0.2])

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 6).flatmap(lambda n: st.tuples(
        st.lists(st.sampled_from([j / 10 for j in range(6)]), min_size=n, max_size=n),
        st.lists(st.sampled_from([j / 10 for j in range(6)]), min_size=n, max_size=n))))
    def test_deficiency_counts_the_unmatched(self, pair):
        X, s = pair
        forward = max_deficiency(X, s)
        assert forward.matched == exhaustive_matching(X, s)
        assert forward.unmatched == max(0, forward.max_def)
        backward = reverse_deficiency(X, s)
        assert backward.matched == exhaustive_matching(s, X)
        assert greedy_monotone_matching(X, s) == forward.matched


class TestProxyOpt:
    def test_point_mass(self):
        assert proxy_opt(PointMassSpec(value=0.5), 2) == 4

    def test_t_must_be_positive(self):
        with pytest.raises(InputError):
            proxy_opt(PointMassSpec(value=0.5), 0)

    def test_unknown_method(self):
        with pytest.raises(InputError):
            proxy_opt(PointMassSpec(value=0.5), 2, method="guess")

    def test_offline_min_is_an_upper_bound(self):
        spec = UniformSpec(lo=0.0, hi=0.5)
        assert proxy_opt(spec, 6, method="offline-min") >= proxy_opt(spec, 6)

    def test_point_mass_ratio(self):
        series = estimate_c(PointMassSpec(value=0.5), 1.0, [4, 2], method="brute")
        frame = series.frame()
        assert list(frame["T"]) == [2, 4]
        assert series.c_estimate == pytest.approx(2.0)
        assert frame["diff"].iloc[-1] == pytest.approx(0.0)


class TestIdentities:
    @pytest.mark.parametrize("T, n", [(1, 4), (2, 4), (3, 6)])
    def test_lower_bound(self, T, n):
        check = lb_identity_check(UniformSpec(lo=0.0, hi=0.5), 1.0, T, n)
        assert check["holds"]

    def test_lower_bound_range(self):
        with pytest.raises(InputError):
            lb_identity_check(UniformSpec(lo=0.0, hi=0.5), 1.0, 5, 4)

    @pytest.mark.parametrize("J1, J2", [([0.5], [0.5]), ([0.25, 0.25], [0.25] * 3), ([0.1, 0.4], [0.3])])
    def test_subadditivity(self, J1, J2):
        assert subadditivity_check(J1, J2, 1.0)

    @pytest.mark.parametrize("spec", [UniformSpec(lo=0.0, hi=0.5), PointMassSpec(value=0.3),
                                      DiscreteSpec(values=[0.1, 0.4], weights=[0.3, 0.7])])
    @pytest.mark.parametrize("T", [1, 5, 16])
    def test_quantile_measure_bounds(self, spec, T):
        assert quantile_measure_bounds(spec, T)["holds"]

    def test_empirical_spec(self):
        spec = empirical_spec([0.2, 0.4])
        assert spec.weights == [0.5, 0.5]
        with pytest.raises(InputError):
            empirical_spec([])


class TestStatistics:
    def test_point_mass_has_no_deficiency(self):
        stats = deficiency_statistics(PointMassSpec(value=0.3), 64, trials=5, seed=1)
        assert stats["mean_max_def"] == 0.0

    def test_uniform_grows_like_root_t(self):
        stats = deficiency_statistics(UniformSpec(lo=0.0, hi=1.0), 1024, trials=100, seed=2)
        assert 0.0 < stats["normalized"] <= 3.0
        assert stats["quantiles"]["0.5"] <= stats["quantiles"]["0.99"]

    def test_needs_a_trial(self):
        with pytest.raises(InputError):
            deficiency_statistics(PointMassSpec(value=0.3), 4, trials=0)
