import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from core.errors import ConfigurationError, InputError, ProtocolError
from data_ingestion.instances import (DiscreteSpec, MixtureSpec, PointMassSpec, UniformSpec, adversary_step,
                                      dominates, duplicate, make_rng, parse_distribution, quantile_instance,
                                      sample)


class TestSampling:
    def test_point_mass(self):
        assert sample(PointMassSpec(value=0.5), 3, seed=1).sizes == (0.5, 0.5, 0.5)

    def test_reproducible_per_seed_and_trial(self):
        spec = UniformSpec(lo=0.0, hi=0.5)
        assert sample(spec, 50, seed=7).sizes == sample(spec, 50, seed=7).sizes
        assert sample(spec, 50, seed=7, trial=1).sizes != sample(spec, 50, seed=7, trial=2).sizes
        assert make_rng(3, 4).random() == make_rng(3, 4).random()

    def test_uniform_mean_and_support(self):
        draws = np.asarray(sample(UniformSpec(lo=0.0, hi=0.5), 100_000, seed=11).sizes)
        assert abs(draws.mean() - 0.25) < 0.01
        assert draws.min() >= 0.0 and draws.max() <= 0.5
        assert np.all(np.round(draws, 9) == draws)

    def test_discrete_frequencies(self):
        draws = np.asarray(sample(DiscreteSpec(values=[0.2, 0.4], weights=[0.5, 0.5]), 10_000, seed=3).sizes)
        assert abs((draws == 0.4).mean() - 0.5) < 0.02

    def test_mixture_draws_from_components(self):
        spec = MixtureSpec(components=[PointMassSpec(value=0.1), UniformSpec(lo=0.3, hi=0.4)], weights=[0.5, 0.5])
        draws = sample(spec, 500, seed=5).sizes
        assert all(x == 0.1 or 0.3 <= x <= 0.4 for x in draws)

    def test_negative_count(self):
        with pytest.raises(InputError):
            sample(PointMassSpec(value=0.1), -1, seed=0)


class TestDistributions:
    def test_parse_each_kind(self):
        assert parse_distribution("uniform:0:0.5") == UniformSpec(lo=0.0, hi=0.5)
        assert parse_distribution("point:0.25") == PointMassSpec(value=0.25)
        assert parse_distribution("discrete:0.2,0.4:0.5,0.5").values == [0.2, 0.4]
        assert parse_distribution('json:{"kind": "point", "value": 0.3}') == PointMassSpec(value=0.3)

    @pytest.mark.parametrize("text", ["uniform:0.5:0.1", "gamma:1", "point:x", "discrete:0.1:0.7"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigurationError):
            parse_distribution(text)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            DiscreteSpec(values=[0.1, 0.2], weights=[0.5, 0.6])

    def test_support_outside_max_size(self):
        with pytest.raises(ConfigurationError):
            UniformSpec(lo=0.0, hi=0.6).check_support(0.5)
        UniformSpec(lo=0.0, hi=0.6).check_support(0.6)


class TestQuantiles:
    def test_uniform(self):
        assert quantile_instance(UniformSpec(lo=0.0, hi=1.0), 4).sizes == [0.0, 0.25, 0.5, 0.75]

    def test_point_mass(self):
        assert quantile_instance(PointMassSpec(value=0.3), 5).sizes == [0.3] * 5

    def test_discrete_inf_convention(self):
        spec = DiscreteSpec(values=[0.2, 0.4], weights=[0.5, 0.5])
        assert quantile_instance(spec, 4).sizes == [0.2, 0.2, 0.2, 0.4]
        assert spec.quantile(0.5) == 0.2
        assert spec.quantile(0.5 + 1e-6) == 0.4

    def test_mixture_of_atoms(self):
        spec = MixtureSpec(components=[PointMassSpec(value=0.4), PointMassSpec(value=0.2)], weights=[0.5, 0.5])
        assert quantile_instance(spec, 4).sizes == [0.2, 0.2, 0.2, 0.4]

    def test_continuous_mixture_has_no_quantile(self):
        spec = MixtureSpec(components=[UniformSpec(lo=0.0, hi=0.1), PointMassSpec(value=0.2)], weights=[0.5, 0.5])
        with pytest.raises(ConfigurationError):
            quantile_instance(spec, 4)

    def test_t_must_be_positive(self):
        with pytest.raises(InputError):
            quantile_instance(PointMassSpec(value=0.1), 0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 8),
           st.sampled_from([UniformSpec(lo=0.0, hi=0.5), UniformSpec(lo=0.1, hi=0.3),
                            DiscreteSpec(values=[0.1, 0.25, 0.5], weights=[0.25, 0.5, 0.25])]))
    def test_finer_grid_dominates_duplicates(self, T, k, spec):
        coarse = duplicate(quantile_instance(spec, T).demands, k)
        fine = quantile_instance(spec, k * T).sizes
        assert dominates(coarse.sizes, fine)
        assert fine == sorted(fine)


class TestAlgebra:
    def test_duplicate(self):
        assert duplicate(quantile_instance(PointMassSpec(value=0.3), 1).demands, 2).sizes == (0.3, 0.3)
        assert sorted(duplicate(sample(PointMassSpec(value=0.1), 2, seed=0), 3).sizes) == [0.1] * 6

    def test_dominates(self):
        assert dominates([0.1, 0.5], [0.2, 0.5])
        assert dominates([0.3, 0.1], [0.1, 0.3])
        assert not dominates([0.6, 0.1], [0.2, 0.5])
        with pytest.raises(InputError):
            dominates([0.1], [0.1, 0.2])

    def test_adversary_branches(self):
        assert adversary_step([(0, 1), (1, 0)], 0.1) == [0.9, 0.9]
        assert adversary_step([(0, 1), (2, 3)], 0.1) == [1.0]
        assert adversary_step([(0, 1), (1, 2)], 0.1) == [1.0]
        with pytest.raises(ProtocolError):
            adversary_step([(0, 1)], 0.1)
