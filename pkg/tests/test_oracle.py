import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import InputError, LimitsRefusal
from core.failover_model import DemandSequence
from offline.oracle import SearchLimits, brute_feasible, brute_max_prefix, brute_opt_mach, quantize


def seq(*sizes):
    return DemandSequence(tuple(sizes))


class TestOptMach:
    def test_two_halves(self):
        assert brute_opt_mach(seq(0.5, 0.5), 1.0) == 4
        assert brute_opt_mach(seq(0.5, 0.5), 2.0) == 2

    def test_zero_sizes(self):
        assert brute_opt_mach(seq(0.0, 0.0), 1.0) == 2
        assert brute_opt_mach(seq(0.0, 0.5, 0.0), 1.0) == 2

    def test_trivial_sizes(self):
        assert brute_opt_mach(seq(), 1.0) == 0
        assert brute_opt_mach(seq(0.3), 1.0) == 2

    def test_six_quarters_fit_on_four(self):
        assert brute_opt_mach(seq(*[0.25] * 6), 1.0) == 4

    def test_twelfth_grid_is_accepted(self):
        grid = [j / 12 for j in range(6)]
        assert brute_opt_mach(seq(*grid), 1.0) >= 3

    def test_refuses_beyond_limits(self):
        with pytest.raises(LimitsRefusal):
            brute_opt_mach(seq(*[0.1] * 9), 1.0)
        with pytest.raises(LimitsRefusal):
            brute_opt_mach(seq(*[0.2] * 6), 1.0, SearchLimits(node_budget=1))

    def test_quantize(self):
        assert quantize(0.25) == 250_000_000
        with pytest.raises(InputError):
            quantize(float("nan"))


class TestFeasible:
    def test_six_quarters_on_four_machines(self):
        assert brute_feasible(seq(*[0.25] * 6), 1.0, 4)

    def test_forced_pairs_block_the_rest(self):
        fixed = {0: (0, 1), 1: (0, 1), 2: (2, 3), 3: (2, 3)}
        assert brute_feasible(seq(*[0.25] * 4), 1.0, 4, fixed=fixed)
        assert not brute_feasible(seq(*[0.25] * 6), 1.0, 4, fixed=fixed)
        assert not brute_feasible(seq(*[0.25] * 5), 1.0, 4, fixed=fixed)

    def test_zero_sizes_after_backtracking(self):
        assert brute_feasible(seq(0.0, 0.0, 0.5, 0.5), 1.0, 4)
        assert not brute_feasible(seq(0.0, 0.0, 0.5, 0.5), 1.0, 3)

    def test_single_machine(self):
        assert not brute_feasible(seq(0.1), 1.0, 1)

    def test_fixed_index_must_exist(self):
        with pytest.raises(InputError):
            brute_feasible(seq(0.1), 1.0, 4, fixed={3: (0, 1)})


class TestPrefix:
    def test_zero_sizes_extend_a_full_prefix(self):
        prefix = brute_max_prefix(seq(0.0, 0.5, 0.0, 0.5), 1.0, 3)
        assert prefix.length == 3
        assert prefix.utilization == pytest.approx(0.5)

    def test_adversary_instance(self):
        prefix = brute_max_prefix(seq(0.1, 0.1, 0.9, 0.9), 1e6, 4)
        assert prefix.length == 4
        assert prefix.utilization == pytest.approx(2.0)

    def test_separated_small_demands_block_the_unit(self):
        prefix = brute_max_prefix(seq(0.1, 0.1, 1.0), 1e6, 4, fixed={0: (0, 1), 1: (2, 3)})
        assert prefix.length == 2
        assert brute_max_prefix(seq(0.1, 0.1, 1.0), 1e6, 4).length == 3

    def test_empty(self):
        prefix = brute_max_prefix(seq(), 1.0, 4)
        assert (prefix.length, prefix.utilization) == (0, 0.0)


SIZES = st.lists(st.sampled_from([j / 20 for j in range(11)]), min_size=1, max_size=5)
BUDGET = st.sampled_from([1.0, 1.3, 2.0])


@settings(max_examples=40, deadline=None)
@given(SIZES, BUDGET, st.integers(2, 10))
def test_feasibility_agrees_with_minimum(sizes, B, m):
    assert brute_feasible(seq(*sizes), B, m) == (brute_opt_mach(seq(*sizes), B) <= m)


@settings(max_examples=40, deadline=None)
@given(SIZES, BUDGET, st.sampled_from([j / 20 for j in range(11)]))
def test_adding_a_demand_costs_at_most_two(sizes, B, extra):
    before = brute_opt_mach(seq(*sizes), B)
    after = brute_opt_mach(seq(*sizes, extra), B)
    assert before <= after <= before + 2


@settings(max_examples=40, deadline=None)
@given(SIZES, BUDGET, st.data())
def test_bounded_differences(sizes, B, data):
    i = data.draw(st.integers(0, len(sizes) - 1))
    other = list(sizes)
    other[i] = data.draw(st.sampled_from([j / 20 for j in range(11)]))
    assert abs(brute_opt_mach(seq(*sizes), B) - brute_opt_mach(seq(*other), B)) <= 2


def test_relabeling_machines_keeps_the_answer():
    rng = random.Random(4)
    for _ in range(10):
        sizes = [rng.choice([0.1, 0.2, 0.25, 0.4]) for _ in range(5)]
        fixed = {0: (0, 1)}
        relabeled = {0: (3, 2)}
        assert brute_feasible(seq(*sizes), 1.0, 4, fixed=fixed) == brute_feasible(seq(*sizes), 1.0, 4, fixed=relabeled)
