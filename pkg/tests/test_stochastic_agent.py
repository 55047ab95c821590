import pytest

from agents.stochastic_agent import (MatcherState, failover_stochastic, one_round, online_monotone_match, reserve,
                                     round_count)
from config import Config
from core.errors import InputError
from core.failover_model import Assignment, DemandSequence, ProblemParams, is_feasible
from data_ingestion.instances import UniformSpec, sample


def params(m, B=1.0):
    return ProblemParams(failover_capacity=B, machine_budget=m)


class TestMatcher:
    def test_best_fit(self):
        state = MatcherState([(0.5, 1), (0.3, 0)])
        assert online_monotone_match(state, 0.2) == 0
        assert online_monotone_match(state, 0.1) == 1
        assert online_monotone_match(state, 0.1) is None
        assert len(state) == 0

    def test_never_matches_a_smaller_slot(self):
        state = MatcherState([(0.3, 0)])
        assert online_monotone_match(state, 0.4) is None
        assert len(state) == 1

    def test_equal_sizes_go_to_the_lowest_slot_id(self):
        state = MatcherState([(0.3, 2), (0.3, 1)])
        assert online_monotone_match(state, 0.3) == 1

    def test_rejects_negative_sizes(self):
        with pytest.raises(InputError):
            online_monotone_match(MatcherState(), -0.1)


class TestRound:
    def test_reserve_grows_with_the_phase(self):
        assert reserve(1, 100, 1.0) == pytest.approx(Config.RESERVE_COEFFICIENT * 100 ** Config.RESERVE_EXPONENT)
        assert reserve(64, 100, 1.0) > reserve(16, 100, 1.0)

    def test_tiny_budget_stops_at_once(self):
        result = one_round(DemandSequence((0.3,)), 0, 4, 4, params(4))
        assert result.outcome == "stopped"
        assert result.consumed == 1
        assert result.placements == {0: (0, 1)}

    def test_budget_below_two(self):
        result = one_round(DemandSequence((0.3,)), 0, 1, 4, params(4))
        assert result.outcome == "stopped" and result.consumed == 0

    def test_exhausted_stream(self):
        assert one_round(DemandSequence((0.3,)), 1, 10, 10, params(10)).outcome == "complete"

    def test_unmatched_demand_without_room_fails(self, monkeypatch):
        monkeypatch.setattr(Config, "RESERVE_COEFFICIENT", 0.0)
        result = one_round(DemandSequence((0.3, 0.4)), 0, 5, 5, params(5), cst1=0.0)
        assert result.outcome == "failed"
        assert result.consumed == 1
        assert 1 not in result.placements

    def test_matched_demand_uses_the_template(self, monkeypatch):
        monkeypatch.setattr(Config, "RESERVE_COEFFICIENT", 0.0)
        result = one_round(DemandSequence((0.3, 0.2)), 0, 8, 8, params(8), cst1=0.0)
        assert result.outcome == "complete"
        assert result.unmatched == 0
        assert min(result.placements[1]) >= 2

    def test_machine_offset(self):
        result = one_round(DemandSequence((0.3,)), 0, 4, 10, params(10), machine_offset=6)
        assert result.placements == {0: (6, 7)}


class TestStochastic:
    @pytest.mark.parametrize("m, rounds", [(2, 3), (4, 5), (100, 17)])
    def test_round_count(self, m, rounds):
        assert round_count(m) == rounds

    def test_two_machines(self):
        run = failover_stochastic(DemandSequence((0.2, 0.2)), params(2))
        assert run.stop_index == 1
        assert run.assignment.machines == 2

    def test_short_stream_is_fully_placed(self):
        demands = DemandSequence((0.1, 0.2, 0.3, 0.4, 0.5))
        run = failover_stochastic(demands, params(50))
        assert run.stop_index == 5
        assert len(run.assignment) == 5
        assert run.rounds[-1].outcome == "complete"

    def test_uniform_stream_stays_within_budget(self):
        demands = sample(UniformSpec(lo=0.0, hi=0.5), 400, seed=3)
        run = failover_stochastic(demands, params(100))
        assert run.assignment.machines <= 100
        assert run.assignment.is_prefix()
        assert is_feasible(run.assignment, demands, params(100))

    def test_deterministic(self):
        demands = sample(UniformSpec(lo=0.0, hi=0.5), 200, seed=9)
        first = failover_stochastic(demands, params(60))
        second = failover_stochastic(demands, params(60))
        assert first.assignment == second.assignment
        assert first.stop_index == second.stop_index

    def test_needs_a_budget(self):
        with pytest.raises(InputError):
            failover_stochastic(DemandSequence((0.1,)), ProblemParams())


@pytest.mark.parametrize("m, seed", [(40, 1), (100, 7)])
def test_every_prefix_is_feasible(m, seed):
    demands = sample(UniformSpec(lo=0.0, hi=0.5), 4 * m, seed=seed)
    run = failover_stochastic(demands, params(m))
    assert set(run.assignment.placements) == set(range(run.stop_index))
    for p in range(run.stop_index + 1):
        prefix = Assignment.build({j: e for j, e in run.assignment.placements.items() if j < p},
                                  opened=run.assignment.opened)
        assert is_feasible(prefix, demands, params(m))
