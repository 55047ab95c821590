import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Literal, Optional, Tuple

from config import Config
from core.errors import InputError, InvariantBreach
from core.failover_model import Assignment, DemandSequence, Edge, ProblemParams, utilization
from offline.offline_min import Template, default_epsilon, offline_min_failover

logger = logging.getLogger(__name__)

Outcome = Literal["running", "stopped", "failed", "complete"]


class MatcherState:
    """Open template slots ordered by (size, slot id)."""

    def __init__(self, slots: Iterable[Tuple[float, int]] = ()):
        self.open_slots: List[Tuple[float, int]] = sorted(slots)

    def __len__(self) -> int:
        return len(self.open_slots)


def online_monotone_match(state: MatcherState, size: float) -> Optional[int]:
    """Best fit: consume the smallest open slot of size >= `size` (ties by slot id)."""
    if size < 0 or math.isnan(size):
        raise InputError(f"cannot match a demand of size {size}")
    i = bisect.bisect_left(state.open_slots, (size, -1))
    if i == len(state.open_slots):
        return None
    return state.open_slots.pop(i)[1]


@dataclass
class RoundState:
    budget: int
    opened: int = 0
    phase: int = 0
    template: Optional[Template] = None
    outcome: Outcome = "running"

    @property
    def n_k(self) -> int:
        return 2 ** self.phase


def reserve(n_k: int, m: int, cst1: float) -> float:
    """cst1 sqrt(n_k) ln(n_k)^(3/4) + c m^e, the slack a phase must leave unopened."""
    log_term = math.log(n_k) ** 0.75 if n_k > 1 else 0.0
    return cst1 * math.sqrt(n_k) * log_term + Config.RESERVE_COEFFICIENT * m ** Config.RESERVE_EXPONENT


@dataclass
class RoundResult:
    placements: Dict[int, Edge] = field(default_factory=dict)
    consumed: int = 0
    outcome: Outcome = "stopped"
    opened: int = 0
    phases: int = 0
    unmatched: int = 0


def one_round(stream: DemandSequence, start: int, budget: int, m: int, params: ProblemParams,
              cst1: float = Config.DEFAULT_CST1, machine_offset: int = 0) -> RoundResult:
    """One learn-and-pack round over stream[start:], opening at most `budget` machines.

    Demand indices in the result are global stream positions; machines start at `machine_offset`.
    """
    result = RoundResult()
    if budget < 2:
        return result
    if start >= len(stream):
        result.outcome = "complete"
        return result

    state = RoundState(budget=budget)
    B = params.failover_capacity
    cursor = start
    result.placements[cursor] = (machine_offset, machine_offset + 1)
    state.opened = 2
    cursor += 1

    while True:
        seen = DemandSequence(stream.sizes[start:start + state.n_k])
        offline = offline_min_failover(seen, B, epsilon=default_epsilon(state.n_k))
        state.template = Template.from_assignment(offline.assignment, seen)
        slack = state.opened + state.template.machines + reserve(state.n_k, m, cst1)
        if slack > state.budget:
            state.outcome = "stopped"
            logger.debug(f"Phase {state.phase}: stop ({slack:.1f} > {state.budget})")
            break

        base = machine_offset + state.opened
        state.opened += state.template.machines
        slot_edges = [(u + base, v + base) for (u, v) in (s.edge for s in state.template.slots)]
        matcher = MatcherState((s.size, i) for i, s in enumerate(state.template.slots))
        logger.debug(f"Phase {state.phase}: opened template of {state.template.machines} machines, {len(matcher)} slots")

        for _ in range(state.n_k):
            if cursor >= len(stream):
                state.outcome = "complete"
                break
            size = stream[cursor]
            slot = online_monotone_match(matcher, size)
            if slot is not None:
                if size > state.template.slots[slot].size:
                    raise InvariantBreach(f"demand {cursor} ({size}) matched to a smaller slot")
                result.placements[cursor] = slot_edges[slot]
            else:
                if state.opened + 2 > state.budget:
                    state.outcome = "failed"
                    break
                u = machine_offset + state.opened
                result.placements[cursor] = (u, u + 1)
                state.opened += 2
                result.unmatched += 1
            cursor += 1
        if state.outcome != "running":
            break
        state.phase += 1

    result.consumed = cursor - start
    result.outcome = state.outcome
    result.opened = state.opened
    result.phases = state.phase + 1
    return result


@dataclass(frozen=True)
class StochasticRun:
    assignment: Assignment
    stop_index: int
    utilization: float
    rounds: Tuple[RoundResult, ...] = ()


def round_count(m: int) -> int:
    return max(1, math.ceil(math.log(m) / math.log(4.0 / 3.0)))


def failover_stochastic(stream: DemandSequence, params: ProblemParams,
                        cst1: float = Config.DEFAULT_CST1) -> StochasticRun:
    m = params.machine_budget
    if m is None or m < 2:
        raise InputError("the stochastic algorithm needs a machine budget m >= 2")
    stream.validate(params)
    placements: Dict[int, Edge] = {}
    rounds: List[RoundResult] = []
    cursor, opened = 0, 0
    for r in range(round_count(m)):
        outcome = one_round(stream, cursor, m - opened, m, params, cst1, machine_offset=opened)
        rounds.append(outcome)
        placements.update(outcome.placements)
        cursor += outcome.consumed
        opened += outcome.opened
        logger.info(f"Round {r}: {outcome.outcome}, {outcome.consumed} demands, {outcome.opened} machines ({opened}/{m} used)")
        if outcome.outcome == "complete":
            break

    assignment = Assignment.build(placements, opened=range(opened))
    return StochasticRun(assignment, cursor, utilization(assignment, stream), tuple(rounds))
