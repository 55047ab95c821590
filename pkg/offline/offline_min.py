"""Offline machine minimization.

Pipeline: split demands into small / medium, linear-group the medium ones
(the top group is "large" and gets its own edges), pack small demands into
blocks, solve the configuration LP on the grouped types, round it up, turn
configurations into machines with `match_configs`, then put the original
demands back into the slots. Whatever does not fit goes through
`edges_firstfit`.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from config import Config
from core.errors import ConfigurationError, InputError, InvariantBreach
from core.failover_model import (Assignment, DemandSequence, Edge, ProblemParams, is_feasible,
                                 make_edge)
from offline.config_lp import (Configuration, TypePartition, config_valid, round_up,
                               solve_config_lp)

logger = logging.getLogger(__name__)

BLOCK_LABEL = "block"


@dataclass(frozen=True)
class Grouping:
    epsilon: float
    sizes: Tuple[float, ...]
    small: Tuple[int, ...]
    large: Tuple[int, ...]
    groups: Tuple[Tuple[int, ...], ...]
    block_count: int

    @property
    def medium(self) -> Tuple[int, ...]:
        return self.large + tuple(j for g in self.groups for j in g)

    @property
    def group_sizes(self) -> Tuple[float, ...]:
        """Rounded size of each remaining group (its maximum)."""
        return tuple(self.sizes[g[0]] for g in self.groups)

    @property
    def rounded_medium(self) -> List[float]:
        return [size for g, size in zip(self.groups, self.group_sizes) for _ in g]

    @property
    def small_total(self) -> float:
        return math.fsum(self.sizes[j] for j in self.small)

    def blocks_of(self, block_size: float) -> int:
        if block_size >= self.epsilon:
            return self.block_count
        return int(math.ceil(self.small_total / block_size - Config.TOLERANCE)) if self.small else 0


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {epsilon}")


def partition_and_group(demands: DemandSequence, epsilon: float) -> Grouping:
    _check_epsilon(epsilon)
    sizes = tuple(demands.sizes)
    threshold = epsilon * epsilon
    small = tuple(j for j, s in enumerate(sizes) if s < threshold)
    medium = sorted((j for j, s in enumerate(sizes) if s >= threshold), key=lambda j: (-sizes[j], j))
    chunks: List[Tuple[int, ...]] = []
    if medium:
        g = max(1, math.ceil(epsilon ** 3 * len(medium) - 1e-12))
        chunks = [tuple(medium[i:i + g]) for i in range(0, len(medium), g)]
    small_total = math.fsum(sizes[j] for j in small)
    block_count = int(math.ceil(small_total / epsilon - Config.TOLERANCE)) if small else 0
    return Grouping(epsilon, sizes, small, chunks[0] if chunks else (), tuple(chunks[1:]), block_count)


@dataclass(frozen=True)
class Slot:
    edge: Edge
    size: float
    origin: str  # large | medium | block | fallback | demand
    group: int = -1


@dataclass(frozen=True)
class Template:
    machines: int
    slots: Tuple[Slot, ...] = ()

    @classmethod
    def from_assignment(cls, assignment: Assignment, demands: DemandSequence) -> "Template":
        """Every placed demand becomes a slot of its own size on its own edge."""
        slots = tuple(Slot(e, demands[j], "demand") for j, e in sorted(assignment.placements.items()))
        return cls(assignment.machines, slots)

    def per_edge(self) -> Dict[Edge, List[int]]:
        out: Dict[Edge, List[int]] = defaultdict(list)
        for i, slot in enumerate(self.slots):
            out[slot.edge].append(i)
        return dict(out)

    def realized(self) -> Tuple[Assignment, DemandSequence]:
        """The assignment obtained by filling every slot to its size."""
        placements = {i: slot.edge for i, slot in enumerate(self.slots)}
        opened = {w for slot in self.slots for w in slot.edge}
        return Assignment.build(placements, opened), DemandSequence(tuple(s.size for s in self.slots))


class EdgeFirstFit:
    """Disjoint edges with load at most min(1, B/2), filled first-fit."""

    def __init__(self, B: float, first_machine: int = 0, tol: float = Config.TOLERANCE):
        self.cap = min(1.0, B / 2.0)
        self.next_machine = first_machine
        self.tol = tol
        self.edges: List[Edge] = []
        self.loads: List[float] = []

    def put(self, size: float) -> Edge:
        for i, load in enumerate(self.loads):
            if load + size <= self.cap + self.tol:
                self.loads[i] += size
                return self.edges[i]
        e = (self.next_machine, self.next_machine + 1)
        self.next_machine += 2
        self.edges.append(e)
        self.loads.append(size)
        return e

    @property
    def machines(self) -> int:
        return 2 * len(self.edges)


def edges_firstfit(sizes: Sequence[float], B: float, first_machine: int = 0) -> Assignment:
    """Placement j goes to an edge on fresh machines; at most 8 max(sum, 1) + 2 machines."""
    packer = EdgeFirstFit(B, first_machine)
    placements = {j: packer.put(s) for j, s in enumerate(sizes)}
    return Assignment.build(placements, opened=range(first_machine, packer.next_machine))


@dataclass(frozen=True)
class MatchStats:
    D: int
    T: int
    leftover_size: float

    @property
    def constant(self) -> float:
        return self.leftover_size / (self.D * self.T) if self.D and self.T else 0.0


@dataclass
class MatchResult:
    placements: List[Tuple[int, Edge]] = field(default_factory=list)
    machines: int = 0
    first_machine: int = 0
    leftovers: Dict[int, int] = field(default_factory=dict)
    stats: MatchStats = MatchStats(0, 0, 0.0)

    def assignment(self) -> Assignment:
        """Placement i is the i-th matched demand slot."""
        return Assignment.build({i: e for i, (_, e) in enumerate(self.placements)},
                                opened=range(self.first_machine, self.first_machine + self.machines))


def default_type_order(partition: TypePartition) -> List[int]:
    """Descending size, blocks last."""
    return sorted(range(partition.T),
                  key=lambda t: (partition.label(t) == BLOCK_LABEL, -partition.sizes[t], t))


def _trim(configs: Sequence[Configuration], partition: TypePartition) -> List[List[int]]:
    slots = [list(c.counts) for c in configs]
    for t, n in enumerate(partition.counts):
        excess = sum(row[t] for row in slots) - 2 * n
        while excess > 0:
            fullest = max(range(len(slots)), key=lambda i: (slots[i][t], i))
            slots[fullest][t] -= 1
            excess -= 1
    return [row for row in slots if any(row)]


def match_configs(configs: Sequence[Configuration], partition: TypePartition, B: float,
                  first_machine: int = 0, order: Optional[Sequence[int]] = None) -> MatchResult:
    """One machine per (trimmed, nonempty) configuration; each demand on an edge between two of them."""
    for c in configs:
        if not config_valid(c, partition, B):
            raise InputError(f"configuration {c.as_dict(partition)} is not valid at B={B}")
    for t, n in enumerate(partition.counts):
        have = sum(c.counts[t] for c in configs)
        if have < 2 * n:
            raise InputError(f"configurations hold {have} slots of {partition.label(t)}, need {2 * n}")

    slots = _trim(configs, partition)
    used: Set[Edge] = set()
    placements: List[Tuple[int, Edge]] = []
    leftovers: Dict[int, int] = {}
    for t in (order if order is not None else default_type_order(partition)):
        holders = [i for i, row in enumerate(slots) if row[t] > 0]
        left, right, degree = [], [], [0, 0]
        for i in holders:
            side = 0 if degree[0] <= degree[1] else 1
            (left if side == 0 else right).append(i)
            degree[side] += slots[i][t]
        need = partition.counts[t]
        remaining = {i: slots[i][t] for i in holders}
        for c in left:
            ptr = 0
            while need and remaining[c]:
                while ptr < len(right) and (remaining[right[ptr]] == 0 or make_edge(c, right[ptr]) in used):
                    ptr += 1
                if ptr == len(right):
                    break
                partner = right[ptr]
                used.add(make_edge(c, partner))
                remaining[c] -= 1
                remaining[partner] -= 1
                placements.append((t, make_edge(first_machine + c, first_machine + partner)))
                need -= 1
            if not need:
                break
        if need:
            leftovers[t] = need
            logger.debug(f"match_configs: {need} demands of {partition.label(t)} left over")

    leftover_size = math.fsum(partition.sizes[t] * k for t, k in leftovers.items())
    stats = MatchStats(max((sum(row) for row in slots), default=0), partition.T, leftover_size)
    return MatchResult(placements, len(slots), first_machine, leftovers, stats)


def default_epsilon(n: int) -> float:
    if n < 1:
        return Config.EPSILON_CLAMP
    return min(Config.EPSILON_CLAMP, n ** (-1.0 / 6.0))


@dataclass
class OfflineMinResult:
    assignment: Assignment
    machines: int
    lp_value: float
    breakdown: Dict[str, int]
    template: Template
    grouping: Grouping
    stats: MatchStats

    def report(self, demands: DemandSequence, params: ProblemParams) -> Dict:
        return {
            "machines": self.machines,
            "feasible": is_feasible(self.assignment, demands, params),
            "lp_value": self.lp_value,
            "breakdown": dict(self.breakdown),
            "leftover_constant": self.stats.constant,
        }


def offline_min_failover(demands: DemandSequence, B: float, epsilon: Optional[float] = None,
                         pricing: str = "exact") -> OfflineMinResult:
    params = ProblemParams(failover_capacity=B)
    demands.validate(params)
    eps = default_epsilon(len(demands)) if epsilon is None else epsilon
    grouping = partition_and_group(demands, eps)
    sizes = grouping.sizes
    placements: Dict[int, Edge] = {}
    slots: List[Slot] = []

    # large demands: one fresh edge each
    machine = 0
    for j in grouping.large:
        e = (machine, machine + 1)
        placements[j] = e
        slots.append(Slot(e, sizes[j], "large"))
        machine += 2
    large_machines = machine

    block_size = min(eps, params.max_size)
    types = [(size, len(g)) for g, size in zip(grouping.groups, grouping.group_sizes)]
    labels = [f"group-{g}" for g in range(len(types))]
    blocks = grouping.blocks_of(block_size)
    if blocks:
        types.append((block_size, blocks))
        labels.append(BLOCK_LABEL)
    partition = TypePartition.from_types(types, labels)
    lp = solve_config_lp(partition, B, pricing=pricing)
    match = match_configs(round_up(lp), partition, B, first_machine=machine)
    machine += match.machines

    by_type: Dict[int, List[Edge]] = defaultdict(list)
    for t, e in match.placements:
        by_type[t].append(e)
        slots.append(Slot(e, partition.sizes[t], BLOCK_LABEL if labels[t] == BLOCK_LABEL else "medium", t))

    fallback: List[int] = []
    for t, group in enumerate(grouping.groups):
        originals = sorted(group, key=lambda j: (-sizes[j], j))
        edges = by_type.get(t, [])
        for j, e in zip(originals, edges):
            placements[j] = e
        fallback.extend(originals[len(edges):])

    block_edges = by_type.get(len(grouping.groups), []) if blocks else []
    filled = [0.0] * len(block_edges)
    overflow_from: Optional[int] = None
    for pos, j in enumerate(grouping.small):
        target = next((b for b, load in enumerate(filled)
                       if load + sizes[j] <= block_size + Config.TOLERANCE), None)
        if target is None:
            overflow_from = pos
            break
        filled[target] += sizes[j]
        placements[j] = block_edges[target]
    if overflow_from is not None:
        fallback.extend(grouping.small[overflow_from:])

    spill = edges_firstfit([sizes[j] for j in fallback], B, first_machine=machine)
    for pos, e in spill.placements.items():
        placements[fallback[pos]] = e
        slots.append(Slot(e, sizes[fallback[pos]], "fallback"))
    fallback_machines = spill.machines
    machine += fallback_machines

    assignment = Assignment.build(placements, opened=range(machine))
    if len(assignment) != len(demands) or not is_feasible(assignment, demands, params):
        raise InvariantBreach("offline pipeline produced an incomplete or infeasible assignment")
    breakdown = {"large": large_machines, "template": match.machines, "fallback": fallback_machines}
    logger.info(f"Offline min: {len(demands)} demands on {machine} machines (LP {lp.objective:.3f}, eps {eps:.3f}, {breakdown})")
    return OfflineMinResult(assignment, machine, lp.objective, breakdown,
                            Template(machine, tuple(slots)), grouping, match.stats)
