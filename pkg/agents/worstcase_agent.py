"""Online placement agents for the worst-case model.

FailoverWorstCaseAgent buckets each demand by size. A demand in
I_k = (min{1/k, B/(k+1)}, min{1/(k-1), B/k}] goes alone on an empty edge of
a k-clique; a demand in I_{>=L} = [0, min{1/(L-1), B/L}] is first-fit onto
the edges of L-cliques with that per-edge cap. The agent stops at the first
demand it cannot place when no new clique fits in the unused machines.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict

from config import Config
from core.errors import ConfigurationError, InputError, InvariantBreach
from core.failover_model import (
    Assignment, DemandSequence, Edge, LoadTracker, ProblemParams, make_edge, utilization,
)
from data_ingestion.instances import adversary_step
from offline.oracle import brute_max_prefix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Interval:
    k: int


@dataclass(frozen=True)
class SmallTail:
    pass


Bucket = Union[Interval, SmallTail]


def interval_bounds(k: int, B: float) -> Tuple[float, float]:
    return min(1.0 / k, B / (k + 1)), min(1.0 / (k - 1), B / k)


def small_tail_cap(L: int, B: float) -> float:
    return min(1.0 / (L - 1), B / L)


def clique_size_for(m: int) -> int:
    """L = max(3, ceil(m^(1/3))) with an exact integer cube root."""
    r = max(1, round(m ** (1.0 / 3.0)))
    while r ** 3 < m:
        r += 1
    while r > 1 and (r - 1) ** 3 >= m:
        r -= 1
    return max(3, r)


def bucket_of(size: float, B: float, L: int, tol: float = Config.TOLERANCE) -> Bucket:
    if L < 3:
        raise ConfigurationError(f"L must be at least 3, got {L}")
    if size < 0 or size > interval_bounds(2, B)[1] + tol:
        raise InputError(f"size {size} is above the largest bucket for B={B}")
    if size <= small_tail_cap(L, B):
        return SmallTail()
    for k in range(L - 1, 1, -1):
        lo, hi = interval_bounds(k, B)
        if lo < size <= hi:
            return Interval(k)
    return Interval(2)


def clique_edges(nodes: Sequence[int]) -> List[Edge]:
    return [make_edge(u, v) for u, v in itertools.combinations(sorted(nodes), 2)]


@dataclass
class CliqueState:
    bucket: Bucket
    nodes: Tuple[int, ...]
    cap: float
    edge_load: Dict[Edge, float] = field(default_factory=dict)
    edge_count: Dict[Edge, int] = field(default_factory=dict)

    def __post_init__(self):
        for e in clique_edges(self.nodes):
            self.edge_load.setdefault(e, 0.0)
            self.edge_count.setdefault(e, 0)

    def first_empty_edge(self) -> Optional[Edge]:
        for e in self.edge_load:
            if self.edge_count[e] == 0:
                return e
        return None

    def first_fit_edge(self, size: float, tol: float) -> Optional[Edge]:
        for e, load in self.edge_load.items():
            if load + size <= self.cap + tol:
                return e
        return None

    def put(self, e: Edge, size: float) -> None:
        self.edge_load[e] += size
        self.edge_count[e] += 1


class OnlinePolicy(Protocol):
    """A deterministic online algorithm: place() returns an edge, or None to stop."""

    def reset(self, machines: int, params: ProblemParams) -> None: ...

    def place(self, size: float) -> Optional[Edge]: ...


class CliqueAgent:
    """Shared machinery: machine allocation, clique bookkeeping, the emitted placements."""

    def __init__(self, tol: float = Config.TOLERANCE):
        self.tol = tol
        self.machines = 0
        self.params = ProblemParams()
        self.cliques: List[CliqueState] = []
        self.next_free = 0
        self.placements: Dict[int, Edge] = {}
        self.stopped = False

    def reset(self, machines: int, params: ProblemParams) -> None:
        if machines < 2:
            raise ConfigurationError(f"need at least 2 machines, got {machines}")
        self.machines = machines
        self.params = params
        self.cliques = []
        self.next_free = 0
        self.placements = {}
        self.stopped = False

    def open_clique(self, bucket: Bucket, size: int, cap: float) -> Optional[CliqueState]:
        if size < 2 or self.next_free + size > self.machines:
            return None
        nodes = tuple(range(self.next_free, self.next_free + size))
        self.next_free += size
        clique = CliqueState(bucket, nodes, cap)
        self.cliques.append(clique)
        logger.debug(f"Opened {size}-clique {nodes} for {bucket}")
        return clique

    def record(self, e: Edge) -> Edge:
        self.placements[len(self.placements)] = e
        return e

    def assignment(self) -> Assignment:
        return Assignment.build(self.placements, opened=range(self.next_free))

    def run(self, demands: DemandSequence, params: ProblemParams) -> "OnlineRun":
        if params.machine_budget is None:
            raise ConfigurationError("online algorithms need a machine budget m")
        self.reset(params.machine_budget, params)
        stop_index = len(demands)
        for j, s in enumerate(demands):
            if self.place(s) is None:
                stop_index = j
                break
        return OnlineRun(assignment=self.assignment(), stop_index=stop_index,
                         utilization=utilization(self.assignment(), demands))

    def place(self, size: float) -> Optional[Edge]:
        raise NotImplementedError


@dataclass(frozen=True)
class OnlineRun:
    assignment: Assignment
    stop_index: int
    utilization: float


class FailoverWorstCaseAgent(CliqueAgent):
    def __init__(self, L: Optional[int] = None, tol: float = Config.TOLERANCE):
        super().__init__(tol)
        self.fixed_L = L
        self.L = L or 3

    def reset(self, machines: int, params: ProblemParams) -> None:
        super().reset(machines, params)
        self.L = self.fixed_L or clique_size_for(machines)

    def place(self, size: float) -> Optional[Edge]:
        if self.stopped:
            return None
        B = self.params.failover_capacity
        bucket = bucket_of(size, B, self.L, self.tol)
        if isinstance(bucket, Interval):
            e = self._place_interval(bucket, size)
        else:
            e = self._place_small(size)
        if e is None:
            self.stopped = True
            return None
        return self.record(e)

    def _place_interval(self, bucket: Interval, size: float) -> Optional[Edge]:
        for clique in self.cliques:
            if clique.bucket == bucket:
                e = clique.first_empty_edge()
                if e is not None:
                    clique.put(e, size)
                    return e
        hi = interval_bounds(bucket.k, self.params.failover_capacity)[1]
        clique = self.open_clique(bucket, bucket.k, hi)
        if clique is None:
            return None
        e = clique.first_empty_edge()
        clique.put(e, size)
        return e

    def _place_small(self, size: float) -> Optional[Edge]:
        for clique in self.cliques:
            if isinstance(clique.bucket, SmallTail):
                e = clique.first_fit_edge(size, self.tol)
                if e is not None:
                    clique.put(e, size)
                    return e
        clique = self.open_clique(SmallTail(), self.L, small_tail_cap(self.L, self.params.failover_capacity))
        if clique is None:
            return None
        e = clique.first_fit_edge(size, self.tol)
        if e is None:
            return None
        clique.put(e, size)
        return e


class SmallDemandsAgent(CliqueAgent):
    """First-fit over cliques of size floor(sqrt(L)) (one m-clique when m < 3 sqrt(L)),
    each edge of an m'-clique capped at min{B/m', 1/(m'-1)}; all sizes must be <= 1/L."""

    def __init__(self, L: int, tol: float = Config.TOLERANCE):
        super().__init__(tol)
        if L < 1:
            raise ConfigurationError(f"L must be positive, got {L}")
        self.L = L

    @staticmethod
    def edge_cap(size: int, B: float) -> float:
        return min(B / size, 1.0 / (size - 1))

    def _next_clique_size(self) -> int:
        remaining = self.machines - self.next_free
        if self.machines < 3 * math.sqrt(self.L):
            return remaining if self.next_free == 0 else 0
        return min(math.isqrt(self.L), remaining)

    def place(self, size: float) -> Optional[Edge]:
        if self.stopped:
            return None
        if size > 1.0 / self.L + self.tol:
            raise InputError(f"size {size} exceeds 1/L = {1.0 / self.L}")
        for clique in self.cliques:
            e = clique.first_fit_edge(size, self.tol)
            if e is not None:
                clique.put(e, size)
                return self.record(e)
        q = self._next_clique_size()
        clique = self.open_clique(SmallTail(), q, self.edge_cap(q, self.params.failover_capacity)) if q >= 2 else None
        e = clique.first_fit_edge(size, self.tol) if clique is not None else None
        if e is None:
            self.stopped = True
            return None
        clique.put(e, size)
        return self.record(e)


def run_failover_worstcase(demands: DemandSequence, params: ProblemParams) -> OnlineRun:
    return FailoverWorstCaseAgent().run(demands, params)


def run_small_demands(demands: DemandSequence, params: ProblemParams, L: int) -> OnlineRun:
    for j, s in enumerate(demands):
        if s > 1.0 / L + Config.TOLERANCE:
            raise InputError(f"demand {j} of size {s} exceeds 1/L = {1.0 / L}")
    return SmallDemandsAgent(L).run(demands, params)


class GreedyPolicy:
    """Each demand on the lexicographically first edge where it still fits.

    `opening` pins the first placements; the adversary tests use it to force
    the epsilon demands onto one edge, disjoint edges or edges sharing a node.
    """

    name = "greedy"

    def __init__(self, opening: Sequence[Edge] = (), tol: float = Config.TOLERANCE):
        self.opening = [make_edge(*e) for e in opening]
        self.tol = tol

    def reset(self, machines: int, params: ProblemParams) -> None:
        self.edges = clique_edges(range(machines))
        self.tracker = LoadTracker(params, self.tol)
        self.placed = 0
        self.stopped = False

    def place(self, size: float) -> Optional[Edge]:
        if self.stopped:
            return None
        candidates = self.edges
        if self.placed < len(self.opening):
            candidates = [self.opening[self.placed]]
        for e in candidates:
            if self.tracker.fits(*e, size):
                self.placed += 1
                return self.tracker.add(*e, size)
        self.stopped = True
        return None


def colocate_policy() -> GreedyPolicy:
    policy = GreedyPolicy(opening=[(0, 1), (0, 1)])
    policy.name = "colocate"
    return policy


def spread_policy() -> GreedyPolicy:
    policy = GreedyPolicy(opening=[(0, 1), (2, 3)])
    policy.name = "spread"
    return policy


def shared_endpoint_policy() -> GreedyPolicy:
    policy = GreedyPolicy(opening=[(0, 1), (0, 2)])
    policy.name = "shared-endpoint"
    return policy


def shipped_policies() -> Dict[str, OnlinePolicy]:
    policies = {p.name: p for p in (GreedyPolicy(), colocate_policy(), spread_policy(), shared_endpoint_policy())}
    policies["worstcase"] = FailoverWorstCaseAgent()
    return policies


class GameResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: str
    same_edge: bool
    demands: List[float]
    alg_value: float
    opt_value: float
    ratio: float

    @property
    def bound(self) -> float:
        """The ratio bound of the branch the policy walked into."""
        eps = self.demands[0]
        return (1 + eps) / 2 if self.same_edge else 2 * eps / (1 + 2 * eps)


def adversarial_game(policy: OnlinePolicy, epsilon: float, name: Optional[str] = None,
                     B: float = Config.UNBOUNDED_FAILOVER) -> GameResult:
    """Play the 4-machine adversary against a deterministic policy."""
    if not 0 < epsilon < 0.5:
        raise ConfigurationError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    machines = Config.ADVERSARY_MACHINES
    params = ProblemParams(failover_capacity=B, machine_budget=machines)
    policy.reset(machines, params)
    referee = LoadTracker(params)

    placed: List[float] = []
    edges: List[Edge] = []

    def offer(size: float) -> bool:
        e = policy.place(size)
        if e is None:
            return False
        e = make_edge(*e)
        if max(e) >= machines or not referee.fits(*e, size):
            raise InvariantBreach(f"policy placed {size} on infeasible edge {e}")
        referee.add(*e, size)
        placed.append(size)
        edges.append(e)
        return True

    alive = offer(epsilon) and offer(epsilon)
    continuation = adversary_step(edges, epsilon) if alive else [1.0]
    same_edge = alive and len(continuation) == 2
    for size in continuation:
        if not alive or not offer(size):
            break
    demands = [epsilon, epsilon] + continuation
    alg_value = sum(placed)
    opt = brute_max_prefix(DemandSequence(tuple(demands)), B, machines)
    ratio = alg_value / opt.utilization if opt.utilization > 0 else 1.0
    result = GameResult(policy=name or getattr(policy, "name", type(policy).__name__), same_edge=same_edge,
                        demands=demands, alg_value=alg_value, opt_value=opt.utilization, ratio=ratio)
    logger.info(f"Adversary vs {result.policy}: alg={alg_value:.3f} opt={opt.utilization:.3f} ratio={ratio:.3f}")
    return result
