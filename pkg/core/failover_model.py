"""Problem model: demands, machines, assignments, loads and the two capacity constraints.

A demand of size s placed on the edge (u, v) adds s to the load of both
endpoints. Every machine has nominal capacity 1 and failover capacity B:

    L_u <= 1                         (Nominal)
    L_u + max_{v != u} L_uv <= B     (Failover)
"""
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from config import Config
from core.errors import InputError

Edge = Tuple[int, int]


def make_edge(u: int, v: int) -> Edge:
    """Canonical (min, max) form of an unordered machine pair."""
    if u == v:
        raise InputError(f"a demand needs two distinct machines, got ({u}, {v})")
    if u < 0 or v < 0:
        raise InputError(f"machine ids are non-negative, got ({u}, {v})")
    return (u, v) if u < v else (v, u)


class ProblemParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    failover_capacity: float = Field(default=1.0, ge=1.0)
    machine_budget: Optional[int] = Field(default=None, ge=2)

    @property
    def max_size(self) -> float:
        """Largest demand that fits on a pair of machines by itself."""
        return min(1.0, self.failover_capacity / 2.0)


@dataclass(frozen=True)
class DemandSequence:
    sizes: Tuple[float, ...] = ()

    @classmethod
    def of(cls, sizes: Iterable[float], params: Optional[ProblemParams] = None,
           tol: float = Config.TOLERANCE) -> "DemandSequence":
        seq = cls(tuple(float(s) for s in sizes))
        if params is not None:
            seq.validate(params, tol)
        return seq

    def validate(self, params: ProblemParams, tol: float = Config.TOLERANCE) -> None:
        limit = params.max_size + tol
        for j, s in enumerate(self.sizes):
            if not (0.0 <= s <= limit) or math.isnan(s):
                raise InputError(
                    f"demand {j} has size {s}, outside [0, {params.max_size}] for B={params.failover_capacity}"
                )

    @property
    def total(self) -> float:
        return math.fsum(self.sizes)

    def prefix(self, length: int) -> "DemandSequence":
        return DemandSequence(self.sizes[:length])

    def __len__(self) -> int:
        return len(self.sizes)

    def __iter__(self) -> Iterator[float]:
        return iter(self.sizes)

    def __getitem__(self, index: int) -> float:
        return self.sizes[index]


@dataclass(frozen=True, eq=True)
class Assignment:
    placements: Mapping[int, Edge] = field(default_factory=dict)
    opened: FrozenSet[int] = frozenset()

    @classmethod
    def build(cls, placements: Mapping[int, Tuple[int, int]],
              opened: Optional[Iterable[int]] = None) -> "Assignment":
        canonical = {int(j): make_edge(*e) for j, e in placements.items()}
        machines = set(opened) if opened is not None else set()
        for u, v in canonical.values():
            if opened is None:
                machines.update((u, v))
            elif u not in machines or v not in machines:
                raise InputError(f"edge ({u}, {v}) uses a machine that was never opened")
        if any(j < 0 for j in canonical):
            raise InputError("demand indices are non-negative")
        return cls(dict(sorted(canonical.items())), frozenset(machines))

    @property
    def machines(self) -> int:
        return len(self.opened)

    def __len__(self) -> int:
        return len(self.placements)

    def is_prefix(self) -> bool:
        """True when the placed indices are exactly 0..len-1."""
        return all(j < len(self.placements) for j in self.placements)

    def edges(self) -> List[Edge]:
        return sorted(set(self.placements.values()))

    def shifted(self, index_offset: int = 0, machine_offset: int = 0) -> "Assignment":
        return Assignment.build(
            {j + index_offset: (u + machine_offset, v + machine_offset)
             for j, (u, v) in self.placements.items()},
            opened=[w + machine_offset for w in self.opened],
        )

    def merged(self, other: "Assignment") -> "Assignment":
        clash = set(self.placements) & set(other.placements)
        if clash:
            raise InputError(f"demands placed twice: {sorted(clash)[:5]}")
        placements = dict(self.placements)
        placements.update(other.placements)
        return Assignment.build(placements, opened=self.opened | other.opened)


@dataclass(frozen=True)
class LoadProfile:
    edge_load: Mapping[Edge, float]
    node_load: Mapping[int, float]

    def max_edge(self, machine: int) -> float:
        return max((load for (u, v), load in self.edge_load.items() if machine in (u, v)), default=0.0)


@dataclass(frozen=True)
class Violation:
    machine: int
    constraint: str  # "nominal" | "failover"
    value: float
    limit: float


@dataclass(frozen=True)
class FeasibilityVerdict:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def compute_loads(assignment: Assignment, demands: DemandSequence) -> LoadProfile:
    """Edge loads L_uv and node loads L_u = sum of incident edge loads."""
    n = len(demands)
    edge_terms: Dict[Edge, List[float]] = defaultdict(list)
    for j, e in assignment.placements.items():
        if not 0 <= j < n:
            raise InputError(f"assignment places demand {j}, but only {n} demands exist")
        edge_terms[e].append(demands[j])
    edge_load = {e: math.fsum(terms) for e, terms in sorted(edge_terms.items())}
    node_terms: Dict[int, List[float]] = {u: [] for u in assignment.opened}
    for (u, v), load in edge_load.items():
        node_terms.setdefault(u, []).append(load)
        node_terms.setdefault(v, []).append(load)
    node_load = {u: math.fsum(terms) for u, terms in sorted(node_terms.items())}
    return LoadProfile(edge_load, node_load)


def check_feasible(profile: LoadProfile, params: ProblemParams,
                   tol: float = Config.TOLERANCE) -> FeasibilityVerdict:
    heaviest: Dict[int, float] = defaultdict(float)
    for (u, v), load in profile.edge_load.items():
        heaviest[u] = max(heaviest[u], load)
        heaviest[v] = max(heaviest[v], load)
    violations = []
    for u, load in profile.node_load.items():
        if load > 1.0 + tol:
            violations.append(Violation(u, "nominal", load, 1.0))
        failover = load + heaviest[u]
        if failover > params.failover_capacity + tol:
            violations.append(Violation(u, "failover", failover, params.failover_capacity))
    return FeasibilityVerdict(tuple(violations))


def utilization(assignment: Assignment, demands: DemandSequence) -> float:
    """Total size of the placed demands."""
    return math.fsum(demands[j] for j in assignment.placements)


def is_feasible(assignment: Assignment, demands: DemandSequence, params: ProblemParams,
                tol: float = Config.TOLERANCE) -> bool:
    return check_feasible(compute_loads(assignment, demands), params, tol).ok


def nominal_lower_bound(sizes: Sequence[float]) -> int:
    """Machines needed by nominal capacity alone: every demand loads two machines."""
    if not sizes:
        return 0
    return max(2, math.ceil(2.0 * math.fsum(sizes) - Config.TOLERANCE))


class LoadTracker:
    """Incremental node/edge loads for algorithms that place demands one at a time."""

    def __init__(self, params: ProblemParams, tol: float = Config.TOLERANCE):
        self.params = params
        self.tol = tol
        self.edge_load: Dict[Edge, float] = defaultdict(float)
        self.node_load: Dict[int, float] = defaultdict(float)
        self.heaviest: Dict[int, float] = defaultdict(float)

    def fits(self, u: int, v: int, size: float) -> bool:
        e = make_edge(u, v)
        new_edge = self.edge_load[e] + size
        for w in e:
            load = self.node_load[w] + size
            if load > 1.0 + self.tol:
                return False
            if load + max(self.heaviest[w], new_edge) > self.params.failover_capacity + self.tol:
                return False
        return True

    def add(self, u: int, v: int, size: float) -> Edge:
        e = make_edge(u, v)
        self.edge_load[e] += size
        for w in e:
            self.node_load[w] += size
            self.heaviest[w] = max(self.heaviest[w], self.edge_load[e])
        return e
