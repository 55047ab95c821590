"""Exact brute-force ground truth at desk scale.

Sizes and capacities are quantized to integers at 1e-9 so every comparison
in the search is exact. The search places demands in descending size, uses
machines in first-touch order (a fresh machine is always the lowest unused
id), places equal consecutive demands on nondecreasing edges, and memoizes
failed states.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, ConfigDict, Field

from config import Config
from core.errors import InputError, LimitsRefusal
from core.failover_model import DemandSequence, Edge, make_edge, nominal_lower_bound

logger = logging.getLogger(__name__)


class SearchLimits(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_demands: int = Field(default=Config.ORACLE_MAX_DEMANDS, gt=0)
    max_machines: int = Field(default=Config.ORACLE_MAX_MACHINES, gt=0)
    node_budget: int = Field(default=Config.ORACLE_NODE_BUDGET, gt=0)


DEFAULT_LIMITS = SearchLimits()


def quantize(value: float) -> int:
    if not math.isfinite(value) or value < 0:
        raise InputError(f"cannot quantize {value}")
    return int(round(value * Config.ORACLE_SCALE))


@dataclass(frozen=True)
class PrefixResult:
    length: int
    utilization: float


class _Search:
    def __init__(self, sizes: Sequence[float], B: float, machines: int, limits: SearchLimits,
                 fixed: Optional[Mapping[int, Edge]] = None):
        self.limits = limits
        self.nominal = Config.ORACLE_SCALE
        self.failover = quantize(B)
        self.machines = machines
        self.load = [0] * machines
        self.heaviest = [0] * machines
        self.edge: Dict[Edge, int] = {}
        self.touched: Set[int] = set()
        self.nodes = 0
        self.failed: Set[tuple] = set()
        fixed = dict(fixed or {})
        for j, (u, v) in fixed.items():
            e = make_edge(u, v)
            if e[1] >= machines:
                raise InputError(f"fixed edge {e} uses a machine beyond m={machines}")
            s = quantize(sizes[j])
            if not self._fits(e, s):
                self.infeasible_fixed = True
                break
            self._apply(e, s)
        else:
            self.infeasible_fixed = False
        free = [quantize(s) for j, s in enumerate(sizes) if j not in fixed]
        self.sizes = sorted(free, reverse=True)
        self.suffix = [0] * (len(self.sizes) + 1)
        for j in range(len(self.sizes) - 1, -1, -1):
            self.suffix[j] = self.suffix[j + 1] + self.sizes[j]

    def _fits(self, e: Edge, s: int) -> bool:
        new_edge = self.edge.get(e, 0) + s
        for w in e:
            load = self.load[w] + s
            if load > self.nominal or load + max(self.heaviest[w], new_edge) > self.failover:
                return False
        return True

    def _apply(self, e: Edge, s: int) -> tuple:
        saved = (e in self.edge, self.edge.get(e, 0), self.heaviest[e[0]], self.heaviest[e[1]],
                 e[0] in self.touched, e[1] in self.touched)
        self.edge[e] = saved[1] + s
        for w in e:
            self.load[w] += s
            self.heaviest[w] = max(self.heaviest[w], self.edge[e])
            self.touched.add(w)
        return saved

    def _undo(self, e: Edge, s: int, saved: tuple) -> None:
        existed, old_edge, h0, h1, t0, t1 = saved
        if existed:
            self.edge[e] = old_edge
        else:
            del self.edge[e]
        self.load[e[0]] -= s
        self.load[e[1]] -= s
        self.heaviest[e[0]], self.heaviest[e[1]] = h0, h1
        if not t0:
            self.touched.discard(e[0])
        if not t1:
            self.touched.discard(e[1])

    def _options(self) -> List[Edge]:
        touched = sorted(self.touched)
        fresh = [w for w in range(self.machines) if w not in self.touched][:2]
        options = [(u, v) for i, u in enumerate(touched) for v in touched[i + 1:]]
        if fresh:
            options += [make_edge(u, fresh[0]) for u in touched]
        if len(fresh) == 2:
            options.append((fresh[0], fresh[1]))
        return sorted(options)

    def feasible(self) -> bool:
        if self.infeasible_fixed:
            return False
        return self._dfs(0, None)

    def _dfs(self, j: int, prev: Optional[Edge]) -> bool:
        if j == len(self.sizes):
            return True
        self.nodes += 1
        if self.nodes > self.limits.node_budget:
            raise LimitsRefusal(f"oracle search exceeded {self.limits.node_budget} nodes")
        spare = sum(self.nominal - load for load in self.load)
        if 2 * self.suffix[j] > spare:
            return False
        s = self.sizes[j]
        floor = prev if (j > 0 and self.sizes[j - 1] == s) else None
        key = (j, floor, tuple(self.load), tuple(sorted(self.edge.items())))
        if key in self.failed:
            return False
        for e in self._options():
            if floor is not None and e < floor:
                continue
            if not self._fits(e, s):
                continue
            saved = self._apply(e, s)
            ok = self._dfs(j + 1, e)
            self._undo(e, s, saved)
            if ok:
                return True
        self.failed.add(key)
        return False


def _check_limits(n: int, limits: SearchLimits) -> None:
    if n > limits.max_demands:
        raise LimitsRefusal(f"oracle handles at most {limits.max_demands} demands, got {n}")


def brute_feasible(demands: DemandSequence, B: float, m: int, limits: SearchLimits = DEFAULT_LIMITS,
                   fixed: Optional[Mapping[int, Tuple[int, int]]] = None) -> bool:
    """True iff all demands fit on at most m machines; `fixed` pins some placements."""
    sizes = list(demands)
    _check_limits(len(sizes), limits)
    if not sizes:
        return True
    if m < 2:
        return False
    fixed = {j: make_edge(*e) for j, e in (fixed or {}).items()}
    if any(not 0 <= j < len(sizes) for j in fixed):
        raise InputError("fixed placement refers to a missing demand")
    pinned = {w for e in fixed.values() for w in e}
    machines = min(m, max(pinned, default=-1) + 1 + 2 * (len(sizes) - len(fixed)))
    if machines > limits.max_machines:
        raise LimitsRefusal(f"oracle handles at most {limits.max_machines} machines, got {machines}")
    return _Search(sizes, B, machines, limits, fixed).feasible()


def brute_opt_mach(demands: DemandSequence, B: float, limits: SearchLimits = DEFAULT_LIMITS) -> int:
    """Exact minimum number of machines that host all demands."""
    sizes = list(demands)
    _check_limits(len(sizes), limits)
    if not sizes:
        return 0
    for m in range(nominal_lower_bound(sizes), 2 * len(sizes) + 1):
        if brute_feasible(demands, B, m, limits):
            logger.debug(f"opt_mach={m} for {len(sizes)} demands at B={B}")
            return m
    raise InputError("demands do not fit even on separate edges; sizes exceed min(1, B/2)")


def brute_max_prefix(demands: DemandSequence, B: float, m: int, limits: SearchLimits = DEFAULT_LIMITS,
                     fixed: Optional[Mapping[int, Tuple[int, int]]] = None) -> PrefixResult:
    """Longest prefix that fits on m machines (feasibility is monotone in the prefix)."""
    fixed = dict(fixed or {})
    length = 0
    for p in range(1, len(demands) + 1):
        _check_limits(p, limits)
        pins = {j: e for j, e in fixed.items() if j < p}
        if not brute_feasible(demands.prefix(p), B, m, limits, pins):
            break
        length = p
    return PrefixResult(length=length, utilization=math.fsum(demands.sizes[:length]))
