"""The configuration LP for machine minimization.

    min  sum_C x_C
    s.t. sum_C n_t(C) x_C >= 2 n_t   for every type t
         x >= 0

A configuration C (n_t(C) demands of each type t on one machine) is valid when
sum_t n_t(C) s_t <= 1 and sum_t n_t(C) s_t + max_{t: n_t(C) > 0} s_t <= B.

The LP is solved exactly by column generation: the restricted master goes to
HiGHS dual simplex, and pricing is a knapsack per guessed largest size.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from config import Config
from core.errors import ColumnGenerationError, ConfigurationError, InputError
from core.failover_model import DemandSequence

logger = logging.getLogger(__name__)

VALUE_TIE = 1e-12


@dataclass(frozen=True)
class TypePartition:
    sizes: Tuple[float, ...] = ()
    counts: Tuple[int, ...] = ()
    members: Tuple[Tuple[int, ...], ...] = ()
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.sizes) != len(self.counts):
            raise InputError("one count per type size")
        if any(n <= 0 for n in self.counts):
            raise InputError("type counts are positive")
        if self.members and [len(m) for m in self.members] != list(self.counts):
            raise InputError("members must list exactly n_t demands per type")

    @classmethod
    def from_types(cls, types: Iterable[Tuple[float, int]], labels: Sequence[str] = ()) -> "TypePartition":
        types = list(types)
        members, start = [], 0
        for _, n in types:
            members.append(tuple(range(start, start + n)))
            start += n
        return cls(tuple(float(s) for s, _ in types), tuple(int(n) for _, n in types),
                   tuple(members), tuple(labels))

    @property
    def T(self) -> int:
        return len(self.sizes)

    @property
    def types(self) -> List[Tuple[float, int]]:
        return list(zip(self.sizes, self.counts))

    @property
    def demand_count(self) -> int:
        return sum(self.counts)

    def label(self, t: int) -> str:
        return self.labels[t] if self.labels else f"type-{t}"

    def merged(self) -> "TypePartition":
        """Types with bit-identical sizes combined."""
        sizes: Dict[float, int] = {}
        owners: Dict[float, List[int]] = {}
        for t, (s, n) in enumerate(self.types):
            sizes[s] = sizes.get(s, 0) + n
            owners.setdefault(s, []).extend(self.members[t] if self.members else [])
        return TypePartition(tuple(sizes), tuple(sizes.values()),
                             tuple(tuple(owners[s]) for s in sizes) if self.members else ())


def make_types(demands: DemandSequence, mode: str = "by-size") -> TypePartition:
    if mode == "per-demand":
        return TypePartition(tuple(demands.sizes), (1,) * len(demands),
                             tuple((j,) for j in range(len(demands))))
    if mode != "by-size":
        raise ConfigurationError(f"unknown type mode {mode!r}")
    groups: Dict[float, List[int]] = {}
    for j, s in enumerate(demands):
        groups.setdefault(s, []).append(j)
    sizes = sorted(groups)
    return TypePartition(tuple(sizes), tuple(len(groups[s]) for s in sizes),
                         tuple(tuple(groups[s]) for s in sizes))


@dataclass(frozen=True)
class Configuration:
    counts: Tuple[int, ...]

    @classmethod
    def empty(cls, T: int) -> "Configuration":
        return cls((0,) * T)

    @classmethod
    def single(cls, T: int, t: int, n: int = 1) -> "Configuration":
        counts = [0] * T
        counts[t] = n
        return cls(tuple(counts))

    @property
    def items(self) -> int:
        return sum(self.counts)

    def load(self, partition: TypePartition) -> float:
        return math.fsum(n * s for n, s in zip(self.counts, partition.sizes))

    def largest(self, partition: TypePartition) -> float:
        return max((s for n, s in zip(self.counts, partition.sizes) if n > 0), default=0.0)

    def as_dict(self, partition: Optional[TypePartition] = None) -> Dict:
        if partition is None:
            return {t: int(n) for t, n in enumerate(self.counts) if n}
        return {partition.label(t): int(n) for t, n in enumerate(self.counts) if n}


def config_valid(config: Configuration, partition: TypePartition, B: float,
                 tol: float = Config.TOLERANCE) -> bool:
    if len(config.counts) != partition.T or any(n < 0 for n in config.counts):
        return False
    load = config.load(partition)
    return load <= 1.0 + tol and load + config.largest(partition) <= B + tol


def count_bounds(partition: TypePartition, tol: float = Config.TOLERANCE) -> List[int]:
    """n_t(C) <= floor(1 / s_t) in any valid configuration; zero-size types are capped at n_t."""
    return [n if s <= 0 else int(math.floor(1.0 / s + tol)) for s, n in partition.types]


def enumerate_configurations(partition: TypePartition, B: float, limit: int = 10 ** 5,
                             tol: float = Config.TOLERANCE) -> List[Configuration]:
    """Every valid configuration (the empty one included); refuses beyond `limit`."""
    ub = count_bounds(partition, tol)
    space = math.prod(u + 1 for u in ub)
    if space > limit:
        raise ConfigurationError(f"{space} candidate configurations exceed the enumeration limit {limit}")
    configs = []
    for counts in itertools.product(*(range(u + 1) for u in ub)):
        c = Configuration(tuple(counts))
        if config_valid(c, partition, B, tol):
            configs.append(c)
    return configs


def _better(value: float, counts: Sequence[int], best: Tuple[float, Tuple[int, ...]]) -> bool:
    if value > best[0] + VALUE_TIE:
        return True
    return abs(value - best[0]) <= VALUE_TIE and tuple(counts) < best[1]


def _price_branch_and_bound(y: Sequence[float], partition: TypePartition, B: float,
                            tol: float) -> Tuple[Configuration, float]:
    s, T = partition.sizes, partition.T
    ub = count_bounds(partition, tol)
    counts = [0] * T
    value0 = 0.0
    for t in range(T):
        if y[t] > tol and s[t] <= 0:
            counts[t] = partition.counts[t]
            value0 += y[t] * counts[t]
    order = sorted((t for t in range(T) if y[t] > tol and s[t] > 0), key=lambda t: (-s[t], t))
    best = (value0, tuple(counts))

    def bound(i: int, room: float) -> float:
        total = 0.0
        for t in sorted(order[i:], key=lambda t: -y[t] / s[t]):
            if room <= 0:
                break
            take = min(ub[t], room / s[t])
            total += take * y[t]
            room -= take * s[t]
        return total

    def dfs(i: int, load: float, largest: float, value: float) -> None:
        nonlocal best
        if _better(value, counts, best):
            best = (value, tuple(counts))
        if i == len(order):
            return
        room = (min(1.0, B - largest) if largest > 0 else min(1.0, B)) + tol - load
        if value + bound(i, room) < best[0] - VALUE_TIE:
            return
        t = order[i]
        for c in range(ub[t], -1, -1):
            new_load, new_largest = load, largest
            if c > 0:
                new_load = load + c * s[t]
                new_largest = largest if largest > 0 else s[t]
                if new_load > 1.0 + tol or new_load + new_largest > B + tol:
                    continue
            counts[t] = c
            dfs(i + 1, new_load, new_largest, value + c * y[t])
        counts[t] = 0

    dfs(0, 0.0, 0.0, value0)
    return Configuration(best[1]), best[0]


def _split(count: int) -> List[int]:
    """Binary splitting of a bounded count into 0/1 pieces."""
    pieces, c = [], 1
    while count > 0:
        take = min(c, count)
        pieces.append(take)
        count -= take
        c *= 2
    return pieces


def _bit(packed: np.ndarray, index: int) -> bool:
    return bool((packed[index >> 3] >> (7 - (index & 7))) & 1)


def _size_groups(y: Sequence[float], partition: TypePartition, tol: float) -> List[Tuple[float, List[int]]]:
    groups: Dict[float, List[int]] = {}
    for t, s in enumerate(partition.sizes):
        if y[t] > tol and s > 0:
            groups.setdefault(s, []).append(t)
    return sorted(groups.items())


def _zero_size_items(y: Sequence[float], partition: TypePartition, tol: float) -> Tuple[List[int], float]:
    counts = [0] * partition.T
    value = 0.0
    for t, s in enumerate(partition.sizes):
        if y[t] > tol and s <= 0:
            counts[t] = partition.counts[t]
            value += y[t] * counts[t]
    return counts, value


def _price_grid(y: Sequence[float], partition: TypePartition, B: float, tol: float,
                grid: float) -> Tuple[Configuration, float]:
    """Bounded knapsack DP on a size grid, one candidate per distinct largest size.

    Weights round up and capacities round down, so every returned configuration is valid.
    """
    ub = count_bounds(partition, tol)
    counts, base = _zero_size_items(y, partition, tol)
    groups = _size_groups(y, partition, tol)
    room = max((min(1.0, B - s) - s for s, _ in groups), default=0.0)
    W = max(0, int(math.floor((room + tol) / grid)))
    dp = np.zeros(W + 1)
    pieces: List[Tuple[int, int, int, np.ndarray]] = []
    best_value, best_choice = base, None
    for s, group in groups:
        limit = min(1.0, B - s)
        units = sorted(((y[t], t) for t in group for _ in range(ub[t])), key=lambda u: (-u[0], u[1]))
        running = 0.0
        for r in range(1, len(units) + 1):
            residual = limit - r * s
            if residual < -tol:
                break
            running += units[r - 1][0]
            cell = min(W, max(0, int(math.floor((residual + tol) / grid))))
            value = base + running + float(dp[cell])
            if value > best_value + VALUE_TIE:
                best_value, best_choice = value, (units[:r], cell, len(pieces))
        weight = int(math.ceil(s / grid - 1e-9))
        for t in group:
            for c in _split(ub[t]):
                w = c * weight
                if w > W:
                    continue
                candidate = dp[:W + 1 - w] + c * y[t]
                took = candidate > dp[w:]
                dp[w:] = np.where(took, candidate, dp[w:])
                pieces.append((t, c, w, np.packbits(took)))
    if best_choice is not None:
        chosen, cell, upto = best_choice
        for _, t in chosen:
            counts[t] += 1
        for t, c, w, took in reversed(pieces[:upto]):
            if cell >= w and _bit(took, cell - w):
                counts[t] += c
                cell -= w
    config = Configuration(tuple(counts))
    return config, math.fsum(n * v for n, v in zip(counts, y) if n)


def _knapsack_fptas(pieces: List[Tuple[int, int, float, float]], capacity: float, eps: float,
                    tol: float) -> Dict[int, int]:
    """0/1 knapsack within (1 - eps) of optimal by value scaling; returns counts per type."""
    pieces = [p for p in pieces if p[2] <= capacity + tol and p[3] > 0]
    if not pieces:
        return {}
    scale = eps * max(p[3] for p in pieces) / len(pieces)
    scaled = [int(math.floor(p[3] / scale)) for p in pieces]
    V = sum(scaled)
    min_weight = np.full(V + 1, np.inf)
    min_weight[0] = 0.0
    history = []
    for (t, c, w, _), sv in zip(pieces, scaled):
        if sv == 0:
            history.append(None)
            continue
        candidate = min_weight[:V + 1 - sv] + w
        took = candidate < min_weight[sv:]
        min_weight[sv:] = np.where(took, candidate, min_weight[sv:])
        history.append(np.packbits(took))
    reachable = np.nonzero(min_weight <= capacity + tol)[0]
    cell = int(reachable[-1])
    chosen: Dict[int, int] = {}
    for (t, c, w, _), sv, took in zip(reversed(pieces), reversed(scaled), reversed(history)):
        if took is not None and cell >= sv and _bit(took, cell - sv):
            chosen[t] = chosen.get(t, 0) + c
            cell -= sv
    return chosen


def _price_fptas(y: Sequence[float], partition: TypePartition, B: float, eps: float,
                 tol: float) -> Tuple[Configuration, float]:
    ub = count_bounds(partition, tol)
    counts0, base = _zero_size_items(y, partition, tol)
    groups = _size_groups(y, partition, tol)
    best_value, best_counts = base, tuple(counts0)
    for gi, (s_star, group) in enumerate(groups):
        capacity = min(1.0 - s_star, B - 2.0 * s_star)
        if capacity < -tol:
            continue
        for t_star in group:
            pieces = []
            for _, members in groups[:gi + 1]:
                for t in members:
                    bound = ub[t] - 1 if t == t_star else ub[t]
                    for c in _split(bound):
                        pieces.append((t, c, c * partition.sizes[t], c * y[t]))
            chosen = _knapsack_fptas(pieces, capacity, eps, tol)
            counts = list(counts0)
            counts[t_star] += 1
            for t, c in chosen.items():
                counts[t] += c
            value = math.fsum(n * v for n, v in zip(counts, y) if n)
            if _better(value, counts, (best_value, best_counts)):
                best_value, best_counts = value, tuple(counts)
    return Configuration(best_counts), best_value


def price_column(duals: Sequence[float], partition: TypePartition, B: float, mode: str = "exact",
                 epsilon: float = Config.PRICING_FPTAS_EPSILON,
                 tol: float = Config.TOLERANCE) -> Tuple[Configuration, float]:
    """A valid configuration maximizing sum_t n_t(C) y_t (exactly, or within 1 - epsilon)."""
    y = [max(0.0, float(v)) for v in duals]
    if len(y) != partition.T:
        raise InputError(f"{len(y)} duals for {partition.T} types")
    if all(v <= tol for v in y):
        return Configuration.empty(partition.T), 0.0
    if mode == "exact":
        if partition.T <= Config.PRICING_EXACT_MAX_TYPES:
            config, value = _price_branch_and_bound(y, partition, B, tol)
        else:
            config, value = _price_grid(y, partition, B, tol, Config.PRICING_GRID)
    elif mode == "fptas":
        if not 0 < epsilon < 1:
            raise ConfigurationError(f"FPTAS epsilon must lie in (0, 1), got {epsilon}")
        config, value = _price_fptas(y, partition, B, epsilon, tol)
    else:
        raise ConfigurationError(f"unknown pricing mode {mode!r}")
    return config, value


@dataclass
class LPResult:
    partition: TypePartition
    columns: List[Tuple[Configuration, float]] = field(default_factory=list)
    objective: float = 0.0
    duals: Tuple[float, ...] = ()
    basic: bool = True
    iterations: int = 0

    @property
    def positive_columns(self) -> List[Tuple[Configuration, float]]:
        return [(c, x) for c, x in self.columns if x > Config.TOLERANCE]

    def coverage(self) -> np.ndarray:
        cov = np.zeros(self.partition.T)
        for c, x in self.columns:
            cov += np.asarray(c.counts, dtype=float) * x
        return cov

    def summary(self) -> Dict:
        return {
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "basic": bool(self.basic),
            "columns": [{"configuration": c.as_dict(self.partition), "value": float(x)} for c, x in self.columns],
            "duals": [float(d) for d in self.duals],
        }


def _solve_master(columns: List[Configuration], rhs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    A = np.array([c.counts for c in columns], dtype=float).T
    res = linprog(np.ones(len(columns)), A_ub=-A, b_ub=-rhs, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise ColumnGenerationError(f"restricted master failed: {res.message}")
    duals = np.maximum(0.0, -np.asarray(res.ineqlin.marginals, dtype=float))
    return np.asarray(res.x, dtype=float), duals


def _purify(A: np.ndarray, x: np.ndarray, tol: float) -> np.ndarray:
    """Move along null-space directions of the positive columns until they are independent."""
    x = x.copy()
    while True:
        support = np.nonzero(x > tol)[0]
        if support.size == 0:
            return x
        sub = A[:, support]
        if np.linalg.matrix_rank(sub) == support.size:
            return x
        _, _, vt = np.linalg.svd(sub)
        d = vt[-1]
        if d.sum() > 0 or (abs(d.sum()) <= tol and not (d < -tol).any()):
            d = -d
        negative = d < -tol
        if not negative.any():
            return x
        ratios = np.where(negative, x[support] / np.where(negative, -d, 1.0), np.inf)
        k = int(np.argmin(ratios))
        x[support] = x[support] + ratios[k] * d
        x[support[k]] = 0.0
        x[x < tol] = 0.0


def solve_config_lp(partition: TypePartition, B: float, tol: float = Config.LP_TOLERANCE,
                    pricing: str = "exact", max_iterations: int = Config.COLGEN_MAX_ITERATIONS) -> LPResult:
    if partition.T == 0:
        return LPResult(partition)
    rhs = 2.0 * np.asarray(partition.counts, dtype=float)
    columns = [Configuration.single(partition.T, t) for t in range(partition.T)]
    known = set(columns)
    x, duals = _solve_master(columns, rhs)
    iterations = 0
    while True:
        iterations += 1
        config, value = price_column(duals, partition, B, mode=pricing, tol=tol)
        if 1.0 - value >= -tol or config in known:
            break
        if iterations > max_iterations:
            best = LPResult(partition, list(zip(columns, x.tolist())), float(x.sum()), tuple(duals), False, iterations)
            raise ColumnGenerationError(f"column generation did not converge in {max_iterations} iterations", best)
        columns.append(config)
        known.add(config)
        x, duals = _solve_master(columns, rhs)
        logger.debug(f"Column generation iteration {iterations}: objective {x.sum():.6f}, reduced cost {1.0 - value:.3e}")

    A = np.array([c.counts for c in columns], dtype=float).T
    x = _purify(A, x, Config.TOLERANCE)
    kept = [(c, float(v)) for c, v in zip(columns, x) if v > Config.TOLERANCE]
    rank = np.linalg.matrix_rank(np.array([c.counts for c, _ in kept], dtype=float).T) if kept else 0
    result = LPResult(partition, kept, math.fsum(v for _, v in kept), tuple(float(d) for d in duals),
                      basic=bool(len(kept) <= partition.T and rank == len(kept)), iterations=iterations)
    logger.info(f"Configuration LP: {partition.T} types, objective {result.objective:.6f} after {iterations} iterations")
    return result


def round_up(result: LPResult) -> List[Configuration]:
    """ceil(x_C) copies of every positive column; integral coverage is restored if noise broke it."""
    configs: List[Configuration] = []
    for c, x in result.columns:
        copies = int(math.ceil(x - Config.TOLERANCE))
        configs.extend([c] * copies)
    partition = result.partition
    covered = np.zeros(partition.T, dtype=int)
    for c in configs:
        covered += np.asarray(c.counts, dtype=int)
    for t, n in enumerate(partition.counts):
        missing = 2 * n - int(covered[t])
        if missing > 0:
            logger.warning(f"Rounded LP short by {missing} slots of {partition.label(t)}; adding singletons")
            configs.extend([Configuration.single(partition.T, t)] * missing)
    return configs


def lp_value_merge_invariant(partition: TypePartition, B: float) -> Tuple[float, float]:
    """LP value of a partition and of the same demands with equal-size types merged."""
    split = solve_config_lp(partition, B).objective
    merged = solve_config_lp(partition.merged(), B).objective
    return split, merged
