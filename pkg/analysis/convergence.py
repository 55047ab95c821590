"""Convergence experiments: deficiency matching, the quantile proxy optimum and its identity checks."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from config import Config
from core.errors import InputError, InvariantBreach
from core.failover_model import DemandSequence, ProblemParams
from data_ingestion.instances import DiscreteSpec, DistributionSpec, quantile_instance, sample
from offline.offline_min import default_epsilon, offline_min_failover
from offline.oracle import DEFAULT_LIMITS, brute_opt_mach

logger = logging.getLogger(__name__)

METHODS = ("brute", "offline-min")


@dataclass(frozen=True)
class DeficiencyReport:
    deficiencies: Tuple[int, ...]
    max_def: int
    matched: int
    unmatched: int


def greedy_monotone_matching(sources: Sequence[float], targets: Sequence[float]) -> int:
    """Size of a maximum matching of sources into targets with source <= target."""
    src = sorted(sources)
    tgt = sorted(targets)
    matched, p = 0, 0
    for x in src:
        while p < len(tgt) and tgt[p] < x:
            p += 1
        if p == len(tgt):
            break
        matched += 1
        p += 1
    return matched


def _report(deficiencies: np.ndarray, n: int, matched: int) -> DeficiencyReport:
    max_def = int(deficiencies.max()) if deficiencies.size else 0
    unmatched = n - matched
    if unmatched != max(0, max_def):
        raise InvariantBreach(f"greedy left {unmatched} unmatched but the deficiency is {max_def}")
    return DeficiencyReport(tuple(int(d) for d in deficiencies), max_def, matched, unmatched)


def _check_lengths(X: Sequence[float], s: Sequence[float]) -> int:
    if len(X) != len(s):
        raise InputError(f"deficiency needs equal-size lists, got {len(X)} and {len(s)}")
    return len(s)


def max_deficiency(X: Sequence[float], s: Sequence[float]) -> DeficiencyReport:
    """def(j) = #{X > s_(j-1)} - (T - j) for j = 1..T over sorted s; unmatched X = max(0, max def)."""
    T = _check_lengths(X, s)
    xs = np.sort(np.asarray(X, dtype=float))
    grid = np.sort(np.asarray(s, dtype=float))
    j = np.arange(1, T + 1)
    above = T - np.searchsorted(xs, grid, side="right")
    return _report(above - (T - j), T, greedy_monotone_matching(X, s))


def reverse_deficiency(X: Sequence[float], s: Sequence[float]) -> DeficiencyReport:
    """Roles swapped: def(j) = (T - j) - #{X >= s_j} for j = 0..T-1; unmatched s = max(0, max def)."""
    T = _check_lengths(X, s)
    xs = np.sort(np.asarray(X, dtype=float))
    grid = np.sort(np.asarray(s, dtype=float))
    j = np.arange(T)
    at_least = T - np.searchsorted(xs, grid, side="left")
    return _report((T - j) - at_least, T, greedy_monotone_matching(s, X))


def proxy_opt(spec: DistributionSpec, T: int, B: float = 1.0, method: str = "brute") -> int:
    """Machines for the quantile instance mu_T: exact with `brute`, an upper bound with `offline-min`."""
    demands = quantile_instance(spec, T).demands
    demands.validate(ProblemParams(failover_capacity=B))
    if method == "brute":
        return brute_opt_mach(demands, B)
    if method == "offline-min":
        return offline_min_failover(demands, B, epsilon=default_epsilon(T)).machines
    raise InputError(f"unknown proxy method {method!r}; expected one of {METHODS}")


@dataclass
class ConvergenceSeries:
    method: str
    records: List[Dict] = field(default_factory=list)

    def frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.records, columns=["T", "machines", "ratio"])
        df["diff"] = df["ratio"].diff().abs()
        return df

    @property
    def c_estimate(self) -> float:
        """Ratio at the largest evaluated T."""
        return self.records[-1]["ratio"] if self.records else float("nan")


def estimate_c(spec: DistributionSpec, B: float, T_list: Sequence[int], method: str = "offline-min") -> ConvergenceSeries:
    series = ConvergenceSeries(method)
    for T in sorted(T_list):
        machines = proxy_opt(spec, T, B, method)
        series.records.append({"T": T, "machines": machines, "ratio": machines / T})
        logger.info(f"mu_{T}: {machines} machines, ratio {machines / T:.4f} ({method})")
    return series


def lb_identity_check(spec: DistributionSpec, B: float, T: int, n: int) -> Dict:
    """opt(mu_T) >= T opt(mu_n) / n - 2 - 2 T^2 / n, with exact values."""
    if not 1 <= T <= n:
        raise InputError(f"the lower-bound identity needs 1 <= T <= n, got T={T}, n={n}")
    if n > DEFAULT_LIMITS.max_demands:
        raise InputError(f"n={n} is beyond the exact oracle ({DEFAULT_LIMITS.max_demands})")
    lhs = proxy_opt(spec, T, B, "brute")
    rhs = T * proxy_opt(spec, n, B, "brute") / n - 2.0 - 2.0 * T * T / n
    return {"lhs": float(lhs), "rhs": rhs, "holds": lhs >= rhs - Config.TOLERANCE}


def subadditivity_check(J1: Sequence[float], J2: Sequence[float], B: float) -> bool:
    whole = brute_opt_mach(DemandSequence(tuple(J1) + tuple(J2)), B)
    return whole <= brute_opt_mach(DemandSequence(tuple(J1)), B) + brute_opt_mach(DemandSequence(tuple(J2)), B)


def deficiency_statistics(spec: DistributionSpec, T: int, trials: int, seed: int = Config.SEED) -> Dict:
    """Monte-Carlo max deficiency of sampled X against the quantile grid of mu_T."""
    if trials < 1:
        raise InputError(f"deficiency statistics need at least one trial, got {trials}")
    grid = quantile_instance(spec, T).sizes
    values = np.array([max(0, max_deficiency(sample(spec, T, seed, trial).sizes, grid).max_def)
                       for trial in range(trials)], dtype=float)
    mean = float(values.mean())
    return {
        "T": T,
        "trials": trials,
        "mean_max_def": mean,
        "quantiles": {str(q): float(np.quantile(values, q)) for q in (0.5, 0.9, 0.99)},
        "normalized": mean / math.sqrt(T),
    }


def empirical_spec(sizes: Sequence[float]) -> DiscreteSpec:
    if not sizes:
        raise InputError("an empirical measure needs at least one point")
    return DiscreteSpec(values=list(sizes), weights=[1.0 / len(sizes)] * len(sizes))


def quantile_measure_bounds(spec: DistributionSpec, T: int, tol: float = Config.TOLERANCE) -> Dict:
    """T - j >= T mu((s_(j-1), inf)) - 1 and T - j <= T mu([s_j, inf)) on the grid s_j = mu^-1(j/T)."""
    grid = quantile_instance(spec, T).sizes
    upper = all(T - j <= T * spec.mass_at_least(grid[j]) + tol for j in range(T))
    lower = all(T - j >= T * (1.0 - spec.cdf(grid[j - 1])) - 1 - tol for j in range(1, T + 1))
    return {"T": T, "upper": upper, "lower": lower, "holds": upper and lower}
