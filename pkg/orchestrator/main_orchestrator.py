import asyncio
import hashlib
import json
import logging
import time
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, TypeVar

import pandas as pd
from pydantic import BaseModel, Field

from agents.stochastic_agent import failover_stochastic
from agents.worstcase_agent import clique_size_for, run_failover_worstcase, run_small_demands
from analysis.convergence import ConvergenceSeries, proxy_opt
from config import Config
from core.errors import ConfigurationError, InputError
from core.failover_model import (Assignment, DemandSequence, ProblemParams, is_feasible,
                                 utilization)
from data_ingestion.instances import DistributionSpec, parse_distribution, sample
from offline.offline_min import offline_min_failover

logger = logging.getLogger(__name__)

T = TypeVar("T")

Algorithm = Literal["worstcase", "small", "stochastic", "offline-min"]
BENCH_COLUMNS = ["m", "trial", "alg", "utilization", "ratio"]


class RunRequest(BaseModel):
    alg: Algorithm
    B: float = Field(default=1.0, ge=1.0)
    m: Optional[int] = Field(default=None, ge=2)
    L: Optional[int] = Field(default=None, ge=2)
    epsilon: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    cst1: float = Field(default=Config.DEFAULT_CST1, ge=0.0)
    seed: int = Config.SEED

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(failover_capacity=self.B, machine_budget=self.m)


class RunReport(BaseModel):
    algorithm: str
    instance_digest: str
    m: Optional[int]
    B: float
    utilization: float
    machines: int
    stop_index: int
    feasible: bool
    wall_time: float
    seed: int
    details: Dict[str, Any] = {}


def instance_digest(demands: DemandSequence, params: ProblemParams) -> str:
    body = json.dumps({"B": params.failover_capacity, "m": params.machine_budget, "sizes": list(demands.sizes)})
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def opt_upper_bound(m: int, B: float) -> float:
    """No assignment on m machines places more than min(m, (m - 1) B) / 2."""
    return min(m, (m - 1) * B) / 2.0


class MainOrchestrator:
    def __init__(self, jobs: int = Config.JOBS):
        if jobs < 1:
            raise ConfigurationError(f"--jobs must be at least 1, got {jobs}")
        self.jobs = jobs

    def execute(self, request: RunRequest, demands: DemandSequence) -> Dict[str, Any]:
        """Run one algorithm; returns the assignment and algorithm-specific details."""
        params = request.params
        demands.validate(params)
        details: Dict[str, Any] = {}
        if request.alg in ("worstcase", "small", "stochastic") and request.m is None:
            raise InputError(f"--alg {request.alg} needs a machine budget --m")
        if request.alg == "worstcase":
            run = run_failover_worstcase(demands, params)
            assignment, stop_index = run.assignment, run.stop_index
        elif request.alg == "small":
            L = request.L or clique_size_for(request.m)
            run = run_small_demands(demands, params, L)
            assignment, stop_index = run.assignment, run.stop_index
            details["L"] = L
        elif request.alg == "stochastic":
            run = failover_stochastic(demands, params, request.cst1)
            assignment, stop_index = run.assignment, run.stop_index
            details["rounds"] = [r.outcome for r in run.rounds]
        else:
            result = offline_min_failover(demands, request.B, request.epsilon)
            assignment, stop_index = result.assignment, len(demands)
            details.update(lp_value=result.lp_value, breakdown=result.breakdown,
                           leftover_constant=result.stats.constant)
        return {"assignment": assignment, "stop_index": stop_index, "details": details}

    def run(self, request: RunRequest, demands: DemandSequence) -> RunReport:
        started = time.perf_counter()
        outcome = self.execute(request, demands)
        assignment: Assignment = outcome["assignment"]
        feasible = is_feasible(assignment, demands, request.params)
        if request.m is not None and request.alg != "offline-min":
            feasible = feasible and assignment.machines <= request.m
        if not feasible:
            logger.error(f"{request.alg} produced an infeasible assignment")
        report = RunReport(
            algorithm=request.alg,
            instance_digest=instance_digest(demands, request.params),
            m=request.m,
            B=request.B,
            utilization=utilization(assignment, demands),
            machines=assignment.machines,
            stop_index=outcome["stop_index"],
            feasible=feasible,
            wall_time=time.perf_counter() - started,
            seed=request.seed,
            details=outcome["details"],
        )
        logger.info(f"{request.alg}: utilization {report.utilization:.4f} on {report.machines} machines")
        return report

    async def _gather(self, jobs: Sequence[Callable[[], T]]) -> List[T]:
        slots = asyncio.Semaphore(self.jobs)

        async def one(job: Callable[[], T]) -> T:
            async with slots:
                return await asyncio.to_thread(job)

        return await asyncio.gather(*(one(job) for job in jobs))

    def run_parallel(self, jobs: Sequence[Callable[[], T]]) -> List[T]:
        """Results come back in job order whatever the completion order."""
        if not jobs:
            return []
        return asyncio.run(self._gather(jobs))

    def _bench_trial(self, alg: str, m: int, trial: int, spec: DistributionSpec, B: float,
                     seed: int, cst1: float) -> Dict[str, Any]:
        demands = sample(spec, Config.BENCH_STREAM_FACTOR * m, seed, trial)
        request = RunRequest(alg=alg, B=B, m=m, cst1=cst1, seed=seed)
        outcome = self.execute(request, demands)
        if not is_feasible(outcome["assignment"], demands, request.params):
            logger.error(f"bench {alg} m={m} trial={trial}: infeasible assignment")
        value = utilization(outcome["assignment"], demands)
        return {"m": m, "trial": trial, "alg": alg, "utilization": value,
                "ratio": value / opt_upper_bound(m, B)}

    def bench(self, suite: str, distribution: str = Config.BENCH_DISTRIBUTION, B: float = 1.0,
              seed: int = Config.SEED, trials: Optional[int] = None,
              machines: Optional[Sequence[int]] = None, cst1: float = Config.DEFAULT_CST1) -> pd.DataFrame:
        """One row per (m, trial): m, trial, alg, utilization, ratio vs min(m, (m-1)B)/2."""
        if suite not in Config.BENCH_SUITES:
            raise ConfigurationError(f"unknown bench suite {suite!r}; expected one of {sorted(Config.BENCH_SUITES)}")
        settings = Config.BENCH_SUITES[suite]
        spec = parse_distribution(distribution)
        spec.check_support(ProblemParams(failover_capacity=B).max_size)
        count = settings["trials"] if trials is None else trials
        grid = list(settings["machines"] if machines is None else machines)
        jobs = [
            (lambda m=m, t=t: self._bench_trial(settings["alg"], m, t, spec, B, seed, cst1))
            for m in grid for t in range(count)
        ]
        rows = self.run_parallel(jobs)
        frame = pd.DataFrame(rows, columns=BENCH_COLUMNS)
        if not frame.empty:
            frame = frame.sort_values(["m", "trial"], kind="mergesort").reset_index(drop=True)
            summary = frame.groupby("m")["ratio"].mean()
            for m, mean in summary.items():
                logger.info(f"bench {suite}: m={m} mean ratio {mean:.4f}")
        return frame

    def converge(self, spec: DistributionSpec, B: float, T_list: Sequence[int],
                 method: str = "offline-min") -> ConvergenceSeries:
        Ts = sorted(T_list)
        values = self.run_parallel([(lambda T=T: proxy_opt(spec, T, B, method)) for T in Ts])
        series = ConvergenceSeries(method)
        for T, machines in zip(Ts, values):
            series.records.append({"T": T, "machines": machines, "ratio": machines / T})
        return series


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format="%.9g", lineterminator="\n")

