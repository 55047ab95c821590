"""Demand-stream generation, quantile instances and instance algebra.

Randomness: numpy's PCG64 bit generator. A trial's stream is seeded by
SeedSequence(master_seed, spawn_key=(trial,)), which hashes the pair, so
trial streams are independent and reproducible for a pinned numpy.
"""
import bisect
import logging
import math
from typing import Annotated, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from config import Config
from core.errors import ConfigurationError, InputError, ProtocolError
from core.failover_model import DemandSequence, Edge, make_edge

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-12


def make_rng(seed: int, trial: Optional[int] = None) -> np.random.Generator:
    key = () if trial is None else (int(trial),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


class _Distribution(BaseModel):
    model_config = ConfigDict(frozen=True)

    @property
    def support(self) -> tuple:
        raise NotImplementedError

    def check_support(self, max_size: float, tol: float = Config.TOLERANCE) -> None:
        lo, hi = self.support
        if lo < 0 or hi > max_size + tol:
            raise ConfigurationError(f"support [{lo}, {hi}] leaves [0, {max_size}]")


class UniformSpec(_Distribution):
    kind: Literal["uniform"] = "uniform"
    lo: float = Field(ge=0.0)
    hi: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.hi < self.lo:
            raise ValueError("uniform needs lo <= hi")
        return self

    @property
    def support(self) -> tuple:
        return (self.lo, self.hi)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=n)

    def quantile(self, p: float) -> float:
        return self.lo + p * (self.hi - self.lo)

    def cdf(self, x: float) -> float:
        if self.hi == self.lo:
            return 1.0 if x >= self.lo else 0.0
        return min(1.0, max(0.0, (x - self.lo) / (self.hi - self.lo)))

    def mass_at_least(self, x: float) -> float:
        if self.hi == self.lo:
            return 1.0 if x <= self.lo else 0.0
        return 1.0 - self.cdf(x)


class PointMassSpec(_Distribution):
    kind: Literal["point"] = "point"
    value: float = Field(ge=0.0)

    @property
    def support(self) -> tuple:
        return (self.value, self.value)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.value)

    def quantile(self, p: float) -> float:
        return self.value

    def cdf(self, x: float) -> float:
        return 1.0 if x >= self.value else 0.0

    def mass_at_least(self, x: float) -> float:
        return 1.0 if x <= self.value else 0.0


class DiscreteSpec(_Distribution):
    kind: Literal["discrete"] = "discrete"
    values: List[float]
    weights: List[float]

    @model_validator(mode="after")
    def _weights(self):
        if not self.values or len(self.values) != len(self.weights):
            raise ValueError("discrete needs one weight per value")
        if any(w < 0 for w in self.weights) or any(v < 0 for v in self.values):
            raise ValueError("discrete values and weights are non-negative")
        if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"weights sum to {math.fsum(self.weights)}, not 1")
        return self

    @property
    def atoms(self) -> tuple:
        """Sorted atoms with their cumulative weights."""
        merged = {}
        for v, w in zip(self.values, self.weights):
            merged[v] = merged.get(v, 0.0) + w
        xs = sorted(merged)
        cumulative = np.cumsum([merged[x] for x in xs]).tolist()
        return xs, cumulative

    @property
    def support(self) -> tuple:
        return (min(self.values), max(self.values))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        xs, cumulative = self.atoms
        probs = np.diff([0.0] + cumulative)
        return rng.choice(np.asarray(xs), size=n, p=probs / probs.sum())

    def quantile(self, p: float) -> float:
        xs, cumulative = self.atoms
        if p <= 0:
            return xs[0]
        # smallest atom whose cumulative weight reaches p
        k = bisect.bisect_left(cumulative, p - WEIGHT_TOLERANCE)
        return xs[min(k, len(xs) - 1)]

    def cdf(self, x: float) -> float:
        xs, cumulative = self.atoms
        k = bisect.bisect_right(xs, x)
        return cumulative[k - 1] if k else 0.0

    def mass_at_least(self, x: float) -> float:
        xs, cumulative = self.atoms
        k = bisect.bisect_left(xs, x)
        return 1.0 - (cumulative[k - 1] if k else 0.0)


class MixtureSpec(_Distribution):
    kind: Literal["mixture"] = "mixture"
    components: List["DistributionSpec"]
    weights: List[float]

    @model_validator(mode="after")
    def _weights(self):
        if not self.components or len(self.components) != len(self.weights):
            raise ValueError("mixture needs one weight per component")
        if any(w < 0 for w in self.weights):
            raise ValueError("mixture weights are non-negative")
        if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"weights sum to {math.fsum(self.weights)}, not 1")
        return self

    @property
    def support(self) -> tuple:
        bounds = [c.support for c, w in zip(self.components, self.weights) if w > 0]
        return (min(b[0] for b in bounds), max(b[1] for b in bounds))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        picks = rng.choice(len(self.components), size=n, p=np.asarray(self.weights) / sum(self.weights))
        out = np.empty(n)
        for i, comp in enumerate(self.components):
            mask = picks == i
            if mask.any():
                out[mask] = comp.draw(rng, int(mask.sum()))
        return out

    def as_discrete(self) -> DiscreteSpec:
        """Flatten a mixture of atoms; mixtures with a continuous part have no closed-form quantile."""
        values, weights = [], []
        for comp, w in zip(self.components, self.weights):
            if isinstance(comp, MixtureSpec):
                comp = comp.as_discrete()
            if isinstance(comp, PointMassSpec):
                values.append(comp.value)
                weights.append(w)
            elif isinstance(comp, DiscreteSpec):
                values.extend(comp.values)
                weights.extend(w * cw for cw in comp.weights)
            else:
                raise ConfigurationError("quantiles of mixtures with a continuous component are not supported")
        total = math.fsum(weights)
        return DiscreteSpec(values=values, weights=[w / total for w in weights])

    def quantile(self, p: float) -> float:
        return self.as_discrete().quantile(p)

    def cdf(self, x: float) -> float:
        return math.fsum(w * c.cdf(x) for c, w in zip(self.components, self.weights))

    def mass_at_least(self, x: float) -> float:
        return math.fsum(w * c.mass_at_least(x) for c, w in zip(self.components, self.weights))


DistributionSpec = Annotated[
    Union[UniformSpec, PointMassSpec, DiscreteSpec, MixtureSpec], Field(discriminator="kind")
]
MixtureSpec.model_rebuild()


class QuantileInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    T: int = Field(ge=1)
    sizes: List[float]

    @property
    def demands(self) -> DemandSequence:
        return DemandSequence(tuple(self.sizes))


def parse_distribution(text: str) -> DistributionSpec:
    """`uniform:lo:hi`, `point:v`, `discrete:v1,v2:w1,w2` or `json:{...}`."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "uniform":
            lo, hi = rest.split(":")
            return UniformSpec(lo=float(lo), hi=float(hi))
        if kind == "point":
            return PointMassSpec(value=float(rest))
        if kind == "discrete":
            values, weights = rest.split(":")
            return DiscreteSpec(values=[float(v) for v in values.split(",")],
                                weights=[float(w) for w in weights.split(",")])
        if kind == "json":
            return TypeAdapter(DistributionSpec).validate_json(rest)
    except ValueError as e:
        raise ConfigurationError(f"cannot parse distribution {text!r}: {e}")
    raise ConfigurationError(f"unsupported distribution kind {kind!r}")


def sample(spec: DistributionSpec, n: int, seed: int, trial: Optional[int] = None,
           decimals: int = Config.SIZE_DECIMALS) -> DemandSequence:
    """n i.i.d. sizes, rounded to `decimals` places so the exact oracle accepts them."""
    if n < 0:
        raise InputError(f"cannot sample {n} demands")
    if not hasattr(spec, "draw"):
        raise ConfigurationError(f"unsupported distribution {spec!r}")
    rng = make_rng(seed, trial)
    draws = np.round(spec.draw(rng, n), decimals)
    lo, hi = spec.support
    draws = np.clip(draws, lo, hi)
    logger.debug(f"Sampled {n} demands from {spec.kind} (seed {seed}, trial {trial})")
    return DemandSequence(tuple(float(x) for x in draws))


def quantile_instance(spec: DistributionSpec, T: int) -> QuantileInstance:
    """The deterministic instance {mu^-1(j/T) : j = 0..T-1}, nondecreasing."""
    if T < 1:
        raise InputError(f"quantile instance needs T >= 1, got {T}")
    if isinstance(spec, MixtureSpec):
        spec = spec.as_discrete()
    sizes = [spec.quantile(j / T) for j in range(T)]
    return QuantileInstance(T=T, sizes=sizes)


def duplicate(instance: DemandSequence, k: int) -> DemandSequence:
    """k copies of every demand (the whole sequence repeated k times)."""
    if k < 0:
        raise InputError(f"cannot take {k} copies")
    return DemandSequence(tuple(instance.sizes) * k)


def dominates(first: Sequence[float], second: Sequence[float]) -> bool:
    """True iff sorted(first)[i] <= sorted(second)[i] for every i."""
    if len(first) != len(second):
        raise InputError(f"dominance compares equal-size instances, got {len(first)} and {len(second)}")
    return all(a <= b for a, b in zip(sorted(first), sorted(second)))


def adversary_step(placements_so_far: Sequence[Edge], epsilon: float) -> List[float]:
    """Continuation of the 4-machine lower-bound instance after two epsilon demands.

    Same edge -> two demands of size 1 - epsilon; otherwise one demand of size 1.
    """
    if len(placements_so_far) < 2:
        raise ProtocolError("the adversary continues only after both epsilon demands are placed")
    first, second = (make_edge(*e) for e in placements_so_far[:2])
    if first == second:
        return [1.0 - epsilon, 1.0 - epsilon]
    return [1.0]
