"""Instance files.

JSON:  {"B": 1.0, "m": 4 or null, "sizes": [0.25, ...]}
Text:  first line "B m" (m may be "-"), then one decimal size per line.
"""
import json
import logging
import os
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError

from config import Config
from core.errors import InputError
from core.failover_model import DemandSequence, ProblemParams

logger = logging.getLogger(__name__)


class InstanceFile(BaseModel):
    B: float = Field(ge=1.0)
    m: Optional[int] = Field(default=None, ge=2)
    sizes: List[float] = []

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(failover_capacity=self.B, machine_budget=self.m)

    @property
    def demands(self) -> DemandSequence:
        return DemandSequence.of(self.sizes, self.params)


def _parse_text(text: str) -> InstanceFile:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise InputError("empty instance file")
    header = lines[0].split()
    if len(header) != 2:
        raise InputError(f"instance header must be 'B m', got {lines[0]!r}")
    try:
        b = float(header[0])
        m = None if header[1] == "-" else int(header[1])
        sizes = [float(line) for line in lines[1:]]
    except ValueError as e:
        raise InputError(f"malformed instance file: {e}")
    return InstanceFile(B=b, m=m, sizes=sizes)


def read_instance(path: str) -> Tuple[ProblemParams, DemandSequence]:
    """Read either format; sizes outside [0, min(1, B/2)] + tol are rejected."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise InputError(f"cannot read instance {path}: {e}")
    try:
        if text.lstrip().startswith("{"):
            instance = InstanceFile.model_validate(json.loads(text))
        else:
            instance = _parse_text(text)
    except (ValidationError, json.JSONDecodeError) as e:
        raise InputError(f"malformed instance file {path}: {e}")
    params = instance.params
    demands = instance.demands
    logger.info(f"Loaded {len(demands)} demands from {path} (B={params.failover_capacity}, m={params.machine_budget})")
    return params, demands


def write_instance(path: str, params: ProblemParams, demands: DemandSequence, fmt: str = "json") -> str:
    demands.validate(params)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if fmt == "json":
        body = json.dumps({"B": params.failover_capacity, "m": params.machine_budget,
                           "sizes": list(demands.sizes)})
    elif fmt == "text":
        m = "-" if params.machine_budget is None else str(params.machine_budget)
        rows = [f"{params.failover_capacity!r} {m}"]
        rows += [f"{s:.{Config.SIZE_DECIMALS}f}" for s in demands.sizes]
        body = "\n".join(rows) + "\n"
    else:
        raise InputError(f"unknown instance format {fmt!r}")
    with open(path, "w", encoding="utf-8") as f:
        f.write(body)
    return path
