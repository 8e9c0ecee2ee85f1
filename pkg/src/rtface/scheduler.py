"""Per-track cadence of the three attribute recognizers.

Age and gender change slowly, so they may run only every few recognition
cycles while expression runs every cycle. Cycle 0 always runs everything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import FrozenSet, Mapping

from .errors import InvalidInputError

AGE = "age"
GENDER = "gender"
EXPRESSION = "expression"
TASKS = (AGE, GENDER, EXPRESSION)

TaskSet = FrozenSet[str]


@dataclass(frozen=True)
class CadencePolicy:
    expression_every: int = 1
    age_every: int = 4
    gender_every: int = 4

    def __post_init__(self):
        for name in ("expression_every", "age_every", "gender_every"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise InvalidInputError(f"{name} must be an integer >= 1, got {v!r}")

    def every(self, task: str) -> int:
        return getattr(self, f"{task}_every")

    @property
    def period(self) -> int:
        return math.lcm(self.expression_every, self.age_every, self.gender_every)

    @classmethod
    def every_cycle(cls) -> "CadencePolicy":
        return cls(1, 1, 1)


def tasks_for(policy: CadencePolicy, cycle_index: int) -> TaskSet:
    if cycle_index < 0:
        raise InvalidInputError(f"cycle index must be >= 0, got {cycle_index}")
    return frozenset(t for t in TASKS if cycle_index % policy.every(t) == 0)


def expected_cost(policy: CadencePolicy, per_task_latency: Mapping[str, float]) -> float:
    """Long-run mean recognition time per face per cycle, in ms."""
    total = 0.0
    for task in TASKS:
        lat = per_task_latency.get(task, 0.0)
        if lat < 0:
            raise InvalidInputError(f"negative latency for {task}: {lat}")
        total += lat / policy.every(task)
    return total
