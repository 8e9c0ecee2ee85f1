"""Rolling per-track attribute windows and the smoothed values shown on screen."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import (
    EXPRESSIONS,
    AttributeMeasurement,
    ExpressionDist,
    gender_label,
)
from .errors import InvalidInputError

DEFAULT_WINDOW = 8


class _Window:
    """Bounded list of (measured_at, arrival, value), sorted by time then arrival."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._keys: List[Tuple[int, int]] = []
        self._values: list = []

    def add(self, key: Tuple[int, int], value) -> None:
        i = bisect.bisect_right(self._keys, key)
        self._keys.insert(i, key)
        self._values.insert(i, value)
        if len(self._values) > self.capacity:
            del self._keys[0]
            del self._values[0]

    @property
    def values(self) -> list:
        return list(self._values)

    @property
    def newest(self) -> Optional[int]:
        return self._keys[-1][0] if self._keys else None

    def __len__(self) -> int:
        return len(self._values)


class AttributeWindows:
    def __init__(self, capacity: int = DEFAULT_WINDOW):
        if capacity < 1:
            raise InvalidInputError(f"window capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.age = _Window(capacity)
        self.gender = _Window(capacity)
        self.expression = _Window(capacity)
        self._arrivals = 0

    def update(self, m: AttributeMeasurement) -> None:
        key = (m.measured_at, self._arrivals)
        self._arrivals += 1
        if m.age is not None:
            self.age.add(key, float(m.age))
        if m.gender_p_female is not None:
            self.gender.add(key, float(m.gender_p_female))
        if m.expression is not None:
            self.expression.add(key, m.expression)

    @property
    def age_window(self) -> List[float]:
        return self.age.values

    @property
    def gender_window(self) -> List[float]:
        return self.gender.values

    @property
    def expression_window(self) -> List[ExpressionDist]:
        return self.expression.values

    def newest_measurement(self) -> Optional[int]:
        stamps = [w.newest for w in (self.age, self.gender, self.expression) if w.newest is not None]
        return max(stamps) if stamps else None

    def smoothed(self) -> Optional["SmoothedAttributes"]:
        return smoothed(self)


@dataclass(frozen=True)
class SmoothedAttributes:
    age: Optional[float] = None
    gender_p_female: Optional[float] = None
    gender_label: Optional[str] = None
    expression: Optional[ExpressionDist] = None
    expression_label: Optional[str] = None
    sample_counts: Dict[str, int] = field(default_factory=dict)


def update(windows: AttributeWindows, m: AttributeMeasurement) -> None:
    windows.update(m)


def smoothed(windows: AttributeWindows) -> Optional[SmoothedAttributes]:
    """Uniform mean over each non-empty window; None when nothing was measured."""
    ages = windows.age_window
    genders = windows.gender_window
    exprs = windows.expression_window
    if not (ages or genders or exprs):
        return None
    kw: dict = {"sample_counts": {"age": len(ages), "gender": len(genders), "expression": len(exprs)}}
    if ages:
        kw["age"] = math.fsum(ages) / len(ages)
    if genders:
        p = math.fsum(genders) / len(genders)
        kw["gender_p_female"] = p
        kw["gender_label"] = gender_label(p)
    if exprs:
        mean = np.mean([e.probabilities for e in exprs], axis=0)
        dist = ExpressionDist.normalized(mean.tolist())
        kw["expression"] = dist
        kw["expression_label"] = EXPRESSIONS[dist.argmax]
    return SmoothedAttributes(**kw)
