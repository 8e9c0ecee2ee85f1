"""Domain types and box geometry.

Timestamps are integer microseconds since the start of a run. Boxes are
real-valued ``(x, y, w, h)`` with ``(x, y)`` the top-left corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from .errors import InvalidInputError

Point = Tuple[float, float]

US_PER_MS = 1_000
US_PER_S = 1_000_000

DEFAULT_FRAME_SIZE = (240, 180)

EXPRESSIONS: Tuple[str, ...] = (
    "neutral",
    "happiness",
    "sadness",
    "surprise",
    "fear",
    "disgust",
    "anger",
)
N_EXPRESSIONS = len(EXPRESSIONS)

GENDERS = ("female", "male")

_NORM_TOL = 1e-9


def ms_to_us(ms: float) -> int:
    return int(round(ms * US_PER_MS))


def us_to_ms(us: int) -> float:
    return us / US_PER_MS


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise InvalidInputError(f"degenerate box: w={self.w}, h={self.h}")
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise InvalidInputError(f"non-finite box coordinates: {self}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def as_list(self) -> list:
        return [float(self.x), float(self.y), float(self.w), float(self.h)]

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BBox":
        return cls(cx - w / 2, cy - h / 2, w, h)


def clamp_box(box: BBox, width: float, height: float) -> Optional[BBox]:
    """Intersect ``box`` with the frame rectangle; None if nothing is left."""
    x1 = min(max(box.x, 0.0), width)
    y1 = min(max(box.y, 0.0), height)
    x2 = min(max(box.x2, 0.0), width)
    y2 = min(max(box.y2, 0.0), height)
    if x2 - x1 <= 0 or y2 - y1 <= 0:
        return None
    return BBox(x1, y1, x2 - x1, y2 - y1)


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes, exact area arithmetic."""
    for box in (a, b):
        if not (box.w > 0 and box.h > 0):
            raise InvalidInputError(f"degenerate box: {box}")
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def centroid(b: BBox) -> Point:
    if not (b.w > 0 and b.h > 0):
        raise InvalidInputError(f"degenerate box: {b}")
    return (b.x + b.w / 2, b.y + b.h / 2)


@dataclass(frozen=True)
class Detection:
    box: BBox
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInputError(f"confidence out of [0,1]: {self.confidence}")


@dataclass
class FrameMeta:
    """Per-frame processing state carried alongside the pixels.

    ``track_ids`` is filled by the controller after tracking and runs
    parallel to ``detections``.
    """

    detection_done: bool = False
    recognition_done: bool = False
    detections: Tuple[Detection, ...] = ()
    track_ids: Tuple[int, ...] = ()
    in_flight_stage: Optional[str] = None


@dataclass
class Frame:
    id: int
    timestamp: int
    width: int = DEFAULT_FRAME_SIZE[0]
    height: int = DEFAULT_FRAME_SIZE[1]
    pixels: Optional[bytes] = None
    meta: FrameMeta = field(default_factory=FrameMeta)

    def __post_init__(self):
        if self.timestamp < 0:
            raise InvalidInputError(f"negative timestamp {self.timestamp}")


@dataclass(frozen=True)
class ExpressionDist:
    probabilities: Tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.probabilities)
        if len(p) != N_EXPRESSIONS:
            raise InvalidInputError(f"expected {N_EXPRESSIONS} probabilities, got {len(p)}")
        if any(not (0.0 <= v <= 1.0) for v in p):
            raise InvalidInputError(f"probability out of [0,1]: {p}")
        if abs(math.fsum(p) - 1.0) > _NORM_TOL:
            raise InvalidInputError(f"probabilities sum to {math.fsum(p)}, not 1")
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def normalized(cls, values: Sequence[float]) -> "ExpressionDist":
        """Build from non-negative weights, rescaling them to sum to one."""
        total = math.fsum(values)
        if total <= 0:
            raise InvalidInputError("cannot normalize an all-zero distribution")
        return cls(tuple(min(1.0, max(0.0, v / total)) for v in values))

    @classmethod
    def smoothed_one_hot(cls, index: int, peak: float = 0.9) -> "ExpressionDist":
        rest = (1.0 - peak) / (N_EXPRESSIONS - 1)
        return cls.normalized([peak if i == index else rest for i in range(N_EXPRESSIONS)])

    @property
    def argmax(self) -> int:
        # ties resolve to the lowest class index
        best = 0
        for i, v in enumerate(self.probabilities):
            if v > self.probabilities[best]:
                best = i
        return best

    @property
    def label(self) -> str:
        return EXPRESSIONS[self.argmax]


@dataclass(frozen=True)
class AttributeMeasurement:
    measured_at: int
    age: Optional[float] = None
    gender_p_female: Optional[float] = None
    expression: Optional[ExpressionDist] = None

    def __post_init__(self):
        if self.age is None and self.gender_p_female is None and self.expression is None:
            raise InvalidInputError("measurement carries no attribute")
        if self.gender_p_female is not None and not 0.0 <= self.gender_p_female <= 1.0:
            raise InvalidInputError(f"gender probability out of [0,1]: {self.gender_p_female}")
        if self.measured_at < 0:
            raise InvalidInputError("negative timestamp")

    def to_dict(self) -> dict:
        return {
            "measured_at": self.measured_at,
            "age": self.age,
            "gender_p_female": self.gender_p_female,
            "expression": None if self.expression is None else list(self.expression.probabilities),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeMeasurement":
        expr = d.get("expression")
        return cls(
            measured_at=d["measured_at"],
            age=d.get("age"),
            gender_p_female=d.get("gender_p_female"),
            expression=None if expr is None else ExpressionDist(tuple(expr)),
        )


def gender_label(p_female: float) -> str:
    return "female" if p_female >= 0.5 else "male"
