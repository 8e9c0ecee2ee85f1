"""Controller-owned bounded frame store with per-stage checkout.

The store is a single-owner structure: only the controller mutates it.
Workers receive copies of checked-out frames through messages.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Dict, Iterator, Optional, Sequence

from .core import Detection, Frame
from .errors import ContractError, InvalidInputError, OrderingError

DETECTION = "detection"
RECOGNITION = "recognition"
STAGES = (DETECTION, RECOGNITION)

DEFAULT_CAPACITY = 32


def is_eligible(frame: Frame, stage: str) -> bool:
    meta = frame.meta
    if meta.in_flight_stage is not None:
        return False
    if stage == DETECTION:
        return not meta.detection_done
    if stage == RECOGNITION:
        return meta.detection_done and not meta.recognition_done and len(meta.detections) > 0
    raise InvalidInputError(f"unknown stage {stage!r}")


class FrameStore:
    """Most-recent-frames buffer.

    Eviction removes the oldest frame that is not checked out. Checkout hands
    out the *newest* eligible frame, so slow workers always see fresh data.
    A stage never moves backwards: frames at or below the id it last checked
    out are passed over.
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise InvalidInputError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.frames: "OrderedDict[int, Frame]" = OrderedDict()
        self.drop_count = 0
        self.in_flight: Dict[str, int] = {}
        self._last_id: Optional[int] = None
        self.watermark: Dict[str, int] = {}

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Frame]:
        return iter(self.frames.values())

    def __contains__(self, frame_id: int) -> bool:
        return frame_id in self.frames

    def push(self, frame: Frame) -> Optional[Frame]:
        """Append ``frame``; return the evicted frame when over capacity."""
        if self._last_id is not None and frame.id <= self._last_id:
            raise OrderingError(f"frame id {frame.id} not greater than {self._last_id}")
        self._last_id = frame.id
        self.frames[frame.id] = frame
        if len(self.frames) <= self.capacity:
            return None
        victim = next((f for f in self.frames.values() if f.meta.in_flight_stage is None), None)
        if victim is None:
            return None
        del self.frames[victim.id]
        if not victim.meta.detection_done:
            self.drop_count += 1
        return victim

    def checkout(self, stage: str) -> Optional[Frame]:
        if stage not in STAGES:
            raise InvalidInputError(f"unknown stage {stage!r}")
        if stage in self.in_flight:
            raise ContractError(f"{stage} already has frame {self.in_flight[stage]} checked out")
        floor = self.watermark.get(stage, -1)
        for frame in reversed(self.frames.values()):
            if frame.id <= floor:
                break
            if is_eligible(frame, stage):
                frame.meta.in_flight_stage = stage
                self.in_flight[stage] = frame.id
                self.watermark[stage] = frame.id
                return frame
        return None

    def complete(self, frame_id: int, stage: str, detections: Sequence[Detection] = ()) -> bool:
        """Finish a checkout. Returns False when the frame was already evicted."""
        if self.in_flight.get(stage) != frame_id:
            raise ContractError(f"frame {frame_id} is not checked out for {stage}")
        del self.in_flight[stage]
        frame = self.frames.get(frame_id)
        if frame is None:
            return False
        frame.meta.in_flight_stage = None
        if stage == DETECTION:
            frame.meta.detections = tuple(detections)
            frame.meta.detection_done = True
        else:
            frame.meta.recognition_done = True
        return True

    def latest(self) -> Optional[Frame]:
        if not self.frames:
            return None
        return next(reversed(self.frames.values()))

    def get(self, frame_id: int) -> Optional[Frame]:
        return self.frames.get(frame_id)
