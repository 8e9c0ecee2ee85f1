"""Greedy nearest-centroid tracking of faces across frames."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Sequence, Tuple

from .aggregation import DEFAULT_WINDOW, AttributeWindows
from .core import DEFAULT_FRAME_SIZE, BBox, Detection, Point, centroid
from .errors import InvalidInputError

HISTORY_LEN = 32


@dataclass(frozen=True)
class TrackerConfig:
    max_match_distance: float = 0.10  # fraction of the frame diagonal
    expiry_misses: int = 10

    def __post_init__(self):
        if not self.max_match_distance > 0:
            raise InvalidInputError("max_match_distance must be positive")
        if self.expiry_misses < 1:
            raise InvalidInputError("expiry_misses must be >= 1")


@dataclass
class FaceTrack:
    track_id: int
    last_box: BBox
    last_seen_frame: int
    estimates: AttributeWindows
    centroid_history: Deque[Tuple[int, Point]] = field(default_factory=lambda: deque(maxlen=HISTORY_LEN))
    missed_count: int = 0
    recognition_cycle: int = 0

    @property
    def centroid(self) -> Point:
        return centroid(self.last_box)


@dataclass
class Assignment:
    matched: List[Tuple[int, int]] = field(default_factory=list)
    new_track_ids: List[int] = field(default_factory=list)
    missed_track_ids: List[int] = field(default_factory=list)

    def track_for_detection(self, n_detections: int) -> List[int]:
        """Track id for each detection index, in detection order."""
        out = [-1] * n_detections
        for tid, di in self.matched:
            out[di] = tid
        for tid, di in zip(self.new_track_ids, [i for i in range(n_detections) if out[i] < 0]):
            out[di] = tid
        return out


class TrackRegistry:
    def __init__(
        self,
        config: TrackerConfig = TrackerConfig(),
        frame_size: Tuple[int, int] = DEFAULT_FRAME_SIZE,
        window: int = DEFAULT_WINDOW,
    ):
        self.config = config
        self.frame_size = frame_size
        self.window = window
        self.tracks: Dict[int, FaceTrack] = {}
        self._next_id = 1
        self._last_frame = None

    @property
    def threshold_px(self) -> float:
        w, h = self.frame_size
        return self.config.max_match_distance * math.hypot(w, h)

    def __len__(self) -> int:
        return len(self.tracks)

    def __contains__(self, track_id: int) -> bool:
        return track_id in self.tracks

    def match_detections(self, detections: Sequence[Detection], frame_id: int, ts: int) -> Assignment:
        """Greedily pair tracks and detections by ascending centroid distance.

        Pairs farther apart than the threshold are never accepted. Equal
        distances are resolved by (track_id, detection index).
        """
        if self._last_frame is not None and frame_id <= self._last_frame:
            raise InvalidInputError(f"frame {frame_id} is not newer than {self._last_frame}")
        self._last_frame = frame_id
        limit = self.threshold_px
        det_centers = [centroid(d.box) for d in detections]
        pairs = []
        for tid in sorted(self.tracks):
            tc = self.tracks[tid].centroid
            for di, dc in enumerate(det_centers):
                d = math.hypot(tc[0] - dc[0], tc[1] - dc[1])
                if d <= limit:
                    pairs.append((d, tid, di))
        pairs.sort()

        out = Assignment()
        used_tracks, used_dets = set(), set()
        for _, tid, di in pairs:
            if tid in used_tracks or di in used_dets:
                continue
            used_tracks.add(tid)
            used_dets.add(di)
            out.matched.append((tid, di))
            track = self.tracks[tid]
            track.last_box = detections[di].box
            track.last_seen_frame = frame_id
            track.missed_count = 0
            track.centroid_history.append((ts, det_centers[di]))

        for di, det in enumerate(detections):
            if di in used_dets:
                continue
            tid = self._next_id
            self._next_id += 1
            track = FaceTrack(tid, det.box, frame_id, AttributeWindows(self.window))
            track.centroid_history.append((ts, det_centers[di]))
            self.tracks[tid] = track
            out.new_track_ids.append(tid)

        for tid in sorted(self.tracks):
            if tid not in used_tracks and tid not in out.new_track_ids:
                self.tracks[tid].missed_count += 1
                out.missed_track_ids.append(tid)
        return out

    def prune(self, ts: int = 0) -> List[int]:
        gone = [tid for tid, t in sorted(self.tracks.items()) if t.missed_count > self.config.expiry_misses]
        for tid in gone:
            del self.tracks[tid]
        return gone
