"""Pipeline engine: grabber, controller/visualization, detection and recognition workers.

The controller is the only owner of the frame store, the track registry and
the attribute windows. Workers get immutable job messages and send back
result messages. Two drivers deliver those messages:

* ``virtual``: a discrete-event loop over a heap keyed by (ts, sequence);
  every wait is a scheduled event, so traces are reproducible byte for byte.
* ``realtime``: one thread per worker plus a grabber thread, talking to the
  controller over queues against the monotonic clock.
"""

from __future__ import annotations

import dataclasses
import heapq
import itertools
import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .aggregation import DEFAULT_WINDOW
from .alignment import FaceTemplate, alignment_residual, estimate_similarity
from .core import US_PER_S, AttributeMeasurement, BBox, Detection, Frame, ms_to_us
from .errors import ConfigError
from .frame_buffer import DEFAULT_CAPACITY, DETECTION, RECOGNITION, FrameStore
from .scheduler import TASKS, CadencePolicy, tasks_for
from .synthetic import (
    Scenario,
    ground_truth_at,
    match_truth,
    random_identity,
    stage_rng,
    synth_detect,
    synth_landmarks,
    synth_recognize,
)
from .trace import Trace, TraceEvent
from .tracker import TrackerConfig, TrackRegistry

log = logging.getLogger(__name__)

VIRTUAL = "virtual"
REALTIME = "realtime"


@dataclass(frozen=True)
class PipelineConfig:
    clock_mode: str = VIRTUAL
    frame_rate: float = 25.0
    visualization_rate: float = 25.0
    buffer_capacity: int = DEFAULT_CAPACITY
    tracker: TrackerConfig = TrackerConfig()
    cadence: CadencePolicy = CadencePolicy()
    window: int = DEFAULT_WINDOW
    template: Optional[FaceTemplate] = None

    def __post_init__(self):
        if self.clock_mode not in (VIRTUAL, REALTIME):
            raise ConfigError(f"unknown clock mode {self.clock_mode!r}")
        if not (self.frame_rate > 0 and self.visualization_rate > 0):
            raise ConfigError("rates must be positive")
        if self.buffer_capacity < 1 or self.window < 1:
            raise ConfigError("buffer capacity and window must be >= 1")

    @classmethod
    def for_scenario(cls, scenario: Scenario, **overrides) -> "PipelineConfig":
        """Defaults, then the scenario's pipeline section, then ``overrides``."""
        p = scenario.pipeline
        kw: dict = {"frame_rate": scenario.frame_rate}
        if p.cadence is not None:
            kw["cadence"] = p.cadence
        if p.buffer_capacity is not None:
            kw["buffer_capacity"] = p.buffer_capacity
        if p.window is not None:
            kw["window"] = p.window
        if p.visualization_rate is not None:
            kw["visualization_rate"] = p.visualization_rate
        tracker = {k: getattr(p, k) for k in ("max_match_distance", "expiry_misses") if getattr(p, k) is not None}
        if tracker:
            kw["tracker"] = TrackerConfig(**tracker)
        kw.update(overrides)
        return cls(**kw)

    @property
    def frame_interval_us(self) -> int:
        return int(round(US_PER_S / self.frame_rate))

    @property
    def tick_interval_us(self) -> int:
        return int(round(US_PER_S / self.visualization_rate))


# ---------------------------------------------------------------- messages


@dataclass(frozen=True)
class DetectionJob:
    frame_id: int
    frame_ts: int


@dataclass(frozen=True)
class FaceJob:
    track_id: int
    box: BBox
    cycle: int


@dataclass(frozen=True)
class RecognitionJob:
    frame_id: int
    frame_ts: int
    faces: Tuple[FaceJob, ...]


@dataclass(frozen=True)
class DetectionResult:
    frame_id: int
    detections: Tuple[Detection, ...]
    latency_us: int


@dataclass(frozen=True)
class FaceResult:
    frame_id: int
    frame_ts: int
    face_index: int
    n_faces: int
    face: FaceJob
    tasks: Tuple[str, ...]
    measurement: AttributeMeasurement
    latency_us: int
    landmark_residual: float
    generating: dict
    estimated: dict

    @property
    def last(self) -> bool:
        return self.face_index == self.n_faces - 1


# ---------------------------------------------------------------- workers


class StageWorkers:
    """Synthetic detection and recognition computations; pure given the job."""

    def __init__(self, scenario: Scenario, config: PipelineConfig):
        self.scenario = scenario
        self.config = config
        self.template = config.template or FaceTemplate.default()

    def detect(self, job: DetectionJob) -> DetectionResult:
        sc = self.scenario
        gt = ground_truth_at(sc, job.frame_ts)
        rng = stage_rng(sc.seed, job.frame_id, "detect")
        dets, latency_ms = synth_detect(gt, sc.detector_model, rng, sc.frame_size, ts_us=job.frame_ts)
        return DetectionResult(job.frame_id, tuple(dets), ms_to_us(latency_ms))

    def recognize_face(self, job: RecognitionJob, index: int) -> FaceResult:
        sc = self.scenario
        face = job.faces[index]
        lm_rng = stage_rng(sc.seed, job.frame_id, "landmarks", index)
        points, generating = synth_landmarks(face.box, self.template, sc.landmark_model, lm_rng)
        estimated = estimate_similarity(self.template.points, points)
        residual = alignment_residual(self.template.points, points, estimated)

        rng = stage_rng(sc.seed, job.frame_id, "recognize", index)
        truth = match_truth(face.box, ground_truth_at(sc, job.frame_ts)) or random_identity(rng, face.box)
        tasks = tasks_for(self.config.cadence, face.cycle)
        m, latency_ms = synth_recognize(truth, tasks, sc.recognizer_model, rng)
        return FaceResult(
            frame_id=job.frame_id,
            frame_ts=job.frame_ts,
            face_index=index,
            n_faces=len(job.faces),
            face=face,
            tasks=tuple(t for t in TASKS if t in tasks),
            measurement=m,
            latency_us=ms_to_us(latency_ms),
            landmark_residual=residual,
            generating=generating.to_dict(),
            estimated=estimated.to_dict(),
        )


# ---------------------------------------------------------------- controller


@dataclass(frozen=True)
class AnnotatedTrack:
    track_id: int
    box: BBox
    age: Optional[int] = None
    gender: Optional[str] = None
    expression: Optional[str] = None
    staleness_ms: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "track_id": self.track_id,
            "box": self.box.as_list(),
            "age": self.age,
            "gender": self.gender,
            "expression": self.expression,
            "staleness_ms": self.staleness_ms,
        }


@dataclass(frozen=True)
class AnnotatedFrame:
    ts: int
    frame_id: Optional[int] = None
    frame_ts: Optional[int] = None
    tracks: Tuple[AnnotatedTrack, ...] = ()

    def to_dict(self) -> dict:
        return {
            "ts": self.ts,
            "frame_id": self.frame_id,
            "frame_ts": self.frame_ts,
            "tracks": [t.to_dict() for t in self.tracks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotatedFrame":
        tracks = tuple(
            AnnotatedTrack(t["track_id"], BBox(*t["box"]), t["age"], t["gender"], t["expression"], t["staleness_ms"])
            for t in d["tracks"]
        )
        return cls(d["ts"], d["frame_id"], d["frame_ts"], tracks)


class Controller:
    """Sole owner of buffer, tracks and windows; reacts to messages.

    ``dispatch(stage, job)`` is supplied by the driver and hands a job to
    the idle worker of that stage.
    """

    def __init__(self, scenario: Scenario, config: PipelineConfig, dispatch: Callable):
        self.scenario = scenario
        self.config = config
        self.dispatch = dispatch
        self.trace = Trace()
        self.store = FrameStore(config.buffer_capacity)
        self.registry = TrackRegistry(config.tracker, scenario.frame_size, config.window)
        self.annotated: List[AnnotatedFrame] = []
        self.idle = {DETECTION: True, RECOGNITION: True}
        self._next_frame_id = 1
        self._face_started: Optional[int] = None
        self._seen_tracks: set = set()
        self.counts = {"grab": 0, "tick": 0, DETECTION: 0, RECOGNITION: 0, "faces": 0}
        self._wall_us: List[int] = []

    # -- lifecycle

    def start(self, ts: int = 0) -> None:
        c = self.config
        self.trace.emit(
            ts,
            "start",
            scenario=self.scenario.name,
            fingerprint=self.scenario.fingerprint(),
            seed=self.scenario.seed,
            clock_mode=c.clock_mode,
            duration_us=self.scenario.duration_us,
            frame_rate=c.frame_rate,
            visualization_rate=c.visualization_rate,
            frame_size=list(self.scenario.frame_size),
            buffer_capacity=c.buffer_capacity,
            window=c.window,
            cadence={t: c.cadence.every(t) for t in TASKS},
            tracker={"max_match_distance": c.tracker.max_match_distance,
                     "expiry_misses": c.tracker.expiry_misses},
        )

    def finish(self, ts: int) -> None:
        self.trace.emit(ts, "end", events=len(self.trace) + 1, frames_grabbed=self.counts["grab"])

    # -- messages

    def on_grab(self, ts: int, frame_ts: int) -> None:
        w, h = self.scenario.frame_size
        frame = Frame(self._next_frame_id, frame_ts, w, h)
        self._next_frame_id += 1
        self.counts["grab"] += 1
        evicted = self.store.push(frame)
        if evicted is not None:
            self.trace.emit(ts, "evict", frame=evicted.id, unprocessed=not evicted.meta.detection_done)
        self.trace.emit(ts, "grab", frame=frame.id, frame_ts=frame_ts)
        self._serve(ts)

    def on_detection(self, ts: int, result: DetectionResult) -> None:
        stored = self.store.complete(result.frame_id, DETECTION, result.detections)
        self.idle[DETECTION] = True
        if not stored:
            self.trace.emit(ts, "drop_noop", stage=DETECTION, frame=result.frame_id)
        else:
            frame = self.store.get(result.frame_id)
            self.trace.emit(
                ts,
                "detect_done",
                frame=frame.id,
                frame_ts=frame.timestamp,
                latency_ms=result.latency_us / 1000,
                detections=[d.box.as_list() + [d.confidence] for d in result.detections],
            )
            a = self.registry.match_detections(result.detections, frame.id, ts)
            ids = a.track_for_detection(len(result.detections))
            frame.meta.track_ids = tuple(ids)
            self._seen_tracks.update(ids)
            self.trace.emit(
                ts,
                "track_update",
                frame=frame.id,
                frame_ts=frame.timestamp,
                matched=[list(p) for p in a.matched],
                new=a.new_track_ids,
                missed=a.missed_track_ids,
                tracks=[[tid] + d.box.as_list() for tid, d in zip(ids, result.detections)],
            )
            removed = self.registry.prune(ts)
            if removed:
                self.trace.emit(ts, "prune", removed=removed)
        self._serve(ts)

    def on_face(self, ts: int, r: FaceResult) -> None:
        m = dataclasses.replace(r.measurement, measured_at=ts)
        track = self.registry.tracks.get(r.face.track_id)
        if track is not None:
            track.estimates.update(m)
            track.recognition_cycle += 1
        wall = ts - (self._face_started if self._face_started is not None else ts)
        self._face_started = ts
        self._wall_us.append(wall)
        self.counts["faces"] += 1
        self.trace.emit(
            ts,
            "landmarks",
            frame=r.frame_id,
            track=r.face.track_id,
            residual=r.landmark_residual,
            generating=r.generating,
            estimated=r.estimated,
        )
        self.trace.emit(
            ts,
            "recognize_done",
            frame=r.frame_id,
            frame_ts=r.frame_ts,
            track=r.face.track_id,
            face_index=r.face_index,
            n_faces=r.n_faces,
            box=r.face.box.as_list(),
            cycle=r.face.cycle,
            tasks=list(r.tasks),
            applied=track is not None,
            latency_ms=r.latency_us / 1000,
            wall_ms=wall / 1000,
            frame_complete=r.last,
            measurement=m.to_dict(),
        )
        if r.last:
            if not self.store.complete(r.frame_id, RECOGNITION):
                self.trace.emit(ts, "drop_noop", stage=RECOGNITION, frame=r.frame_id)
            self.idle[RECOGNITION] = True
            self._face_started = None
            self._serve(ts)

    def tick(self, ts: int) -> AnnotatedFrame:
        """Snapshot for display; never waits on a worker."""
        latest = self.store.latest()
        tracks = []
        for tid in sorted(self.registry.tracks):
            t = self.registry.tracks[tid]
            s = t.estimates.smoothed()
            newest = t.estimates.newest_measurement()
            tracks.append(
                AnnotatedTrack(
                    track_id=tid,
                    box=t.last_box,
                    age=None if s is None or s.age is None else int(round(s.age)),
                    gender=None if s is None else s.gender_label,
                    expression=None if s is None else s.expression_label,
                    staleness_ms=None if newest is None else (ts - newest) / 1000,
                )
            )
        frame = AnnotatedFrame(
            ts=ts,
            frame_id=None if latest is None else latest.id,
            frame_ts=None if latest is None else latest.timestamp,
            tracks=tuple(tracks),
        )
        self.counts["tick"] += 1
        self.annotated.append(frame)
        data = frame.to_dict()
        del data["ts"]
        self.trace.emit(ts, "tick", **data)
        return frame

    # -- internals

    def _serve(self, ts: int) -> None:
        for stage in (DETECTION, RECOGNITION):
            if not self.idle[stage]:
                continue
            frame = self.store.checkout(stage)
            if frame is None:
                continue
            self.idle[stage] = False
            self.counts[stage] += 1
            if stage == DETECTION:
                job = DetectionJob(frame.id, frame.timestamp)
                self.trace.emit(ts, "checkout", stage=stage, frame=frame.id, frame_ts=frame.timestamp)
            else:
                faces = []
                for tid, det in zip(frame.meta.track_ids, frame.meta.detections):
                    track = self.registry.tracks.get(tid)
                    faces.append(FaceJob(tid, det.box, 0 if track is None else track.recognition_cycle))
                job = RecognitionJob(frame.id, frame.timestamp, tuple(faces))
                self._face_started = ts
                self.trace.emit(
                    ts, "checkout", stage=stage, frame=frame.id, frame_ts=frame.timestamp, faces=len(faces)
                )
            self.dispatch(stage, job)

    def metrics(self) -> "Metrics":
        ticks = [e.ts for e in self.trace.events if e.kind == "tick"]
        fps = 0.0
        if len(ticks) > 1 and ticks[-1] > ticks[0]:
            fps = (len(ticks) - 1) * US_PER_S / (ticks[-1] - ticks[0])
        return Metrics(
            clock_mode=self.config.clock_mode,
            frames_grabbed=self.counts["grab"],
            ticks=self.counts["tick"],
            achieved_fps=fps,
            faces_tracked=len(self._seen_tracks),
            detection_checkouts=self.counts[DETECTION],
            recognition_checkouts=self.counts[RECOGNITION],
            faces_recognized=self.counts["faces"],
            mean_recognition_ms_per_face=float(np.mean(self._wall_us)) / 1000 if self._wall_us else None,
            drop_count=self.store.drop_count,
        )


@dataclass(frozen=True)
class Metrics:
    clock_mode: str
    frames_grabbed: int
    ticks: int
    achieved_fps: float
    faces_tracked: int
    detection_checkouts: int
    recognition_checkouts: int
    faces_recognized: int
    mean_recognition_ms_per_face: Optional[float]
    drop_count: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def summary(self) -> str:
        ms = self.mean_recognition_ms_per_face
        return (
            f"fps={self.achieved_fps:.2f} faces_tracked={self.faces_tracked} "
            f"mean_recognition_ms_per_face={'n/a' if ms is None else f'{ms:.1f}'} "
            f"frames={self.frames_grabbed} drops={self.drop_count}"
        )


@dataclass
class RunResult:
    trace: List[TraceEvent]
    annotated: List[AnnotatedFrame]
    metrics: Metrics
    extra: Dict[str, object] = field(default_factory=dict)


# ---------------------------------------------------------------- drivers


class EventLoop:
    """Deterministic discrete-event scheduler; ties resolve in enqueue order."""

    def __init__(self):
        self._heap: list = []
        self._seq = itertools.count()
        self.now = 0

    def schedule(self, ts: int, fn: Callable, *args) -> None:
        if ts < self.now:
            raise ValueError(f"cannot schedule at {ts} before now={self.now}")
        heapq.heappush(self._heap, (ts, next(self._seq), fn, args))

    def run(self, until: int) -> None:
        """Process every event with ts < ``until``."""
        while self._heap and self._heap[0][0] < until:
            ts, _, fn, args = heapq.heappop(self._heap)
            self.now = ts
            fn(ts, *args)

    def __len__(self) -> int:
        return len(self._heap)


def _run_virtual(scenario: Scenario, config: PipelineConfig) -> RunResult:
    loop = EventLoop()
    workers = StageWorkers(scenario, config)
    end = scenario.duration_us

    def dispatch(stage, job):
        if stage == DETECTION:
            r = workers.detect(job)
            loop.schedule(loop.now + r.latency_us, controller.on_detection, r)
        else:
            start_face(loop.now, job, 0)

    def start_face(ts, job, index):
        r = workers.recognize_face(job, index)
        loop.schedule(ts + r.latency_us, face_done, job, r)

    def face_done(ts, job, r):
        controller.on_face(ts, r)
        if not r.last:
            start_face(ts, job, r.face_index + 1)

    def grab(ts):
        controller.on_grab(ts, ts)
        loop.schedule(ts + config.frame_interval_us, grab)

    def tick(ts):
        controller.tick(ts)
        loop.schedule(ts + config.tick_interval_us, tick)

    controller = Controller(scenario, config, dispatch)
    controller.start(0)
    loop.schedule(0, grab)
    loop.schedule(0, tick)
    loop.run(end)
    controller.finish(end)
    return RunResult(controller.trace.events, controller.annotated, controller.metrics())


def _run_realtime(scenario: Scenario, config: PipelineConfig) -> RunResult:
    workers = StageWorkers(scenario, config)
    inbox: "queue.Queue" = queue.Queue()
    jobs = {DETECTION: queue.Queue(), RECOGNITION: queue.Queue()}
    stop = threading.Event()
    t0 = time.monotonic_ns()
    end = scenario.duration_us

    def now_us() -> int:
        return (time.monotonic_ns() - t0) // 1000

    def grabber():
        for k in itertools.count():
            target = k * config.frame_interval_us
            if target >= end:
                return
            delay = (target - now_us()) / US_PER_S
            if delay > 0 and stop.wait(delay):
                return
            inbox.put(("grab", now_us()))

    def detection_worker():
        while True:
            job = jobs[DETECTION].get()
            if job is None:
                return
            r = workers.detect(job)
            if stop.wait(r.latency_us / US_PER_S):
                return
            inbox.put(("detect", r))

    def recognition_worker():
        while True:
            job = jobs[RECOGNITION].get()
            if job is None:
                return
            for i in range(len(job.faces)):
                r = workers.recognize_face(job, i)
                if stop.wait(r.latency_us / US_PER_S):
                    return
                inbox.put(("face", r))

    controller = Controller(scenario, config, lambda stage, job: jobs[stage].put(job))
    threads = [
        threading.Thread(target=fn, name=name, daemon=True)
        for fn, name in ((grabber, "grabber"), (detection_worker, "detection"), (recognition_worker, "recognition"))
    ]
    controller.start(0)
    for t in threads:
        t.start()

    last = 0
    next_tick = 0

    def stamp() -> int:
        nonlocal last
        last = max(last, now_us())
        return last

    while True:
        now = stamp()
        if now >= end:
            break
        if now >= next_tick:
            controller.tick(now)
            next_tick += config.tick_interval_us
            continue
        timeout = (min(next_tick, end) - now) / US_PER_S
        try:
            kind, payload = inbox.get(timeout=max(timeout, 0.0))
        except queue.Empty:
            continue
        ts = stamp()
        if ts >= end:
            break
        if kind == "grab":
            controller.on_grab(ts, min(payload, ts))
        elif kind == "detect":
            controller.on_detection(ts, payload)
        elif kind == "face":
            controller.on_face(ts, payload)

    stop.set()
    for q in jobs.values():
        q.put(None)
    for t in threads:
        t.join(timeout=5)
        if t.is_alive():
            log.warning("worker %s did not stop", t.name)
    controller.finish(max(stamp(), end))
    return RunResult(controller.trace.events, controller.annotated, controller.metrics())


def run(scenario: Scenario, config: Optional[PipelineConfig] = None) -> RunResult:
    """Execute the pipeline over the whole scenario duration."""
    if config is None:
        config = PipelineConfig.for_scenario(scenario)
    if not isinstance(scenario, Scenario):
        raise ConfigError("run() needs a Scenario")
    if config.clock_mode == VIRTUAL:
        return _run_virtual(scenario, config)
    return _run_realtime(scenario, config)
