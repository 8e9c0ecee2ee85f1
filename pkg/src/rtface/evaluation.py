"""Accuracy and timing metrics computed by replaying a trace against ground truth."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .core import EXPRESSIONS, BBox, Detection, ExpressionDist, gender_label, iou
from .errors import InvalidInputError
from .synthetic import Scenario, ground_truth_at
from .trace import TraceEvent

MATCH_IOU = 0.5

Scored = Union[Detection, Tuple[BBox, float]]


def _items(x) -> Iterable:
    return x.items() if isinstance(x, Mapping) else enumerate(x)


def _score(d: Scored) -> Tuple[BBox, float]:
    if isinstance(d, Detection):
        return d.box, d.confidence
    box, conf = d
    return box, float(conf)


def average_precision(detections, ground_truth, iou_threshold: float = 0.5) -> float:
    """All-point interpolated AP over detections pooled across frames.

    ``detections`` and ``ground_truth`` are keyed by frame (mapping or
    sequence). Detections are visited by descending confidence, ties by frame
    key then index; each claims the unclaimed ground-truth box of its frame
    with the highest IoU, provided IoU >= ``iou_threshold``.
    """
    if not 0 < iou_threshold <= 1:
        raise InvalidInputError(f"iou threshold must lie in (0, 1], got {iou_threshold}")
    gts: Dict = {k: list(v) for k, v in _items(ground_truth)}
    n_pos = sum(len(v) for v in gts.values())
    pool = []
    for key, dets in _items(detections):
        for i, d in enumerate(dets):
            box, conf = _score(d)
            pool.append((-conf, key, i, box))
    if n_pos == 0:
        return 0.0 if pool else 1.0
    if not pool:
        return 0.0
    pool.sort(key=lambda p: (p[0], p[1], p[2]))

    claimed = {k: [False] * len(v) for k, v in gts.items()}
    tp = np.zeros(len(pool))
    for rank, (_, key, _, box) in enumerate(pool):
        best, best_iou = -1, iou_threshold
        for j, g in enumerate(gts.get(key, ())):
            if claimed[key][j]:
                continue
            v = iou(box, g)
            if v >= best_iou and (best < 0 or v > best_iou):
                best, best_iou = j, v
        if best >= 0:
            claimed[key][best] = True
            tp[rank] = 1
    ctp = np.cumsum(tp)
    recall = ctp / n_pos
    precision = ctp / np.arange(1, len(pool) + 1)
    # precision envelope: running max from the right
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * envelope))


def age_mae(pred: Sequence[float], truth: Sequence[float]) -> float:
    if len(pred) != len(truth):
        raise InvalidInputError(f"length mismatch: {len(pred)} vs {len(truth)}")
    if len(pred) == 0:
        raise InvalidInputError("age_mae needs at least one sample")
    return math.fsum(abs(p - t) for p, t in zip(pred, truth)) / len(pred)


def classification_accuracy(pred: Sequence, truth: Sequence) -> float:
    if len(pred) != len(truth):
        raise InvalidInputError(f"length mismatch: {len(pred)} vs {len(truth)}")
    if len(pred) == 0:
        raise InvalidInputError("accuracy needs at least one sample")
    return sum(p == t for p, t in zip(pred, truth)) / len(pred)


# ---------------------------------------------------------------- trace replay


def _events(trace) -> List[TraceEvent]:
    return [e if isinstance(e, TraceEvent) else TraceEvent.from_dict(e) for e in trace]


def check_trace(trace, scenario: Scenario) -> List[TraceEvent]:
    """Verify the trace is complete and was produced from ``scenario``."""
    events = _events(trace)
    if not events or events[0].kind != "start":
        raise InvalidInputError("trace has no start event")
    if events[-1].kind != "end":
        raise InvalidInputError("trace is truncated: no end event")
    if events[-1].data.get("events") != len(events):
        raise InvalidInputError(
            f"trace is truncated: end event reports {events[-1].data.get('events')} events, found {len(events)}"
        )
    fp = events[0].data.get("fingerprint")
    if fp != scenario.fingerprint():
        raise InvalidInputError(f"trace was recorded for scenario {fp}, not {scenario.fingerprint()}")
    for e in events:
        if e.kind == "grab" and e.data["frame_ts"] > scenario.duration_us:
            raise InvalidInputError(f"frame {e.data['frame']} lies beyond the scenario duration")
    return events


def _best_match(box: BBox, candidates: Sequence[Tuple[object, BBox]], threshold: float = MATCH_IOU):
    best, best_iou = None, threshold
    for key, cand in candidates:
        v = iou(box, cand)
        if v >= best_iou and (best is None or v > best_iou):
            best, best_iou = key, v
    return best


def identity_switches(trace, scenario: Scenario) -> int:
    """Count changes of the track covering each actor across detected frames."""
    events = check_trace(trace, scenario)
    current: Dict[str, int] = {}
    switches = 0
    for e in events:
        if e.kind != "track_update":
            continue
        tracks = [(row[0], BBox(*row[1:5])) for row in e.data["tracks"]]
        if not tracks:
            continue
        for face in ground_truth_at(scenario, e.data["frame_ts"]):
            tid = _best_match(face.box, sorted(tracks, key=lambda t: t[0]))
            if tid is None:
                continue
            if face.actor_id in current and current[face.actor_id] != tid:
                switches += 1
            current[face.actor_id] = tid
    return switches


@dataclass(frozen=True)
class TimingStats:
    achieved_fps: float
    staleness_mean_ms: Optional[float]
    staleness_p95_ms: Optional[float]
    drop_count: int


def timing_stats(trace, warmup_ms: float = 0.0) -> TimingStats:
    events = _events(trace)
    if not events:
        raise InvalidInputError("empty trace")
    ticks = [e for e in events if e.kind == "tick"]
    fps = 0.0
    if len(ticks) > 1 and ticks[-1].ts > ticks[0].ts:
        fps = (len(ticks) - 1) * 1e6 / (ticks[-1].ts - ticks[0].ts)
    stale = [
        t["staleness_ms"]
        for e in ticks
        if e.ts >= warmup_ms * 1000
        for t in e.data["tracks"]
        if t["staleness_ms"] is not None
    ]
    drops = sum(1 for e in events if e.kind == "evict" and e.data.get("unprocessed"))
    return TimingStats(
        achieved_fps=fps,
        staleness_mean_ms=float(np.mean(stale)) if stale else None,
        staleness_p95_ms=float(np.percentile(stale, 95)) if stale else None,
        drop_count=drops,
    )


@dataclass
class RecognitionSamples:
    age_pred: List[float] = field(default_factory=list)
    age_true: List[float] = field(default_factory=list)
    gender_pred: List[str] = field(default_factory=list)
    gender_true: List[str] = field(default_factory=list)
    expr_pred: List[str] = field(default_factory=list)
    expr_true: List[str] = field(default_factory=list)


def recognition_samples(events: Sequence[TraceEvent], scenario: Scenario) -> RecognitionSamples:
    """Pair each raw recognizer output with the truth of the face it was run on."""
    out = RecognitionSamples()
    for e in events:
        if e.kind != "recognize_done":
            continue
        gt = ground_truth_at(scenario, e.data["frame_ts"])
        actor = _best_match(BBox(*e.data["box"]), [(f, f.box) for f in gt])
        if actor is None:
            continue
        m = e.data["measurement"]
        if m.get("age") is not None:
            out.age_pred.append(m["age"])
            out.age_true.append(actor.age)
        if m.get("gender_p_female") is not None:
            out.gender_pred.append(gender_label(m["gender_p_female"]))
            out.gender_true.append(actor.gender)
        if m.get("expression") is not None:
            out.expr_pred.append(ExpressionDist(tuple(m["expression"])).label)
            out.expr_true.append(EXPRESSIONS[actor.expression])
    return out


def detection_inputs(events: Sequence[TraceEvent], scenario: Scenario):
    """Per detected frame: scored detections and ground-truth boxes."""
    dets, gts = {}, {}
    for e in events:
        if e.kind != "detect_done":
            continue
        f = e.data["frame"]
        dets[f] = [(BBox(*row[:4]), row[4]) for row in e.data["detections"]]
        gts[f] = [g.box for g in ground_truth_at(scenario, e.data["frame_ts"])]
    return dets, gts


@dataclass
class EvalReport:
    detection_ap: Optional[float]
    age_mae: Optional[float]
    gender_accuracy: Optional[float]
    expression_accuracy: Optional[float]
    identity_switches: int
    staleness_mean_ms: Optional[float]
    staleness_p95_ms: Optional[float]
    achieved_fps: float
    drop_count: int
    samples: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def table_rows(self) -> List[Tuple[str, str]]:
        def pct(v):
            return "n/a" if v is None else f"{100 * v:.1f}%"

        return [
            ("Detection", f"{pct(self.detection_ap)} (AP @0.5IoU)"),
            ("Age", ("n/a" if self.age_mae is None else f"{self.age_mae:.2f} years") + " (MAE)"),
            ("Gender", f"{pct(self.gender_accuracy)} (accuracy)"),
            ("Expression", f"{pct(self.expression_accuracy)} (accuracy)"),
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "metric"])
        w.writerows(self.table_rows())
        return buf.getvalue()


def evaluate(trace, scenario: Scenario, iou_threshold: float = MATCH_IOU) -> EvalReport:
    events = check_trace(trace, scenario)
    dets, gts = detection_inputs(events, scenario)
    s = recognition_samples(events, scenario)
    timing = timing_stats(events)
    return EvalReport(
        detection_ap=average_precision(dets, gts, iou_threshold) if dets else None,
        age_mae=age_mae(s.age_pred, s.age_true) if s.age_pred else None,
        gender_accuracy=classification_accuracy(s.gender_pred, s.gender_true) if s.gender_pred else None,
        expression_accuracy=classification_accuracy(s.expr_pred, s.expr_true) if s.expr_pred else None,
        identity_switches=identity_switches(events, scenario),
        staleness_mean_ms=timing.staleness_mean_ms,
        staleness_p95_ms=timing.staleness_p95_ms,
        achieved_fps=timing.achieved_fps,
        drop_count=timing.drop_count,
        samples={
            "detection_frames": len(dets),
            "age": len(s.age_pred),
            "gender": len(s.gender_pred),
            "expression": len(s.expr_pred),
        },
    )
