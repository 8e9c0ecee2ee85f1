"""Scenario-driven stand-ins for the camera, detector, landmarker and recognizers.

Every stage draws from its own random stream keyed by
``(seed, frame id, stage, face index)``, so results do not depend on the
order in which worker threads happen to run.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import jsonschema
import numpy as np

from . import schemas
from .alignment import FaceTemplate, SimilarityTransform
from .core import (
    DEFAULT_FRAME_SIZE,
    EXPRESSIONS,
    N_EXPRESSIONS,
    AttributeMeasurement,
    BBox,
    Detection,
    ExpressionDist,
    clamp_box,
    iou,
    ms_to_us,
)
from .errors import ConfigError, InvalidInputError
from .scheduler import AGE, EXPRESSION, GENDER, TASKS, CadencePolicy, TaskSet

STAGE_CODES = {"detect": 1, "landmarks": 2, "recognize": 3}

FP_SIZE_RANGE = (16.0, 48.0)


def stage_rng(seed: int, frame_id: int, stage: str, face: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, frame_id, STAGE_CODES[stage], face])


@dataclass(frozen=True)
class LatencyModel:
    """Latency distribution in milliseconds; normal samples are truncated at 0."""

    kind: str = "constant"
    value: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "uniform", "normal"):
            raise ConfigError(f"unknown latency kind {self.kind!r}")
        if self.kind == "uniform" and self.hi < self.lo:
            raise ConfigError("uniform latency needs lo <= hi")
        if min(self.value, self.lo, self.sigma) < 0:
            raise ConfigError("latency parameters must be non-negative")

    @classmethod
    def constant(cls, ms: float) -> "LatencyModel":
        return cls("constant", value=ms)

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "uniform":
            return float(rng.uniform(self.lo, self.hi))
        return max(0.0, float(rng.normal(self.mu, self.sigma)))

    @property
    def mean_hint(self) -> float:
        """Untruncated mean; exact for constant and uniform."""
        return {"constant": self.value, "uniform": (self.lo + self.hi) / 2, "normal": self.mu}[self.kind]

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "uniform":
            return {"kind": "uniform", "lo": self.lo, "hi": self.hi}
        return {"kind": "normal", "mu": self.mu, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d: dict) -> "LatencyModel":
        return cls(**d)


@dataclass(frozen=True)
class PathSpec:
    """Top-left corner trajectory: ``start + velocity*t + amplitude*sin(2 pi t / period)``.

    ``t`` is time since run start; velocity is px/s, period is ms.
    """

    kind: str = "linear"
    start: Tuple[float, float] = (0.0, 0.0)
    velocity: Tuple[float, float] = (0.0, 0.0)
    amplitude: Tuple[float, float] = (0.0, 0.0)
    period: float = 1000.0

    def position(self, ts_us: int) -> Tuple[float, float]:
        t = ts_us / 1e6
        x = self.start[0] + self.velocity[0] * t
        y = self.start[1] + self.velocity[1] * t
        if self.kind == "sinusoidal":
            phase = math.sin(2 * math.pi * (ts_us / 1e3) / self.period)
            x += self.amplitude[0] * phase
            y += self.amplitude[1] * phase
        return x, y

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "start": list(self.start), "velocity": list(self.velocity)}
        if self.kind == "sinusoidal":
            d.update(amplitude=list(self.amplitude), period=self.period)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PathSpec":
        return cls(
            kind=d["kind"],
            start=tuple(d["start"]),
            velocity=tuple(d.get("velocity", (0.0, 0.0))),
            amplitude=tuple(d.get("amplitude", (0.0, 0.0))),
            period=d.get("period", 1000.0),
        )


@dataclass(frozen=True)
class ActorSpec:
    actor_id: str
    path: PathSpec
    box_size: Tuple[float, float]
    true_age: float
    true_gender: str
    enter_ts: float = 0.0  # ms
    exit_ts: Optional[float] = None  # ms; None means until the end
    expression_timeline: Tuple[Tuple[float, str], ...] = ()

    def __post_init__(self):
        if self.true_gender not in ("female", "male"):
            raise ConfigError(f"actor {self.actor_id}: bad gender {self.true_gender!r}")
        for _, name in self.expression_timeline:
            if name not in EXPRESSIONS:
                raise ConfigError(f"actor {self.actor_id}: unknown expression {name!r}")
        if self.exit_ts is not None and self.exit_ts <= self.enter_ts:
            raise ConfigError(f"actor {self.actor_id}: enter_ts must precede exit_ts")

    def expression_at(self, ts_us: int) -> int:
        current = self.expression_timeline[0][1] if self.expression_timeline else "neutral"
        for t, name in sorted(self.expression_timeline, key=lambda e: e[0]):
            if ms_to_us(t) <= ts_us:
                current = name
        return EXPRESSIONS.index(current)

    def to_dict(self) -> dict:
        d = {
            "actor_id": self.actor_id,
            "path": self.path.to_dict(),
            "box_size": list(self.box_size),
            "enter_ts": self.enter_ts,
            "true_age": self.true_age,
            "true_gender": self.true_gender,
            "expression_timeline": [[t, n] for t, n in self.expression_timeline],
        }
        if self.exit_ts is not None:
            d["exit_ts"] = self.exit_ts
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ActorSpec":
        return cls(
            actor_id=d["actor_id"],
            path=PathSpec.from_dict(d["path"]),
            box_size=tuple(d["box_size"]),
            true_age=d["true_age"],
            true_gender=d["true_gender"],
            enter_ts=d.get("enter_ts", 0.0),
            exit_ts=d.get("exit_ts"),
            expression_timeline=tuple((t, n) for t, n in d.get("expression_timeline", ())),
        )


@dataclass(frozen=True)
class DetectorModel:
    latency: LatencyModel = LatencyModel.constant(20.0)
    center_jitter_sigma: float = 0.0
    size_jitter_sigma: float = 0.0
    miss_prob: float = 0.0
    false_positive_rate: float = 0.0
    true_conf_mean: float = 0.9
    true_conf_sigma: float = 0.0
    false_conf_mean: float = 0.3
    false_conf_sigma: float = 0.1
    blackouts: Tuple[Tuple[float, float], ...] = ()  # [start, end) in ms

    def __post_init__(self):
        if not 0 <= self.miss_prob <= 1:
            raise ConfigError("miss_prob must lie in [0, 1]")
        if min(self.center_jitter_sigma, self.size_jitter_sigma, self.false_positive_rate) < 0:
            raise ConfigError("detector sigmas and rates must be non-negative")

    def blacked_out(self, ts_us: int) -> bool:
        return any(ms_to_us(a) <= ts_us < ms_to_us(b) for a, b in self.blackouts)

    def to_dict(self) -> dict:
        return {
            "latency": self.latency.to_dict(),
            "center_jitter_sigma": self.center_jitter_sigma,
            "size_jitter_sigma": self.size_jitter_sigma,
            "miss_prob": self.miss_prob,
            "false_positive_rate": self.false_positive_rate,
            "confidence": {
                "true_mean": self.true_conf_mean,
                "true_sigma": self.true_conf_sigma,
                "false_mean": self.false_conf_mean,
                "false_sigma": self.false_conf_sigma,
            },
            "blackouts": [list(b) for b in self.blackouts],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorModel":
        kw = {k: v for k, v in d.items() if k not in ("latency", "confidence", "blackouts")}
        if "latency" in d:
            kw["latency"] = LatencyModel.from_dict(d["latency"])
        conf = d.get("confidence", {})
        for src, dst in (("true_mean", "true_conf_mean"), ("true_sigma", "true_conf_sigma"),
                         ("false_mean", "false_conf_mean"), ("false_sigma", "false_conf_sigma")):
            if src in conf:
                kw[dst] = conf[src]
        kw["blackouts"] = tuple(tuple(b) for b in d.get("blackouts", ()))
        return cls(**kw)


def _default_task_latency() -> Dict[str, LatencyModel]:
    return {t: LatencyModel.constant(200.0) for t in TASKS}


@dataclass(frozen=True)
class RecognizerModel:
    latency: Dict[str, LatencyModel] = field(default_factory=_default_task_latency)
    age_noise_sigma: float = 0.0
    gender_flip_prob: float = 0.0
    gender_confidence: float = 0.95
    expression_confusion: Optional[Tuple[Tuple[float, ...], ...]] = None
    expression_peak: float = 0.9

    def __post_init__(self):
        lat = dict(_default_task_latency())
        lat.update(self.latency)
        object.__setattr__(self, "latency", lat)
        if self.expression_confusion is not None:
            m = np.asarray(self.expression_confusion, dtype=float)
            if m.shape != (N_EXPRESSIONS, N_EXPRESSIONS):
                raise ConfigError(f"confusion matrix must be {N_EXPRESSIONS}x{N_EXPRESSIONS}")
            if np.any(m < 0) or np.any(np.abs(m.sum(axis=1) - 1) > 1e-9):
                raise ConfigError("confusion rows must be probability vectors")
            object.__setattr__(self, "expression_confusion", tuple(tuple(r) for r in m.tolist()))
        if not 0 <= self.gender_flip_prob <= 1:
            raise ConfigError("gender_flip_prob must lie in [0, 1]")

    @property
    def confusion(self) -> np.ndarray:
        if self.expression_confusion is None:
            return np.eye(N_EXPRESSIONS)
        return np.asarray(self.expression_confusion)

    def mean_task_latency(self) -> Dict[str, float]:
        return {t: m.mean_hint for t, m in self.latency.items()}

    def to_dict(self) -> dict:
        return {
            "latency": {t: self.latency[t].to_dict() for t in TASKS},
            "age_noise_sigma": self.age_noise_sigma,
            "gender_flip_prob": self.gender_flip_prob,
            "gender_confidence": self.gender_confidence,
            "expression_confusion": None if self.expression_confusion is None
            else [list(r) for r in self.expression_confusion],
            "expression_peak": self.expression_peak,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RecognizerModel":
        kw = dict(d)
        if "latency" in d:
            kw["latency"] = {t: LatencyModel.from_dict(v) for t, v in d["latency"].items()}
        return cls(**kw)


@dataclass(frozen=True)
class LandmarkModel:
    rotation_sigma: float = 0.0  # radians
    noise_sigma: float = 0.0  # px, per coordinate

    def to_dict(self) -> dict:
        return {"rotation_sigma": self.rotation_sigma, "noise_sigma": self.noise_sigma}


@dataclass(frozen=True)
class PipelineSpec:
    """Optional pipeline settings carried inside a scenario file."""

    cadence: Optional[CadencePolicy] = None
    buffer_capacity: Optional[int] = None
    window: Optional[int] = None
    max_match_distance: Optional[float] = None
    expiry_misses: Optional[int] = None
    visualization_rate: Optional[float] = None

    def to_dict(self) -> dict:
        d: dict = {}
        if self.cadence is not None:
            c = self.cadence
            d["cadence"] = {"expression_every": c.expression_every, "age_every": c.age_every,
                            "gender_every": c.gender_every}
        for k in ("buffer_capacity", "window", "visualization_rate"):
            if getattr(self, k) is not None:
                d[k] = getattr(self, k)
        tracker = {k: getattr(self, k) for k in ("max_match_distance", "expiry_misses")
                   if getattr(self, k) is not None}
        if tracker:
            d["tracker"] = tracker
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineSpec":
        kw = {k: d[k] for k in ("buffer_capacity", "window", "visualization_rate") if k in d}
        if "cadence" in d:
            kw["cadence"] = CadencePolicy(**d["cadence"])
        kw.update(d.get("tracker", {}))
        return cls(**kw)


@dataclass(frozen=True)
class Scenario:
    duration: float  # ms
    actors: Tuple[ActorSpec, ...] = ()
    frame_rate: float = 25.0
    frame_size: Tuple[int, int] = DEFAULT_FRAME_SIZE
    seed: int = 0
    detector_model: DetectorModel = DetectorModel()
    recognizer_model: RecognizerModel = field(default_factory=RecognizerModel)
    landmark_model: LandmarkModel = LandmarkModel()
    pipeline: PipelineSpec = PipelineSpec()
    name: str = ""

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if not self.frame_rate > 0:
            raise ConfigError("frame_rate must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        ids = [a.actor_id for a in self.actors]
        if len(set(ids)) != len(ids):
            raise ConfigError("actor ids must be unique")
        for a in self.actors:
            if a.exit_ts is not None and a.exit_ts > self.duration:
                raise ConfigError(f"actor {a.actor_id}: exit_ts beyond duration")
        object.__setattr__(self, "actors", tuple(self.actors))
        object.__setattr__(self, "frame_size", tuple(self.frame_size))

    @property
    def duration_us(self) -> int:
        return ms_to_us(self.duration)

    def actor(self, actor_id: str) -> ActorSpec:
        for a in self.actors:
            if a.actor_id == actor_id:
                return a
        raise KeyError(actor_id)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "duration": self.duration,
            "frame_rate": self.frame_rate,
            "frame_size": list(self.frame_size),
            "seed": self.seed,
            "actors": [a.to_dict() for a in self.actors],
            "detector_model": self.detector_model.to_dict(),
            "recognizer_model": self.recognizer_model.to_dict(),
            "landmark_model": self.landmark_model.to_dict(),
        }
        pipe = self.pipeline.to_dict()
        if pipe:
            d["pipeline"] = pipe
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            schemas.validate(d, schemas.SCENARIO)
        except jsonschema.ValidationError as e:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"scenario invalid at {where}: {e.message}") from None
        return cls(
            name=d.get("name", ""),
            duration=d["duration"],
            frame_rate=d.get("frame_rate", 25.0),
            frame_size=tuple(d.get("frame_size", DEFAULT_FRAME_SIZE)),
            seed=d.get("seed", 0),
            actors=tuple(ActorSpec.from_dict(a) for a in d.get("actors", ())),
            detector_model=DetectorModel.from_dict(d.get("detector_model", {})),
            recognizer_model=RecognizerModel.from_dict(d.get("recognizer_model", {})),
            landmark_model=LandmarkModel(**d.get("landmark_model", {})),
            pipeline=PipelineSpec.from_dict(d.get("pipeline", {})),
        )

    def fingerprint(self) -> str:
        """Digest of everything that determines ground truth (not seed or noise)."""
        core = {
            "duration": self.duration,
            "frame_rate": self.frame_rate,
            "frame_size": list(self.frame_size),
            "actors": [a.to_dict() for a in self.actors],
        }
        blob = json.dumps(core, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Parse a scenario JSON file. Raises ConfigError with a diagnostic."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read scenario {path}: {e.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}: {e.msg}") from None
    return Scenario.from_dict(doc)


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


def bundled_scenarios() -> Dict[str, Path]:
    """Name -> path of the example scenarios shipped with the package."""
    root = resources.files("rtface") / "data" / "scenarios"
    return {p.name[:-5]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".json")}


@dataclass(frozen=True)
class GroundTruthFace:
    actor_id: str
    box: BBox
    age: float
    gender: str
    expression: int

    @property
    def expression_label(self) -> str:
        return EXPRESSIONS[self.expression]


def ground_truth_at(scenario: Scenario, ts_us: int) -> List[GroundTruthFace]:
    """Visible faces at ``ts_us`` in actor declaration order."""
    if not 0 <= ts_us <= scenario.duration_us:
        raise InvalidInputError(f"timestamp {ts_us} outside [0, {scenario.duration_us}]")
    w, h = scenario.frame_size
    out = []
    for a in scenario.actors:
        exit_us = scenario.duration_us + 1 if a.exit_ts is None else ms_to_us(a.exit_ts)
        if not ms_to_us(a.enter_ts) <= ts_us < exit_us:
            continue
        x, y = a.path.position(ts_us)
        box = clamp_box(BBox(x, y, *a.box_size), w, h)
        if box is None:
            continue
        out.append(GroundTruthFace(a.actor_id, box, a.true_age, a.true_gender, a.expression_at(ts_us)))
    return out


def synth_detect(
    gt: Sequence[GroundTruthFace],
    model: DetectorModel,
    rng: np.random.Generator,
    frame_size: Tuple[int, int] = DEFAULT_FRAME_SIZE,
    ts_us: Optional[int] = None,
) -> Tuple[List[Detection], float]:
    """Noisy detections for one frame plus the sampled latency in ms."""
    fw, fh = frame_size
    dets: List[Detection] = []
    blackout = ts_us is not None and model.blacked_out(ts_us)
    for face in gt:
        miss = rng.random() < model.miss_prob
        dcx, dcy = rng.normal(0.0, 1.0, 2) * model.center_jitter_sigma
        dw, dh = rng.normal(0.0, 1.0, 2) * model.size_jitter_sigma
        conf = model.true_conf_mean + model.true_conf_sigma * rng.standard_normal()
        if miss or blackout:
            continue
        b = face.box
        w = max(1.0, b.w + dw)
        h = max(1.0, b.h + dh)
        # keep the jittered centre; noiseless input reproduces the box exactly
        x = b.x + dcx + (b.w - w) / 2
        y = b.y + dcy + (b.h - h) / 2
        box = clamp_box(BBox(x, y, w, h), fw, fh)
        if box is not None:
            dets.append(Detection(box, float(np.clip(conf, 0.0, 1.0))))
    n_fp = int(rng.poisson(model.false_positive_rate)) if model.false_positive_rate > 0 else 0
    for _ in range(n_fp):
        size = rng.uniform(*FP_SIZE_RANGE)
        x = rng.uniform(0, max(fw - size, 0))
        y = rng.uniform(0, max(fh - size, 0))
        conf = model.false_conf_mean + model.false_conf_sigma * rng.standard_normal()
        box = clamp_box(BBox(x, y, size, size), fw, fh)
        if box is not None and not blackout:
            dets.append(Detection(box, float(np.clip(conf, 0.0, 1.0))))
    return dets, model.latency.sample(rng)


def match_truth(box: BBox, gt: Sequence[GroundTruthFace]) -> Optional[GroundTruthFace]:
    """Ground-truth face overlapping ``box`` most; None if nothing overlaps."""
    best, best_iou = None, 0.0
    for face in gt:
        v = iou(box, face.box)
        if v > best_iou:
            best, best_iou = face, v
    return best


def random_identity(rng: np.random.Generator, box: BBox) -> GroundTruthFace:
    """Made-up truth for a false-positive crop."""
    return GroundTruthFace(
        actor_id="",
        box=box,
        age=float(rng.uniform(10, 70)),
        gender="female" if rng.random() < 0.5 else "male",
        expression=int(rng.integers(N_EXPRESSIONS)),
    )


def synth_recognize(
    truth: GroundTruthFace,
    tasks: TaskSet,
    model: RecognizerModel,
    rng: np.random.Generator,
    measured_at: int = 0,
) -> Tuple[AttributeMeasurement, float]:
    if not tasks:
        raise InvalidInputError("no recognition task requested")
    age = gender_p = expr = None
    latency = 0.0
    for task in TASKS:
        if task not in tasks:
            continue
        latency += model.latency[task].sample(rng)
        if task == AGE:
            age = truth.age + model.age_noise_sigma * rng.standard_normal() if model.age_noise_sigma > 0 \
                else float(truth.age)
        elif task == GENDER:
            flipped = rng.random() < model.gender_flip_prob
            is_female = (truth.gender == "female") != flipped
            gender_p = model.gender_confidence if is_female else 1.0 - model.gender_confidence
        elif task == EXPRESSION:
            k = int(rng.choice(N_EXPRESSIONS, p=model.confusion[truth.expression]))
            expr = ExpressionDist.smoothed_one_hot(k, model.expression_peak)
    m = AttributeMeasurement(measured_at=measured_at, age=age, gender_p_female=gender_p, expression=expr)
    return m, latency


def landmark_transform(box: BBox, rotation: float = 0.0) -> SimilarityTransform:
    """Map the unit-square template onto ``box``: width sets scale, centres coincide."""
    s = box.w
    c, sn = math.cos(rotation), math.sin(rotation)
    cx, cy = box.x + box.w / 2, box.y + box.h / 2
    tx = cx - s * (c * 0.5 - sn * 0.5)
    ty = cy - s * (sn * 0.5 + c * 0.5)
    return SimilarityTransform(s, rotation, (tx, ty))


def synth_landmarks(
    box: BBox,
    template: FaceTemplate,
    model: LandmarkModel,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, SimilarityTransform]:
    """Template landmarks placed on ``box`` plus isotropic noise; returns (points, generating transform)."""
    rot = model.rotation_sigma * rng.standard_normal() if model.rotation_sigma > 0 else 0.0
    t = landmark_transform(box, rot)
    pts = t.apply(template.points)
    if model.noise_sigma > 0:
        pts = pts + rng.normal(0.0, model.noise_sigma, pts.shape)
    return pts, t
