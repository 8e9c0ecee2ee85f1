"""JSON schemas for every file the package reads or writes."""

from __future__ import annotations

import jsonschema

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_int_or_null = {"type": ["integer", "null"]}
_num_or_null = {"type": ["number", "null"]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


LATENCY = {
    "oneOf": [
        _obj({"kind": {"const": "constant"}, "value": _nonneg}, ["kind", "value"]),
        _obj({"kind": {"const": "uniform"}, "lo": _nonneg, "hi": _nonneg}, ["kind", "lo", "hi"]),
        _obj({"kind": {"const": "normal"}, "mu": _num, "sigma": _nonneg}, ["kind", "mu", "sigma"]),
    ]
}

PATH = _obj(
    {
        "kind": {"enum": ["linear", "sinusoidal"]},
        "start": _pair,
        "velocity": _pair,
        "amplitude": _pair,
        "period": {"type": "number", "exclusiveMinimum": 0},
    },
    ["kind", "start"],
)

ACTOR = _obj(
    {
        "actor_id": {"type": "string", "minLength": 1},
        "path": PATH,
        "box_size": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2, "maxItems": 2},
        "enter_ts": _nonneg,
        "exit_ts": _nonneg,
        "true_age": _nonneg,
        "true_gender": {"enum": ["female", "male"]},
        "expression_timeline": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [_nonneg, {"type": "string"}],
                "items": False,
                "minItems": 2,
            },
        },
    },
    ["actor_id", "path", "box_size", "true_age", "true_gender"],
)

DETECTOR = _obj(
    {
        "latency": LATENCY,
        "center_jitter_sigma": _nonneg,
        "size_jitter_sigma": _nonneg,
        "miss_prob": _prob,
        "false_positive_rate": _nonneg,
        "confidence": _obj(
            {"true_mean": _prob, "true_sigma": _nonneg, "false_mean": _prob, "false_sigma": _nonneg}
        ),
        "blackouts": {"type": "array", "items": _pair},
    }
)

RECOGNIZER = _obj(
    {
        "latency": _obj({"age": LATENCY, "gender": LATENCY, "expression": LATENCY}),
        "age_noise_sigma": _nonneg,
        "gender_flip_prob": _prob,
        "gender_confidence": {"type": "number", "minimum": 0.5, "maximum": 1},
        "expression_confusion": {
            "type": ["array", "null"],
            "items": {"type": "array", "items": _prob, "minItems": 7, "maxItems": 7},
            "minItems": 7,
            "maxItems": 7,
        },
        "expression_peak": _prob,
    }
)

LANDMARKS = _obj({"rotation_sigma": _nonneg, "noise_sigma": _nonneg})

PIPELINE = _obj(
    {
        "cadence": _obj(
            {
                "expression_every": {"type": "integer", "minimum": 1},
                "age_every": {"type": "integer", "minimum": 1},
                "gender_every": {"type": "integer", "minimum": 1},
            }
        ),
        "buffer_capacity": {"type": "integer", "minimum": 1},
        "window": {"type": "integer", "minimum": 1},
        "tracker": _obj(
            {
                "max_match_distance": {"type": "number", "exclusiveMinimum": 0},
                "expiry_misses": {"type": "integer", "minimum": 1},
            }
        ),
        "visualization_rate": {"type": "number", "exclusiveMinimum": 0},
    }
)

SCENARIO = _obj(
    {
        "name": {"type": "string"},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "frame_rate": {"type": "number", "exclusiveMinimum": 0},
        "frame_size": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        "seed": {"type": "integer", "minimum": 0},
        "actors": {"type": "array", "items": ACTOR},
        "detector_model": DETECTOR,
        "recognizer_model": RECOGNIZER,
        "landmark_model": LANDMARKS,
        "pipeline": PIPELINE,
    },
    ["duration"],
)

TRACE_KINDS = [
    "start",
    "grab",
    "evict",
    "checkout",
    "detect_done",
    "landmarks",
    "recognize_done",
    "track_update",
    "prune",
    "tick",
    "drop_noop",
    "end",
]

TRACE_EVENT = _obj(
    {"ts": {"type": "integer", "minimum": 0}, "kind": {"enum": TRACE_KINDS}, "data": {"type": "object"}},
    ["ts", "kind", "data"],
)

_ANNOTATED_TRACK = _obj(
    {
        "track_id": {"type": "integer"},
        "box": {"type": "array", "items": _num, "minItems": 4, "maxItems": 4},
        "age": _int_or_null,
        "gender": {"enum": ["female", "male", None]},
        "expression": {"type": ["string", "null"]},
        "staleness_ms": _num_or_null,
    },
    ["track_id", "box", "age", "gender", "expression", "staleness_ms"],
)

ANNOTATED_FRAME = _obj(
    {
        "ts": {"type": "integer", "minimum": 0},
        "frame_id": _int_or_null,
        "frame_ts": _int_or_null,
        "tracks": {"type": "array", "items": _ANNOTATED_TRACK},
    },
    ["ts", "frame_id", "frame_ts", "tracks"],
)

METRICS = _obj(
    {
        "clock_mode": {"enum": ["virtual", "realtime"]},
        "frames_grabbed": {"type": "integer", "minimum": 0},
        "ticks": {"type": "integer", "minimum": 0},
        "achieved_fps": _nonneg,
        "faces_tracked": {"type": "integer", "minimum": 0},
        "detection_checkouts": {"type": "integer", "minimum": 0},
        "recognition_checkouts": {"type": "integer", "minimum": 0},
        "faces_recognized": {"type": "integer", "minimum": 0},
        "mean_recognition_ms_per_face": _num_or_null,
        "drop_count": {"type": "integer", "minimum": 0},
    },
    [
        "clock_mode",
        "frames_grabbed",
        "ticks",
        "achieved_fps",
        "faces_tracked",
        "detection_checkouts",
        "recognition_checkouts",
        "faces_recognized",
        "mean_recognition_ms_per_face",
        "drop_count",
    ],
)

_rate_or_null = {"type": ["number", "null"], "minimum": 0, "maximum": 1}

EVAL_REPORT = _obj(
    {
        "detection_ap": _rate_or_null,
        "age_mae": _num_or_null,
        "gender_accuracy": _rate_or_null,
        "expression_accuracy": _rate_or_null,
        "identity_switches": {"type": "integer", "minimum": 0},
        "staleness_mean_ms": _num_or_null,
        "staleness_p95_ms": _num_or_null,
        "achieved_fps": _nonneg,
        "drop_count": {"type": "integer", "minimum": 0},
        "samples": _obj(
            {
                "detection_frames": {"type": "integer", "minimum": 0},
                "age": {"type": "integer", "minimum": 0},
                "gender": {"type": "integer", "minimum": 0},
                "expression": {"type": "integer", "minimum": 0},
            }
        ),
    },
    [
        "detection_ap",
        "age_mae",
        "gender_accuracy",
        "expression_accuracy",
        "identity_switches",
        "staleness_mean_ms",
        "staleness_p95_ms",
        "achieved_fps",
        "drop_count",
    ],
)


def validate(instance, schema) -> None:
    """Raise jsonschema.ValidationError when ``instance`` does not match."""
    jsonschema.Draft202012Validator(schema).validate(instance)
