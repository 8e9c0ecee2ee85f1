"""Least-squares 2-D similarity alignment of landmarks to a face template.

In 2-D a similarity ``q = s R p + t`` is multiplication by the complex
number ``a = s e^{i theta}`` plus a translation, so the least-squares fit
is a one-variable complex linear regression on centred points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .errors import DegenerateInputError, InvalidInputError

N_LANDMARKS = 68


def _as_points(pts) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidInputError(f"expected an (N, 2) point array, got shape {arr.shape}")
    return arr


def _wrap(angle: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class SimilarityTransform:
    scale: float = 1.0
    rotation: float = 0.0
    translation: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidInputError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "rotation", _wrap(float(self.rotation)))
        tx, ty = self.translation
        object.__setattr__(self, "translation", (float(tx), float(ty)))

    @property
    def _a(self) -> complex:
        return self.scale * complex(math.cos(self.rotation), math.sin(self.rotation))

    @property
    def _t(self) -> complex:
        return complex(*self.translation)

    @classmethod
    def _from_complex(cls, a: complex, t: complex) -> "SimilarityTransform":
        return cls(abs(a), math.atan2(a.imag, a.real), (t.real, t.imag))

    def apply(self, pts) -> np.ndarray:
        return apply_transform(self, pts)

    def inverse(self) -> "SimilarityTransform":
        a_inv = 1 / self._a
        return self._from_complex(a_inv, -a_inv * self._t)

    def compose(self, first: "SimilarityTransform") -> "SimilarityTransform":
        """The transform ``self(first(p))``."""
        return self._from_complex(self._a * first._a, self._a * first._t + self._t)

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        m = np.eye(3)
        m[:2, :2] = self.scale * np.array([[c, -s], [s, c]])
        m[:2, 2] = self.translation
        return m

    def to_dict(self) -> dict:
        return {"scale": self.scale, "rotation": self.rotation, "translation": list(self.translation)}


IDENTITY = SimilarityTransform()


def apply_transform(t: SimilarityTransform, pts) -> np.ndarray:
    p = _as_points(pts)
    z = p[:, 0] + 1j * p[:, 1]
    w = t._a * z + t._t
    return np.column_stack([w.real, w.imag])


def estimate_similarity(source, target) -> SimilarityTransform:
    """Similarity minimising sum ||s R p_i + t - q_i||^2 over the point pairs.

    Raises DegenerateInputError when the source points coincide, or when the
    best fit has zero scale (coincident targets); reflections are never fit.
    """
    src = _as_points(source)
    dst = _as_points(target)
    if src.shape != dst.shape:
        raise InvalidInputError(f"point count mismatch: {src.shape[0]} vs {dst.shape[0]}")
    if src.shape[0] < 2:
        raise InvalidInputError("need at least two point pairs")
    z = src[:, 0] + 1j * src[:, 1]
    w = dst[:, 0] + 1j * dst[:, 1]
    zm, wm = z.mean(), w.mean()
    zc, wc = z - zm, w - wm
    denom = float(np.sum(np.abs(zc) ** 2))
    spread = float(np.max(np.abs(z))) if len(z) else 0.0
    if denom <= (1e-12 * max(spread, 1.0)) ** 2:
        raise DegenerateInputError("source points are coincident")
    a = complex(np.sum(np.conj(zc) * wc)) / denom
    if a == 0:
        raise DegenerateInputError("target points admit no positive-scale fit")
    return SimilarityTransform._from_complex(a, wm - a * zm)


def alignment_residual(source, target, t: SimilarityTransform) -> float:
    """Root-mean-square distance between ``t(source)`` and ``target``."""
    src = _as_points(source)
    dst = _as_points(target)
    if src.shape != dst.shape:
        raise InvalidInputError(f"point count mismatch: {src.shape[0]} vs {dst.shape[0]}")
    d = apply_transform(t, src) - dst
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))


@dataclass(frozen=True)
class FaceTemplate:
    """Reference landmark layout in the unit square.

    The default layout is synthetic: a plausible 68-point arrangement of
    jaw, brows, nose, eyes and mouth, not a published template.
    """

    points: np.ndarray

    def __post_init__(self):
        p = _as_points(self.points)
        if p.shape[0] < 2:
            raise InvalidInputError("template needs at least two points")
        if np.allclose(p, p[0]):
            raise DegenerateInputError("template points are coincident")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other):
        return isinstance(other, FaceTemplate) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    @classmethod
    def default(cls) -> "FaceTemplate":
        return cls(_default_layout())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FaceTemplate":
        rows = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidInputError(f"{path}:{lineno}: expected 'x y', got {line!r}")
            rows.append([float(parts[0]), float(parts[1])])
        return cls(np.array(rows, dtype=float).reshape(-1, 2))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text("".join(f"{x!r} {y!r}\n" for x, y in self.points.tolist()))


def _arc(cx, cy, rx, ry, t0, t1, n):
    t = np.linspace(t0, t1, n)
    return np.column_stack([cx + rx * np.cos(t), cy + ry * np.sin(t)])


def _default_layout() -> np.ndarray:
    jaw = _arc(0.5, 0.45, 0.42, 0.5, math.pi, 0.0, 17)[::-1]
    jaw[:, 1] = 0.45 + np.abs(jaw[:, 1] - 0.45)
    brow_r = _arc(0.30, 0.30, 0.14, 0.05, math.pi, 2 * math.pi, 5)
    brow_l = _arc(0.70, 0.30, 0.14, 0.05, math.pi, 2 * math.pi, 5)
    bridge = np.column_stack([np.full(4, 0.5), np.linspace(0.36, 0.58, 4)])
    nostrils = np.column_stack([np.linspace(0.42, 0.58, 5), 0.62 + 0.02 * np.cos(np.linspace(-1, 1, 5))])
    eye_r = _arc(0.32, 0.40, 0.08, 0.035, math.pi, -math.pi, 7)[:-1]
    eye_l = _arc(0.68, 0.40, 0.08, 0.035, math.pi, -math.pi, 7)[:-1]
    mouth_outer = _arc(0.5, 0.78, 0.16, 0.07, math.pi, -math.pi, 13)[:-1]
    mouth_inner = _arc(0.5, 0.78, 0.10, 0.03, math.pi, -math.pi, 9)[:-1]
    pts = np.vstack([jaw, brow_r, brow_l, bridge, nostrils, eye_r, eye_l, mouth_outer, mouth_inner])
    assert pts.shape == (N_LANDMARKS, 2)
    return np.clip(pts, 0.0, 1.0)
