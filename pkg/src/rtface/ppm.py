"""Debug frame rendering to binary PPM (P6) with boxes and labels burned in."""

from __future__ import annotations

from pathlib import Path
from typing import Tuple, Union

import numpy as np

# 3x5 glyphs, rows top to bottom, '#' = ink
_FONT = {
    "0": ["###", "#.#", "#.#", "#.#", "###"],
    "1": [".#.", "##.", ".#.", ".#.", "###"],
    "2": ["###", "..#", "###", "#..", "###"],
    "3": ["###", "..#", "###", "..#", "###"],
    "4": ["#.#", "#.#", "###", "..#", "..#"],
    "5": ["###", "#..", "###", "..#", "###"],
    "6": ["###", "#..", "###", "#.#", "###"],
    "7": ["###", "..#", "..#", "..#", "..#"],
    "8": ["###", "#.#", "###", "#.#", "###"],
    "9": ["###", "#.#", "###", "..#", "###"],
    "A": [".#.", "#.#", "###", "#.#", "#.#"],
    "D": ["##.", "#.#", "#.#", "#.#", "##."],
    "E": ["###", "#..", "##.", "#..", "###"],
    "F": ["###", "#..", "##.", "#..", "#.."],
    "G": [".##", "#..", "#.#", "#.#", ".##"],
    "H": ["#.#", "#.#", "###", "#.#", "#.#"],
    "I": ["###", ".#.", ".#.", ".#.", "###"],
    "M": ["#.#", "###", "###", "#.#", "#.#"],
    "N": ["##.", "#.#", "#.#", "#.#", "#.#"],
    "P": ["##.", "#.#", "##.", "#..", "#.."],
    "R": ["##.", "#.#", "##.", "#.#", "#.#"],
    "S": [".##", "#..", ".#.", "..#", "##."],
    "U": ["#.#", "#.#", "#.#", "#.#", "###"],
    "#": ["#.#", "###", "#.#", "###", "#.#"],
    " ": ["...", "...", "...", "...", "..."],
}

BACKGROUND = (40, 40, 40)
BOX_COLOR = (0, 220, 0)
TEXT_COLOR = (255, 255, 0)


def _draw_rect(img: np.ndarray, x0: int, y0: int, x1: int, y1: int, color) -> None:
    h, w, _ = img.shape
    x0, x1 = max(0, x0), min(w - 1, x1)
    y0, y1 = max(0, y0), min(h - 1, y1)
    if x0 > x1 or y0 > y1:
        return
    img[y0, x0 : x1 + 1] = color
    img[y1, x0 : x1 + 1] = color
    img[y0 : y1 + 1, x0] = color
    img[y0 : y1 + 1, x1] = color


def draw_text(img: np.ndarray, x: int, y: int, text: str, color=TEXT_COLOR) -> None:
    h, w, _ = img.shape
    for n, ch in enumerate(text.upper()):
        glyph = _FONT.get(ch, _FONT[" "])
        for r, row in enumerate(glyph):
            for c, cell in enumerate(row):
                px, py = x + 4 * n + c, y + r
                if cell == "#" and 0 <= px < w and 0 <= py < h:
                    img[py, px] = color


def label_for(track: dict) -> str:
    parts = [f"#{track['track_id']}"]
    if track.get("gender"):
        parts.append(("F" if track["gender"] == "female" else "M") + (str(track["age"]) if track.get("age") is not None else ""))
    elif track.get("age") is not None:
        parts.append(str(track["age"]))
    if track.get("expression"):
        parts.append(track["expression"][:3])
    return " ".join(parts)


def render(annotated: dict, size: Tuple[int, int]) -> np.ndarray:
    """RGB image of one annotated frame (dict form); no source pixels in simulation."""
    w, h = size
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    for t in annotated["tracks"]:
        x, y, bw, bh = t["box"]
        _draw_rect(img, int(round(x)), int(round(y)), int(round(x + bw)) - 1, int(round(y + bh)) - 1, BOX_COLOR)
        draw_text(img, int(round(x)), max(0, int(round(y)) - 6), label_for(t))
    return img


def write_ppm(path: Union[str, Path], img: np.ndarray) -> None:
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError(f"{path}: not an 8-bit P6 image")
    w, h = map(int, dims.split())
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w, 3)
