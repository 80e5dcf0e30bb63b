"""Procedural stand-in dataset: jittered digit glyphs rendered to 28x28 IDX files.

This exists so the toolkit runs end to end on machines without the real image
datasets (this generator needs no downloads).  Glyphs are stroke templates
rasterized with a Gaussian brush after a random affine jitter, giving a
learnable but non-trivial classification task with the same file format,
shapes and value ranges as the real data.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import write_idx

_SIDE = 28


def _arc(cx: float, cy: float, r: float, a0: float, a1: float, n: int = 16,
         ry: float | None = None) -> np.ndarray:
    """Arc from angle a0 to a1 (degrees, screen coords: y grows downward)."""
    t = np.radians(np.linspace(a0, a1, n))
    ry = r if ry is None else ry
    return np.stack([cx + r * np.cos(t), cy - ry * np.sin(t)], axis=1)


def _line(x0: float, y0: float, x1: float, y1: float) -> np.ndarray:
    return np.array([[x0, y0], [x1, y1]])


# Stroke templates in the unit square, y pointing down.
_GLYPHS: dict[int, list[np.ndarray]] = {
    0: [_arc(0.5, 0.5, 0.26, 0, 360, n=24, ry=0.36)],
    1: [_line(0.36, 0.28, 0.54, 0.13), _line(0.54, 0.13, 0.54, 0.87)],
    2: [_arc(0.5, 0.32, 0.22, 160, -15), _line(0.68, 0.42, 0.28, 0.85),
        _line(0.28, 0.85, 0.75, 0.85)],
    3: [_arc(0.48, 0.31, 0.2, 150, -80), _arc(0.48, 0.68, 0.23, 100, -140)],
    4: [_line(0.6, 0.12, 0.27, 0.6), _line(0.27, 0.6, 0.78, 0.6),
        _line(0.62, 0.35, 0.62, 0.88)],
    5: [_line(0.7, 0.14, 0.34, 0.14), _line(0.34, 0.14, 0.31, 0.45),
        _arc(0.5, 0.63, 0.24, 120, -120)],
    6: [_arc(0.62, 0.3, 0.3, 60, 150), _line(0.36, 0.3, 0.3, 0.6),
        _arc(0.51, 0.65, 0.21, 0, 360, n=20)],
    7: [_line(0.25, 0.15, 0.76, 0.15), _line(0.76, 0.15, 0.4, 0.88)],
    8: [_arc(0.5, 0.3, 0.18, 0, 360, n=20), _arc(0.5, 0.68, 0.23, 0, 360, n=20)],
    9: [_arc(0.47, 0.34, 0.2, 0, 360, n=20), _line(0.67, 0.36, 0.6, 0.86)],
}


def _segments(strokes: list[np.ndarray]) -> np.ndarray:
    segs = []
    for pts in strokes:
        for i in range(len(pts) - 1):
            segs.append([pts[i], pts[i + 1]])
    return np.asarray(segs)  # (S, 2, 2)


def _jitter(segs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    angle = rng.uniform(-0.18, 0.18)
    scale = rng.uniform(0.85, 1.1)
    shear = rng.uniform(-0.08, 0.08)
    shift = rng.uniform(-0.07, 0.07, size=2)
    c, s = np.cos(angle), np.sin(angle)
    mat = scale * np.array([[c, -s], [s + shear, c]])
    pts = segs.reshape(-1, 2) - 0.5
    pts = pts @ mat.T + 0.5 + shift
    return pts.reshape(-1, 2, 2)


def _rasterize(segs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Distance-field rendering with a Gaussian brush, plus pixel noise."""
    grid = (np.arange(_SIDE) + 0.5) / _SIDE
    px = np.stack(np.meshgrid(grid, grid, indexing="xy"), axis=-1).reshape(-1, 2)  # (P, 2)
    a = segs[:, 0]                       # (S, 2)
    d = segs[:, 1] - segs[:, 0]          # (S, 2)
    len2 = np.maximum(np.sum(d * d, axis=1), 1e-12)
    # point-to-segment distances, (P, S)
    w = px[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(w * d[None, :, :], axis=2) / len2[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[..., None] * d[None, :, :]
    dist = np.sqrt(np.sum((px[:, None, :] - proj) ** 2, axis=2)).min(axis=1)

    width = rng.uniform(0.028, 0.042)
    peak = rng.uniform(190, 255)
    img = peak * np.exp(-0.5 * (dist / width) ** 2)
    img += rng.normal(0.0, 6.0, size=img.shape)
    return np.clip(img, 0, 255).reshape(_SIDE, _SIDE).astype(np.uint8)


def render_digit(digit: int, rng: np.random.Generator) -> np.ndarray:
    """One 28x28 uint8 rendering of a digit with random jitter."""
    if digit not in _GLYPHS:
        raise ValueError(f"no glyph template for class {digit}")
    return _rasterize(_jitter(_segments(_GLYPHS[digit]), rng), rng)


def _make_split(n: int, classes: list[int], rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    labels = np.array([classes[i % len(classes)] for i in range(n)], dtype=np.uint8)
    labels = labels[rng.permutation(n)]
    images = np.stack([render_digit(int(y), rng) for y in labels])
    return images, labels


def generate_dataset(out_dir: str | Path, n_train: int = 6000, n_test: int = 1500,
                     seed: int = 0, classes: list[int] | None = None) -> Path:
    """Write a digit-glyph dataset under <out_dir>/mnist in IDX layout."""
    classes = list(range(10)) if classes is None else list(classes)
    root = Path(out_dir) / "mnist"
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    tr_images, tr_labels = _make_split(n_train, classes, rng)
    te_images, te_labels = _make_split(n_test, classes, rng)
    write_idx(tr_images, tr_labels, root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte")
    write_idx(te_images, te_labels, root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte")
    return root
