"""Dataset ingestion: IDX parsing, downscaling, and amplitude encoding.

Expected directory layout for :func:`build_task`::

    <data_dir>/<dataset>/train-images-idx3-ubyte[.gz]
    <data_dir>/<dataset>/train-labels-idx1-ubyte[.gz]
    <data_dir>/<dataset>/t10k-images-idx3-ubyte[.gz]
    <data_dir>/<dataset>/t10k-labels-idx1-ubyte[.gz]

where ``<dataset>`` is ``mnist`` or ``fashion``.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from math import ceil, log2
from pathlib import Path

import numpy as np

from .statevec import StateVector

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

DATASETS = ("mnist", "fashion")

_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class IdxFormatError(ValueError):
    """Malformed IDX payload; message carries byte-offset diagnostics."""


@dataclass(frozen=True)
class TaskSpec:
    dataset: str
    classes: tuple[int, ...]
    image_side: int = 16
    train_limit: int = 2000
    test_limit: int = 500

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))
        if self.dataset not in DATASETS:
            raise ValueError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if not 2 <= len(self.classes) <= 4:
            raise ValueError(f"need 2..4 classes, got {len(self.classes)}")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate class ids")
        if self.image_side not in (16, 28):
            raise ValueError(f"image_side must be 16 or 28, got {self.image_side}")
        if self.train_limit < 1 or self.test_limit < 1:
            raise ValueError("split limits must be >= 1")

    @property
    def n_qubits(self) -> int:
        return ceil(log2(self.image_side**2))

    @property
    def n_classes(self) -> int:
        return len(self.classes)


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"IDX file not found: {path}")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def load_idx(images_path: str | Path, labels_path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Parse big-endian IDX image/label files into (N, H, W) and (N,) arrays."""
    raw = _read_bytes(images_path)
    if len(raw) < 16:
        raise IdxFormatError(f"{images_path}: header truncated at {len(raw)} bytes (need 16)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(
            f"{images_path}: bad image magic 0x{magic:08x} at offset 0 (expected 0x{IMAGE_MAGIC:08x})"
        )
    expected = 16 + count * rows * cols
    if len(raw) != expected:
        raise IdxFormatError(
            f"{images_path}: payload is {len(raw)} bytes, header implies {expected}"
            f" ({count} x {rows} x {cols} after 16-byte header)"
        )
    images = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)

    raw = _read_bytes(labels_path)
    if len(raw) < 8:
        raise IdxFormatError(f"{labels_path}: header truncated at {len(raw)} bytes (need 8)")
    magic, n_labels = struct.unpack(">II", raw[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(
            f"{labels_path}: bad label magic 0x{magic:08x} at offset 0 (expected 0x{LABEL_MAGIC:08x})"
        )
    if len(raw) != 8 + n_labels:
        raise IdxFormatError(
            f"{labels_path}: payload is {len(raw)} bytes, header implies {8 + n_labels}"
        )
    labels = np.frombuffer(raw, dtype=np.uint8, offset=8)
    if n_labels != count:
        raise IdxFormatError(
            f"image count {count} != label count {n_labels} ({images_path} vs {labels_path})"
        )
    return images, labels


def downscale(image: np.ndarray) -> np.ndarray:
    """Bilinear 28x28 -> 16x16 with corner-aligned sampling; returns floats in [0, 255]."""
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (28, 28):
        raise ValueError(f"expected a 28x28 image, got {image.shape}")
    pos = np.linspace(0.0, 27.0, 16)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, 27)
    frac = pos - lo
    rows = (image[lo, :] * (1 - frac)[:, None] + image[hi, :] * frac[:, None])
    return rows[:, lo] * (1 - frac)[None, :] + rows[:, hi] * frac[None, :]


def amplitude_encode(image: np.ndarray, n_qubits: int) -> StateVector:
    """Flatten row-major, zero-pad to 2**n_qubits, and L2-normalize."""
    flat = np.asarray(image, dtype=np.float64).reshape(-1)
    dim = 1 << n_qubits
    if flat.shape[0] > dim:
        raise ValueError(f"image with {flat.shape[0]} pixels exceeds 2**{n_qubits} amplitudes")
    nrm = float(np.linalg.norm(flat))
    if nrm < 1e-12:
        raise ValueError("cannot amplitude-encode an all-zero image")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[: flat.shape[0]] = flat / nrm
    return StateVector(n_qubits, amps)


def _resolve(data_dir: Path, name: str) -> Path:
    plain = data_dir / name
    if plain.exists():
        return plain
    gz = data_dir / (name + ".gz")
    if gz.exists():
        return gz
    raise FileNotFoundError(f"IDX file not found: {plain} (or {gz.name})")


def _encode_split(images: np.ndarray, labels: np.ndarray, spec: TaskSpec,
                  rng: np.random.Generator, limit: int) -> list[tuple[StateVector, int]]:
    class_to_new = {c: i for i, c in enumerate(spec.classes)}
    for c in spec.classes:
        if not np.any(labels == c):
            raise ValueError(f"class {c} absent from dataset")
    mask = np.isin(labels, spec.classes)
    idx = np.flatnonzero(mask)
    idx = idx[rng.permutation(idx.shape[0])]
    if limit > idx.shape[0]:
        raise ValueError(f"requested {limit} samples but only {idx.shape[0]} available")
    idx = idx[:limit]

    out: list[tuple[StateVector, int]] = []
    for i in idx:
        img = images[i]
        if img.shape == (28, 28) and spec.image_side == 16:
            img = downscale(img)
        elif img.shape != (spec.image_side, spec.image_side):
            raise ValueError(f"dataset images are {img.shape}, task expects {spec.image_side}")
        out.append((amplitude_encode(img, spec.n_qubits), class_to_new[int(labels[i])]))
    return out


def build_task(spec: TaskSpec, rng: np.random.Generator,
               data_dir: str | Path) -> tuple[list[tuple[StateVector, int]],
                                              list[tuple[StateVector, int]]]:
    """Load, filter, shuffle, truncate and encode the train/test splits."""
    root = Path(data_dir) / spec.dataset
    train = _encode_split(*load_idx(_resolve(root, _FILES["train"][0]),
                                    _resolve(root, _FILES["train"][1])),
                          spec=spec, rng=rng, limit=spec.train_limit)
    test = _encode_split(*load_idx(_resolve(root, _FILES["test"][0]),
                                   _resolve(root, _FILES["test"][1])),
                         spec=spec, rng=rng, limit=spec.test_limit)
    return train, test


def write_idx(images: np.ndarray, labels: np.ndarray, images_path: str | Path,
              labels_path: str | Path) -> None:
    """Write (N, H, W) uint8 images and (N,) labels in IDX format."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    if labels.shape[0] != n:
        raise ValueError("image/label count mismatch")
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, n))
        fh.write(labels.tobytes())
