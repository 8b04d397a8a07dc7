"""Data ingestion: IDX parsing, rough-grid feature reduction, synthetic blobs.

Feature vectors live in [0,1]^n. Image mode reads the standard MNIST IDX
containers (big-endian, magic 0x00000803 for images and 0x00000801 for
labels) and reduces each 28x28 grid to 32 cell means. Synthetic mode
generates two uniform blobs so the whole pipeline runs without any
external files.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28

# Crop window and cell geometry of the rough-grid reduction: columns 2..25
# of the 28x28 grid, split into 4x8 cells of 7x3 pixels (32 features).
CROP_COL_START = 2
CROP_COL_STOP = 26
CELL_ROWS = 4
CELL_COLS = 8
CELL_HEIGHT = 7
CELL_WIDTH = 3
FEATURE_DIMENSION = CELL_ROWS * CELL_COLS

# Half-width of the uniform synthetic blobs around their class centers.
BLOB_HALF_WIDTH = 0.1
BLOB_BASE_CENTER = 0.3
BLOB_CENTER_SCALE = 0.4


class IdxFormatError(ValueError):
    """Raised when an IDX byte stream violates the container format."""


@dataclass(frozen=True)
class Sample:
    """One labeled feature vector; features are read-only and lie in [0,1]."""

    features: np.ndarray
    label: int

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 1:
            raise ValueError(f"features must be a 1-D vector, got shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        if features.size and (features.min() < 0.0 or features.max() > 1.0):
            raise ValueError("features must lie in [0, 1]")
        features = features.copy()
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of equal-dimension samples."""

    samples: tuple[Sample, ...]
    dimension: int
    class_map: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.dimension < 1:
            raise ValueError(f"dimension must be at least 1, got {self.dimension}")
        for sample in self.samples:
            if sample.features.shape != (self.dimension,):
                raise ValueError(
                    f"sample dimension {sample.features.shape[0]} does not match dataset dimension {self.dimension}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    @cached_property
    def features_matrix(self) -> np.ndarray:
        """All feature vectors stacked into a read-only (len, dimension) array."""
        if not self.samples:
            matrix = np.zeros((0, self.dimension))
        else:
            matrix = np.stack([s.features for s in self.samples])
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def labels(self) -> np.ndarray:
        """All labels as a read-only integer vector."""
        labels = np.array([s.label for s in self.samples], dtype=int)
        labels.setflags(write=False)
        return labels


def parse_idx_images(data: bytes) -> np.ndarray:
    """Parse an IDX image stream into a (count, 28, 28) uint8 array."""
    if len(data) < 16:
        raise IdxFormatError(f"image stream truncated: header needs 16 bytes, got {len(data)}")
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"unexpected magic 0x{magic:08x} in image stream (expected 0x{IMAGE_MAGIC:08x})")
    if rows != IMAGE_SIDE:
        raise IdxFormatError(f"image rows must be {IMAGE_SIDE}, got {rows}")
    if cols != IMAGE_SIDE:
        raise IdxFormatError(f"image cols must be {IMAGE_SIDE}, got {cols}")
    expected = count * rows * cols
    payload = data[16:]
    if len(payload) != expected:
        raise IdxFormatError(f"image payload must be {expected} bytes for count {count}, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols).copy()


def parse_idx_labels(data: bytes) -> np.ndarray:
    """Parse an IDX label stream into a (count,) integer array."""
    if len(data) < 8:
        raise IdxFormatError(f"label stream truncated: header needs 8 bytes, got {len(data)}")
    magic, count = struct.unpack(">II", data[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"unexpected magic 0x{magic:08x} in label stream (expected 0x{LABEL_MAGIC:08x})")
    payload = data[8:]
    if len(payload) != count:
        raise IdxFormatError(f"label payload must be {count} bytes for count {count}, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).astype(int)


def write_idx_images(grids: np.ndarray) -> bytes:
    """Serialize a (count, 28, 28) stack of intensity grids to IDX bytes."""
    grids = np.asarray(grids)
    if grids.ndim != 3 or grids.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE):
        raise ValueError(f"grids must have shape (count, {IMAGE_SIDE}, {IMAGE_SIDE}), got {grids.shape}")
    if grids.size and (grids.min() < 0 or grids.max() > 255):
        raise ValueError("intensities must lie in [0, 255]")
    header = struct.pack(">IIII", IMAGE_MAGIC, grids.shape[0], IMAGE_SIDE, IMAGE_SIDE)
    return header + grids.astype(np.uint8).tobytes()


def write_idx_labels(labels: np.ndarray) -> bytes:
    """Serialize a vector of digit labels to IDX bytes."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"labels must be a 1-D vector, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise ValueError("labels must lie in [0, 255]")
    header = struct.pack(">II", LABEL_MAGIC, labels.shape[0])
    return header + labels.astype(np.uint8).tobytes()


def _read_file(path: str) -> bytes:
    with open(path, "rb") as handle:
        data = handle.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def load_idx_images(path: str) -> np.ndarray:
    """Read an IDX image file (gzip-compressed transparently) and parse it."""
    try:
        return parse_idx_images(_read_file(path))
    except IdxFormatError as err:
        raise IdxFormatError(f"{path}: {err}") from err


def load_idx_labels(path: str) -> np.ndarray:
    """Read an IDX label file (gzip-compressed transparently) and parse it."""
    try:
        return parse_idx_labels(_read_file(path))
    except IdxFormatError as err:
        raise IdxFormatError(f"{path}: {err}") from err


def rough_grid_features(grid: np.ndarray) -> np.ndarray:
    """Reduce a 28x28 intensity grid to 32 cell means scaled to [0,1].

    The grid is cropped to columns 2..25 (near-empty borders dropped),
    partitioned into 4x8 cells of 7x3 pixels, and each cell's mean
    intensity is divided by 255. Output index is row*8 + col.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.shape != (IMAGE_SIDE, IMAGE_SIDE):
        raise ValueError(f"grid must be {IMAGE_SIDE}x{IMAGE_SIDE}, got shape {grid.shape}")
    cropped = grid[:, CROP_COL_START:CROP_COL_STOP]
    cells = cropped.reshape(CELL_ROWS, CELL_HEIGHT, CELL_COLS, CELL_WIDTH)
    return cells.mean(axis=(1, 3)).reshape(FEATURE_DIMENSION) / 255.0


def build_binary_dataset(
    images: np.ndarray,
    labels: np.ndarray,
    class_a: int,
    class_b: int,
    train_per_class: int,
    test_per_class: int,
    rng: np.random.Generator,
) -> tuple[Dataset, Dataset]:
    """Select two digit classes, reduce them to features, and split train/test.

    ``class_a`` maps to label 0 and ``class_b`` to label 1. Selection is
    without replacement, the train and test index sets are disjoint, and
    both splits are shuffled. Deterministic for a given generator state.
    """
    if class_a == class_b:
        raise ValueError(f"class_a and class_b must differ, both are {class_a}")
    if train_per_class < 0 or test_per_class < 0:
        raise ValueError("per-class counts must be non-negative")
    labels = np.asarray(labels)
    if len(images) != labels.shape[0]:
        raise ValueError(f"image count {len(images)} does not match label count {labels.shape[0]}")
    need = train_per_class + test_per_class
    class_map = {class_a: 0, class_b: 1}
    train_rows: list[Sample] = []
    test_rows: list[Sample] = []
    for digit, binary in class_map.items():
        available = np.flatnonzero(labels == digit)
        if available.size < need:
            raise ValueError(
                f"class {digit}: need {need} samples ({train_per_class} train + {test_per_class} test), "
                f"only {available.size} available"
            )
        chosen = rng.permutation(available)[:need]
        for index in chosen[:train_per_class]:
            train_rows.append(Sample(rough_grid_features(images[index]), binary))
        for index in chosen[train_per_class:need]:
            test_rows.append(Sample(rough_grid_features(images[index]), binary))
    train_order = rng.permutation(len(train_rows))
    test_order = rng.permutation(len(test_rows))
    train = Dataset(tuple(train_rows[i] for i in train_order), FEATURE_DIMENSION, class_map)
    test = Dataset(tuple(test_rows[i] for i in test_order), FEATURE_DIMENSION, class_map)
    return train, test


def synth_blobs(n_dim: int, per_class: int, separation: float, rng: np.random.Generator) -> Dataset:
    """Generate two uniform blobs of ``per_class`` samples each.

    Class 0 is centered componentwise at 0.3 and class 1 at
    0.3 + separation*0.4; each blob is uniform within +-BLOB_HALF_WIDTH
    of its center and clipped to [0,1]. Deterministic for a given
    generator state.
    """
    if n_dim < 1:
        raise ValueError(f"n_dim must be at least 1, got {n_dim}")
    if per_class < 0:
        raise ValueError(f"per_class must be non-negative, got {per_class}")
    if separation < 0:
        raise ValueError(f"separation must be non-negative, got {separation}")
    center0 = BLOB_BASE_CENTER
    center1 = BLOB_BASE_CENTER + separation * BLOB_CENTER_SCALE
    block0 = rng.uniform(center0 - BLOB_HALF_WIDTH, center0 + BLOB_HALF_WIDTH, size=(per_class, n_dim))
    block1 = rng.uniform(center1 - BLOB_HALF_WIDTH, center1 + BLOB_HALF_WIDTH, size=(per_class, n_dim))
    stacked = np.clip(np.vstack([block0, block1]), 0.0, 1.0)
    labels = np.concatenate([np.zeros(per_class, dtype=int), np.ones(per_class, dtype=int)])
    order = rng.permutation(2 * per_class)
    samples = tuple(Sample(stacked[i], int(labels[i])) for i in order)
    return Dataset(samples, n_dim, {0: 0, 1: 1})


def draw_batch(dataset: Dataset, batch_size: int, rng: np.random.Generator) -> list[Sample]:
    """Draw ``batch_size`` samples uniformly with replacement."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    if not dataset.samples:
        raise ValueError("cannot draw a batch from an empty dataset")
    indices = rng.integers(0, len(dataset.samples), size=batch_size)
    return [dataset.samples[i] for i in indices]
