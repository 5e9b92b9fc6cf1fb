"""Datasets: CIFAR-10 binary records, a procedural benchmark, batching.

Pixels are always scaled to [0, 1] by dividing the stored byte by 255; no
mean/std standardization is applied, so real images share the value range
of the generated augmentation images.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .augment import LcgState, lcg_uniform
from .autodiff import ConfigurationError

CIFAR_SHAPE = (3, 32, 32)
CIFAR_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
CIFAR_TEST_FILES = ("test_batch.bin",)


class FormatError(ValueError):
    """A record file does not follow the expected binary layout."""


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray  # (n, c, h, w) in [0, 1]
    labels: np.ndarray  # (n,) ints in [0, classes)
    classes: int
    split: str = "train"

    def __post_init__(self):
        if self.images.ndim != 4:
            raise ValueError(f"images must be (n, c, h, w), got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ValueError(f"{len(self.images)} images but {len(self.labels)} labels")
        if self.classes < 1:
            raise ValueError("classes must be positive")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.classes):
            raise ValueError(f"labels outside [0, {self.classes})")
        if self.images.size and (self.images.min() < 0 or self.images.max() > 1):
            raise ValueError("image values outside [0, 1]")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def subset(self, idx, split: Optional[str] = None) -> "Dataset":
        return Dataset(self.images[idx], self.labels[idx], self.classes, split or self.split)

    def one_hot(self, idx=None, dtype=np.float64) -> np.ndarray:
        labels = self.labels if idx is None else self.labels[idx]
        return np.eye(self.classes, dtype=dtype)[labels]


# ---------------------------------------------------------------------------
# binary records: 1 label byte followed by c*h*w pixel bytes, channel planes
# stored one after another, each row-major


def decode_records(raw: bytes, shape=CIFAR_SHAPE, classes: int = 10, split: str = "train",
                   source: str = "<bytes>") -> Dataset:
    size = 1 + math.prod(shape)
    if len(raw) % size:
        full = len(raw) // size
        raise FormatError(
            f"{source}: {len(raw)} bytes is not a whole number of {size}-byte records; "
            f"truncated record starts at byte offset {full * size}"
        )
    recs = np.frombuffer(raw, dtype=np.uint8).reshape(-1, size)
    labels = recs[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels >= classes)
    if bad.size:
        i = int(bad[0])
        raise FormatError(f"{source}: label {labels[i]} >= {classes} in record {i} at byte offset {i * size}")
    images = recs[:, 1:].reshape((-1, *shape)).astype(np.float64) / 255.0
    return Dataset(images, labels, classes, split)


def encode_records(dataset: Dataset) -> bytes:
    if dataset.classes > 256:
        raise FormatError("record layout stores labels in one byte")
    pixels = np.rint(dataset.images * 255.0).astype(np.uint8).reshape(len(dataset), -1)
    recs = np.concatenate([dataset.labels.astype(np.uint8)[:, None], pixels], axis=1)
    return recs.tobytes()


def load_records(path, shape=CIFAR_SHAPE, classes: int = 10, split: str = "train") -> Dataset:
    path = Path(path)
    return decode_records(path.read_bytes(), shape, classes, split, source=str(path))


def dump_records(dataset: Dataset, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_records(dataset))
    os.replace(tmp, path)


def load_cifar10(path, split: str = "train", classes: int = 10) -> Dataset:
    """Load CIFAR-10 binary batches.

    ``path`` is either one record file or the ``cifar-10-batches-bin``
    directory, in which case the five training batches or the test batch are
    concatenated according to ``split``.
    """
    path = Path(path)
    if path.is_dir():
        names = CIFAR_TRAIN_FILES if split == "train" else CIFAR_TEST_FILES
        parts = [load_records(path / n, CIFAR_SHAPE, classes, split) for n in names]
        return Dataset(
            np.concatenate([p.images for p in parts]),
            np.concatenate([p.labels for p in parts]),
            classes,
            split,
        )
    return load_records(path, CIFAR_SHAPE, classes, split)


# ---------------------------------------------------------------------------
# procedural benchmark


def _phase_field(k: int, classes: int, shape) -> np.ndarray:
    c, h, w = shape
    theta = math.pi * k / classes
    yy, xx = np.meshgrid(np.linspace(0.0, 1.0, h), np.linspace(0.0, 1.0, w), indexing="ij")
    u = xx * math.cos(theta) + yy * math.sin(theta)
    base = 1.5 + (k % 3)
    ramp = 1.0 + 2.0 * k / max(classes - 1, 1)
    phase = 2 * math.pi * (base * u + 0.5 * ramp * u * u)
    return np.stack([phase + 2 * math.pi * ch / c + 0.7 * k for ch in range(c)])


def class_pattern(k: int, classes: int, shape, shift: float = 0.0) -> np.ndarray:
    """Noise-free template for class ``k``: an oriented grating whose spatial
    frequency ramps across the image at a class-specific rate."""
    return 0.5 + 0.3 * np.sin(_phase_field(k, classes, shape) + shift)


def make_synthetic(classes: int, per_class: int, shape=(3, 32, 32), seed: int = 0,
                   noise: float = 0.2, jitter: float = 0.0, split: str = "train") -> Dataset:
    """``classes * per_class`` images, labels cycling ``0, 1, ..., classes-1``.

    Each image is its class template, phase-shifted by up to ``jitter``
    radians, plus uniform LCG noise in ``[-noise, noise]``, clamped to [0, 1].
    The generator draws pixel noise first, then (if ``jitter``) one shift per
    image.
    """
    if classes < 2:
        raise ConfigurationError("make_synthetic needs at least two classes")
    n = classes * per_class
    labels = np.arange(n, dtype=np.int64) % classes
    state = LcgState.seeded(seed)
    u, state = lcg_uniform(state, n * math.prod(shape))
    noise_field = noise * (2.0 * u.reshape((n, *shape)) - 1.0)
    phases = np.stack([_phase_field(k, classes, shape) for k in range(classes)])[labels]
    if jitter:
        shifts, state = lcg_uniform(state, n)
        phases = phases + (jitter * (2.0 * shifts - 1.0))[:, None, None, None]
    images = 0.5 + 0.3 * np.sin(phases)
    images = np.clip(images + noise_field, 0.0, 1.0)
    return Dataset(images, labels, classes, split)


def synthetic_splits(classes: int, train_per_class: int, test_per_class: int, shape=(3, 32, 32),
                     seed: int = 0, noise: float = 0.2, jitter: float = 0.0) -> tuple[Dataset, Dataset]:
    """Train and test sets cut from one generated pool (class-balanced)."""
    pool = make_synthetic(classes, train_per_class + test_per_class, shape, seed, noise, jitter)
    cut = classes * train_per_class
    return pool.subset(slice(0, cut), "train"), pool.subset(slice(cut, None), "test")


# ---------------------------------------------------------------------------
# batching


@dataclass(frozen=True)
class BatchPlan:
    batch_size: int
    seed: int = 0
    drop_last: bool = False
    shuffle: bool = True


def epoch_order(n: int, plan: BatchPlan, epoch: int) -> np.ndarray:
    if not plan.shuffle:
        return np.arange(n)
    return np.random.default_rng([plan.seed, epoch]).permutation(n)


def batches(dataset: Dataset, plan: BatchPlan, epoch: int, dtype=np.float64) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(images, one_hot_targets)`` for one epoch in a seeded order."""
    for idx in batch_indices(len(dataset), plan, epoch):
        yield dataset.images[idx].astype(dtype), dataset.one_hot(idx, dtype)


def batch_indices(n: int, plan: BatchPlan, epoch: int) -> list[np.ndarray]:
    if plan.batch_size <= 0 or plan.batch_size > n:
        raise ConfigurationError(f"batch size {plan.batch_size} must be in [1, {n}]")
    order = epoch_order(n, plan, epoch)
    out = [order[s : s + plan.batch_size] for s in range(0, n, plan.batch_size)]
    if plan.drop_last and len(out[-1]) < plan.batch_size:
        out.pop()
    return out
