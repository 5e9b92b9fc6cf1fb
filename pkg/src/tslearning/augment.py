"""Random-image augmentation driven by a linear congruential generator.

Images are filled row-major with ``X / (m - 1)`` for successive LCG outputs
``X``, labelled by the frozen teacher's argmax, and appended to each real
batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .autodiff import ConfigurationError, DimensionError, UsageError
from .model import ModelState, forward

NR_MULTIPLIER = 1664525
NR_INCREMENT = 1013904223
NR_MODULUS = 2**32


@dataclass(frozen=True)
class LcgState:
    """``X_{n+1} = (a * X_n + c) mod m``; ``x`` is the current ``X_n``."""

    x: int = 0
    a: int = NR_MULTIPLIER
    c: int = NR_INCREMENT
    m: int = NR_MODULUS

    def __post_init__(self):
        if self.m < 2:
            raise ConfigurationError(f"LCG modulus must be >= 2, got {self.m}")
        if min(self.a, self.c, self.x) < 0:
            raise ConfigurationError("LCG parameters must be non-negative")
        if self.x >= self.m:
            raise ConfigurationError(f"LCG state {self.x} not below modulus {self.m}")

    @classmethod
    def seeded(cls, seed: int, a: int = NR_MULTIPLIER, c: int = NR_INCREMENT, m: int = NR_MODULUS) -> "LcgState":
        return cls(seed % m, a, c, m)


def lcg_next(state: LcgState) -> tuple[int, LcgState]:
    value = (state.a * state.x + state.c) % state.m
    return value, replace(state, x=value)


_BLOCK = 4096


def _jump_tables(a: int, c: int, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    # X_{k} = A_k * X_0 + C_k (mod m) for k = 1..n
    A = np.empty(n, dtype=np.uint64)
    C = np.empty(n, dtype=np.uint64)
    ak, ck = 1, 0
    for k in range(n):
        ak, ck = (a * ak) % m, (a * ck + c) % m
        A[k], C[k] = ak, ck
    return A, C


_tables: dict[tuple[int, int, int], tuple[np.ndarray, np.ndarray]] = {}


def lcg_draws(state: LcgState, count: int) -> tuple[np.ndarray, LcgState]:
    """The next ``count`` outputs as an int array, plus the advanced state."""
    out = np.empty(count, dtype=np.uint64 if state.m <= 2**64 else object)
    a, c, m = state.a, state.c, state.m
    x = state.x
    # Vectorised jump-ahead is exact when m is a power of two no larger than
    # 2**32: uint64 products wrap modulo 2**64, a multiple of m.
    if m <= 2**32 and m & (m - 1) == 0 and count > 64:
        key = (a % m, c % m, m)
        if key not in _tables:
            _tables[key] = _jump_tables(a % m, c % m, m, _BLOCK)
        A, C = _tables[key]
        mask = np.uint64(m - 1)
        pos = 0
        while pos < count:
            n = min(_BLOCK, count - pos)
            block = (A[:n] * np.uint64(x) + C[:n]) & mask
            out[pos : pos + n] = block
            x = int(block[-1])
            pos += n
    else:
        for i in range(count):
            x = (a * x + c) % m
            out[i] = x
    return out, replace(state, x=x)


def lcg_uniform(state: LcgState, count: int) -> tuple[np.ndarray, LcgState]:
    """``count`` values in [0, 1] as ``X / (m - 1)``."""
    draws, state = lcg_draws(state, count)
    return draws.astype(np.float64) / float(state.m - 1), state


def generate_random_image(state: LcgState, shape: tuple[int, ...]) -> tuple[np.ndarray, LcgState]:
    values, state = lcg_uniform(state, math.prod(shape))
    return values.reshape(shape), state


def generate_random_images(state: LcgState, count: int, shape: tuple[int, ...]) -> tuple[np.ndarray, LcgState]:
    values, state = lcg_uniform(state, count * math.prod(shape))
    return values.reshape((count, *shape)), state


def _labels_from_logits(logits: np.ndarray) -> np.ndarray:
    idx = np.argmax(logits, axis=1)
    out = np.zeros(logits.shape, dtype=logits.dtype)
    out[np.arange(len(idx)), idx] = 1.0
    return out


def pseudo_label(teacher: ModelState, images) -> np.ndarray:
    """One-hot rows at the teacher's argmax logit (lowest index wins ties)."""
    if not teacher.frozen:
        raise UsageError("pseudo-labelling requires a frozen teacher")
    _, logits = forward(teacher, images)
    return _labels_from_logits(logits.data)


@dataclass(frozen=True)
class AugmentConfig:
    images_per_batch: int = 0
    image_shape: tuple[int, ...] = (3, 32, 32)
    label_mode: str = "hard"
    seed: int = 0
    a: int = NR_MULTIPLIER
    c: int = NR_INCREMENT
    m: int = NR_MODULUS

    def __post_init__(self):
        if self.images_per_batch < 0:
            raise ConfigurationError("images_per_batch must be non-negative")
        if self.label_mode != "hard":
            raise ConfigurationError(f"unsupported label mode {self.label_mode!r}; only 'hard' is available")

    def initial_state(self) -> LcgState:
        return LcgState.seeded(self.seed, self.a, self.c, self.m)


def expand_batch(
    images: np.ndarray,
    targets: np.ndarray,
    config: AugmentConfig,
    state: LcgState,
    teacher: ModelState,
    return_features: bool = False,
):
    """Append ``config.images_per_batch`` teacher-labelled random images.

    Returns ``(images, targets, state)``; with ``return_features`` the
    teacher's features for the appended images come fourth, saving a second
    teacher pass when the caller also needs regression targets.
    """
    n = config.images_per_batch
    if n == 0:
        empty = np.zeros((0, teacher.spec.feature_dim), dtype=images.dtype)
        return (images, targets, state, empty) if return_features else (images, targets, state)
    if not teacher.frozen:
        raise UsageError("pseudo-labelling requires a frozen teacher")
    if teacher.spec.num_classes != targets.shape[1]:
        raise DimensionError(
            f"teacher predicts {teacher.spec.num_classes} classes but targets have {targets.shape[1]}"
        )
    if tuple(teacher.spec.input_shape) != tuple(images.shape[1:]):
        raise DimensionError(f"teacher input {teacher.spec.input_shape} vs batch images {images.shape[1:]}")
    randoms, state = generate_random_images(state, n, tuple(images.shape[1:]))
    randoms = randoms.astype(images.dtype)
    feats, logits = forward(teacher, randoms)
    labels = _labels_from_logits(logits.data).astype(targets.dtype)
    out = (np.concatenate([images, randoms]), np.concatenate([targets, labels]), state)
    return (*out, feats.data) if return_features else out


__all__ = [
    "AugmentConfig",
    "LcgState",
    "expand_batch",
    "generate_random_image",
    "generate_random_images",
    "lcg_draws",
    "lcg_next",
    "lcg_uniform",
    "pseudo_label",
]
