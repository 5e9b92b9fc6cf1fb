"""Teacher training and the three student modes.

A student step computes, on one (possibly expanded) batch::

    loss = lambda_mse * mse(student_features, teacher_features)
         + lambda_xent * cross_entropy(student_logits, targets)

with the teacher frozen and evaluated without graph recording.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import autodiff as ad
from .augment import AugmentConfig, expand_batch
from .autodiff import ConfigurationError, DimensionError, Tensor, UsageError
from .data import BatchPlan, Dataset, batch_indices
from .model import ModelState, NetworkSpec, build_model, forward, thaw, validate_pair
from .optim import Adam, LrSchedule, lr_at

log = logging.getLogger(__name__)

MODES = ("teacher", "student_plain", "student_teacher", "student_teacher_aug")
CSV_HEADER = ("epoch", "lr", "loss_total", "loss_xent", "loss_mse", "train_acc", "test_acc", "seconds")


class CompatibilityError(ValueError):
    """Teacher and student disagree on feature width or class count."""


@dataclass(frozen=True)
class TrainConfig:
    mode: str
    spec: NetworkSpec  # the network being trained
    epochs: int = 1
    batch_size: int = 128
    lambda_mse: float = 1.0
    lambda_xent: float = 1.0
    xent_reduction: str = "mean"
    schedule: LrSchedule = field(default_factory=LrSchedule)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    init_seed: int = 0
    shuffle_seed: int = 0
    dtype: str = "float64"
    record_time: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.epochs < 0 or self.batch_size <= 0:
            raise ConfigurationError("epochs must be >= 0 and batch_size > 0")
        if self.lambda_mse < 0 or self.lambda_xent < 0:
            raise ConfigurationError("loss weights must be non-negative")
        if self.dtype not in ("float64", "float32"):
            raise ConfigurationError(f"dtype must be float64 or float32, got {self.dtype!r}")

    @property
    def uses_teacher(self) -> bool:
        return self.mode in ("student_teacher", "student_teacher_aug")

    @property
    def effective_lambda_mse(self) -> float:
        return self.lambda_mse if self.uses_teacher else 0.0

    @property
    def images_per_batch(self) -> int:
        return self.augment.images_per_batch if self.mode == "student_teacher_aug" else 0

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


@dataclass
class EpochMetrics:
    epoch: int
    lr: float
    loss_total: float
    loss_xent: float
    loss_mse: float
    train_acc: float
    test_acc: float
    seconds: float


def evaluate(model: ModelState, dataset: Dataset, batch_size: int = 512) -> float:
    """Fraction of samples whose argmax logit equals the label."""
    if len(dataset) == 0:
        return 0.0
    dtype = next(iter(model.params.values())).dtype
    correct = 0
    with ad.no_grad():
        for start in range(0, len(dataset), batch_size):
            images = dataset.images[start : start + batch_size].astype(dtype)
            _, logits = forward(model, Tensor(images))
            correct += int((np.argmax(logits.data, axis=1) == dataset.labels[start : start + batch_size]).sum())
    return correct / len(dataset)


def predict(model: ModelState, images: np.ndarray, batch_size: int = 512) -> np.ndarray:
    dtype = next(iter(model.params.values())).dtype
    out = []
    with ad.no_grad():
        for start in range(0, len(images), batch_size):
            _, logits = forward(model, Tensor(images[start : start + batch_size].astype(dtype)))
            out.append(np.argmax(logits.data, axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.intp)


def teacher_features(teacher: ModelState, images: np.ndarray, batch_size: int = 512) -> np.ndarray:
    """Penultimate features of a frozen teacher, computed without a graph."""
    if not teacher.frozen:
        raise UsageError("teacher must be frozen")
    out = []
    for start in range(0, len(images), batch_size):
        feats, _ = forward(teacher, images[start : start + batch_size])
        out.append(feats.data)
    return np.concatenate(out)


def _check_data(spec: NetworkSpec, *datasets: Optional[Dataset]) -> None:
    for ds in datasets:
        if ds is None:
            continue
        if tuple(ds.image_shape) != tuple(spec.input_shape):
            raise DimensionError(f"{ds.split} images are {ds.image_shape}, network expects {spec.input_shape}")
        if ds.classes != spec.num_classes:
            raise DimensionError(f"{ds.split} set has {ds.classes} classes, network predicts {spec.num_classes}")


def _loop(
    config: TrainConfig,
    model: ModelState,
    train: Dataset,
    test: Optional[Dataset],
    teacher: Optional[ModelState],
    step_log: Optional[list] = None,
) -> list[EpochMetrics]:
    dtype = config.np_dtype
    opt = Adam(model.parameters(), lr=config.schedule.base_lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    plan = BatchPlan(config.batch_size, seed=config.shuffle_seed)
    lam_mse, lam_xent = config.effective_lambda_mse, config.lambda_xent
    n_aug = config.images_per_batch
    aug_cfg = replace(config.augment, images_per_batch=n_aug)
    lcg = aug_cfg.initial_state()
    zero = Tensor(np.zeros((), dtype=dtype))
    # A frozen teacher maps each sample independently of batch composition,
    # so its features on the real training set are computed once.
    teacher_feats = teacher_features(teacher, train.images.astype(dtype)) if teacher is not None else None
    history = []

    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        opt.lr = lr_at(config.schedule, epoch)
        sums = {"total": 0.0, "xent": 0.0, "mse": 0.0}
        nb = 0
        correct = 0
        for idx in batch_indices(len(train), plan, epoch):
            images = train.images[idx].astype(dtype)
            targets = train.one_hot(idx, dtype)
            n_real = len(idx)
            if teacher_feats is not None:
                target_feats = teacher_feats[idx]
            if n_aug:
                images, targets, lcg, extra = expand_batch(images, targets, aug_cfg, lcg, teacher, return_features=True)
                target_feats = np.concatenate([target_feats, extra])
            feats, logits = forward(model, Tensor(images))
            xent = ad.cross_entropy_loss(logits, targets, config.xent_reduction)
            if config.mode == "teacher":
                loss, mse = xent, zero
            elif teacher_feats is not None:
                mse = ad.mse_feature_loss(feats, target_feats)
                loss = ad.combined_loss(mse, xent, lam_mse, lam_xent)
            else:
                mse = zero
                loss = ad.combined_loss(zero, xent, 0.0, lam_xent)
            pred = np.argmax(logits.data[:n_real], axis=1)
            correct += int((pred == np.argmax(targets[:n_real], axis=1)).sum())
            ad.backward(loss, model.parameters())
            opt.step()
            sums["total"] += loss.item()
            sums["xent"] += xent.item()
            sums["mse"] += mse.item()
            nb += 1
            if step_log is not None:
                step_log.append(loss.item())
        test_acc = evaluate(model, test) if test is not None else float("nan")
        metrics = EpochMetrics(
            epoch=epoch,
            lr=opt.lr,
            loss_total=sums["total"] / nb,
            loss_xent=sums["xent"] / nb,
            loss_mse=sums["mse"] / nb,
            train_acc=correct / len(train),
            test_acc=test_acc,
            seconds=time.perf_counter() - t0 if config.record_time else 0.0,
        )
        log.info(
            "%s epoch %d lr=%.2e loss=%.4f (xent %.4f mse %.4f) train=%.4f test=%.4f",
            config.mode, epoch, metrics.lr, metrics.loss_total, metrics.loss_xent, metrics.loss_mse,
            metrics.train_acc, metrics.test_acc,
        )
        history.append(metrics)
    return history


def train_teacher(
    config: TrainConfig,
    train: Dataset,
    test: Optional[Dataset] = None,
    step_log: Optional[list] = None,
) -> tuple[ModelState, list[EpochMetrics]]:
    """Plain cross-entropy training of ``config.spec``."""
    if config.mode != "teacher":
        raise ConfigurationError(f"train_teacher needs mode 'teacher', got {config.mode!r}")
    _check_data(config.spec, train, test)
    model = build_model(config.spec, config.init_seed, config.np_dtype)
    history = _loop(config, model, train, test, None, step_log)
    return model, history


def train_student(
    config: TrainConfig,
    train: Dataset,
    test: Optional[Dataset] = None,
    teacher: Optional[ModelState] = None,
    init: Optional[ModelState] = None,
    step_log: Optional[list] = None,
) -> tuple[ModelState, list[EpochMetrics]]:
    """Train ``config.spec`` as a student in one of the three student modes.

    ``init`` optionally supplies starting parameters instead of a fresh
    seeded initialization.
    """
    if config.mode == "teacher":
        raise ConfigurationError("train_student needs a student mode")
    _check_data(config.spec, train, test)
    if config.uses_teacher:
        if teacher is None:
            raise ConfigurationError(f"mode {config.mode} requires a teacher")
        if not teacher.frozen:
            raise UsageError("teacher must be frozen before student training")
        report = validate_pair(teacher.spec, config.spec)
        if not report.ok:
            raise CompatibilityError(report.describe())
        if tuple(teacher.spec.input_shape) != tuple(config.spec.input_shape):
            raise DimensionError(f"teacher input {teacher.spec.input_shape} vs student input {config.spec.input_shape}")
        if teacher.params["head.weight"].dtype != config.np_dtype:
            teacher = teacher.astype(config.np_dtype)
    else:
        teacher = None
    if init is not None:
        if init.spec != config.spec:
            raise ConfigurationError("initial model spec differs from the configured student spec")
        model = thaw(init.astype(config.np_dtype)) if init.frozen else init.astype(config.np_dtype)
    else:
        model = build_model(config.spec, config.init_seed, config.np_dtype)
    history = _loop(config, model, train, test, teacher, step_log)
    return model, history


def best_accuracy(history: list[EpochMetrics]) -> float:
    """Maximum test accuracy over epochs, the headline number of a run."""
    return max(m.test_acc for m in history)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def metrics_csv(history: list[EpochMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for m in history:
        row = asdict(m)
        w.writerow([_fmt(row[k]) for k in CSV_HEADER])
    return buf.getvalue()


def write_metrics_csv(history: list[EpochMetrics], path) -> None:
    Path(path).write_text(metrics_csv(history), encoding="utf-8")


def read_metrics_csv(path) -> list[EpochMetrics]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    types = {f.name: f.type for f in fields(EpochMetrics)}
    return [
        EpochMetrics(**{k: (int(v) if types[k] in (int, "int") else float(v)) for k, v in row.items()}) for row in rows
    ]
