"""Train a teacher, then compare three ways of training a much smaller student.

Takes a couple of minutes on one CPU core.
Run: python3 demos/teacher_student.py
"""

from tslearning.augment import AugmentConfig
from tslearning.data import synthetic_splits
from tslearning.model import NetworkSpec, freeze, parse_layer
from tslearning.optim import LrSchedule
from tslearning.train import TrainConfig, best_accuracy, train_student, train_teacher

SHAPE = (3, 24, 24)
D = 32


def spec(*layers: str) -> NetworkSpec:
    return NetworkSpec(SHAPE, tuple(parse_layer(t) for t in layers), D, 6)


teacher_spec = spec(
    "conv2d out=8 kernel=3 padding=1", "relu", "maxpool2d window=2",
    "conv2d out=16 kernel=3 padding=1", "relu", "maxpool2d window=2",
    "conv2d out=16 kernel=3 padding=1", "relu", "maxpool2d window=2",
    "flatten", f"linear out={D}", "relu",
)
student_spec = spec("conv2d out=2 kernel=3 stride=3", "relu", "flatten", f"linear out={D}", "relu")
print(f"teacher parameters: {teacher_spec.parameter_count()}, student parameters: {student_spec.parameter_count()}")

train, test = synthetic_splits(6, 100, 50, SHAPE, seed=7, noise=0.8, jitter=1.0)

teacher, hist = train_teacher(TrainConfig("teacher", teacher_spec, epochs=20, batch_size=32), train, test)
teacher = freeze(teacher)
print(f"teacher best test accuracy: {best_accuracy(hist):.3f}")

for mode, extra in [
    ("student_plain", {}),
    ("student_teacher", {}),
    ("student_teacher_aug", {"augment": AugmentConfig(30, SHAPE, seed=0)}),
]:
    cfg = TrainConfig(mode, student_spec, epochs=30, batch_size=32, schedule=LrSchedule(1e-2), **extra)
    _, hist = train_student(cfg, train, test, teacher)
    last = hist[-1]
    print(f"{mode:<22} best acc {best_accuracy(hist):.3f}  final mse {last.loss_mse:.3f}  final xent {last.loss_xent:.3f}")
