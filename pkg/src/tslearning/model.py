"""Declarative layer stacks with a feature/logit split.

A network is ``layers`` followed by an implicit linear head ``d -> classes``.
The flat activation entering the head (after its activation, if the stack
ends with one) is the feature vector that the student regresses onto the
teacher's.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import ConfigurationError, DimensionError, Tensor, UsageError

LAYER_KINDS = ("conv2d", "linear", "relu", "maxpool2d", "flatten")

_DEFAULTS = {
    "conv2d": {"stride": 1, "padding": 0},
    "maxpool2d": {},
    "linear": {},
    "relu": {},
    "flatten": {},
}
_REQUIRED = {
    "conv2d": ("out", "kernel", "stride", "padding"),
    "maxpool2d": ("window", "stride"),
    "linear": ("out",),
    "relu": (),
    "flatten": (),
}


class SpecError(ValueError):
    """A network description is malformed or does not propagate shapes."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    params: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise SpecError(f"unknown layer kind {self.kind!r}")
        got = dict(self.params)
        missing = [k for k in _REQUIRED[self.kind] if k not in got]
        extra = [k for k in got if k not in _REQUIRED[self.kind]]
        if missing or extra:
            raise SpecError(f"{self.kind}: missing {missing} unexpected {extra}")
        for k, v in got.items():
            lower = 0 if k == "padding" else 1
            if not isinstance(v, int) or v < lower:
                raise SpecError(f"{self.kind}: {k} must be an integer >= {lower}, got {v!r}")

    @classmethod
    def make(cls, kind: str, **params: int) -> "LayerSpec":
        if kind == "maxpool2d" and "window" in params:
            params.setdefault("stride", params["window"])
        merged = {**_DEFAULTS.get(kind, {}), **params}
        order = _REQUIRED.get(kind, tuple(merged))
        return cls(kind, tuple((k, merged[k]) for k in order if k in merged) + tuple(
            (k, v) for k, v in merged.items() if k not in order
        ))

    def __getitem__(self, key: str) -> int:
        return dict(self.params)[key]

    def to_text(self) -> str:
        return " ".join([self.kind] + [f"{k}={v}" for k, v in self.params])


def parse_layer(text: str) -> LayerSpec:
    """Parse ``"conv2d out=8 kernel=3 padding=1"`` style layer text."""
    tokens = text.split()
    if not tokens:
        raise SpecError("empty layer description")
    params = {}
    for tok in tokens[1:]:
        key, sep, value = tok.partition("=")
        if not sep or not re.fullmatch(r"-?\d+", value):
            raise SpecError(f"bad layer argument {tok!r} in {text!r}")
        params[key] = int(value)
    try:
        return LayerSpec.make(tokens[0], **params)
    except TypeError as exc:
        raise SpecError(str(exc)) from None


def parse_shape(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise SpecError(f"bad shape {text!r}, expected e.g. 3x32x32") from None
    if not dims or any(d <= 0 for d in dims):
        raise SpecError(f"bad shape {text!r}")
    return dims


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...]
    feature_dim: int
    num_classes: int

    def __post_init__(self):
        if self.feature_dim <= 0 or self.num_classes <= 0:
            raise SpecError("feature_dim and num_classes must be positive")
        shapes = propagate_shapes(self)
        if len(shapes[-1]) != 1 or shapes[-1][0] != self.feature_dim:
            raise SpecError(
                f"layer stack ends with shape {shapes[-1]}, expected a flat vector of length {self.feature_dim}"
            )

    def to_text(self) -> str:
        lines = [
            "input " + "x".join(str(d) for d in self.input_shape),
            f"feature_dim {self.feature_dim}",
            f"classes {self.num_classes}",
        ]
        lines += ["layer " + layer.to_text() for layer in self.layers]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NetworkSpec":
        fields: dict[str, str] = {}
        layers = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            if key == "layer":
                layers.append(parse_layer(rest))
            elif key in ("input", "feature_dim", "classes"):
                fields[key] = rest.strip()
            else:
                raise SpecError(f"unknown spec line {line!r}")
        missing = {"input", "feature_dim", "classes"} - fields.keys()
        if missing:
            raise SpecError(f"spec text missing {sorted(missing)}")
        return cls(
            parse_shape(fields["input"]),
            tuple(layers),
            int(fields["feature_dim"]),
            int(fields["classes"]),
        )

    def parameter_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Names and shapes of all parameters, in layer order, head last."""
        out = []
        shapes = propagate_shapes(self)
        for idx, (layer, shape_in) in enumerate(zip(self.layers, shapes)):
            if layer.kind == "conv2d":
                k = layer["kernel"]
                out.append((f"{idx}.conv2d.weight", (layer["out"], shape_in[0], k, k)))
                out.append((f"{idx}.conv2d.bias", (layer["out"],)))
            elif layer.kind == "linear":
                out.append((f"{idx}.linear.weight", (shape_in[0], layer["out"])))
                out.append((f"{idx}.linear.bias", (layer["out"],)))
        out.append(("head.weight", (self.feature_dim, self.num_classes)))
        out.append(("head.bias", (self.num_classes,)))
        return out

    def parameter_count(self) -> int:
        return sum(math.prod(s) for _, s in self.parameter_shapes())


def propagate_shapes(spec: NetworkSpec) -> list[tuple[int, ...]]:
    """Per-sample shape before each layer and after the last one."""
    shape = tuple(spec.input_shape)
    shapes = [shape]
    for idx, layer in enumerate(spec.layers):
        where = f"layer {idx} ({layer.to_text()}) on input {shape}"
        try:
            if layer.kind == "conv2d":
                if len(shape) != 3:
                    raise SpecError(f"{where}: conv2d needs a c x h x w input")
                k, s, p = layer["kernel"], layer["stride"], layer["padding"]
                shape = (layer["out"], ad.conv_output_size(shape[1], k, s, p), ad.conv_output_size(shape[2], k, s, p))
            elif layer.kind == "maxpool2d":
                if len(shape) != 3:
                    raise SpecError(f"{where}: maxpool2d needs a c x h x w input")
                win, s = layer["window"], layer["stride"]
                shape = (shape[0], ad.conv_output_size(shape[1], win, s, 0), ad.conv_output_size(shape[2], win, s, 0))
            elif layer.kind == "flatten":
                shape = (math.prod(shape),)
            elif layer.kind == "linear":
                if len(shape) != 1:
                    raise SpecError(f"{where}: linear needs a flat input, insert flatten first")
                shape = (layer["out"],)
        except ConfigurationError as exc:
            raise SpecError(f"{where}: {exc}") from None
        shapes.append(shape)
    return shapes


def lenet_like(input_shape=(3, 32, 32), feature_dim: int = 64, num_classes: int = 10) -> NetworkSpec:
    """Small LeNet5-style stack: two conv/pool stages and two dense layers."""
    c, h, w = input_shape
    layers = [
        LayerSpec.make("conv2d", out=6, kernel=5),
        LayerSpec.make("relu"),
        LayerSpec.make("maxpool2d", window=2),
        LayerSpec.make("conv2d", out=16, kernel=5),
        LayerSpec.make("relu"),
        LayerSpec.make("maxpool2d", window=2),
        LayerSpec.make("flatten"),
        LayerSpec.make("linear", out=120),
        LayerSpec.make("relu"),
        LayerSpec.make("linear", out=feature_dim),
        LayerSpec.make("relu"),
    ]
    return NetworkSpec(tuple(input_shape), tuple(layers), feature_dim, num_classes)


@dataclass
class ModelState:
    spec: NetworkSpec
    params: dict[str, Tensor]
    frozen: bool = False

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def checksum(self) -> str:
        h = hashlib.sha256()
        for name, t in self.params.items():
            h.update(name.encode())
            h.update(np.ascontiguousarray(t.data).tobytes())
        return h.hexdigest()

    def astype(self, dtype) -> "ModelState":
        params = {
            n: Tensor(t.data.astype(dtype), requires_grad=not self.frozen, name=n) for n, t in self.params.items()
        }
        model = ModelState(self.spec, params, False)
        return freeze(model) if self.frozen else model


def build_model(spec: NetworkSpec, init_seed: int, dtype=np.float64) -> ModelState:
    """Kaiming-uniform (fan-in) weights, zero biases, fully determined by the seed."""
    rng = np.random.default_rng(init_seed)
    params = {}
    for name, shape in spec.parameter_shapes():
        if name.endswith("bias"):
            data = np.zeros(shape, dtype=dtype)
        else:
            fan_in = math.prod(shape[1:]) if len(shape) == 4 else shape[0]
            bound = math.sqrt(6.0 / fan_in)
            data = rng.uniform(-bound, bound, size=shape).astype(dtype)
        params[name] = Tensor(data, requires_grad=True, name=name)
    return ModelState(spec, params)


def _forward(model: ModelState, batch: Tensor) -> tuple[Tensor, Tensor]:
    spec = model.spec
    if batch.data.ndim != len(spec.input_shape) + 1 or batch.shape[1:] != tuple(spec.input_shape):
        raise DimensionError(f"batch shape {batch.shape} does not match input shape {spec.input_shape}")
    p = model.params
    h = batch
    for idx, layer in enumerate(spec.layers):
        if layer.kind == "conv2d":
            h = ad.conv2d(h, p[f"{idx}.conv2d.weight"], p[f"{idx}.conv2d.bias"], layer["stride"], layer["padding"])
        elif layer.kind == "linear":
            h = ad.linear(h, p[f"{idx}.linear.weight"], p[f"{idx}.linear.bias"])
        elif layer.kind == "relu":
            h = ad.relu(h)
        elif layer.kind == "maxpool2d":
            h = ad.maxpool2d(h, layer["window"], layer["stride"])
        elif layer.kind == "flatten":
            h = ad.flatten(h)
    logits = ad.linear(h, p["head.weight"], p["head.bias"])
    return h, logits


def forward(model: ModelState, batch) -> tuple[Tensor, Tensor]:
    """Return ``(features, logits)``; frozen models record no graph."""
    batch = batch if isinstance(batch, Tensor) else Tensor(batch)
    if model.frozen:
        with ad.no_grad():
            return _forward(model, batch)
    return _forward(model, batch)


def freeze(model: ModelState) -> ModelState:
    """Mark ``model`` frozen in place: no gradients, read-only parameters."""
    for t in model.params.values():
        t.requires_grad = False
        t.grad = None
        t.data.flags.writeable = False
    model.frozen = True
    return model


def thaw(model: ModelState) -> ModelState:
    """Trainable copy of a (possibly frozen) model."""
    params = {n: Tensor(t.data.copy(), requires_grad=True, name=n) for n, t in model.params.items()}
    return ModelState(model.spec, params, False)


@dataclass
class Compatibility:
    teacher: tuple[int, int]
    student: tuple[int, int]
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        head = f"teacher (d={self.teacher[0]}, c={self.teacher[1]}) vs student (d={self.student[0]}, c={self.student[1]})"
        if self.ok:
            return head + ": compatible"
        return head + ": " + "; ".join(self.violations)


def validate_pair(teacher: NetworkSpec, student: NetworkSpec) -> Compatibility:
    """Teacher and student must agree on feature width and class count."""
    report = Compatibility((teacher.feature_dim, teacher.num_classes), (student.feature_dim, student.num_classes))
    if teacher.feature_dim != student.feature_dim:
        report.violations.append(
            f"feature dimension mismatch: teacher d={teacher.feature_dim}, student d={student.feature_dim}"
        )
    if teacher.num_classes != student.num_classes:
        report.violations.append(
            f"class count mismatch: teacher c={teacher.num_classes}, student c={student.num_classes}"
        )
    if tuple(teacher.input_shape) != tuple(student.input_shape):
        report.warnings.append(f"input shapes differ: {teacher.input_shape} vs {student.input_shape}")
    return report


def check_trainable(model: ModelState) -> None:
    if model.frozen:
        raise UsageError("model is frozen; thaw a copy before training it")


__all__ = [
    "Compatibility",
    "LayerSpec",
    "ModelState",
    "NetworkSpec",
    "SpecError",
    "build_model",
    "check_trainable",
    "forward",
    "freeze",
    "lenet_like",
    "parse_layer",
    "parse_shape",
    "propagate_shapes",
    "thaw",
    "validate_pair",
]
