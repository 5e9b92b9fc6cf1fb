"""Command-line entry point: ``tslearning <command> ...``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error,
3 teacher/student incompatibility.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import persist
from .config import ConfigError, experiment_mode, load_data, parse_config, read_config, train_config
from .data import dump_records, load_records, make_synthetic
from .model import SpecError, freeze, parse_shape, validate_pair
from .train import CompatibilityError, evaluate, train_student, train_teacher, write_metrics_csv

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_COMPAT = 0, 1, 2, 3

log = logging.getLogger("tslearning")


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_train_teacher(args) -> int:
    cfg = read_config(args.config)
    mode = experiment_mode(cfg)
    if mode != "teacher":
        raise ConfigError(f"train-teacher needs mode = teacher, config says {mode!r}",
                          cfg.line_of("experiment", "mode"), cfg.source)
    tc = train_config(cfg, mode)
    train, test = load_data(cfg)
    model, history = train_teacher(tc, train, test)
    persist.save(freeze(model), args.out)
    if args.metrics:
        write_metrics_csv(history, args.metrics)
    print(f"teacher saved to {args.out}; best test accuracy {max(m.test_acc for m in history):.4f}")
    return EXIT_OK


def cmd_train_student(args) -> int:
    cfg = read_config(args.config)
    mode = experiment_mode(cfg, args.mode)
    if mode == "teacher":
        raise ConfigError("train-student needs a student mode; use train-teacher for mode = teacher",
                          cfg.line_of("experiment", "mode"), cfg.source)
    tc = train_config(cfg, mode)
    teacher = None
    if tc.uses_teacher:
        if not args.teacher:
            raise ConfigError(f"mode {mode} requires --teacher CKPT", source=cfg.source)
        teacher = persist.load(args.teacher)
        report = validate_pair(teacher.spec, tc.spec)
        if not report.ok:
            raise CompatibilityError(report.describe())
    train, test = load_data(cfg)
    model, history = train_student(tc, train, test, teacher)
    persist.save(model, args.out)
    if args.metrics:
        write_metrics_csv(history, args.metrics)
    print(f"{mode} student saved to {args.out}; best test accuracy {max(m.test_acc for m in history):.4f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = persist.load(args.model)
    data_path = Path(args.data)
    head = data_path.read_bytes()[:512]
    looks_like_config = head.lstrip().startswith((b"[", b"#"))
    if looks_like_config:
        cfg = read_config(data_path)
        train, test = load_data(cfg)
        ds = train if args.split == "train" else test
    else:
        ds = load_records(data_path, tuple(model.spec.input_shape), model.spec.num_classes, args.split)
    acc = evaluate(model, ds)
    print(f"accuracy={acc:.4f}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    if args.kind != "synthetic":
        raise ConfigError(f"unknown dataset kind {args.kind!r}")
    try:
        shape = parse_shape(args.shape)
    except SpecError as exc:
        raise ConfigError(str(exc)) from None
    ds = make_synthetic(args.classes, args.per_class, shape, seed=args.seed, noise=args.noise, jitter=args.jitter)
    dump_records(ds, args.out)
    print(f"wrote {len(ds)} records of {1 + ds.images[0].size} bytes to {args.out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    model, state = persist.load_with_state(args.model)
    spec = model.spec
    print(f"checkpoint: {args.model}")
    print(f"state: {state}")
    print(f"input: {'x'.join(str(d) for d in spec.input_shape)}")
    print(f"feature_dim: {spec.feature_dim}")
    print(f"classes: {spec.num_classes}")
    print(f"parameters: {spec.parameter_count()}")
    print("layers:")
    for i, layer in enumerate(spec.layers):
        print(f"  {i:2d} {layer.to_text()}")
    print(f"  head linear {spec.feature_dim} -> {spec.num_classes}")
    print("tensors:")
    for name, shape in spec.parameter_shapes():
        print(f"  {name} {'x'.join(str(s) for s in shape)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tslearning", description="Teacher-student feature transfer training")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch metrics")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train-teacher", help="train a teacher network")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True, help="checkpoint to write")
    t.add_argument("--metrics", help="per-epoch CSV to write")
    t.set_defaults(func=cmd_train_teacher)

    s = sub.add_parser("train-student", help="train a student, optionally guided by a teacher")
    s.add_argument("--config", required=True)
    s.add_argument("--teacher", help="frozen teacher checkpoint (student_teacher* modes)")
    s.add_argument("--mode", choices=["student_plain", "student_teacher", "student_teacher_aug"],
                   help="override [experiment] mode")
    s.add_argument("--out", required=True)
    s.add_argument("--metrics")
    s.set_defaults(func=cmd_train_student)

    e = sub.add_parser("eval", help="print test accuracy of a checkpoint")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True, help="config file with a [data] section, or a record file")
    e.add_argument("--split", choices=["train", "test"], default="test")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("gen-data", help="write a synthetic dataset as CIFAR-10 style records")
    g.add_argument("--kind", default="synthetic")
    g.add_argument("--classes", type=int, required=True)
    g.add_argument("--per-class", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--shape", default="3x32x32")
    g.add_argument("--noise", type=float, default=0.2)
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    i = sub.add_parser("inspect", help="describe a checkpoint")
    i.add_argument("--model", required=True)
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except CompatibilityError as exc:
        _err(f"incompatible teacher/student pair: {exc}")
        return EXIT_COMPAT
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
