"""Command line entry: neural {train,predict}.

Same conventions as the span toolkit's CLI: a flat key=value --config
file, precedence flag over 'command.key' over bare 'key' over default,
exit code 0/1/2 for success/bad input/runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .corpusio import CorpusError
from .model import FineTuneConfig, TrainingError, fine_tune, predict_to_file


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"{path} line {lineno}: expected key=value")
        if key in out:
            raise UsageError(f"{path} line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _setting(args, cfg: dict[str, str], command: str, key: str, default, cast):
    flag = getattr(args, key.replace("-", "_"), None)
    raw = flag if flag is not None else cfg.get(f"{command}.{key}", cfg.get(key))
    if raw is None:
        return default
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key!r}: {exc}") from exc


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {p}")
    return p


def _cmd_train(args, cfg) -> int:
    corpus = _require_file(args.input, "corpus file")
    defaults = FineTuneConfig()
    try:
        config = FineTuneConfig(
            base_model=_setting(args, cfg, "train", "base", defaults.base_model, str),
            epochs=_setting(args, cfg, "train", "epochs", defaults.epochs, int),
            batch_size=_setting(args, cfg, "train", "batch-size", defaults.batch_size, int),
            dropout=_setting(args, cfg, "train", "dropout", defaults.dropout, float),
            learning_rate=_setting(
                args, cfg, "train", "learning-rate", defaults.learning_rate, float
            ),
            max_grad_norm=_setting(
                args, cfg, "train", "max-grad-norm", defaults.max_grad_norm, float
            ),
            weight_decay=_setting(
                args, cfg, "train", "weight-decay", defaults.weight_decay, float
            ),
            seed=_setting(args, cfg, "train", "seed", defaults.seed, int),
            max_pieces=_setting(args, cfg, "train", "max-pieces", defaults.max_pieces, int),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    losses = fine_tune(corpus, args.model_dir, config)
    for epoch, loss in enumerate(losses, 1):
        print(f"epoch {epoch}/{len(losses)}: loss {loss:.6f}")
    print(f"model saved to {args.model_dir}")
    return 0


def _cmd_predict(args, cfg) -> int:
    model_dir = Path(args.model_dir)
    if not model_dir.is_dir():
        raise UsageError(f"model directory not found: {model_dir}")
    corpus = _require_file(args.input, "corpus file")
    batch_size = _setting(args, cfg, "predict", "batch-size", 16, int)
    if batch_size <= 0:
        raise UsageError(f"batch-size must be positive, got {batch_size}")
    n = predict_to_file(model_dir, corpus, args.output, batch_size)
    print(f"tagged {n} sentences -> {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neural", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune the encoder on a gold corpus")
    p.add_argument("--input", required=True, help="corpus file with gold layer")
    p.add_argument("--model-dir", dest="model_dir", required=True)
    p.add_argument("--base", help="encoder name or local checkpoint directory")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--dropout", type=float)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--max-grad-norm", type=float, dest="max_grad_norm")
    p.add_argument("--weight-decay", type=float, dest="weight_decay")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-pieces", type=int, dest="max_pieces")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("predict", help="tag a corpus with a saved model")
    p.add_argument("--model-dir", dest="model_dir", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.set_defaults(handler=_cmd_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _load_config(_require_file(args.config, "config file")) if args.config else {}
        return args.handler(args, cfg)
    except (UsageError, CorpusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TrainingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
