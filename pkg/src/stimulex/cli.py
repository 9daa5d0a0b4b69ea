"""Command line interface.

Exit codes: 0 on success, 1 for validation problems (bad flags or config,
malformed or mismatched input files), 2 for runtime failures (training,
translation backend, write errors). Every command leaves a ``run.manifest``
next to its primary output recording input and output content digests, so
reruns can be compared byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as cfgmod
from .agreement import aggregate, agreement_report
from .analyze import (
    ALL,
    bar_chart_svg,
    emotion_table,
    emotion_table_tsv,
    pos_context_table,
    pos_context_tsv,
    span_position_stats,
)
from .corpus import (
    CorpusFormatError,
    atomic_write_text,
    load_corpus,
    save_corpus,
    split_dataset,
    tokenization_warnings,
)
from .crf import (
    TrainConfig,
    TrainingError,
    load_model,
    save_model,
    tag_dataset,
    train,
)
from .evaluate import score
from .features import FeatureConfig, load_stopwords
from .ingest import (
    DEFAULT_STOP_KEYWORDS,
    EmotionLexicon,
    read_raw_headlines,
    run_pipeline,
)
from .project import (
    HttpTransport,
    TranslationClient,
    TranslationError,
    identity_transport,
    project_dataset,
)


class UsageError(ValueError):
    """Bad invocation or configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {p}")
    return p


def _setting(args, cfg: dict[str, str], command: str, key: str, default, cast):
    """Resolution order: command line flag, then '<command>.<key>' in the
    config file, then bare '<key>', then the built-in default."""
    flag = getattr(args, key.replace("-", "_"), None)
    raw = flag if flag is not None else cfgmod.resolve(cfg, command, key)
    if raw is None:
        return default
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key!r}: {exc}") from exc


def _write_manifest(args, command, primary_output, inputs, outputs, settings) -> None:
    manifest = getattr(args, "manifest", None)
    path = Path(manifest) if manifest else Path(primary_output).parent / "run.manifest"
    text = cfgmod.render_manifest(
        command,
        getattr(args, "config", None),
        inputs,
        outputs,
        {k: str(v) for k, v in settings.items()},
    )
    atomic_write_text(path, text)


def _load_lexicon(path) -> EmotionLexicon:
    return EmotionLexicon.from_file(_require_file(path, "lexicon file"))


# --- command handlers -------------------------------------------------------


def _cmd_ingest(args, cfg) -> int:
    raw_path = _require_file(args.input, "input file")
    lexicon = _load_lexicon(args.lexicon)
    keywords = _setting(args, cfg, "ingest", "keywords", None, cfgmod.parse_list)
    keywords = tuple(keywords) if keywords is not None else DEFAULT_STOP_KEYWORDS
    headlines = read_raw_headlines(raw_path)
    dataset, report = run_pipeline(headlines, lexicon, keywords)
    save_corpus(dataset, args.output)
    report_text = report.to_kv()
    if args.report:
        atomic_write_text(args.report, report_text)
    sys.stdout.write(report_text)
    for warning in tokenization_warnings(dataset):
        print(f"warning: {warning}", file=sys.stderr)
    outputs = {"corpus": args.output}
    if args.report:
        outputs["report"] = args.report
    _write_manifest(
        args, "ingest", args.output,
        {"raw": raw_path, "lexicon": args.lexicon},
        outputs,
        {"keywords": ",".join(keywords)},
    )
    return 0


def _cmd_agree(args, cfg) -> int:
    a = load_corpus(_require_file(args.a, "corpus file"))
    b = load_corpus(_require_file(args.b, "corpus file"))
    report = agreement_report(a, b)
    merged, conflicts = aggregate(a, b)
    save_corpus(merged, args.output)
    report_text = report.to_kv()
    if args.report:
        atomic_write_text(args.report, report_text)
    sys.stdout.write(report_text)
    outputs = {"merged": args.output}
    if args.report:
        outputs["report"] = args.report
    if args.conflicts:
        lines = ["sentence_id\tlayer\ta\tb"]
        lines.extend(c.to_line() for c in conflicts)
        atomic_write_text(args.conflicts, "\n".join(lines) + "\n")
        outputs["conflicts"] = args.conflicts
    _write_manifest(args, "agree", args.output, {"a": args.a, "b": args.b}, outputs, {})
    return 0


def _cmd_split(args, cfg) -> int:
    dataset = load_corpus(_require_file(args.input, "corpus file"))
    ratio = _setting(args, cfg, "split", "ratio", 0.8, float)
    seed = _setting(args, cfg, "split", "seed", 1, int)
    head, tail = split_dataset(dataset, ratio, seed)
    save_corpus(head, args.train)
    save_corpus(tail, args.test)
    print(f"split {len(dataset)} sentences into {len(head)} train / {len(tail)} test")
    _write_manifest(
        args, "split", args.train,
        {"corpus": args.input},
        {"train": args.train, "test": args.test},
        {"ratio": ratio, "seed": seed},
    )
    return 0


def _feature_config(args, cfg, command: str, has_lexicon: bool) -> FeatureConfig:
    families = _setting(args, cfg, command, "features", None, cfgmod.parse_list)
    if families is None:
        families = ["corpus", "linguistic"] + (["lexicon"] if has_lexicon else [])
    unknown = set(families) - {"corpus", "linguistic", "lexicon"}
    if unknown:
        raise UsageError(f"unknown feature families: {', '.join(sorted(unknown))}")
    if "lexicon" in families and not has_lexicon:
        raise UsageError("feature family 'lexicon' needs --lexicon")
    top_k = _setting(args, cfg, command, "top-k", 50, int)
    try:
        return FeatureConfig(
            corpus="corpus" in families,
            linguistic="linguistic" in families,
            lexicon="lexicon" in families,
            top_k_frequent=top_k,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_train(args, cfg) -> int:
    dataset = load_corpus(_require_file(args.input, "corpus file"))
    lexicon = _load_lexicon(args.lexicon) if args.lexicon else None
    stopwords = load_stopwords(_require_file(args.stopwords, "stopword file")) if args.stopwords else None
    feature_config = _feature_config(args, cfg, "train", lexicon is not None)
    train_config = TrainConfig(
        l2_sigma=_setting(args, cfg, "train", "sigma", 10.0, float),
        max_iterations=_setting(args, cfg, "train", "max-iterations", 500, int),
        tolerance=_setting(args, cfg, "train", "tolerance", 1e-4, float),
    )
    model = train(dataset, feature_config, train_config, lexicon, stopwords)
    save_model(model, args.model)
    print(
        f"trained on {len(dataset)} sentences: {model.n_features} features, "
        f"final loss {model.loss_trace[-1]:.6f}"
    )
    inputs = {"corpus": args.input}
    if args.lexicon:
        inputs["lexicon"] = args.lexicon
    if args.stopwords:
        inputs["stopwords"] = args.stopwords
    _write_manifest(
        args, "train", args.model, inputs, {"model": args.model},
        {
            "features": ",".join(
                name
                for name, on in (
                    ("corpus", feature_config.corpus),
                    ("linguistic", feature_config.linguistic),
                    ("lexicon", feature_config.lexicon),
                )
                if on
            ),
            "top-k": feature_config.top_k_frequent,
            "sigma": train_config.l2_sigma,
            "max-iterations": train_config.max_iterations,
            "tolerance": train_config.tolerance,
        },
    )
    return 0


def _cmd_tag(args, cfg) -> int:
    model = load_model(_require_file(args.model, "model file"))
    lexicon = _load_lexicon(args.lexicon) if args.lexicon else None
    if model.config.lexicon and lexicon is None:
        raise UsageError("model uses lexicon features; pass --lexicon")
    stopwords = load_stopwords(_require_file(args.stopwords, "stopword file")) if args.stopwords else None
    dataset = load_corpus(_require_file(args.input, "corpus file"))
    tagged = tag_dataset(
        dataset, model, lexicon, stopwords, constrained=not args.unconstrained
    )
    save_corpus(tagged, args.output)
    print(f"tagged {len(tagged)} sentences")
    inputs = {"corpus": args.input, "model": args.model}
    if args.lexicon:
        inputs["lexicon"] = args.lexicon
    _write_manifest(
        args, "tag", args.output, inputs, {"tagged": args.output},
        {"constrained": str(not args.unconstrained).lower()},
    )
    return 0


def _cmd_project(args, cfg) -> int:
    dataset = load_corpus(_require_file(args.input, "corpus file"))
    source_lang = _setting(args, cfg, "project", "source-lang", "de", str)
    target_lang = _setting(args, cfg, "project", "target-lang", "en", str)
    if args.identity:
        transport, backend = identity_transport, "identity"
    else:
        url = _setting(args, cfg, "project", "backend-url", None, str)
        if not url:
            raise UsageError("pass --backend-url or --identity")
        transport, backend = HttpTransport(url), url
    client = TranslationClient(transport, args.cache, backend=backend)
    projected, report = project_dataset(
        dataset, client, source_lang=source_lang, target_lang=target_lang
    )
    save_corpus(projected, args.output)
    report_text = report.to_kv()
    if args.report:
        atomic_write_text(args.report, report_text)
    sys.stdout.write(report_text)
    outputs = {"projected": args.output}
    if args.report:
        outputs["report"] = args.report
    if args.outcomes:
        atomic_write_text(args.outcomes, report.outcomes_tsv())
        outputs["outcomes"] = args.outcomes
    _write_manifest(
        args, "project", args.output, {"corpus": args.input}, outputs,
        {"source-lang": source_lang, "target-lang": target_lang, "backend": backend},
    )
    return 0


def _cmd_eval(args, cfg) -> int:
    gold = load_corpus(_require_file(args.gold, "corpus file"))
    pred = load_corpus(_require_file(args.pred, "corpus file")) if args.pred else None
    report = score(gold, pred)
    report_text = report.to_kv()
    sys.stdout.write(report_text)
    inputs = {"gold": args.gold}
    if args.pred:
        inputs["pred"] = args.pred
    if args.report:
        atomic_write_text(args.report, report_text)
        _write_manifest(args, "eval", args.report, inputs, {"report": args.report}, {})
    return 0


def _cmd_analyze(args, cfg) -> int:
    dataset = load_corpus(_require_file(args.input, "corpus file"))
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = emotion_table(dataset)
    emotions_path = out_dir / "emotions.tsv"
    atomic_write_text(emotions_path, emotion_table_tsv(rows))
    pos_path = out_dir / "pos_context.tsv"
    atomic_write_text(pos_path, pos_context_tsv(pos_context_table(dataset)))
    stats = span_position_stats(dataset)
    positions_path = out_dir / "positions.txt"
    atomic_write_text(positions_path, stats.to_kv())
    chart_rows = [r for r in rows if r.emotion != ALL]
    chart_path = out_dir / "emotions.svg"
    atomic_write_text(
        chart_path,
        bar_chart_svg(
            [r.emotion for r in chart_rows],
            [float(r.instances) for r in chart_rows],
            title="Instances per emotion",
        ),
    )
    sys.stdout.write(stats.to_kv())
    _write_manifest(
        args, "analyze", emotions_path,
        {"corpus": args.input},
        {
            "emotions": emotions_path,
            "pos_context": pos_path,
            "positions": positions_path,
            "chart": chart_path,
        },
        {},
    )
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stimulex", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="filter raw headlines into a corpus")
    p.add_argument("--input", required=True, help="TEXT<TAB>SOURCE<TAB>DATE lines")
    p.add_argument("--lexicon", required=True, help="TERM<TAB>EMOTION lexicon")
    p.add_argument("--output", required=True, help="corpus file to write")
    p.add_argument("--report", help="filter counts file")
    p.add_argument("--keywords", help="comma separated leading stop keywords")
    p.add_argument("--manifest")
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("agree", help="agreement scores and layer aggregation")
    p.add_argument("--a", required=True, help="first annotator's corpus")
    p.add_argument("--b", required=True, help="second annotator's corpus")
    p.add_argument("--output", required=True, help="merged corpus to write")
    p.add_argument("--report", help="agreement metrics file")
    p.add_argument("--conflicts", help="conflict list file")
    p.add_argument("--manifest")
    p.set_defaults(handler=_cmd_agree)

    p = sub.add_parser("split", help="seeded train/test split")
    p.add_argument("--input", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--manifest")
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("train", help="fit the span tagger")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True, help="model file to write")
    p.add_argument("--lexicon")
    p.add_argument("--stopwords")
    p.add_argument("--features", help="comma separated families, e.g. corpus,linguistic")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--sigma", type=float)
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--manifest")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("tag", help="decode spans with a trained model")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--stopwords")
    p.add_argument("--unconstrained", action="store_true")
    p.add_argument("--manifest")
    p.set_defaults(handler=_cmd_tag)

    p = sub.add_parser("project", help="carry spans through translation")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report")
    p.add_argument("--outcomes", help="per span outcome table")
    p.add_argument("--backend-url", dest="backend_url")
    p.add_argument("--identity", action="store_true", help="no-op translation backend")
    p.add_argument("--cache", help="append-only JSONL translation cache")
    p.add_argument("--source-lang", dest="source_lang")
    p.add_argument("--target-lang", dest="target_lang")
    p.add_argument("--manifest")
    p.set_defaults(handler=_cmd_project)

    p = sub.add_parser("eval", help="score predictions against gold spans")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", help="separate predictions corpus; omit if gold file has a pred layer")
    p.add_argument("--report")
    p.add_argument("--manifest")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("analyze", help="descriptive statistics and charts")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", dest="output_dir", required=True)
    p.add_argument("--manifest")
    p.set_defaults(handler=_cmd_analyze)

    return parser


def _dispatch(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = cfgmod.load_config(_require_file(args.config, "config file")) if args.config else {}
    return args.handler(args, cfg)


def main(argv: list[str] | None = None) -> int:
    try:
        return _dispatch(argv)
    except (CorpusFormatError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TrainingError, TranslationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
