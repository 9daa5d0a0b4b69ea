"""Emotion stimulus spans in German news headlines.

Corpus handling, annotation agreement, a CRF span tagger, cross-lingual
projection, evaluation, and descriptive analysis. The subcommand interface
lives in stimulex.cli; the modules below are the library surface.
"""

from .agreement import agreement_report, aggregate, cohen_kappa
from .corpus import (
    Dataset,
    Sentence,
    Span,
    Token,
    load_corpus,
    parse_corpus,
    save_corpus,
    split_dataset,
    write_corpus,
)
from .crf import CrfModel, TrainConfig, load_model, save_model, tag_dataset, train
from .evaluate import EvalReport, classify_errors, match_spans, score
from .features import FeatureConfig, extract_features
from .ingest import EmotionLexicon, read_raw_headlines, run_pipeline
from .project import TranslationClient, align_span, project_dataset

__all__ = [
    "CrfModel",
    "Dataset",
    "EmotionLexicon",
    "EvalReport",
    "FeatureConfig",
    "Sentence",
    "Span",
    "Token",
    "TrainConfig",
    "TranslationClient",
    "aggregate",
    "agreement_report",
    "align_span",
    "classify_errors",
    "cohen_kappa",
    "extract_features",
    "load_corpus",
    "load_model",
    "match_spans",
    "parse_corpus",
    "project_dataset",
    "read_raw_headlines",
    "run_pipeline",
    "save_corpus",
    "save_model",
    "score",
    "split_dataset",
    "tag_dataset",
    "train",
    "write_corpus",
]
