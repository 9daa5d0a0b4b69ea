"""Neural token-classification baseline for emotion stimulus spans.

Exchanges corpus files with the span toolkit and never imports it:
the file format is the whole interface.
"""

from .align import IGNORE, align_labels, first_piece_positions, read_back
from .corpusio import LABELS, Sentence, load_corpus, parse_corpus, save_corpus, write_corpus
from .model import FineTuneConfig, fine_tune, predict, predict_to_file

__all__ = [
    "FineTuneConfig",
    "IGNORE",
    "LABELS",
    "Sentence",
    "align_labels",
    "fine_tune",
    "first_piece_positions",
    "load_corpus",
    "parse_corpus",
    "predict",
    "predict_to_file",
    "read_back",
    "save_corpus",
    "write_corpus",
]
