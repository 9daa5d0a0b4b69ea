"""Token feature extraction for the span tagger.

Every token is mapped to a set of string-valued feature names. Names are
namespaced by family ("c:" corpus, "l:" linguistic, "x:" lexicon) so a model
file remains readable and so tests can toggle families independently. Copies
of a neighbour's features are prefixed with "prev:" / "next:".
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

from .corpus import UNK, Dataset, Sentence
from .ingest import EmotionLexicon

FeatureSeq = list[frozenset[str]]

BOS = "BOS"
EOS = "EOS"

# Integer with at most one decimal separator. Deliberately narrow: dates and
# scores like "30.09.2020" or "2:1" must not count as numbers.
_NUMBER_RE = re.compile(r"\d+(?:[.,]\d+)?")

_FREQ_BUCKETS = ((1, "1"), (4, "2-4"), (9, "5-9"))


def load_default_stopwords() -> frozenset[str]:
    text = resources.files("stimulex.data").joinpath("stopwords_de.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def load_stopwords(path) -> frozenset[str]:
    """Read a stopword file (one term per line, '#' comments allowed)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    if not words:
        raise ValueError(f"stopword file {path} contains no terms")
    return frozenset(words)


@dataclass(frozen=True)
class FeatureConfig:
    """Which feature families are active.

    At least one family must be enabled. The context window is fixed at one
    token on each side; the field exists so a model file states it explicitly.
    """

    corpus: bool = True
    linguistic: bool = True
    lexicon: bool = True
    top_k_frequent: int = 50
    window: int = 1

    def __post_init__(self) -> None:
        if not (self.corpus or self.linguistic or self.lexicon):
            raise ValueError("at least one feature family must be enabled")
        if self.window != 1:
            raise ValueError("only a symmetric window of 1 is supported")
        if self.top_k_frequent < 0:
            raise ValueError("top_k_frequent must be non-negative")

    def to_kv(self) -> list[tuple[str, str]]:
        return [
            ("corpus", str(int(self.corpus))),
            ("linguistic", str(int(self.linguistic))),
            ("lexicon", str(int(self.lexicon))),
            ("top_k_frequent", str(self.top_k_frequent)),
            ("window", str(self.window)),
        ]

    @classmethod
    def from_kv(cls, items: dict[str, str]) -> "FeatureConfig":
        return cls(
            corpus=items["corpus"] == "1",
            linguistic=items["linguistic"] == "1",
            lexicon=items["lexicon"] == "1",
            top_k_frequent=int(items["top_k_frequent"]),
            window=int(items["window"]),
        )


@dataclass(frozen=True)
class CorpusStatistics:
    """Lowercased surface counts gathered from the training split.

    ``top_k`` is derived, not stored: the k most frequent terms with ties
    broken alphabetically, so reloading a model reproduces it exactly.
    """

    word_counts: dict[str, int]
    k: int
    top_k: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        ranked = sorted(self.word_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        object.__setattr__(self, "top_k", frozenset(w for w, _ in ranked[: self.k]))

    @classmethod
    def from_dataset(cls, dataset: Dataset, k: int) -> "CorpusStatistics":
        counts = Counter(t.surface.lower() for s in dataset for t in s.tokens)
        return cls(dict(counts), k)

    def count(self, surface: str) -> int:
        return self.word_counts.get(surface.lower(), 0)


def _freq_bucket(count: int) -> str:
    if count == 0:
        return "0"
    for upper, name in _FREQ_BUCKETS:
        if count <= upper:
            return name
    return "10+"


def _is_punct(surface: str) -> bool:
    return all(unicodedata.category(c).startswith("P") for c in surface)


def _base_features(
    sentence: Sentence,
    i: int,
    stats: CorpusStatistics,
    config: FeatureConfig,
    lexicon: EmotionLexicon | None,
    stopwords: frozenset[str],
) -> list[str]:
    token = sentence.tokens[i]
    surface = token.surface
    lowered = surface.lower()
    feats: list[str] = []
    if config.corpus:
        feats.append("c:freq=" + _freq_bucket(stats.count(surface)))
        if i == 0:
            loc = "begin"
        elif i == len(sentence.tokens) - 1:
            loc = "end"
        else:
            loc = "middle"
        feats.append("c:loc=" + loc)
        if surface[0].isupper():
            feats.append("c:cap")
        if surface.isupper():
            feats.append("c:upper")
        if surface.islower():
            feats.append("c:lower")
        if _NUMBER_RE.fullmatch(surface):
            feats.append("c:num")
        if any(c.isdigit() for c in surface):
            feats.append("c:digit")
        if _is_punct(surface):
            feats.append("c:punct")
        if lowered in stats.top_k:
            feats.append("c:topk")
    if config.linguistic:
        feats.append("l:pos=" + token.pos)
        if token.dep:
            feats.append("l:dep=" + token.dep)
        if lowered in stopwords:
            feats.append("l:stop")
        if token.ner:
            feats.append("l:ner")
            feats.append("l:ner=" + token.ner)
    if config.lexicon and lexicon is not None and surface in lexicon:
        feats.append("x:lex")
        for emotion in sorted(lexicon.emotions(surface)):
            feats.append("x:lex=" + emotion)
    return feats


def extract_features(
    sentence: Sentence,
    stats: CorpusStatistics,
    config: FeatureConfig,
    lexicon: EmotionLexicon | None = None,
    stopwords: frozenset[str] | None = None,
) -> FeatureSeq:
    """Feature sets for one sentence, including neighbour copies.

    The linguistic family needs a POS layer; a sentence where every tag is
    unknown almost certainly came from raw ingestion, so that is an error
    rather than a silently useless model.
    """
    if config.linguistic and all(t.pos == UNK for t in sentence.tokens):
        raise ValueError(
            f"sentence {sentence.id}: linguistic features requested but no POS tags present"
        )
    if config.lexicon and lexicon is None:
        raise ValueError("lexicon features requested but no lexicon given")
    if stopwords is None:
        stopwords = load_default_stopwords()
    n = len(sentence.tokens)
    base = [
        _base_features(sentence, i, stats, config, lexicon, stopwords) for i in range(n)
    ]
    out: FeatureSeq = []
    for i in range(n):
        feats = list(base[i])
        if i == 0:
            feats.append(BOS)
        else:
            feats.extend("prev:" + f for f in base[i - 1])
        if i == n - 1:
            feats.append(EOS)
        else:
            feats.extend("next:" + f for f in base[i + 1])
        out.append(frozenset(feats))
    return out


def extract_dataset(
    dataset: Dataset,
    stats: CorpusStatistics,
    config: FeatureConfig,
    lexicon: EmotionLexicon | None = None,
    stopwords: frozenset[str] | None = None,
) -> list[FeatureSeq]:
    if stopwords is None:
        stopwords = load_default_stopwords()
    return [
        extract_features(s, stats, config, lexicon, stopwords) for s in dataset
    ]
