"""Headline ingestion: marker stripping, filter cascade, dedup.

Raw input is line-delimited TEXT, SOURCE, DATE (tab separated).  The
pipeline strips ticker markers first, then rejects headlines in a fixed
stage order: too short, leading stop keyword, date pattern, no lexicon
match.  Exact duplicates are removed last, keeping the first
occurrence.  Survivors come out as Sentences with whitespace-split
tokens and empty annotation layers.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Dataset, Sentence, Token

DEFAULT_STOP_KEYWORDS = (
    "Interview", "Kommentare", "Liveblog", "Exklusive", "Video", "TV", "Pop",
)

# Ticker decorations like "++ Eilmeldung ++" or "+++ LIVE +++" and a
# leading "News-" prefix carry no content and are removed before any
# filter runs.
DEFAULT_MARKER_PATTERNS = (
    r"\+{2,}[^+]*\+{2,}",
    r"^News-",
)

# Day.month with optional year, not embedded in a longer number chain.
DATE_RE = re.compile(r"(?<!\d)\d{1,2}\.\d{1,2}(?:\.\d{2,4})?(?!\d)")

MIN_WORDS = 5

STAGE_SHORT = "short"
STAGE_MARKER = "marker"
STAGE_KEYWORD = "keyword"
STAGE_DATE = "date"
STAGE_LEXICON = "lexicon"


@dataclass(frozen=True)
class RawHeadline:
    text: str
    source: str = ""
    fetched: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("headline text must be non-empty")


class EmotionLexicon:
    """term -> set of emotion names; keys lowercased and whitespace-free."""

    def __init__(self, entries: dict[str, set[str]] | None = None):
        self._entries: dict[str, frozenset[str]] = {}
        for term, emotions in (entries or {}).items():
            key = term.lower()
            if not key or any(c.isspace() for c in key):
                raise ValueError(f"lexicon term must be whitespace-free: {term!r}")
            self._entries[key] = frozenset(emotions)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "EmotionLexicon":
        """Load TERM<TAB>EMOTION lines; repeated terms accumulate emotions."""
        entries: dict[str, set[str]] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}: line {lineno}: expected TERM<TAB>EMOTION")
            entries.setdefault(parts[0].lower(), set()).add(parts[1].strip().lower())
        return cls(entries)

    def emotions(self, surface: str) -> frozenset[str]:
        return self._entries.get(surface.lower(), frozenset())

    def __contains__(self, surface: str) -> bool:
        return surface.lower() in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def read_raw_headlines(path: str | os.PathLike) -> list[RawHeadline]:
    out: list[RawHeadline] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}: line {lineno}: expected TEXT<TAB>SOURCE<TAB>DATE")
        if not parts[0].strip():
            raise ValueError(f"{path}: line {lineno}: empty headline text")
        out.append(RawHeadline(parts[0], parts[1], parts[2]))
    return out


def strip_generic_markers(text: str, patterns: tuple[str, ...] = DEFAULT_MARKER_PATTERNS) -> str:
    for pattern in patterns:
        text = re.sub(pattern, " ", text)
    return " ".join(text.split())


def filter_headline(
    text: str,
    lexicon: EmotionLexicon,
    keywords: tuple[str, ...] = DEFAULT_STOP_KEYWORDS,
) -> str | None:
    """Rejection stage for an already marker-stripped headline, or None.

    Stage order is fixed: short, keyword, date, lexicon.
    """
    words = text.split()
    if len(words) < MIN_WORDS:
        return STAGE_SHORT
    first = words[0]
    for kw in keywords:
        # case-sensitive match on the first token, optional trailing colon
        if first == kw or first == kw + ":":
            return STAGE_KEYWORD
    if DATE_RE.search(text):
        return STAGE_DATE
    if not any(word.lower() in lexicon for word in words):
        return STAGE_LEXICON
    return None


@dataclass
class FilterReport:
    total: int = 0
    accepted: int = 0
    rejected_short: int = 0
    rejected_marker: int = 0
    rejected_keyword: int = 0
    rejected_date: int = 0
    rejected_lexicon: int = 0
    rejected_duplicate: int = 0

    _STAGES = (
        ("rejected_short", STAGE_SHORT),
        ("rejected_marker", STAGE_MARKER),
        ("rejected_keyword", STAGE_KEYWORD),
        ("rejected_date", STAGE_DATE),
        ("rejected_lexicon", STAGE_LEXICON),
    )

    def rejected_total(self) -> int:
        return (self.rejected_short + self.rejected_marker + self.rejected_keyword
                + self.rejected_date + self.rejected_lexicon + self.rejected_duplicate)

    def check(self) -> None:
        if self.accepted + self.rejected_total() != self.total:
            raise AssertionError(f"filter counts do not reconcile: {self}")

    def to_kv(self) -> str:
        keys = ("total", "accepted", "rejected_short", "rejected_marker",
                "rejected_keyword", "rejected_date", "rejected_lexicon",
                "rejected_duplicate")
        return "".join(f"{k}={getattr(self, k)}\n" for k in keys)


def run_pipeline(
    headlines: list[RawHeadline],
    lexicon: EmotionLexicon,
    keywords: tuple[str, ...] = DEFAULT_STOP_KEYWORDS,
    marker_patterns: tuple[str, ...] = DEFAULT_MARKER_PATTERNS,
) -> tuple[Dataset, FilterReport]:
    report = FilterReport(total=len(headlines))
    survivors: list[RawHeadline] = []
    for h in headlines:
        text = strip_generic_markers(h.text, marker_patterns)
        if not text:
            report.rejected_marker += 1
            continue
        stage = filter_headline(text, lexicon, keywords)
        if stage is not None:
            setattr(report, "rejected_" + stage, getattr(report, "rejected_" + stage) + 1)
            continue
        survivors.append(RawHeadline(text, h.source, h.fetched))

    seen: set[str] = set()
    sentences: list[Sentence] = []
    for h in survivors:
        if h.text in seen:
            report.rejected_duplicate += 1
            continue
        seen.add(h.text)
        sentences.append(Sentence(
            id=f"h{len(sentences) + 1:05d}",
            tokens=[Token(w) for w in h.text.split()],
            source=h.source or None,
            date=h.fetched or None,
        ))
    report.accepted = len(sentences)
    report.check()
    return Dataset(sentences=sentences, provenance="ingest"), report
