"""Data model and file format for stimulus span corpora.

A corpus file is UTF-8 text with LF line endings.  Every sentence is a
block of ``# key=value`` header lines followed by one line per token,
blocks separated by exactly one blank line:

    # id=h1
    # emotion=fear
    Angst<TAB>NOUN<TAB>sb<TAB><TAB>B
    vor<TAB>ADP<TAB>mo<TAB><TAB>I
    Inflation<TAB>NOUN<TAB>nk<TAB><TAB>I

Token lines carry 5 or 6 tab separated fields: SURFACE, POS, DEP, NER,
GOLD and optionally PRED.  GOLD and PRED hold IOB tags over stimulus
spans; an empty field means the layer is absent for that sentence and
must then be empty on every line of the block.  Spans are half-open
token index pairs [start, end).

``write_corpus`` emits a canonical form (fixed header order, UNK POS as
an empty field, single trailing newline), so parse(write(parse(x)))
equals parse(x) for any well-formed x.
"""

from __future__ import annotations

import math
import os
import random
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

UNK = "UNK"

# Universal coarse POS inventory, 17 tags.
UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

EMOTIONS = (
    "happiness", "sadness", "fear", "disgust", "anger",
    "positive surprise", "negative surprise", "shame", "hope",
    "other", "no emotion",
)

IOB_TAGS = ("B", "I", "O")

# Header order is the canonical emission order; id comes first.
HEADER_KEYS = ("id", "source", "emotion", "cue", "experiencer", "lang", "url", "date")


class CorpusFormatError(ValueError):
    """Malformed corpus file; carries the offending 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Span(NamedTuple):
    """Half-open token index range [start, end)."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


_FORBIDDEN = re.compile(r"[\t\n\r]")


@dataclass(frozen=True)
class Token:
    """One pretokenized surface form with optional tagger annotations.

    pos is one of the 17 universal tags or UNK; dep and ner are free
    strings and may be empty.
    """

    surface: str
    pos: str = UNK
    dep: str = ""
    ner: str = ""

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if any(c.isspace() for c in self.surface):
            raise ValueError(f"token surface contains whitespace: {self.surface!r}")
        for name in ("dep", "ner"):
            if _FORBIDDEN.search(getattr(self, name)):
                raise ValueError(f"token {name} contains tab or newline")
        if self.pos not in UPOS_TAGS and self.pos != UNK:
            raise ValueError(f"unknown POS tag {self.pos!r}")


@dataclass
class Sentence:
    """One headline with annotation layers.

    gold and pred are IOB tag sequences aligned with tokens, or None when
    the layer is absent.  gold is kept as stored; strictness is decided
    by the reader (see spans_from_iob).  cue and experiencer are "yes",
    "no" or None for unmarked.  Tokens and layers are normalised to tuples
    so two sentences compare equal regardless of the containers passed in.
    """

    id: str
    tokens: tuple[Token, ...]
    gold: tuple[str, ...] | None = None
    pred: tuple[str, ...] | None = None
    source: str | None = None
    emotion: str | None = None
    cue: str | None = None
    experiencer: str | None = None
    lang: str | None = None
    url: str | None = None
    date: str | None = None

    def __post_init__(self) -> None:
        self.tokens = tuple(self.tokens)
        if self.gold is not None:
            self.gold = tuple(self.gold)
        if self.pred is not None:
            self.pred = tuple(self.pred)
        if not self.id or any(c.isspace() for c in self.id):
            raise ValueError(f"sentence id must be non-empty without whitespace: {self.id!r}")
        if not self.tokens:
            raise ValueError(f"sentence {self.id}: needs at least one token")
        for name in ("gold", "pred"):
            layer = getattr(self, name)
            if layer is None:
                continue
            if len(layer) != len(self.tokens):
                raise ValueError(
                    f"sentence {self.id}: {name} has {len(layer)} tags "
                    f"for {len(self.tokens)} tokens")
            for tag in layer:
                if tag not in IOB_TAGS:
                    raise ValueError(f"sentence {self.id}: bad IOB tag {tag!r} in {name}")
        if self.emotion is not None and self.emotion not in EMOTIONS:
            raise ValueError(f"sentence {self.id}: unknown emotion {self.emotion!r}")
        for name in ("cue", "experiencer"):
            v = getattr(self, name)
            if v not in (None, "yes", "no"):
                raise ValueError(f"sentence {self.id}: {name} must be yes or no, got {v!r}")

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def gold_spans(self, mode: str = "strict") -> list[Span]:
        """Spans of the gold layer; [] when the layer is absent."""
        if self.gold is None:
            return []
        return spans_from_iob(self.gold, mode)

    def pred_spans(self, mode: str = "lenient") -> list[Span]:
        """Spans of the pred layer, read leniently by default; [] when absent."""
        if self.pred is None:
            return []
        return spans_from_iob(self.pred, mode)


@dataclass
class Dataset:
    sentences: list[Sentence] = field(default_factory=list)
    provenance: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for s in self.sentences:
            if s.id in seen:
                raise ValueError(f"duplicate sentence id {s.id!r}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def check_spans(spans: Iterable[tuple[int, int]], n: int) -> list[Span]:
    """Validate bounds, order and disjointness; returns Span instances."""
    out: list[Span] = []
    prev_end = -1
    for raw in spans:
        sp = Span(int(raw[0]), int(raw[1]))
        if not (0 <= sp.start < sp.end <= n):
            raise ValueError(f"span {tuple(sp)} out of range for {n} tokens")
        if sp.start < prev_end:
            raise ValueError(f"span {tuple(sp)} overlaps its predecessor")
        if out and sp.start < out[-1].start:
            raise ValueError(f"span {tuple(sp)} not sorted by start")
        prev_end = sp.end
        out.append(sp)
    return out


def spans_from_iob(tags: Iterable[str], mode: str = "strict") -> list[Span]:
    """Decode an IOB sequence into sorted disjoint spans.

    strict rejects an I at sequence start or directly after O; lenient
    reads such an I as a span opener.  Every B opens a new span.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be strict or lenient, got {mode!r}")
    seq = list(tags)
    spans: list[Span] = []
    start: int | None = None
    prev = "O"
    for i, tag in enumerate(seq):
        if tag not in IOB_TAGS:
            raise ValueError(f"bad IOB tag {tag!r} at index {i}")
        if tag == "B":
            if start is not None:
                spans.append(Span(start, i))
            start = i
        elif tag == "I":
            if prev == "O":
                if mode == "strict":
                    raise ValueError(f"index {i}: I does not continue a span")
                start = i
        else:
            if start is not None:
                spans.append(Span(start, i))
                start = None
        prev = tag
    if start is not None:
        spans.append(Span(start, len(seq)))
    return spans


def iob_from_spans(spans: Iterable[tuple[int, int]], n: int) -> list[str]:
    """Encode sorted disjoint spans as a strict-valid IOB sequence."""
    checked = check_spans(spans, n)
    tags = ["O"] * n
    for sp in checked:
        tags[sp.start] = "B"
        for i in range(sp.start + 1, sp.end):
            tags[i] = "I"
    return tags


def repair_iob(tags: Iterable[str]) -> list[str]:
    """Strict-valid copy: I at sequence start or after O becomes B."""
    out: list[str] = []
    prev = "O"
    for tag in tags:
        if tag not in IOB_TAGS:
            raise ValueError(f"bad IOB tag {tag!r}")
        if tag == "I" and prev == "O":
            tag = "B"
        out.append(tag)
        prev = tag
    return out


def parse_corpus(text: str, mode: str = "strict") -> Dataset:
    """Parse corpus file content into a Dataset.

    mode governs the gold layer: strict raises on invalid IOB, lenient
    repairs it (repair_iob).  The pred layer is stored as found in both
    modes since predictions may be invalid IOB by design.  All errors
    report a 1-based line number.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be strict or lenient, got {mode!r}")
    if "\r" in text:
        line = text[:text.index("\r")].count("\n") + 1
        raise CorpusFormatError(line, "corpus files must use LF line endings")

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    sentences: list[Sentence] = []
    seen_ids: set[str] = set()
    headers: dict[str, str] = {}
    header_lines: dict[str, int] = {}
    rows: list[tuple[int, list[str]]] = []

    def flush(end_line: int) -> None:
        if not headers and not rows:
            return
        first_line = min(header_lines.values()) if header_lines else rows[0][0]
        if "id" not in headers:
            raise CorpusFormatError(first_line, "sentence block is missing an id header")
        if not rows:
            raise CorpusFormatError(first_line, f"sentence {headers['id']!r} has no token lines")
        sid = headers["id"]
        if sid in seen_ids:
            raise CorpusFormatError(header_lines["id"], f"duplicate sentence id {sid!r}")

        width = len(rows[0][1])
        tokens: list[Token] = []
        gold_raw: list[str] = []
        pred_raw: list[str] = []
        for lineno, fields in rows:
            if len(fields) != width:
                raise CorpusFormatError(
                    lineno, f"expected {width} fields as on the block's first line, got {len(fields)}")
            pos = fields[1] if fields[1] else UNK
            try:
                tokens.append(Token(fields[0], pos, fields[2], fields[3]))
            except ValueError as exc:
                raise CorpusFormatError(lineno, str(exc)) from exc
            for col, store in ((4, gold_raw), (5, pred_raw)):
                if col >= width:
                    continue
                tag = fields[col]
                if tag not in ("", "B", "I", "O"):
                    raise CorpusFormatError(lineno, f"IOB tag must be B, I or O, got {tag!r}")
                store.append(tag)
            if (gold_raw and bool(gold_raw[0]) != bool(gold_raw[-1])) or \
               (pred_raw and bool(pred_raw[0]) != bool(pred_raw[-1])):
                raise CorpusFormatError(
                    lineno, "annotation layer must be present on all lines of a block or none")

        gold: list[str] | None = gold_raw if gold_raw and gold_raw[0] else None
        pred: list[str] | None = pred_raw if pred_raw and pred_raw[0] else None
        if gold is not None:
            try:
                if mode == "strict":
                    spans_from_iob(gold, "strict")
                else:
                    gold = repair_iob(gold)
            except ValueError as exc:
                m = re.search(r"index (\d+)", str(exc))
                bad = rows[int(m.group(1))][0] if m else rows[0][0]
                raise CorpusFormatError(bad, f"gold layer of {sid!r} is not valid IOB: {exc}") from exc

        kwargs = {k: headers.get(k) for k in HEADER_KEYS if k != "id"}
        try:
            sentences.append(Sentence(id=sid, tokens=tokens, gold=gold, pred=pred, **kwargs))
        except ValueError as exc:
            raise CorpusFormatError(first_line, str(exc)) from exc
        seen_ids.add(sid)
        headers.clear()
        header_lines.clear()
        rows.clear()

    for lineno, raw in enumerate(lines, start=1):
        if raw == "":
            if not headers and not rows:
                raise CorpusFormatError(lineno, "unexpected blank line")
            flush(lineno)
            continue
        if raw.startswith("#"):
            if rows:
                raise CorpusFormatError(lineno, "header line after token lines")
            m = re.fullmatch(r"#[ ]?([a-z_]+)=(.*)", raw)
            if not m:
                raise CorpusFormatError(lineno, f"malformed header line {raw!r}")
            key, value = m.group(1), m.group(2)
            if key not in HEADER_KEYS:
                raise CorpusFormatError(lineno, f"unknown header key {key!r}")
            if key in headers:
                raise CorpusFormatError(lineno, f"repeated header key {key!r}")
            if value == "":
                raise CorpusFormatError(lineno, f"empty value for header {key!r}")
            headers[key] = value
            header_lines[key] = lineno
            continue
        fields = raw.split("\t")
        if len(fields) not in (5, 6):
            raise CorpusFormatError(lineno, f"expected 5 or 6 tab separated fields, got {len(fields)}")
        if not headers:
            raise CorpusFormatError(lineno, "token line before any header line")
        rows.append((lineno, fields))
    flush(len(lines) + 1)

    return Dataset(sentences=sentences)


def write_corpus(dataset: Dataset) -> str:
    """Serialize to the canonical file form (see module docstring)."""
    blocks: list[str] = []
    for s in dataset.sentences:
        lines = [f"# id={s.id}"]
        for key in HEADER_KEYS[1:]:
            value = getattr(s, key)
            if value is not None:
                lines.append(f"# {key}={value}")
        for i, t in enumerate(s.tokens):
            fields = [
                t.surface,
                "" if t.pos == UNK else t.pos,
                t.dep,
                t.ner,
                s.gold[i] if s.gold is not None else "",
            ]
            if s.pred is not None:
                fields.append(s.pred[i])
            lines.append("\t".join(fields))
        blocks.append("\n".join(lines))
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


def load_corpus(path: str | os.PathLike, mode: str = "strict") -> Dataset:
    text = Path(path).read_bytes().decode("utf-8")
    ds = parse_corpus(text, mode=mode)
    ds.provenance = str(path)
    return ds


def save_corpus(dataset: Dataset, path: str | os.PathLike) -> None:
    atomic_write_text(path, write_corpus(dataset))


def split_dataset(dataset: Dataset, ratio: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then cut at floor(ratio * n).

    The same (sentences, ratio, seed) triple always yields the same split,
    independent of provenance or file paths.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"split ratio must be within [0, 1], got {ratio}")
    order = list(dataset.sentences)
    random.Random(seed).shuffle(order)
    cut = math.floor(ratio * len(order))
    return (
        Dataset(order[:cut], provenance=dataset.provenance),
        Dataset(order[cut:], provenance=dataset.provenance),
    )


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory plus rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# Word characters glued to sentence punctuation or quotes hint at
# unsplit tokenization.  Flagged, never edited.
_SUSPICIOUS = re.compile(r"\w[.!?,;:\"«»„“”‚']|[\"«»„“”‚'(]\w")


def tokenization_warnings(dataset: Dataset) -> list[str]:
    """Surfaces that look like unsplit punctuation, as warning strings."""
    out: list[str] = []
    for s in dataset.sentences:
        for i, t in enumerate(s.tokens):
            if len(t.surface) > 1 and _SUSPICIOUS.search(t.surface):
                out.append(f"{s.id} token {i}: suspicious surface {t.surface!r}")
    return out
