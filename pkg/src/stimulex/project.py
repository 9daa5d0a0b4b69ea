"""Cross-lingual projection of stimulus spans through a translation backend.

Sentences are translated whole; each gold span is then located in the
translation by matching its tokens, exactly first and with a small edit
distance as fallback. The translation client never talks to a backend twice
for the same text: results land in an append-only JSONL cache keyed by a
digest of backend name, language pair, and source text.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import unicodedata
import urllib.request
from dataclasses import dataclass, replace
from typing import Callable

from .corpus import Dataset, Sentence, Span, Token, iob_from_spans

SPAN_OK = "ok"
SPAN_NO_MATCH = "no_match"
SPAN_DROPPED = "dropped"

FUZZY_THRESHOLD = 0.75

Transport = Callable[[str, str, str], str]


class TranslationError(RuntimeError):
    """A backend request failed or returned an unusable payload."""


def identity_transport(text: str, source_lang: str, target_lang: str) -> str:
    """Backend that returns its input; useful for round-trip checks."""
    return text


class HttpTransport:
    """POSTs {"text", "source_lang", "target_lang"} as JSON and expects
    {"text": "..."} back."""

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def __call__(self, text: str, source_lang: str, target_lang: str) -> str:
        body = json.dumps(
            {"text": text, "source_lang": source_lang, "target_lang": target_lang}
        ).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.load(response)
        except Exception as exc:
            raise TranslationError(f"translation request failed: {exc}") from exc
        if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
            raise TranslationError("translation response lacks a text field")
        return payload["text"]


class TranslationClient:
    """Cache-first wrapper around a transport.

    The cache file is append-only JSON lines; loading replays it into memory.
    With a warm cache the transport is never invoked, so a run can be
    repeated byte for byte with the backend switched off.
    """

    def __init__(self, transport: Transport, cache_path=None, backend: str = "default"):
        self.transport = transport
        self.cache_path = os.fspath(cache_path) if cache_path is not None else None
        self.backend = backend
        self.hits = 0
        self.misses = 0
        self._cache: dict[str, str] = {}
        if self.cache_path is not None and os.path.exists(self.cache_path):
            self._load_cache()

    def _load_cache(self) -> None:
        with open(self.cache_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    key = record["key"]
                    translation = record["translation"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValueError(
                        f"{self.cache_path}: line {lineno}: bad cache record"
                    ) from exc
                self._cache[key] = translation

    def _key(self, source_lang: str, target_lang: str, text: str) -> str:
        joined = "\0".join((self.backend, source_lang, target_lang, text))
        return hashlib.sha256(joined.encode("utf-8")).hexdigest()

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        key = self._key(source_lang, target_lang, text)
        if key in self._cache:
            self.hits += 1
            return self._cache[key]
        self.misses += 1
        try:
            translation = self.transport(text, source_lang, target_lang)
        except TranslationError:
            raise
        except Exception as exc:
            raise TranslationError(f"translation backend failed: {exc}") from exc
        if not isinstance(translation, str):
            raise TranslationError("translation backend returned a non-string")
        self._cache[key] = translation
        if self.cache_path is not None:
            record = json.dumps(
                {
                    "key": key,
                    "backend": self.backend,
                    "source_lang": source_lang,
                    "target_lang": target_lang,
                    "text": text,
                    "translation": translation,
                },
                ensure_ascii=False,
            )
            with open(self.cache_path, "a", encoding="utf-8") as fh:
                fh.write(record + "\n")
        return translation


def _normalize(token: str) -> str:
    """Lowercase and strip punctuation from both edges."""
    t = token.lower()
    start, end = 0, len(t)
    while start < end and unicodedata.category(t[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(t[end - 1]).startswith("P"):
        end -= 1
    return t[start:end]


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


def _similarity(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    return 1.0 - _levenshtein(a, b) / max(len(a), len(b))


def align_span(
    source_tokens: list[str],
    span: Span,
    target_tokens: list[str],
    fuzzy_threshold: float = FUZZY_THRESHOLD,
) -> Span | None:
    """Locate one source span inside the translated token sequence.

    Target positions matching a stimulus token are gathered (exact matches
    if they cover enough of the stimulus, otherwise fuzzy matches join). The
    answer is the window over matched positions covering the most distinct
    stimulus tokens, with ties going to the shorter and then earlier window.
    At least half the stimulus tokens, rounded up, must be inside.
    """
    span = Span(*span)
    stimulus = [_normalize(source_tokens[i]) for i in range(span.start, span.end)]
    stimulus = [s for s in stimulus if s]
    if not stimulus:
        return None
    quorum = math.ceil(len(stimulus) / 2)
    targets = [_normalize(t) for t in target_tokens]

    def match_sets(fuzzy: bool) -> list[tuple[int, frozenset[int]]]:
        out = []
        for j, tgt in enumerate(targets):
            if not tgt:
                continue
            hit = frozenset(
                k
                for k, stim in enumerate(stimulus)
                if (tgt == stim)
                or (fuzzy and _similarity(tgt, stim) >= fuzzy_threshold)
            )
            if hit:
                out.append((j, hit))
        return out

    matched = match_sets(fuzzy=False)
    exact_cover = set().union(*(hit for _, hit in matched)) if matched else set()
    if len(exact_cover) < quorum:
        matched = match_sets(fuzzy=True)
    if not matched:
        return None

    best: tuple[int, int, int] | None = None  # (-count, width, start)
    best_window: Span | None = None
    for i in range(len(matched)):
        covered: set[int] = set()
        for j in range(i, len(matched)):
            covered = covered | matched[j][1]
            if len(covered) < quorum:
                continue
            window = Span(matched[i][0], matched[j][0] + 1)
            key = (-len(covered), window.length, window.start)
            if best is None or key < best:
                best = key
                best_window = window
    return best_window


def _merge_overlapping(spans: list[Span]) -> list[Span]:
    merged: list[Span] = []
    for span in sorted(spans):
        if merged and span.start < merged[-1].end:
            merged[-1] = Span(merged[-1].start, max(merged[-1].end, span.end))
        else:
            merged.append(Span(*span))
    return merged


@dataclass(frozen=True)
class SpanOutcome:
    sentence_id: str
    source_span: Span
    status: str
    projected: Span | None

    def to_line(self) -> str:
        target = f"{self.projected.start}:{self.projected.end}" if self.projected else "-"
        return (
            f"{self.sentence_id}\t{self.source_span.start}:{self.source_span.end}"
            f"\t{self.status}\t{target}"
        )


@dataclass(frozen=True)
class ProjectionReport:
    n_input: int
    n_with_spans: int
    n_spans: int
    spans_ok: int
    spans_no_match: int
    spans_dropped: int
    n_output: int
    outcomes: tuple[SpanOutcome, ...]

    def check(self) -> None:
        assert self.spans_ok + self.spans_no_match + self.spans_dropped == self.n_spans
        assert len(self.outcomes) == self.n_spans

    def to_kv(self) -> str:
        return (
            f"n_input={self.n_input}\n"
            f"n_with_spans={self.n_with_spans}\n"
            f"n_spans={self.n_spans}\n"
            f"spans_ok={self.spans_ok}\n"
            f"spans_no_match={self.spans_no_match}\n"
            f"spans_dropped={self.spans_dropped}\n"
            f"n_output={self.n_output}\n"
        )

    def outcomes_tsv(self) -> str:
        lines = ["sentence_id\tsource_span\tstatus\tprojected"]
        lines.extend(o.to_line() for o in self.outcomes)
        return "\n".join(lines) + "\n"


def project_dataset(
    dataset: Dataset,
    client: TranslationClient,
    source_lang: str = "de",
    target_lang: str = "en",
    fuzzy_threshold: float = FUZZY_THRESHOLD,
) -> tuple[Dataset, ProjectionReport]:
    """Translate every stimulus-bearing sentence and carry its spans across.

    A sentence survives only if at least one span lands; a failed translation
    drops all spans of that sentence. Overlapping projected spans are merged
    before the target gold layer is written.
    """
    outcomes: list[SpanOutcome] = []
    projected: list[Sentence] = []
    n_with_spans = 0
    ok = no_match = dropped = 0
    for sentence in dataset:
        spans = sentence.gold_spans() if sentence.gold is not None else []
        if not spans:
            continue
        n_with_spans += 1
        text = " ".join(sentence.surfaces())
        try:
            translation = client.translate(text, source_lang, target_lang)
        except TranslationError:
            dropped += len(spans)
            outcomes.extend(
                SpanOutcome(sentence.id, sp, SPAN_DROPPED, None) for sp in spans
            )
            continue
        target_tokens = translation.split()
        landed: list[Span] = []
        for sp in spans:
            window = align_span(
                sentence.surfaces(), sp, target_tokens, fuzzy_threshold
            )
            if window is None:
                no_match += 1
                outcomes.append(SpanOutcome(sentence.id, sp, SPAN_NO_MATCH, None))
            else:
                ok += 1
                landed.append(window)
                outcomes.append(SpanOutcome(sentence.id, sp, SPAN_OK, window))
        if not landed:
            continue
        merged = _merge_overlapping(landed)
        projected.append(
            Sentence(
                id=sentence.id,
                tokens=tuple(Token(t) for t in target_tokens),
                gold=tuple(iob_from_spans(merged, len(target_tokens))),
                source=sentence.source,
                emotion=sentence.emotion,
                cue=sentence.cue,
                experiencer=sentence.experiencer,
                lang=target_lang,
                url=sentence.url,
                date=sentence.date,
            )
        )
    report = ProjectionReport(
        n_input=len(dataset),
        n_with_spans=n_with_spans,
        n_spans=ok + no_match + dropped,
        spans_ok=ok,
        spans_no_match=no_match,
        spans_dropped=dropped,
        n_output=len(projected),
        outcomes=tuple(outcomes),
    )
    report.check()
    return Dataset(projected, provenance="projection"), report
