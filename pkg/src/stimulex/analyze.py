"""Descriptive statistics over annotated corpora.

All tables are computed from the gold layer. Sentences without a gold layer
contribute to instance counts but can never count as stimulus-bearing.
"""

from __future__ import annotations

import html
import unicodedata
from dataclasses import dataclass

from .corpus import EMOTIONS, Dataset, Sentence, Token

ABSENT = "ABSENT"
ALL = "All"


@dataclass(frozen=True)
class EmotionRow:
    emotion: str
    instances: int
    with_cue: int
    with_experiencer: int
    with_stimulus: int
    n_spans: int
    mean_span_length: float | None


def _row(emotion: str, sentences: list[Sentence]) -> EmotionRow:
    n_spans = 0
    total_len = 0
    with_stimulus = 0
    for s in sentences:
        spans = s.gold_spans() if s.gold is not None else []
        if spans:
            with_stimulus += 1
        n_spans += len(spans)
        total_len += sum(sp.length for sp in spans)
    return EmotionRow(
        emotion=emotion,
        instances=len(sentences),
        with_cue=sum(1 for s in sentences if s.cue == "yes"),
        with_experiencer=sum(1 for s in sentences if s.experiencer == "yes"),
        with_stimulus=with_stimulus,
        n_spans=n_spans,
        mean_span_length=(total_len / n_spans) if n_spans else None,
    )


def emotion_table(dataset: Dataset) -> list[EmotionRow]:
    """One row per emotion that occurs, then ABSENT if any sentence has no
    emotion header, then an All row over the whole dataset."""
    groups: dict[str, list[Sentence]] = {}
    for s in dataset:
        groups.setdefault(s.emotion if s.emotion is not None else ABSENT, []).append(s)
    rows = [_row(e, groups[e]) for e in EMOTIONS if e in groups]
    if ABSENT in groups:
        rows.append(_row(ABSENT, groups[ABSENT]))
    rows.append(_row(ALL, list(dataset)))
    return rows


def emotion_table_tsv(rows: list[EmotionRow]) -> str:
    lines = ["emotion\tinstances\twith_cue\twith_experiencer\twith_stimulus\tn_spans\tmean_span_length"]
    for r in rows:
        mean = "NA" if r.mean_span_length is None else f"{r.mean_span_length:.6f}"
        lines.append(
            f"{r.emotion}\t{r.instances}\t{r.with_cue}\t{r.with_experiencer}"
            f"\t{r.with_stimulus}\t{r.n_spans}\t{mean}"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PosContextRow:
    pos: str
    all_count: int
    all_frac: float
    inside_count: int
    inside_frac: float
    inside_ratio: float | None
    before_count: int
    before_frac: float
    after_count: int
    after_frac: float


def pos_context_table(dataset: Dataset) -> list[PosContextRow]:
    """POS distribution overall, inside stimulus spans, and in the single
    token before and after a span.

    Only gold-bearing sentences are counted. A span at the sentence edge has
    no before/after context and contributes nothing to those columns.
    """
    all_counts: dict[str, int] = {}
    inside: dict[str, int] = {}
    before: dict[str, int] = {}
    after: dict[str, int] = {}
    for s in dataset:
        if s.gold is None:
            continue
        for t in s.tokens:
            all_counts[t.pos] = all_counts.get(t.pos, 0) + 1
        for sp in s.gold_spans():
            for i in range(sp.start, sp.end):
                pos = s.tokens[i].pos
                inside[pos] = inside.get(pos, 0) + 1
            if sp.start > 0:
                pos = s.tokens[sp.start - 1].pos
                before[pos] = before.get(pos, 0) + 1
            if sp.end < len(s.tokens):
                pos = s.tokens[sp.end].pos
                after[pos] = after.get(pos, 0) + 1
    totals = {
        "all": sum(all_counts.values()),
        "inside": sum(inside.values()),
        "before": sum(before.values()),
        "after": sum(after.values()),
    }

    def frac(count: int, total: int) -> float:
        return count / total if total else 0.0

    rows = []
    for pos in sorted(all_counts, key=lambda p: (-all_counts[p], p)):
        all_frac = frac(all_counts[pos], totals["all"])
        inside_frac = frac(inside.get(pos, 0), totals["inside"])
        rows.append(
            PosContextRow(
                pos=pos,
                all_count=all_counts[pos],
                all_frac=all_frac,
                inside_count=inside.get(pos, 0),
                inside_frac=inside_frac,
                inside_ratio=(inside_frac / all_frac) if all_frac else None,
                before_count=before.get(pos, 0),
                before_frac=frac(before.get(pos, 0), totals["before"]),
                after_count=after.get(pos, 0),
                after_frac=frac(after.get(pos, 0), totals["after"]),
            )
        )
    return rows


def pos_context_tsv(rows: list[PosContextRow]) -> str:
    lines = [
        "pos\tall_count\tall_frac\tinside_count\tinside_frac\tinside_ratio"
        "\tbefore_count\tbefore_frac\tafter_count\tafter_frac"
    ]
    for r in rows:
        ratio = "NA" if r.inside_ratio is None else f"{r.inside_ratio:.6f}"
        lines.append(
            f"{r.pos}\t{r.all_count}\t{r.all_frac:.6f}\t{r.inside_count}"
            f"\t{r.inside_frac:.6f}\t{ratio}\t{r.before_count}\t{r.before_frac:.6f}"
            f"\t{r.after_count}\t{r.after_frac:.6f}"
        )
    return "\n".join(lines) + "\n"


def _is_punct_token(token: Token) -> bool:
    return token.pos == "PUNCT" or all(
        unicodedata.category(c).startswith("P") for c in token.surface
    )


@dataclass(frozen=True)
class PositionStats:
    n_with_stimulus: int
    ends_sentence: int
    begins_sentence: int

    @property
    def ends_fraction(self) -> float:
        return self.ends_sentence / self.n_with_stimulus if self.n_with_stimulus else 0.0

    @property
    def begins_fraction(self) -> float:
        return self.begins_sentence / self.n_with_stimulus if self.n_with_stimulus else 0.0

    def to_kv(self) -> str:
        return (
            f"n_with_stimulus={self.n_with_stimulus}\n"
            f"ends_sentence={self.ends_sentence}\n"
            f"begins_sentence={self.begins_sentence}\n"
            f"ends_fraction={self.ends_fraction:.6f}\n"
            f"begins_fraction={self.begins_fraction:.6f}\n"
        )


def span_position_stats(dataset: Dataset) -> PositionStats:
    """How often a stimulus sits at the start or end of its sentence.

    Edge punctuation does not count as sentence content: a span covering the
    last non-punctuation token ends the sentence even when a quote mark or
    full stop follows.
    """
    n = ends = begins = 0
    for s in dataset:
        if s.gold is None:
            continue
        spans = s.gold_spans()
        if not spans:
            continue
        n += 1
        content = [i for i, t in enumerate(s.tokens) if not _is_punct_token(t)]
        first = content[0] if content else 0
        last = content[-1] if content else len(s.tokens) - 1
        if any(sp.start <= last < sp.end for sp in spans):
            ends += 1
        if any(sp.start <= first < sp.end for sp in spans):
            begins += 1
    return PositionStats(n, ends, begins)


def by_source(dataset: Dataset) -> dict[str, Dataset]:
    """Split into per-source datasets; sentences without a source go to ""."""
    groups: dict[str, list[Sentence]] = {}
    for s in dataset:
        groups.setdefault(s.source or "", []).append(s)
    return {
        key: Dataset(groups[key], provenance=dataset.provenance)
        for key in sorted(groups)
    }


def bar_chart_svg(
    labels: list[str],
    values: list[float],
    title: str = "",
    width: int = 640,
    height: int = 320,
) -> str:
    """A self-contained SVG bar chart, written by hand so reports have no
    plotting dependency. Output is deterministic for identical input."""
    if len(labels) != len(values):
        raise ValueError("labels and values must have the same length")
    if not labels:
        raise ValueError("chart needs at least one bar")
    if any(v < 0 for v in values):
        raise ValueError("bar values must be non-negative")
    margin_left, margin_right = 50, 10
    margin_top = 30 if title else 10
    margin_bottom = 70
    plot_w = width - margin_left - margin_right
    plot_h = height - margin_top - margin_bottom
    peak = max(values) or 1.0
    n = len(values)
    slot = plot_w / n
    bar_w = slot * 0.7
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{html.escape(title)}</text>'
        )
    axis_y = margin_top + plot_h
    parts.append(
        f'<line x1="{margin_left}" y1="{axis_y}" x2="{width - margin_right}" '
        f'y2="{axis_y}" stroke="black"/>'
    )
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * value / peak
        x = margin_left + i * slot + (slot - bar_w) / 2
        y = axis_y - h
        cx = x + bar_w / 2
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
            f'fill="#4878a8"/>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{y - 4:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{value:g}</text>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{axis_y + 12:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10" '
            f'transform="rotate(-45 {cx:.1f} {axis_y + 12:.1f})">{html.escape(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
