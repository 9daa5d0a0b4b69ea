"""Span-level evaluation: four matching modes and an error taxonomy.

Matching is one-to-one and greedy left-to-right: every gold span takes
the leftmost admissible unused prediction.  For disjoint sorted spans
this reaches the maximum matching size in every mode.  Scores are
micro-averaged over sentences.  Gold layers are decoded strictly,
prediction layers leniently.

Modes: exact (identical boundaries), partial (any shared token), left
(shared token and equal start), right (shared token and equal end).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Dataset, Span

MODES = ("exact", "partial", "left", "right")

EARLY_START = "EarlyStart"
LATE_START = "LateStart"
EARLY_STOP = "EarlyStop"
LATE_STOP = "LateStop"
SURROUNDING = "Surrounding"
CONSECUTIVE = "Consecutive"

ERROR_TYPES = (EARLY_START, LATE_START, EARLY_STOP, LATE_STOP, SURROUNDING, CONSECUTIVE)


def _check_layer(spans: list[Span], name: str) -> list[Span]:
    out = [Span(*sp) for sp in spans]
    for prev, cur in zip(out, out[1:]):
        if cur.start < prev.end:
            raise ValueError(f"{name} spans must be sorted and disjoint: {prev} vs {cur}")
    return out


def _admissible(gold: Span, pred: Span, mode: str) -> bool:
    if mode == "exact":
        return gold == pred
    if not gold.overlaps(pred):
        return False
    if mode == "partial":
        return True
    if mode == "left":
        return gold.start == pred.start
    if mode == "right":
        return gold.end == pred.end
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: list[tuple[Span, Span]]


def match_spans(gold: list[Span], pred: list[Span], mode: str) -> MatchResult:
    """Greedy left-to-right one-to-one pairing under the given mode."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    gold = _check_layer(gold, "gold")
    pred = _check_layer(pred, "pred")
    used: set[int] = set()
    pairs: list[tuple[Span, Span]] = []
    for g in gold:
        for j, p in enumerate(pred):
            if j not in used and _admissible(g, p, mode):
                used.add(j)
                pairs.append((g, p))
                break
    tp = len(pairs)
    return MatchResult(tp=tp, fp=len(pred) - tp, fn=len(gold) - tp, pairs=pairs)


def classify_errors(gold: list[Span], pred: list[Span]) -> list[str]:
    """Boundary error types for one sentence.

    Gold spans overlapped by two or more predictions count as
    Consecutive, with boundary types judged on the overall extent of
    those predictions.  Singly overlapped gold spans are judged against
    their partial-mode partner.  EarlyStart together with LateStop
    collapses into Surrounding.  Exact matches and span pairs without
    shared tokens yield nothing.
    """
    gold = _check_layer(gold, "gold")
    pred = _check_layer(pred, "pred")
    paired = {g: p for g, p in match_spans(gold, pred, "partial").pairs}
    errors: list[str] = []
    for g in gold:
        overlapping = [p for p in pred if g.overlaps(p)]
        if len(overlapping) >= 2:
            start = min(p.start for p in overlapping)
            end = max(p.end for p in overlapping)
            fragmented = True
        elif g in paired:
            start, end = paired[g]
            fragmented = False
        else:
            continue
        types: list[str] = []
        if start < g.start:
            types.append(EARLY_START)
        elif start > g.start:
            types.append(LATE_START)
        if end < g.end:
            types.append(EARLY_STOP)
        elif end > g.end:
            types.append(LATE_STOP)
        if EARLY_START in types and LATE_STOP in types:
            types = [t for t in types if t not in (EARLY_START, LATE_STOP)]
            types.append(SURROUNDING)
        if fragmented:
            types.append(CONSECUTIVE)
        errors.extend(types)
    return errors


@dataclass
class ModeScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else 0.0


@dataclass
class EvalReport:
    n_sentences: int = 0
    n_gold_spans: int = 0
    n_pred_spans: int = 0
    modes: dict[str, ModeScore] = field(default_factory=lambda: {m: ModeScore() for m in MODES})
    errors: dict[str, int] = field(default_factory=lambda: {t: 0 for t in ERROR_TYPES})

    def to_kv(self) -> str:
        lines = [
            "aggregation=micro",
            f"n_sentences={self.n_sentences}",
            f"n_gold_spans={self.n_gold_spans}",
            f"n_pred_spans={self.n_pred_spans}",
        ]
        for mode in MODES:
            s = self.modes[mode]
            lines.append(f"{mode}.tp={s.tp}")
            lines.append(f"{mode}.fp={s.fp}")
            lines.append(f"{mode}.fn={s.fn}")
            lines.append(f"{mode}.precision={s.precision:.6f}")
            lines.append(f"{mode}.recall={s.recall:.6f}")
            lines.append(f"{mode}.f1={s.f1:.6f}")
        for t in ERROR_TYPES:
            key = "".join("_" + c.lower() if c.isupper() else c for c in t).lstrip("_")
            lines.append(f"errors.{key}={self.errors[t]}")
        return "\n".join(lines) + "\n"


def _span_pairs(gold: Dataset, pred: Dataset | None) -> list[tuple[str, list[Span], list[Span]]]:
    out = []
    if pred is None:
        for s in gold:
            if s.gold is None:
                raise ValueError(f"sentence {s.id}: gold layer missing")
            if s.pred is None:
                raise ValueError(f"sentence {s.id}: pred layer missing")
            out.append((s.id, s.gold_spans("strict"), s.pred_spans("lenient")))
        return out
    if len(gold) != len(pred):
        raise ValueError(f"corpora differ in size: {len(gold)} vs {len(pred)}")
    for sg, sp in zip(gold, pred):
        if sg.id != sp.id:
            raise ValueError(f"sentence id mismatch: {sg.id!r} vs {sp.id!r}")
        if sg.gold is None:
            raise ValueError(f"sentence {sg.id}: gold layer missing")
        if sp.pred is None and sp.gold is None:
            raise ValueError(f"sentence {sp.id}: no predictions")
        # a prediction corpus may carry its spans in either layer
        spans = sp.pred_spans("lenient") if sp.pred is not None else sp.gold_spans("lenient")
        out.append((sg.id, sg.gold_spans("strict"), spans))
    return out


def score(gold: Dataset, pred: Dataset | None = None) -> EvalReport:
    """Micro-averaged scores plus error histogram.

    One-corpus form reads GOLD and PRED layers off the same sentences;
    the two-corpus form aligns by sentence id and order.
    """
    report = EvalReport()
    for _sid, g_spans, p_spans in _span_pairs(gold, pred):
        report.n_sentences += 1
        report.n_gold_spans += len(g_spans)
        report.n_pred_spans += len(p_spans)
        for mode in MODES:
            res = match_spans(g_spans, p_spans, mode)
            ms = report.modes[mode]
            ms.tp += res.tp
            ms.fp += res.fp
            ms.fn += res.fn
        for err in classify_errors(g_spans, p_spans):
            report.errors[err] += 1
    return report
