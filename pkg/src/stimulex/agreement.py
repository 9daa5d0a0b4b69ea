"""Inter-annotator agreement and aggregation of double annotations.

All pairwise functions expect two corpora over the same sentences:
identical ids in identical order with identical surfaces.  Token-level
scores treat B and I as distinct labels.  Where a function needs both
annotators' layers (gold, emotion, cue marks), sentences missing a side
are left out of that score.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .corpus import Dataset, Sentence, Span, iob_from_spans


@dataclass(frozen=True)
class Conflict:
    sentence_id: str
    layer: str  # emotion | stimulus
    a: str
    b: str

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError("a conflict needs two differing annotations")

    def to_line(self) -> str:
        return f"{self.sentence_id}\t{self.layer}\t{self.a}\t{self.b}"


@dataclass
class AgreementReport:
    n_sentences: int
    kappa_cue: float | None
    kappa_experiencer: float | None
    kappa_emotion: float | None
    kappa_stimulus_token: float | None
    f1_stimulus_token: float | None
    f1_stimulus_span: float | None

    def to_kv(self) -> str:
        lines = [f"n_sentences={self.n_sentences}", "token_f1_reference=a"]
        for key in ("kappa_cue", "kappa_experiencer", "kappa_emotion",
                    "kappa_stimulus_token", "f1_stimulus_token", "f1_stimulus_span"):
            value = getattr(self, key)
            lines.append(f"{key}={'NA' if value is None else format(value, '.6f')}")
        return "\n".join(lines) + "\n"


def cohen_kappa(a: list, b: list) -> float:
    """Chance-corrected agreement with per-annotator marginals.

    Degenerate case: when expected agreement is 1 the score is 1 if the
    ratings agree everywhere, otherwise an error is raised.
    """
    if len(a) != len(b):
        raise ValueError(f"rating lists differ in length: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("rating lists must be non-empty")
    n = len(a)
    p_o = sum(x == y for x, y in zip(a, b)) / n
    freq_a = Counter(a)
    freq_b = Counter(b)
    p_e = sum(freq_a[label] * freq_b.get(label, 0) for label in freq_a) / (n * n)
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise ValueError("expected agreement is 1 while ratings disagree")
    return (p_o - p_e) / (1.0 - p_e)


def _check_aligned(a: Dataset, b: Dataset) -> None:
    if len(a) != len(b):
        raise ValueError(f"corpora differ in size: {len(a)} vs {len(b)}")
    for sa, sb in zip(a, b):
        if sa.id != sb.id:
            raise ValueError(f"sentence id mismatch: {sa.id!r} vs {sb.id!r}")
        if sa.surfaces() != sb.surfaces():
            raise ValueError(f"sentence {sa.id}: token surfaces differ")


def _prf(tp: int, n_pred: int, n_gold: int) -> float:
    p = tp / n_pred if n_pred else 0.0
    r = tp / n_gold if n_gold else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def token_agreement(a: Dataset, b: Dataset) -> tuple[float | None, float | None]:
    """(kappa, f1) over flattened IOB tags of jointly annotated sentences.

    F1 takes annotator a as reference and b as hypothesis; a token
    counts as matched when both tags are equal and not O.
    """
    _check_aligned(a, b)
    tags_a: list[str] = []
    tags_b: list[str] = []
    for sa, sb in zip(a, b):
        if sa.gold is None or sb.gold is None:
            continue
        tags_a.extend(sa.gold)
        tags_b.extend(sb.gold)
    if not tags_a:
        return None, None
    kappa = cohen_kappa(tags_a, tags_b)
    tp = sum(x == y != "O" for x, y in zip(tags_a, tags_b))
    f1 = _prf(tp, sum(t != "O" for t in tags_b), sum(t != "O" for t in tags_a))
    return kappa, f1


def exact_span_f1(a: Dataset, b: Dataset) -> float | None:
    """Micro F1 over exactly matching spans, a as reference."""
    _check_aligned(a, b)
    tp = n_a = n_b = 0
    any_pair = False
    for sa, sb in zip(a, b):
        if sa.gold is None or sb.gold is None:
            continue
        any_pair = True
        spans_a = set(sa.gold_spans())
        spans_b = set(sb.gold_spans())
        tp += len(spans_a & spans_b)
        n_a += len(spans_a)
        n_b += len(spans_b)
    if not any_pair:
        return None
    return _prf(tp, n_b, n_a)


def _runs(indices: list[int]) -> list[Span]:
    runs: list[Span] = []
    start = prev = None
    for i in indices:
        if start is None:
            start = prev = i
        elif i == prev + 1:
            prev = i
        else:
            runs.append(Span(start, prev + 1))
            start = prev = i
    if start is not None:
        runs.append(Span(start, prev + 1))
    return runs


def aggregate_spans(
    a_spans: list[Span], b_spans: list[Span],
) -> tuple[list[Span], list[tuple[str, Span]]]:
    """Merge two span layers into agreed spans plus lone leftovers.

    Every span of a is cut down to the tokens the other side also
    covers, re-split into maximal runs.  Spans without any overlap on
    the other side come back as ("a"|"b", span) leftovers.
    """
    covered_b = {i for sp in b_spans for i in range(sp.start, sp.end)}
    agreed: list[Span] = []
    lone: list[tuple[str, Span]] = []
    for sp in a_spans:
        inside = [i for i in range(sp.start, sp.end) if i in covered_b]
        if not inside:
            lone.append(("a", Span(*sp)))
        else:
            agreed.extend(_runs(inside))
    for sp in b_spans:
        if not any(Span(*sp).overlaps(Span(*other)) for other in a_spans):
            lone.append(("b", Span(*sp)))
    return sorted(agreed), lone


def _merge_mark(a: str | None, b: str | None) -> str | None:
    # a single yes wins, then a single no, unmarked only if both unmarked
    if "yes" in (a, b):
        return "yes"
    if "no" in (a, b):
        return "no"
    return None


def aggregate(a: Dataset, b: Dataset) -> tuple[Dataset, list[Conflict]]:
    """Build the adjudicated corpus from two annotation rounds.

    Emotions must agree, otherwise the sentence keeps no emotion and a
    Conflict is recorded.  Cue and experiencer marks merge with a yes
    from either side winning.  Stimulus layers merge via
    aggregate_spans; lone spans become Conflicts.  A gold layer present
    on one side only is taken as is.
    """
    _check_aligned(a, b)
    sentences: list[Sentence] = []
    conflicts: list[Conflict] = []
    for sa, sb in zip(a, b):
        emotion = sa.emotion
        if sa.emotion != sb.emotion:
            emotion = None
            conflicts.append(Conflict(sa.id, "emotion", str(sa.emotion), str(sb.emotion)))
        gold = None
        if sa.gold is not None and sb.gold is not None:
            agreed, lone = aggregate_spans(sa.gold_spans(), sb.gold_spans())
            gold = iob_from_spans(agreed, len(sa.tokens))
            for side, sp in lone:
                mark = f"{sp.start}:{sp.end}"
                conflicts.append(Conflict(
                    sa.id, "stimulus",
                    mark if side == "a" else "-",
                    mark if side == "b" else "-"))
        elif sa.gold is not None or sb.gold is not None:
            gold = list(sa.gold if sa.gold is not None else sb.gold)
        sentences.append(Sentence(
            id=sa.id,
            tokens=list(sa.tokens),
            gold=gold,
            source=sa.source,
            emotion=emotion,
            cue=_merge_mark(sa.cue, sb.cue),
            experiencer=_merge_mark(sa.experiencer, sb.experiencer),
            lang=sa.lang,
            url=sa.url,
            date=sa.date,
        ))
    return Dataset(sentences=sentences, provenance="aggregate"), conflicts


def _mark_kappa(a: Dataset, b: Dataset, field: str) -> float | None:
    pairs = [(getattr(sa, field), getattr(sb, field))
             for sa, sb in zip(a, b)
             if getattr(sa, field) is not None and getattr(sb, field) is not None]
    if not pairs:
        return None
    return cohen_kappa([p[0] for p in pairs], [p[1] for p in pairs])


def agreement_report(a: Dataset, b: Dataset) -> AgreementReport:
    _check_aligned(a, b)
    emotion_pairs = [(sa.emotion, sb.emotion) for sa, sb in zip(a, b)
                     if sa.emotion is not None and sb.emotion is not None]
    kappa_emotion = None
    if emotion_pairs:
        kappa_emotion = cohen_kappa([p[0] for p in emotion_pairs], [p[1] for p in emotion_pairs])
    kappa_token, f1_token = token_agreement(a, b)
    return AgreementReport(
        n_sentences=len(a),
        kappa_cue=_mark_kappa(a, b, "cue"),
        kappa_experiencer=_mark_kappa(a, b, "experiencer"),
        kappa_emotion=kappa_emotion,
        kappa_stimulus_token=kappa_token,
        f1_stimulus_token=f1_token,
        f1_stimulus_span=exact_span_f1(a, b),
    )
