"""
Comparing two annotators and merging their work
===============================================

Two annotation passes over the same headlines rarely agree perfectly.
The agreement report quantifies how far apart they are (chance-corrected
for the categorical layers, token-level F1 for spans), and aggregation
merges the passes into one corpus, recording every conflict it could
not resolve.
"""

from stimulex import Dataset, Sentence, Token, aggregate, agreement_report
from stimulex.corpus import iob_from_spans


def annotated(sid: str, words: str, spans, emotion: str, cue: str) -> Sentence:
    tokens = [Token(w) for w in words.split()]
    return Sentence(
        id=sid, tokens=tokens, gold=iob_from_spans(spans, len(tokens)),
        emotion=emotion, cue=cue,
    )


# Annotator A reads the stimulus narrowly, B includes the preposition.
first = Dataset([
    annotated("h1", "Angst vor dem großen Beben", [(3, 5)], "fear", "yes"),
    annotated("h2", "Freude über das schnelle Ende", [(2, 5)], "happiness", "yes"),
    annotated("h3", "Lage weiter unklar", [], "no emotion", "no"),
])
second = Dataset([
    annotated("h1", "Angst vor dem großen Beben", [(1, 5)], "fear", "yes"),
    annotated("h2", "Freude über das schnelle Ende", [(2, 5)], "positive surprise", "yes"),
    annotated("h3", "Lage weiter unklar", [], "no emotion", "no"),
])

report = agreement_report(first, second)
print("--- agreement " + "-" * 40)
print(report.to_kv(), end="")

merged, conflicts = aggregate(first, second)
print("--- aggregate " + "-" * 40)
for s in merged:
    spans = s.gold_spans("lenient")
    print(f"{s.id}: emotion={s.emotion or '(conflict)'} cue={s.cue} spans={spans}")

print("--- conflicts " + "-" * 40)
for c in conflicts:
    print(f"{c.sentence_id}: {c.layer} disagrees ({c.a!r} vs {c.b!r})")
