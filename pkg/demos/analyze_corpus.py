"""
Descriptive statistics over an annotated corpus
===============================================

Emotion distribution, part-of-speech context around stimulus spans, and
where in the headline spans sit. The same tables back the `analyze`
subcommand; here they print straight to the terminal and the chart goes
to a temp directory.
"""

import random
import tempfile
from pathlib import Path

from stimulex import Dataset, Sentence, Token
from stimulex.analyze import (
    bar_chart_svg,
    emotion_table,
    emotion_table_tsv,
    pos_context_table,
    pos_context_tsv,
    span_position_stats,
)
from stimulex.corpus import EMOTIONS, iob_from_spans

rng = random.Random(7)
POS_POOL = ["NOUN", "VERB", "ADJ", "ADP", "DET", "ADV"]


def headline(i: int) -> Sentence:
    n = rng.randint(4, 9)
    tokens = [
        Token(f"wort{rng.randint(0, 999)}", pos=rng.choice(POS_POOL)) for _ in range(n)
    ]
    # Two thirds of the headlines carry a span, biased toward the end.
    if i % 3 != 0:
        start = rng.randint(n // 2, n - 1)
        spans = [(start, n)]
        emotion = rng.choice([e for e in EMOTIONS if e != "no emotion"])
    else:
        spans, emotion = [], "no emotion"
    return Sentence(
        id=f"h{i:03d}", tokens=tokens, gold=iob_from_spans(spans, n),
        emotion=emotion, cue="yes" if spans else "no",
    )


dataset = Dataset([headline(i) for i in range(120)])

rows = emotion_table(dataset)
print("--- emotion distribution " + "-" * 30)
print(emotion_table_tsv(rows), end="")

print("--- POS context around spans " + "-" * 26)
print(pos_context_tsv(pos_context_table(dataset)), end="")

stats = span_position_stats(dataset)
print("--- span position " + "-" * 37)
print(stats.to_kv(), end="")

out = Path(tempfile.mkdtemp(prefix="stimulex-demo-")) / "emotions.svg"
chart_rows = [r for r in rows if r.emotion != "All"]
out.write_text(
    bar_chart_svg(
        [r.emotion for r in chart_rows],
        [float(r.instances) for r in chart_rows],
        title="Instances per emotion",
    ),
    encoding="utf-8",
)
print(f"chart written to {out}")
