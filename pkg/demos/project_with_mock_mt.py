"""
Annotation projection through a mock translation backend
========================================================

Spans survive translation by re-finding their tokens in the translated
sentence: exact matches anchor the window, and near-misses join in when
exact coverage falls short. That only works where content words survive
translation (names, internationalisms), which is exactly the situation
the heuristic banks on. A word-substitution HTTP server on the loopback
interface stands in for a real MT system, and a JSONL cache makes the
second pass work without touching the backend.
"""

import tempfile
from pathlib import Path

from stimulex import Dataset, Sentence, Token, TranslationClient, project_dataset
from stimulex.corpus import iob_from_spans
from stimulex.mtserver import running_server
from stimulex.project import HttpTransport

# Enough vocabulary for three headlines. Cognates come out slightly
# different ("Reformen" -> "reforms"), names come out identical.
TABLE = {
    "angst": "fear", "vor": "of", "dem": "the", "chaos": "chaos",
    "in": "in", "washington": "Washington", "hoffnung": "hope",
    "auf": "for", "reformen": "reforms", "europa": "Europe",
    "die": "the", "lage": "situation", "bleibt": "remains", "ruhig": "calm",
}


def headline(sid: str, text: str, span: tuple[int, int] | None, emotion: str) -> Sentence:
    tokens = [Token(w) for w in text.split()]
    spans = [span] if span else []
    return Sentence(
        id=sid, tokens=tokens, gold=iob_from_spans(spans, len(tokens)),
        emotion=emotion, lang="de",
    )


source = Dataset([
    # "fear of the chaos in Washington": the span lands on exact matches
    headline("de-1", "Angst vor dem Chaos in Washington", (1, 6), "fear"),
    # "hope for reforms in Europe": exact coverage misses quorum, fuzzy joins
    headline("de-2", "Hoffnung auf Reformen in Europa", (1, 5), "hope"),
    headline("de-3", "Die Lage bleibt ruhig", None, "no emotion"),
])

cache = Path(tempfile.mkdtemp(prefix="stimulex-demo-")) / "cache.jsonl"

# The cache key includes the backend name, so both passes call it "mock"
# even though the second one points at a dead port.
with running_server(TABLE) as url:
    client = TranslationClient(HttpTransport(url + "/translate"), cache, backend="mock")
    projected, report = project_dataset(source, client, "de", "en")
    print(f"backend at {url}: {client.misses} translations fetched")

for line in report.outcomes_tsv().splitlines():
    print(" ", line)
print(f"{report.spans_ok} of {report.n_spans} spans landed")

for s in projected:
    spans = s.gold_spans()
    text = " ".join(s.surfaces())
    marked = " ".join(s.surfaces()[spans[0].start:spans[0].end]) if spans else "-"
    print(f"{s.id} [{s.lang}] {text!r} -> stimulus {marked!r}")

# Second pass: the server is gone, the cache answers everything.
client2 = TranslationClient(
    HttpTransport("http://127.0.0.1:1/translate"), cache, backend="mock"
)
again, _ = project_dataset(source, client2, "de", "en")
print(f"replay from cache: {client2.hits} hits, {client2.misses} misses")
