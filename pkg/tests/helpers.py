"""Shared builders for randomized test data."""

from __future__ import annotations

import itertools
import math
import random

import numpy as np

from stimulex.corpus import Dataset, Sentence, Token, UPOS_TAGS, EMOTIONS, iob_from_spans

# Verdict lines the acceptance tests leave for the terminal summary hook.
ACCEPTANCE_VERDICTS: list[str] = []

WORDS = [
    "Angst", "vor", "der", "Krise", "wächst", "Staat", "plant", "Hilfen",
    "Streit", "über", "neuen", "Impfstoff", "eskaliert", "Ökonomen", "warnen",
    "Preise", "steigen", "weiter", "an", "Familien", "fürchten", "das", "Aus",
    "nach", "dem", "Sturm", "Hoffnung", "auf", "ein", "Ende", "des", "Konflikts",
]

PUNCT = [",", ":", "!", "?", "-", "„", "“"]


def random_surface(rng: random.Random) -> str:
    r = rng.random()
    if r < 0.10:
        return rng.choice(PUNCT)
    if r < 0.18:
        return str(rng.randint(0, 2030))
    word = rng.choice(WORDS)
    if rng.random() < 0.3:
        word = word + rng.choice(["s", "en", "e", ""])
    return word


def random_spans(rng: random.Random, n: int) -> list[tuple[int, int]]:
    """Sorted disjoint spans over n tokens; may touch, never overlap."""
    spans: list[tuple[int, int]] = []
    i = 0
    while i < n:
        if rng.random() < 0.35:
            length = rng.randint(1, min(4, n - i))
            spans.append((i, i + length))
            i += length + rng.randint(0, 2)
        else:
            i += 1
    return spans


def random_strict_tags(rng: random.Random, n: int) -> list[str]:
    """Strict-valid IOB sequence drawn from the tag grammar directly."""
    tags: list[str] = []
    prev = "O"
    for _ in range(n):
        choices = ["O", "B"] if prev == "O" else ["O", "B", "I"]
        prev = rng.choice(choices)
        tags.append(prev)
    return tags


def random_any_tags(rng: random.Random, n: int) -> list[str]:
    return [rng.choice("BIO") for _ in range(n)]


def make_sentence(sid, surfaces, gold_spans=None, pred=None, pos=None, **kwargs) -> Sentence:
    tokens = []
    for i, surface in enumerate(surfaces):
        tokens.append(Token(surface, pos=pos[i] if pos else "UNK"))
    gold = iob_from_spans(gold_spans, len(surfaces)) if gold_spans is not None else None
    return Sentence(id=str(sid), tokens=tokens, gold=gold, pred=pred, **kwargs)


def random_dataset(rng: random.Random, n_sentences: int | None = None) -> Dataset:
    n_sentences = n_sentences if n_sentences is not None else rng.randint(1, 8)
    pos_pool = sorted(UPOS_TAGS)
    sentences = []
    for k in range(n_sentences):
        n = rng.randint(1, 12)
        tokens = []
        for _ in range(n):
            pos = rng.choice(pos_pool) if rng.random() < 0.7 else "UNK"
            dep = rng.choice(["", "sb", "nk", "mo", "root"])
            ner = rng.choice(["", "", "", "PER", "LOC", "ORG"])
            tokens.append(Token(random_surface(rng), pos=pos, dep=dep, ner=ner))
        gold = iob_from_spans(random_spans(rng, n), n) if rng.random() < 0.7 else None
        pred = random_any_tags(rng, n) if rng.random() < 0.3 else None
        sentences.append(Sentence(
            id=f"s{k}",
            tokens=tokens,
            gold=gold,
            pred=pred,
            source=rng.choice([None, "bild.de", "zeit.de"]),
            emotion=rng.choice((None,) + EMOTIONS),
            cue=rng.choice([None, "yes", "no"]),
            experiencer=rng.choice([None, "yes", "no"]),
            lang=rng.choice([None, "de"]),
            date=rng.choice([None, "2020-09-30"]),
        ))
    return Dataset(sentences=sentences)


# Six-sentence evaluation fixture with a frozen hand tally.  Sentences
# cover: exact match, stray prediction plus inner overlap, early start
# with shared end, surrounding, two fragments over one gold span, and a
# late stop next to a missed gold span.
EVAL_FIXTURE = [
    (6, [(2, 5)], [(2, 5)]),
    (8, [(2, 6)], [(0, 1), (4, 5)]),
    (6, [(2, 5)], [(0, 5)]),
    (10, [(3, 9)], [(1, 10)]),
    (10, [(3, 9)], [(3, 5), (7, 9)]),
    (7, [(0, 2), (4, 6)], [(0, 3)]),
]

# (tp, fp, fn) per mode, tallied by hand from EVAL_FIXTURE
EVAL_FIXTURE_COUNTS = {
    "exact": (1, 7, 6),
    "partial": (6, 2, 1),
    "left": (3, 5, 4),
    "right": (3, 5, 4),
}

EVAL_FIXTURE_ERRORS = {
    "EarlyStart": 1, "LateStart": 1, "EarlyStop": 1,
    "LateStop": 1, "Surrounding": 1, "Consecutive": 1,
}


def eval_fixture() -> Dataset:
    sentences = []
    for k, (n, gold, pred) in enumerate(EVAL_FIXTURE, 1):
        sentences.append(make_sentence(
            f"f{k}", [f"w{i}" for i in range(n)], gold,
            pred=iob_from_spans(pred, n)))
    return Dataset(sentences)


def max_matching_size(gold, pred, admissible) -> int:
    """Exhaustive maximum one-to-one matching, the oracle for greedy."""
    best = 0

    def rec(i: int, used: frozenset) -> None:
        nonlocal best
        remaining = len(gold) - i
        if len(used) + remaining <= best:
            return
        if i == len(gold):
            best = max(best, len(used))
            return
        rec(i + 1, used)
        for j in range(len(pred)):
            if j not in used and admissible(gold[i], pred[j]):
                rec(i + 1, used | {j})

    rec(0, frozenset())
    return best


# --- Sequence-model oracles: exhaustive enumeration in plain python --------
#
# Everything below works from the model's public weight tables with direct
# dict lookups and math-module arithmetic, so it shares no code with the
# numpy inference path it is used to check.


def crf_emission_table(model, fseq) -> list[list[float]]:
    table = []
    for feats in fseq:
        row = [0.0, 0.0, 0.0]
        for name in feats:
            idx = model.feature_ids.get(name)
            if idx is not None:
                for y in range(3):
                    row[y] += float(model.emissions[idx][y])
        table.append(row)
    return table


def crf_enumerate(model, fseq) -> list[tuple[float, tuple[int, ...]]]:
    """Score of every one of the 3^n labellings (0=B, 1=I, 2=O).

    fsum keeps the total independent of term order, so labellings that
    use the same multiset of terms (label swaps between positions with
    identical features) come out exactly equal.
    """
    emission = crf_emission_table(model, fseq)
    trans = [[float(model.transitions[a][b]) for b in range(3)] for a in range(3)]
    scored = []
    for labeling in itertools.product(range(3), repeat=len(fseq)):
        terms = [emission[t][y] for t, y in enumerate(labeling)]
        terms.extend(trans[a][b] for a, b in zip(labeling, labeling[1:]))
        scored.append((math.fsum(terms), labeling))
    return scored


def crf_enum_log_partition(scored) -> float:
    m = max(s for s, _ in scored)
    return m + math.log(sum(math.exp(s - m) for s, _ in scored))


def strict_valid_labeling(labeling) -> bool:
    """True when the index sequence decodes under strict IOB reading."""
    prev = None
    for y in labeling:
        if y == 1 and (prev is None or prev == 2):
            return False
        prev = y
    return True


def crf_enum_best(scored, valid=None) -> tuple[float, tuple[int, ...]]:
    best = None
    for s, lab in scored:
        if valid is not None and not valid(lab):
            continue
        if best is None or s > best[0]:
            best = (s, lab)
    return best


def random_crf_model(rng: random.Random, n_features: int = 5, scale: float = 1.0):
    from stimulex.crf import CrfModel
    from stimulex.features import CorpusStatistics, FeatureConfig

    names = [f"f{i}" for i in range(n_features)]
    emissions = np.array([[rng.gauss(0.0, scale) for _ in range(3)] for _ in names])
    transitions = np.array([[rng.gauss(0.0, scale) for _ in range(3)] for _ in range(3)])
    return CrfModel(
        config=FeatureConfig(),
        stats=CorpusStatistics({}, 0),
        feature_ids={name: i for i, name in enumerate(names)},
        emissions=emissions,
        transitions=transitions,
    )


def random_feature_seq(rng: random.Random, model, n: int) -> list[frozenset[str]]:
    names = list(model.feature_ids) + ["nie_gesehen"]
    seq = []
    for _ in range(n):
        k = rng.randint(0, min(3, len(names)))
        seq.append(frozenset(rng.sample(names, k)))
    return seq


def unique_token_corpus(n: int, seed: int = 1234) -> Dataset:
    """Sentences whose tokens are all distinct, for lossless round trips."""
    rng = random.Random(seed)
    sentences = []
    counter = 0
    for i in range(n):
        length = rng.randint(3, 9)
        surfaces = []
        for _ in range(length):
            surfaces.append(f"wort{counter:04d}")
            counter += 1
        start = rng.randrange(0, length)
        end = rng.randint(start + 1, length)
        sentences.append(
            make_sentence(
                f"u{i:03d}", surfaces, gold_spans=[(start, end)],
                emotion="fear", cue="yes", source="synthetisch",
            )
        )
    return Dataset(sentences)
