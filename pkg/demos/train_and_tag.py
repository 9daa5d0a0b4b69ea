"""
Training the span tagger on a synthetic pattern
===============================================

A throwaway corpus where an adposition always introduces a two-token
stimulus. The tagger has to pick the pattern up from part-of-speech
features alone, so a correct run demonstrates feature extraction,
gradient training, and constrained decoding end to end.
"""

import random

from stimulex import (
    Dataset,
    FeatureConfig,
    Sentence,
    Token,
    TrainConfig,
    score,
    split_dataset,
    tag_dataset,
    train,
)
from stimulex.corpus import iob_from_spans

rng = random.Random(2024)


def headline(sid: str, with_span: bool) -> Sentence:
    # Random surfaces keep word identity useless; only POS carries signal.
    words = [f"w{rng.randint(0, 99_999)}" for _ in range(5)]
    pos = ["NOUN", "VERB", "ADP", "NOUN", "NOUN"] if with_span else ["NOUN"] * 5
    spans = [(3, 5)] if with_span else []
    return Sentence(
        id=sid,
        tokens=[Token(w, pos=p) for w, p in zip(words, pos)],
        gold=iob_from_spans(spans, 5),
        emotion="fear" if with_span else "no emotion",
    )


dataset = Dataset(
    [headline(f"s{i:03d}", with_span=i % 3 != 0) for i in range(90)]
)
train_set, test_set = split_dataset(dataset, 0.8, seed=1)
print(f"corpus: {len(train_set)} train / {len(test_set)} test sentences")

config = FeatureConfig(corpus=False, linguistic=True, lexicon=False)
model = train(train_set, config, TrainConfig(max_iterations=100))
print(f"model: {model.n_features} features")
print(f"loss trace: {model.loss_trace[0]:.2f} -> {model.loss_trace[-1]:.2f} "
      f"over {len(model.loss_trace) - 1} accepted steps")

tagged = tag_dataset(test_set, model)
report = score(tagged)
for mode in ("exact", "partial"):
    s = report.modes[mode]
    print(f"{mode:7s} precision={s.precision:.3f} recall={s.recall:.3f} f1={s.f1:.3f}")

# Show one decode next to its gold layer.
example = tagged.sentences[0]
print("tokens:", " ".join(example.surfaces()))
print("gold:  ", " ".join(example.gold))
print("pred:  ", " ".join(example.pred))
