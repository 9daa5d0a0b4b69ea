"""Fine-tuning and prediction with a pretrained encoder.

A linear token-classification head on a multilingual encoder, trained
with weight-decayed Adam, gradient-norm clipping, and a fixed epoch
count. No decoding layer sits on top: predictions are raw per-token
argmax labels and may be invalid IOB on purpose, which the consuming
evaluator accepts in lenient mode.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, fields
from pathlib import Path

import torch

from .align import ID_TO_LABEL, IGNORE, LABEL_TO_ID, align_labels, first_piece_positions
from .corpusio import LABELS, Sentence, load_corpus, save_corpus

CONFIG_NAME = "finetune.txt"
LOSS_NAME = "loss.txt"


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class FineTuneConfig:
    base_model: str = "xlm-roberta-base"
    epochs: int = 5
    batch_size: int = 16
    dropout: float = 0.5
    learning_rate: float = 1e-5
    max_grad_norm: float = 1.0
    weight_decay: float = 0.01
    seed: int = 1
    max_pieces: int = 64

    def __post_init__(self):
        if not self.base_model:
            raise ValueError("base_model must be set")
        for name in ("epochs", "batch_size", "learning_rate", "max_grad_norm", "max_pieces"):
            value = getattr(self, name)
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        for name in ("dropout", "weight_decay", "seed"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if self.dropout >= 1.0:
            raise ValueError(f"dropout must be below 1, got {self.dropout}")

    def to_kv(self) -> str:
        lines = [f"{f.name}={getattr(self, f.name)}" for f in fields(self)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_kv(cls, text: str) -> "FineTuneConfig":
        casts = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, value = line.partition("=")
            if key not in casts:
                raise ValueError(f"unknown config key {key!r}")
            cast = {"str": str, "int": int, "float": float}[casts[key]]
            kwargs[key] = cast(value)
        return cls(**kwargs)


def _load_base(name_or_dir: str, config: FineTuneConfig):
    from transformers import AutoModelForTokenClassification, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(name_or_dir)
    if not tokenizer.is_fast:
        raise TrainingError("tokenizer must be a fast tokenizer (piece alignment)")
    model = AutoModelForTokenClassification.from_pretrained(
        name_or_dir,
        num_labels=len(LABELS),
        id2label=ID_TO_LABEL,
        label2id=LABEL_TO_ID,
        hidden_dropout_prob=config.dropout,
        attention_probs_dropout_prob=config.dropout,
        classifier_dropout=config.dropout,
    )
    return tokenizer, model


def _encode(tokenizer, sentences: list[Sentence], max_pieces: int, with_labels: bool):
    """Per-sentence encodings plus aligned label rows (None without gold)."""
    encoded = []
    for s in sentences:
        surfaces = s.surfaces()
        enc = tokenizer(
            surfaces,
            is_split_into_words=True,
            truncation=True,
            max_length=max_pieces,
        )
        word_ids = enc.word_ids()
        labels = None
        if with_labels:
            gold = s.gold()
            if gold is None:
                raise TrainingError(f"sentence {s.id!r} has no gold layer")
            labels = align_labels(gold, word_ids)
        encoded.append((enc["input_ids"], word_ids, labels))
    return encoded


def _pad_batch(items, pad_id: int):
    width = max(len(ids) for ids, _, _ in items)
    input_ids = torch.full((len(items), width), pad_id, dtype=torch.long)
    attention = torch.zeros((len(items), width), dtype=torch.long)
    labels = torch.full((len(items), width), IGNORE, dtype=torch.long)
    for row, (ids, _, lab) in enumerate(items):
        input_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        attention[row, : len(ids)] = 1
        if lab is not None:
            labels[row, : len(lab)] = torch.tensor(lab, dtype=torch.long)
    return input_ids, attention, labels


def fine_tune(
    corpus_path: str | Path,
    model_dir: str | Path,
    config: FineTuneConfig | None = None,
) -> list[float]:
    """Train for exactly config.epochs epochs and save everything needed
    to predict later. Returns the mean loss per epoch."""
    config = config or FineTuneConfig()
    sentences = load_corpus(corpus_path)
    if not sentences:
        raise TrainingError("training corpus is empty")

    random.seed(config.seed)
    torch.manual_seed(config.seed)

    tokenizer, model = _load_base(config.base_model, config)
    encoded = _encode(tokenizer, sentences, config.max_pieces, with_labels=True)

    optimizer = torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )
    model.train()
    shuffler = random.Random(config.seed)
    losses: list[float] = []
    try:
        for epoch in range(config.epochs):
            order = list(range(len(encoded)))
            shuffler.shuffle(order)
            total = 0.0
            n_batches = 0
            for start in range(0, len(order), config.batch_size):
                batch = [encoded[i] for i in order[start : start + config.batch_size]]
                input_ids, attention, labels = _pad_batch(batch, tokenizer.pad_token_id)
                out = model(input_ids=input_ids, attention_mask=attention, labels=labels)
                optimizer.zero_grad()
                out.loss.backward()
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.max_grad_norm)
                optimizer.step()
                total += float(out.loss.detach())
                n_batches += 1
            losses.append(total / n_batches)
    except torch.cuda.OutOfMemoryError as exc:
        raise TrainingError(
            f"out of memory at batch_size={config.batch_size}; try a smaller one"
        ) from exc

    target = Path(model_dir)
    target.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(target)
    tokenizer.save_pretrained(target)
    (target / CONFIG_NAME).write_text(config.to_kv(), encoding="utf-8")
    trace = "".join(f"{i}\t{loss!r}\n" for i, loss in enumerate(losses, 1))
    (target / LOSS_NAME).write_text(trace, encoding="utf-8")
    return losses


def load_finetune_config(model_dir: str | Path) -> FineTuneConfig:
    return FineTuneConfig.from_kv(
        (Path(model_dir) / CONFIG_NAME).read_text(encoding="utf-8")
    )


def predict(
    model_dir: str | Path,
    corpus_path: str | Path,
    batch_size: int = 16,
) -> list[Sentence]:
    """Tag a corpus with a saved model; raw argmax labels per token."""
    from transformers import AutoModelForTokenClassification, AutoTokenizer

    model = AutoModelForTokenClassification.from_pretrained(model_dir)
    labels_in_model = sorted(model.config.id2label.values())
    if labels_in_model != sorted(LABELS):
        raise TrainingError(
            f"model predicts labels {labels_in_model}, corpus uses {sorted(LABELS)}"
        )
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    try:
        max_pieces = load_finetune_config(model_dir).max_pieces
    except FileNotFoundError:
        max_pieces = FineTuneConfig().max_pieces

    sentences = load_corpus(corpus_path)
    encoded = _encode(tokenizer, sentences, max_pieces, with_labels=False)
    model.eval()
    tagged: list[Sentence] = []
    with torch.no_grad():
        for start in range(0, len(encoded), batch_size):
            chunk = encoded[start : start + batch_size]
            input_ids, attention, _ = _pad_batch(chunk, tokenizer.pad_token_id)
            logits = model(input_ids=input_ids, attention_mask=attention).logits
            piece_ids = logits.argmax(dim=-1).tolist()
            for row, (ids, word_ids, _) in enumerate(chunk):
                sentence = sentences[start + row]
                firsts = first_piece_positions(word_ids, len(sentence.fields))
                tags = [ID_TO_LABEL[piece_ids[row][pos]] for pos in firsts]
                tagged.append(sentence.with_pred(tags))
    return tagged


def predict_to_file(
    model_dir: str | Path,
    corpus_path: str | Path,
    output_path: str | Path,
    batch_size: int = 16,
) -> int:
    tagged = predict(model_dir, corpus_path, batch_size)
    save_corpus(tagged, output_path)
    return len(tagged)
