"""Shared fixtures: a tiny offline encoder and a memorization corpus.

The model hub is not reachable from CI, so the base checkpoint is built
locally: a freshly initialised 2-layer encoder plus a WordPiece
tokenizer trained on the fixture vocabulary. Small enough that full
memorization of 20 sentences takes a few seconds on a CPU.
"""

import os
import random
from pathlib import Path

import pytest

os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

# Verdict lines the acceptance test leaves for the summary hook.
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


SYLLABLES = ["ang", "beb", "hoff", "kri", "lag", "wut", "freu", "tru", "zor", "gluck"]


def fixture_sentences(n: int = 20, seed: int = 11) -> list[tuple[str, list[str], list[str]]]:
    """(id, words, iob tags) triples with per-sentence vocabulary."""
    rng = random.Random(seed)
    out = []
    for i in range(n):
        length = 4 + i % 4
        words = [f"{rng.choice(SYLLABLES)}{i}{chr(97 + j)}" for j in range(length)]
        start = i % (length - 1)
        end = min(length, start + 1 + i % 3)
        tags = ["O"] * length
        tags[start] = "B"
        for k in range(start + 1, end):
            tags[k] = "I"
        out.append((f"m{i:03d}", words, tags))
    return out


def corpus_text(items: list[tuple[str, list[str], list[str]]]) -> str:
    blocks = []
    for sid, words, tags in items:
        lines = [f"# id={sid}"]
        lines.extend(f"{w}\t\t\t\t{t}" for w, t in zip(words, tags))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


def build_base_model(target: Path, texts: list[str]) -> Path:
    """Random-init encoder plus a tokenizer trained on the given texts."""
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.pre_tokenizers import Whitespace
    from tokenizers.processors import TemplateProcessing
    from tokenizers.trainers import WordPieceTrainer
    from transformers import (
        PreTrainedTokenizerFast,
        XLMRobertaConfig,
        XLMRobertaForTokenClassification,
    )

    tok = Tokenizer(WordPiece(unk_token="[UNK]"))
    tok.pre_tokenizer = Whitespace()
    tok.train_from_iterator(
        texts,
        WordPieceTrainer(
            vocab_size=300,
            special_tokens=["[PAD]", "[UNK]", "[CLS]", "[SEP]"],
            continuing_subword_prefix="##",
        ),
    )
    tok.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[
            ("[CLS]", tok.token_to_id("[CLS]")),
            ("[SEP]", tok.token_to_id("[SEP]")),
        ],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        model_max_length=64,
    )
    config = XLMRobertaConfig(
        vocab_size=len(fast),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=80,
        pad_token_id=fast.pad_token_id,
        bos_token_id=fast.cls_token_id,
        eos_token_id=fast.sep_token_id,
        num_labels=3,
        id2label={0: "B", 1: "I", 2: "O"},
        label2id={"B": 0, "I": 1, "O": 2},
    )
    import torch

    torch.manual_seed(0)
    model = XLMRobertaForTokenClassification(config)
    target.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(target)
    fast.save_pretrained(target)
    return target


# Overrides that let the random-init base memorize quickly; the stock
# defaults assume a pretrained encoder.
def memorization_config(base: Path):
    from stimulex_neural.model import FineTuneConfig

    return FineTuneConfig(
        base_model=str(base),
        epochs=160,
        batch_size=4,
        dropout=0.1,
        learning_rate=5e-4,
        seed=3,
    )


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("corpus") / "train.txt"
    path.write_text(corpus_text(fixture_sentences()), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory) -> Path:
    texts = [" ".join(words) for _, words, _ in fixture_sentences()]
    return build_base_model(tmp_path_factory.mktemp("base") / "checkpoint", texts)


@pytest.fixture(scope="session")
def memorized_model(tmp_path_factory, tiny_base, fixture_corpus) -> Path:
    """One full fine-tune shared by the tests that need a trained model."""
    from stimulex_neural.model import fine_tune

    target = tmp_path_factory.mktemp("model") / "memorized"
    fine_tune(fixture_corpus, target, memorization_config(tiny_base))
    return target
