"""Label plumbing between whitespace tokens and encoder subword pieces.

The encoder tokenizer splits each token into one or more pieces and
reports the owning token index per piece (None for special tokens and
padding). A token's first piece carries its IOB label, every other
position carries an ignore marker the loss skips, and reading
predictions back looks at first pieces only.
"""

from __future__ import annotations

from .corpusio import LABELS

IGNORE = -100

LABEL_TO_ID = {label: i for i, label in enumerate(LABELS)}
ID_TO_LABEL = dict(enumerate(LABELS))


class AlignmentError(ValueError):
    """Pieces do not line up with the tokens they came from."""


def first_piece_positions(word_ids: list[int | None], n_tokens: int) -> list[int]:
    """Position of each token's first piece, in token order.

    Validates the alignment contract: owning indices are non-decreasing,
    and every token 0..n_tokens-1 owns at least one piece.
    """
    positions: list[int] = []
    previous = -1
    for pos, owner in enumerate(word_ids):
        if owner is None:
            continue
        if owner < previous:
            raise AlignmentError(f"piece {pos} owned by token {owner} after {previous}")
        if owner != previous:
            if owner != previous + 1:
                raise AlignmentError(f"token {previous + 1} owns no piece")
            positions.append(pos)
            previous = owner
    if previous + 1 != n_tokens:
        raise AlignmentError(
            f"{n_tokens} tokens but pieces cover {previous + 1}; "
            "raise the piece limit if the sentence was truncated"
        )
    return positions


def align_labels(labels: list[str], word_ids: list[int | None]) -> list[int]:
    """Per-piece label ids: token label on first pieces, IGNORE elsewhere."""
    unknown = set(labels) - set(LABELS)
    if unknown:
        raise AlignmentError(f"unknown labels: {sorted(unknown)}")
    firsts = set(first_piece_positions(word_ids, len(labels)))
    return [
        LABEL_TO_ID[labels[word_ids[pos]]] if pos in firsts else IGNORE
        for pos in range(len(word_ids))
    ]


def read_back(piece_ids: list[int], word_ids: list[int | None], n_tokens: int) -> list[str]:
    """Token labels from per-piece predictions, first pieces only."""
    if len(piece_ids) != len(word_ids):
        raise AlignmentError(
            f"{len(piece_ids)} predictions for {len(word_ids)} pieces"
        )
    return [
        ID_TO_LABEL[piece_ids[pos]]
        for pos in first_piece_positions(word_ids, n_tokens)
    ]
