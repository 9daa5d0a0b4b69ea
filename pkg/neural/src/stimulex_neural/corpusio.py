"""Reader/writer for the shared corpus file format.

This component exchanges files with the span toolkit and deliberately
never imports it. Sentence blocks are kept verbatim (header lines and
token field rows as read); only the prediction column is ever touched,
so everything else survives a read-write cycle byte for byte.

Format: blocks separated by one blank line; each block is ``# key=value``
header lines followed by token lines with tab-separated fields
SURFACE, POS, DEP, NER, GOLD and optionally PRED. A layer is either
present on every line of a block or empty on every line.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

LABELS = ("B", "I", "O")


class CorpusError(ValueError):
    """Malformed corpus content; carries a 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class Sentence:
    header_lines: list[str]
    fields: list[list[str]]

    @property
    def id(self) -> str:
        for line in self.header_lines:
            key, _, value = line[2:].partition("=")
            if key == "id":
                return value
        raise ValueError("sentence block is missing an id header")

    def surfaces(self) -> list[str]:
        return [row[0] for row in self.fields]

    def gold(self) -> list[str] | None:
        tags = [row[4] for row in self.fields]
        return tags if tags and tags[0] else None

    def pred(self) -> list[str] | None:
        if len(self.fields[0]) < 6:
            return None
        tags = [row[5] for row in self.fields]
        return tags if tags[0] else None

    def with_pred(self, tags: list[str]) -> "Sentence":
        if len(tags) != len(self.fields):
            raise ValueError(
                f"sentence {self.id!r}: {len(tags)} predictions for "
                f"{len(self.fields)} tokens"
            )
        rows = [row[:5] + [tag] for row, tag in zip(self.fields, tags)]
        return Sentence(list(self.header_lines), rows)


def parse_corpus(text: str) -> list[Sentence]:
    if "\r" in text:
        line = text[: text.index("\r")].count("\n") + 1
        raise CorpusError(line, "corpus files must use LF line endings")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    sentences: list[Sentence] = []
    headers: list[str] = []
    rows: list[list[str]] = []
    block_start = 1

    def flush(at_line: int) -> None:
        if not headers and not rows:
            return
        if not rows:
            raise CorpusError(block_start, "sentence block has no token lines")
        sentence = Sentence(headers.copy(), rows.copy())
        try:
            sentence.id
        except ValueError as exc:
            raise CorpusError(block_start, str(exc)) from exc
        sentences.append(sentence)
        headers.clear()
        rows.clear()

    for lineno, line in enumerate(lines, 1):
        if line == "":
            flush(lineno)
            block_start = lineno + 1
        elif line.startswith("# "):
            if rows:
                raise CorpusError(lineno, "header line after token lines")
            if "=" not in line[2:]:
                raise CorpusError(lineno, "header line must be '# key=value'")
            headers.append(line)
        else:
            parts = line.split("\t")
            if len(parts) not in (5, 6):
                raise CorpusError(lineno, f"expected 5 or 6 fields, got {len(parts)}")
            if rows and len(parts) != len(rows[0]):
                raise CorpusError(lineno, "field count changes within the block")
            if not parts[0]:
                raise CorpusError(lineno, "empty surface field")
            for col in (4, 5):
                if col < len(parts) and parts[col] not in ("", "B", "I", "O"):
                    raise CorpusError(
                        lineno, f"IOB tag must be B, I or O, got {parts[col]!r}"
                    )
            rows.append(parts)
    flush(len(lines) + 1)
    return sentences


def write_corpus(sentences: list[Sentence]) -> str:
    blocks = []
    for s in sentences:
        lines = list(s.header_lines)
        lines.extend("\t".join(row) for row in s.fields)
        blocks.append("\n".join(lines))
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


def load_corpus(path: str | os.PathLike) -> list[Sentence]:
    return parse_corpus(Path(path).read_bytes().decode("utf-8"))


def save_corpus(sentences: list[Sentence], path: str | os.PathLike) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(write_corpus(sentences))
        os.replace(tmp, target)
    except BaseException:
        os.unlink(tmp)
        raise
