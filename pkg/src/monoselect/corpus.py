"""Streaming readers and writers for plain-text corpora, plus unigram vocabularies.

Every file is UTF-8, one sentence per line, tokens separated by whitespace.
Tokenization (BPE or otherwise) happens upstream; tokens are opaque atoms here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError


@dataclass(frozen=True)
class Sentence:
    line_index: int
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def empty(self) -> bool:
        return not self.tokens

    def text(self) -> str:
        return " ".join(self.tokens)


def _decoded_lines(path: str | Path) -> Iterator[str]:
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid UTF-8 ({exc.reason})") from None
            yield line.rstrip("\r\n")


def read_mono(path: str | Path) -> Iterator[Sentence]:
    """Yield the sentences of a monolingual file in order.

    Empty lines are kept as zero-length sentences so that line indices stay
    aligned with sibling files (translations, alignments, scores).
    """
    for i, line in enumerate(_decoded_lines(path)):
        yield Sentence(i, tuple(line.split()))


def read_parallel(src: str | Path, tgt: str | Path | None = None) -> Iterator[tuple[Sentence, Sentence]]:
    """Yield (source, target) sentence pairs.

    With ``tgt`` given, ``src`` and ``tgt`` are line-aligned files. Without it,
    ``src`` is a TSV whose first two columns are source and target. A line
    count mismatch is detected when the shorter stream runs out.
    """
    if tgt is None:
        for i, line in enumerate(_decoded_lines(src)):
            cols = line.split("\t")
            if len(cols) < 2:
                raise DataError(f"{src}:{i + 1}: expected src<TAB>tgt")
            yield Sentence(i, tuple(cols[0].split())), Sentence(i, tuple(cols[1].split()))
        return

    sentinel = object()
    lines = itertools.zip_longest(_decoded_lines(src), _decoded_lines(tgt), fillvalue=sentinel)
    for i, (s_line, t_line) in enumerate(lines):
        if s_line is sentinel or t_line is sentinel:
            raise DataError(
                f"parallel corpus line counts differ: {src} has {count_lines(src)}, "
                f"{tgt} has {count_lines(tgt)}"
            )
        yield Sentence(i, tuple(s_line.split())), Sentence(i, tuple(t_line.split()))


def read_corpus(path: str | Path, kind: str = "mono", tgt: str | Path | None = None):
    if kind == "mono":
        return read_mono(path)
    if kind == "parallel":
        return read_parallel(path, tgt)
    raise ValueError(f"unknown corpus kind {kind!r}")


def count_lines(path: str | Path) -> int:
    with open(path, "rb") as fh:
        return sum(1 for _ in fh)


def write_mono(sentences: Iterable[Sentence | Iterable[str]], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for sent in sentences:
            toks = sent.tokens if isinstance(sent, Sentence) else sent
            out.write(" ".join(toks))
            out.write("\n")
            n += 1
    return n


def write_parallel_tsv(pairs: Iterable[tuple[Sentence, Sentence]], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for src, tgt in pairs:
            out.write(f"{src.text()}\t{tgt.text()}\n")
            n += 1
    return n


@dataclass
class Vocab:
    """Token counts with dense ids in first-occurrence order."""

    counts: dict[str, int] = field(default_factory=dict)
    total_tokens: int = 0

    def __len__(self) -> int:
        return len(self.counts)

    def __contains__(self, token: str) -> bool:
        return token in self.counts

    def add(self, tokens: Iterable[str]) -> None:
        counts = self.counts
        n = 0
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
            n += 1
        self.total_tokens += n

    def ids(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.counts)}

    def count(self, token: str) -> int:
        return self.counts.get(token, 0)

    def ranked(self) -> list[str]:
        """Tokens by descending count; ties keep first-occurrence order."""
        return sorted(self.counts, key=self.counts.__getitem__, reverse=True)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            out.write(f"# vocab types={len(self.counts)} total_tokens={self.total_tokens}\n")
            for tok, c in self.counts.items():
                out.write(f"{tok}\t{c}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        vocab = cls()
        for lineno, line in enumerate(_decoded_lines(path), start=1):
            if not line or line.startswith("#"):
                continue
            try:
                tok, c = line.split("\t")
                c = int(c)
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected token<TAB>count") from None
            if c < 1:
                raise DataError(f"{path}:{lineno}: count must be >= 1")
            vocab.counts[tok] = c
            vocab.total_tokens += c
        return vocab


def build_vocab(corpus: Iterable[Sentence | Iterable[str]]) -> Vocab:
    vocab = Vocab()
    for sent in corpus:
        vocab.add(sent.tokens if isinstance(sent, Sentence) else sent)
    return vocab


def unigram_prob(vocab: Vocab, token: str) -> float:
    """Relative frequency of ``token``; 0.0 when unseen (callers apply their own OOV floor)."""
    if vocab.total_tokens <= 0:
        raise ValueError("unigram_prob on an empty vocabulary")
    return vocab.counts.get(token, 0) / vocab.total_tokens
