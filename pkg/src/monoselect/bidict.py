"""Bilingual dictionary (lexical translation table) from word alignments, and
per-source-word translation entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import Sentence, _decoded_lines
from .errors import DataError


@dataclass
class TranslationTable:
    """source token -> {target token: (probability, aligned count)}"""

    entries: dict[str, dict[str, tuple[float, int]]] = field(default_factory=dict)
    meta: dict[str, str] = field(default_factory=dict)

    def __contains__(self, src: str) -> bool:
        return src in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def probs(self, src: str) -> list[float]:
        return [p for p, _ in self.entries[src].values()]

    def total_count(self, src: str) -> int:
        return sum(c for _, c in self.entries[src].values())

    def n_entries(self) -> int:
        return sum(len(row) for row in self.entries.values())

    def save(self, path: str | Path) -> None:
        """Write ``src<TAB>tgt<TAB>prob<TAB>count`` rows sorted by source, then descending probability."""
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            meta = " ".join(f"{k}={v}" for k, v in self.meta.items())
            out.write(f"# dictionary sources={len(self.entries)} entries={self.n_entries()} {meta}".rstrip() + "\n")
            for src in sorted(self.entries):
                row = sorted(self.entries[src].items(), key=lambda kv: (-kv[1][0], kv[0]))
                for tgt, (p, c) in row:
                    out.write(f"{src}\t{tgt}\t{p!r}\t{c}\n")

    @classmethod
    def load(cls, path: str | Path) -> "TranslationTable":
        table = cls()
        for lineno, line in enumerate(_decoded_lines(path), start=1):
            if line.startswith("#"):
                if lineno == 1:
                    for item in line[1:].split():
                        k, sep, v = item.partition("=")
                        if sep and k not in ("sources", "entries"):
                            table.meta[k] = v
                continue
            if not line:
                continue
            try:
                src, tgt, p, c = line.split("\t")
                table.entries.setdefault(src, {})[tgt] = (float(p), int(c))
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected src<TAB>tgt<TAB>prob<TAB>count") from None
        return table


def build_dictionary(
    corpus: Iterable[tuple[Sentence, Sentence]],
    alignments: Iterable[Iterable[tuple[int, int]]],
    min_count: int = 0,
    min_prob: float = 0.0,
) -> TranslationTable:
    """Count one (source word, target word) event per alignment link and normalize.

    Entries with count < ``min_count`` or relative frequency < ``min_prob``
    are pruned and the survivors renormalized; a source word losing every
    entry is dropped from the table.
    """
    if min_count < 0 or not 0.0 <= min_prob < 1.0:
        raise ValueError("need min_count >= 0 and 0 <= min_prob < 1")
    counts: dict[str, dict[str, int]] = {}
    n_pairs = 0
    align_iter = iter(alignments)
    for lineno, (s, t) in enumerate(corpus, start=1):
        try:
            links = next(align_iter)
        except StopIteration:
            raise DataError(f"alignments end before corpus line {lineno}") from None
        src = s.tokens if isinstance(s, Sentence) else tuple(s)
        tgt = t.tokens if isinstance(t, Sentence) else tuple(t)
        for i, j in links:
            if not (0 <= i < len(src) and 0 <= j < len(tgt)):
                raise DataError(f"line {lineno}: link {i}-{j} out of range for lengths ({len(src)}, {len(tgt)})")
            row = counts.setdefault(src[i], {})
            row[tgt[j]] = row.get(tgt[j], 0) + 1
        n_pairs += 1
    if next(align_iter, None) is not None:
        raise DataError(f"more alignment lines than the {n_pairs} corpus pairs")

    table = TranslationTable(meta={"pairs": str(n_pairs), "min_count": str(min_count), "min_prob": repr(min_prob)})
    for src, row in counts.items():
        total = sum(row.values())
        kept = {y: c for y, c in row.items() if c >= min_count and c / total >= min_prob}
        if not kept:
            continue
        z = sum(kept.values())
        table.entries[src] = {y: (c / z, c) for y, c in kept.items()}
    return table


def entropy(probs: Iterable[float], base: float = math.e) -> float:
    h = 0.0
    for p in probs:
        if p > 0.0:
            h -= p * math.log(p)
    if base != math.e:
        h /= math.log(base)
    return h if h > 0.0 else 0.0


def word_entropy(table: TranslationTable, x: str, base: float = math.e) -> float | None:
    """Translation entropy of source word ``x`` (nats by default); None if ``x`` is not in the table."""
    row = table.entries.get(x)
    if row is None:
        return None
    return entropy((p for p, _ in row.values()), base)


def build_entropy_table(table: TranslationTable, base: float = math.e) -> dict[str, float]:
    return {src: word_entropy(table, src, base) for src in table.entries}


def save_entropy_table(entropies: dict[str, float], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write(f"# entropy sources={len(entropies)}\n")
        for src in sorted(entropies):
            out.write(f"{src}\t{entropies[src]!r}\n")


def load_entropy_table(path: str | Path) -> dict[str, float]:
    table = {}
    for lineno, line in enumerate(_decoded_lines(path), start=1):
        if not line or line.startswith("#"):
            continue
        try:
            src, h = line.split("\t")
            table[src] = float(h)
        except ValueError:
            raise DataError(f"{path}:{lineno}: expected src<TAB>entropy") from None
    return table
