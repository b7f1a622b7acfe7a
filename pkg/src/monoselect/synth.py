"""Synthetic parallel data: pair sampled sentences with their (external)
teacher translations, filter by length and length ratio, and merge with the
authentic bitext."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import Sentence, _decoded_lines
from .errors import DataError


@dataclass(frozen=True)
class SyntheticPair:
    source: Sentence
    target: Sentence
    provenance: str

    def __post_init__(self):
        if not self.provenance:
            raise ValueError("synthetic pair without provenance")


def pair_translations(selected: Iterable[Sentence], translations: Iterable[Sentence],
                      provenance: str) -> Iterator[SyntheticPair]:
    """Zip selected source sentences with their translations, line by line.

    ``selected`` keeps each sentence's original monolingual line index.
    Differing lengths are a data error reporting both counts.
    """
    src, hyp = list(selected), list(translations)
    if len(src) != len(hyp):
        raise DataError(f"{len(src)} selected sentences but {len(hyp)} translations")
    for s, t in zip(src, hyp):
        yield SyntheticPair(s, Sentence(s.line_index, t.tokens), provenance)


def drop_reason(src_len: int, tgt_len: int, max_len: int = 250, max_ratio: float = 1.5,
                symmetric: bool = True) -> str | None:
    if src_len == 0 or tgt_len == 0:
        return "empty"
    if src_len > max_len or tgt_len > max_len:
        return "length"
    ratio = max(src_len, tgt_len) / min(src_len, tgt_len) if symmetric else src_len / tgt_len
    if ratio > max_ratio:
        return "ratio"
    return None


def filter_pairs(pairs: Iterable[SyntheticPair], max_len: int = 250, max_ratio: float = 1.5,
                 symmetric: bool = True) -> tuple[list[SyntheticPair], Counter]:
    """Drop over-long pairs and pairs with an extreme length ratio.

    Returns the survivors in input order plus a count per drop reason
    (``empty``, ``length``, ``ratio``; a pair is counted under the first
    reason that applies). ``symmetric=False`` only checks source/target.
    """
    if max_len < 1 or max_ratio <= 0:
        raise ValueError("need max_len >= 1 and max_ratio > 0")
    kept, report = [], Counter()
    for p in pairs:
        reason = drop_reason(len(p.source), len(p.target), max_len, max_ratio, symmetric)
        if reason is None:
            kept.append(p)
        else:
            report[reason] += 1
    report["kept"] = len(kept)
    return kept, report


def write_pairs(pairs: Iterable[SyntheticPair], path: str | Path) -> int:
    """TSV: ``src<TAB>tgt<TAB>mono_line_index<TAB>provenance``."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for p in pairs:
            out.write(f"{p.source.text()}\t{p.target.text()}\t{p.source.line_index}\t{p.provenance}\n")
            n += 1
    return n


def read_pairs(path: str | Path, provenance: str = "external") -> Iterator[SyntheticPair]:
    for lineno, line in enumerate(_decoded_lines(path), start=1):
        cols = line.split("\t")
        if len(cols) not in (2, 4):
            raise DataError(f"{path}:{lineno}: expected 2 or 4 tab-separated columns")
        idx = int(cols[2]) if len(cols) == 4 else lineno - 1
        prov = cols[3] if len(cols) == 4 else provenance
        yield SyntheticPair(Sentence(idx, tuple(cols[0].split())), Sentence(idx, tuple(cols[1].split())), prov)


def write_report(report: Counter, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        base = {k: report.get(k, 0) for k in ("kept", "empty", "length", "ratio")}
        json.dump({**base, **{k: v for k, v in sorted(report.items()) if k not in base}}, out, indent=2)
        out.write("\n")


def combine_corpora(bitext: Iterable[tuple[Sentence, Sentence]], synthetic: Iterable[SyntheticPair],
                    out_path: str | Path, origin_path: str | Path | None = None) -> dict[str, int]:
    """Write bitext pairs then synthetic pairs as ``src<TAB>tgt``, with a B/S origin tag per line in a sidecar."""
    origin_path = origin_path or f"{out_path}.origin"
    counts = {"bitext": 0, "synthetic": 0}
    with open(out_path, "w", encoding="utf-8", newline="\n") as out, \
            open(origin_path, "w", encoding="utf-8", newline="\n") as tags:
        for s, t in bitext:
            out.write(f"{s.text()}\t{t.text()}\n")
            tags.write("B\n")
            counts["bitext"] += 1
        for p in synthetic:
            out.write(f"{p.source.text()}\t{p.target.text()}\n")
            tags.write("S\n")
            counts["synthetic"] += 1
    counts["total"] = counts["bitext"] + counts["synthetic"]
    return counts
