"""Sentence-level scores: dictionary-based translation uncertainty, word
rarity and alignment coverage."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .corpus import Sentence, Vocab, _decoded_lines
from .errors import DataError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OOVPolicy:
    """How tokens missing from the entropy table are scored.

    ``exclude`` drops them from both the sum and the length; ``constant``
    adds ``value`` per OOV token and keeps the full length.
    """

    mode: str = "exclude"
    value: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "OOVPolicy":
        if text == "exclude":
            return cls()
        mode, _, val = text.partition(":")
        if mode == "constant" and val:
            return cls("constant", float(val))
        raise ValueError(f"bad OOV policy {text!r} (use 'exclude' or 'constant:<nats>')")

    def __str__(self) -> str:
        return "exclude" if self.mode == "exclude" else f"constant:{self.value!r}"


EXCLUDE = OOVPolicy()


@dataclass(frozen=True)
class ScoredSentence:
    line_index: int
    uncertainty: float | None  # None: unscorable (empty, or every token OOV under `exclude`)
    token_count: int
    oov_count: int
    word_rarity: float | None = None
    coverage: float | None = None

    @property
    def scorable(self) -> bool:
        return self.uncertainty is not None


def _tokens(s) -> Sequence[str]:
    return s.tokens if isinstance(s, Sentence) else s


def _entropy_sum(entropy: Mapping[str, float], tokens: Sequence[str], policy: OOVPolicy):
    # fsum is correctly rounded, so the result cannot depend on token order
    hs = [h for h in map(entropy.get, tokens) if h is not None]
    oov = len(tokens) - len(hs)
    if policy.mode == "constant":
        hs.extend([policy.value] * oov)
        t_eff = len(tokens)
    else:
        t_eff = len(hs)
    return math.fsum(hs), t_eff, oov


def sentence_uncertainty(entropy: Mapping[str, float], s, oov_policy: OOVPolicy = EXCLUDE) -> tuple[float | None, int]:
    """Mean translation entropy of the sentence's tokens.

    Returns ``(U, oov_count)``; U is None when no token can be scored.
    """
    total, t_eff, oov = _entropy_sum(entropy, _tokens(s), oov_policy)
    if t_eff == 0:
        return None, oov
    return total / t_eff, oov


def sentence_uncertainty_sum(entropy: Mapping[str, float], s, oov_policy: OOVPolicy = EXCLUDE) -> float:
    total, _, _ = _entropy_sum(entropy, _tokens(s), oov_policy)
    return total


def word_rarity(vocab: Vocab, s) -> float | None:
    """Mean negative log unigram frequency. Unseen tokens get p = 1/(N+1)."""
    if vocab.total_tokens <= 0:
        raise ValueError("word_rarity needs a non-empty vocabulary")
    tokens = _tokens(s)
    if not tokens:
        return None
    n = vocab.total_tokens
    log_n = math.log(n)
    oov_cost = math.log(n + 1)
    get = vocab.counts.get
    costs = [oov_cost if c is None else log_n - math.log(c) for c in map(get, tokens)]
    return math.fsum(costs) / len(tokens)


def coverage(s, alignment: Iterable[tuple[int, int]]) -> float | None:
    """Fraction of source positions with at least one link; None for an empty sentence."""
    n = len(_tokens(s))
    if n == 0:
        return None
    covered = {i for i, _ in alignment}
    if any(not 0 <= i < n for i in covered):
        raise DataError(f"alignment link outside a {n}-token sentence")
    return len(covered) / n


def _score_chunk(chunk, entropy, policy, vocab, with_coverage):
    out = []
    for item in chunk:
        if with_coverage:
            s, a = item
        else:
            s, a = item, None
        u, oov = sentence_uncertainty(entropy, s, policy)
        wr = word_rarity(vocab, s) if vocab is not None else None
        cov = coverage(s, a) if with_coverage else None
        out.append(ScoredSentence(s.line_index, u, len(s.tokens), oov, wr, cov))
    return out


def score_corpus(
    mono: Iterable[Sentence],
    entropy: Mapping[str, float],
    vocab: Vocab | None = None,
    alignments: Iterable[Iterable[tuple[int, int]]] | None = None,
    oov_policy: OOVPolicy = EXCLUDE,
    workers: int = 1,
    chunk_size: int = 4096,
) -> Iterator[ScoredSentence]:
    """Score every line of ``mono`` and yield records in line order.

    Word rarity is added when ``vocab`` is given, coverage when
    ``alignments`` (line-aligned with ``mono``) is given. Work is chunked;
    with ``workers > 1`` chunks run on a thread pool but results are still
    yielded in input order.
    """
    with_cov = alignments is not None
    items = iter(zip(mono, alignments, strict=True) if with_cov else mono)

    def chunks():
        while True:
            chunk = list(islice(items, chunk_size))
            if not chunk:
                return
            yield chunk

    def run(chunk):
        return _score_chunk(chunk, entropy, oov_policy, vocab, with_cov)

    if workers <= 1:
        for chunk in chunks():
            yield from run(chunk)
        return
    with ThreadPoolExecutor(workers) as pool:
        pending = []
        for chunk in chunks():
            pending.append(pool.submit(run, chunk))
            if len(pending) >= 2 * workers:
                yield from pending.pop(0).result()
        for fut in pending:
            yield from fut.result()


@dataclass
class ScoreSummary:
    lines: int = 0
    scorable: int = 0
    tokens: int = 0
    oov_tokens: int = 0
    sum_u: float = 0.0

    def add(self, r: ScoredSentence) -> None:
        self.lines += 1
        self.tokens += r.token_count
        self.oov_tokens += r.oov_count
        if r.uncertainty is not None:
            self.scorable += 1
            self.sum_u += r.uncertainty

    @property
    def mean_u(self) -> float:
        return self.sum_u / self.scorable if self.scorable else float("nan")

    @property
    def oov_rate(self) -> float:
        return self.oov_tokens / self.tokens if self.tokens else 0.0

    def as_dict(self) -> dict:
        return {
            "lines": self.lines,
            "scorable": self.scorable,
            "unscorable": self.lines - self.scorable,
            "mean_uncertainty": round(self.mean_u, 6) if self.scorable else None,
            "oov_rate": round(self.oov_rate, 6),
        }


def _fmt(x: float | None) -> str:
    return "NA" if x is None else f"{x:.6f}"


def write_scores(records: Iterable[ScoredSentence], path: str | Path,
                 rarity: bool = False, with_coverage: bool = False) -> ScoreSummary:
    """Write ``line_index U T_x oov_count [WR] [coverage]`` TSV rows; unscorable values are ``NA``."""
    summary = ScoreSummary()
    cols = ["line_index", "U", "T_x", "oov_count"] + ["WR"] * rarity + ["coverage"] * with_coverage
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write("#" + "\t".join(cols) + "\n")
        for r in records:
            summary.add(r)
            row = f"{r.line_index}\t{_fmt(r.uncertainty)}\t{r.token_count}\t{r.oov_count}"
            if rarity:
                row += "\t" + _fmt(r.word_rarity)
            if with_coverage:
                row += "\t" + _fmt(r.coverage)
            out.write(row + "\n")
    log.info(
        "scored %d lines: mean U %.4f, OOV %.2f%%, unscorable %d",
        summary.lines, summary.mean_u, 100 * summary.oov_rate, summary.lines - summary.scorable,
    )
    return summary


def read_scores(path: str | Path) -> Iterator[ScoredSentence]:
    cols = ["line_index", "U", "T_x", "oov_count"]

    def val(x: str) -> float | None:
        return None if x == "NA" else float(x)

    for lineno, line in enumerate(_decoded_lines(path), start=1):
        if line.startswith("#"):
            cols = line[1:].split("\t")
            continue
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != len(cols):
            raise DataError(f"{path}:{lineno}: expected {len(cols)} columns, got {len(parts)}")
        rec = dict(zip(cols, parts))
        try:
            yield ScoredSentence(
                int(rec["line_index"]), val(rec["U"]), int(rec["T_x"]), int(rec["oov_count"]),
                val(rec["WR"]) if "WR" in rec else None,
                val(rec["coverage"]) if "coverage" in rec else None,
            )
        except (KeyError, ValueError):
            raise DataError(f"{path}:{lineno}: malformed score row") from None
