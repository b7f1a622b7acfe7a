"""Interpolated Kneser-Ney n-gram language model.

Used to rank monolingual lines by similarity to the bitext source side and
to drop synthetic pairs whose target side looks unlike real target text.
"""

from __future__ import annotations

import math
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .corpus import Sentence
from .errors import DataError

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
MAGIC = b"MSNGRAM\x00"
FORMAT_VERSION = 1
_LOG_FLOOR = -700.0


@dataclass
class NGramModel:
    order: int
    discount: float
    vocab: frozenset[str]  # predictable words: training types plus </s> (<unk> implicit)
    # counts[m][ngram] for m = 1..order: raw counts at the top order, continuation counts below
    counts: list[dict[tuple[str, ...], int]] = field(default_factory=list)
    # per context at each order: (sum of counts, number of distinct followers)
    context_stats: list[dict[tuple[str, ...], tuple[int, int]]] = field(default_factory=list)

    @property
    def uniform(self) -> float:
        return 1.0 / (len(self.vocab) + 1)

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """p(word | context) with the context truncated to ``order - 1`` words."""
        if word not in self.vocab:
            word = UNK
        context = tuple(t if t in self.vocab or t == BOS else UNK for t in context)
        n = self.order
        context = context[-(n - 1):] if n > 1 else ()
        # interpolate from the unigram level up to the longest usable context
        p = self.uniform
        for m in range(1, len(context) + 2):
            h = context[len(context) - (m - 1):] if m > 1 else ()
            stats = self.context_stats[m].get(h)
            if stats is None:
                break
            total, types = stats
            c = self.counts[m].get(h + (word,), 0)
            p = (max(c - self.discount, 0.0) + self.discount * types * p) / total
        return p

    def logprob(self, word: str, context: Sequence[str] = ()) -> float:
        p = self.prob(word, context)
        return math.log(p) if p > 0.0 else _LOG_FLOOR

    def save(self, path: str | Path) -> None:
        payload = {
            "order": self.order,
            "discount": self.discount,
            "vocab": sorted(self.vocab),
            "counts": [sorted(c.items()) for c in self.counts],
        }
        with open(path, "wb") as out:
            out.write(MAGIC)
            out.write(FORMAT_VERSION.to_bytes(4, "little"))
            pickle.dump(payload, out, protocol=4)

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        with open(path, "rb") as fh:
            if fh.read(len(MAGIC)) != MAGIC:
                raise DataError(f"{path}: not an n-gram model file")
            version = int.from_bytes(fh.read(4), "little")
            if version != FORMAT_VERSION:
                raise DataError(f"{path}: unsupported model version {version}")
            payload = pickle.load(fh)
        counts = [dict(c) for c in payload["counts"]]
        model = cls(payload["order"], payload["discount"], frozenset(payload["vocab"]), counts)
        model.context_stats = _context_stats(counts)
        return model


def _context_stats(counts):
    stats = []
    for table in counts:
        acc: dict[tuple[str, ...], list[int]] = {}
        for gram, c in table.items():
            s = acc.setdefault(gram[:-1], [0, 0])
            s[0] += c
            s[1] += 1
        stats.append({h: (s[0], s[1]) for h, s in acc.items()})
    return stats


def _tokens(s) -> tuple[str, ...]:
    return s.tokens if isinstance(s, Sentence) else tuple(s)


def train_lm(corpus: Iterable[Sentence | Sequence[str]], order: int = 4, discount: float = 0.75,
             allow_zero_discount: bool = False) -> NGramModel:
    """Count n-grams and build an interpolated Kneser-Ney model.

    Each sentence is padded with ``order - 1`` ``<s>`` and one ``</s>``. The
    top order uses raw counts; every lower order m uses the number of
    distinct words seen before each m-gram. ``allow_zero_discount`` exists
    only so tests can recover the unsmoothed estimate.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not (0.0 < discount < 1.0 or (allow_zero_discount and discount == 0.0)):
        raise ValueError("discount must be in (0, 1)")
    top: dict[tuple[str, ...], int] = {}
    vocab = {EOS}
    n_sent = 0
    for s in corpus:
        toks = _tokens(s)
        vocab.update(toks)
        padded = (BOS,) * (order - 1) + toks + (EOS,)
        for k in range(order - 1, len(padded)):
            gram = padded[k - order + 1:k + 1]
            top[gram] = top.get(gram, 0) + 1
        n_sent += 1
    if n_sent == 0:
        raise DataError("cannot train a language model on an empty corpus")
    vocab -= {BOS, UNK}

    counts: list[dict[tuple[str, ...], int]] = [dict() for _ in range(order + 1)]
    counts[order] = top
    for m in range(order - 1, 0, -1):
        cont = counts[m]
        for gram in counts[m + 1]:
            suffix = gram[1:]
            cont[suffix] = cont.get(suffix, 0) + 1
    model = NGramModel(order, discount, frozenset(vocab), counts)
    model.context_stats = _context_stats(counts)
    return model


def sentence_logprob(lm: NGramModel, s) -> tuple[float, int]:
    """Total natural-log probability of the tokens plus ``</s>``, and the number of predictions."""
    toks = _tokens(s)
    padded = (BOS,) * (lm.order - 1) + toks + (EOS,)
    total = 0.0
    for k in range(lm.order - 1, len(padded)):
        total += lm.logprob(padded[k], padded[max(0, k - lm.order + 1):k])
    return total, len(toks) + 1


def cross_entropy(lm: NGramModel, s) -> float:
    """Per-token cross-entropy in nats, counting ``</s>`` as a token."""
    total, n = sentence_logprob(lm, s)
    return -total / n


def score_lines(lm: NGramModel, corpus: Iterable[Sentence]) -> Iterator[tuple[int, float]]:
    for s in corpus:
        yield s.line_index, cross_entropy(lm, s)


def drop_count(n: int, fraction: float) -> int:
    if not 0.0 <= fraction < 1.0:
        raise ValueError("drop fraction must be in [0, 1)")
    return math.floor(round(fraction * n, 9))


def filter_by_lm(pairs: Sequence, lm: NGramModel, drop_fraction: float, target=lambda p: p[1]) -> list:
    """Drop the ``floor(f * n)`` pairs whose target side has the highest cross-entropy.

    Ties are broken by position (later pairs are dropped first); survivors
    keep their input order.
    """
    pairs = list(pairs)
    n_drop = drop_count(len(pairs), drop_fraction)
    if n_drop == 0:
        return pairs
    ranked = sorted(range(len(pairs)), key=lambda i: (cross_entropy(lm, target(pairs[i])), i))
    dropped = set(ranked[len(pairs) - n_drop:])
    return [p for i, p in enumerate(pairs) if i not in dropped]
