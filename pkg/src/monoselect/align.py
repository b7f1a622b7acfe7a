"""IBM Model 1 lexical alignment and Pharaoh-format alignment I/O.

Model 1 is only used here as a source of word links for the bilingual
dictionary, so the plain model (uniform alignment prior, no distortion) is
enough. Alignments from an external aligner can be imported instead.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .corpus import Sentence, _decoded_lines
from .errors import DataError

log = logging.getLogger(__name__)

NULL_TOKEN = "<null>"
# fast_align's default prior mass on the null word
DEFAULT_NULL_PROB = 0.08
# E-step shards are fixed-size so the float reduction order never depends on worker count.
CHUNK_SIZE = 256

Alignment = frozenset  # frozenset[tuple[int, int]] of (source position, target position)


def _toks(x) -> tuple[str, ...]:
    return x.tokens if isinstance(x, Sentence) else tuple(x)


@dataclass
class Model1Params:
    t: dict[str, dict[str, float]]
    null_token: str = NULL_TOKEN
    null_prob: float | None = DEFAULT_NULL_PROB
    iterations_run: int = 0
    perplexities: list[float] = field(default_factory=list)

    def prob(self, src: str, tgt: str) -> float:
        row = self.t.get(src)
        return row.get(tgt, 0.0) if row else 0.0

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            out.write(f"# ibm1 iterations={self.iterations_run} null={self.null_token} null_prob={self.null_prob!r}\n")
            for e, row in self.t.items():
                for f, p in row.items():
                    out.write(f"{e}\t{f}\t{p!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Model1Params":
        t: dict[str, dict[str, float]] = {}
        null, iters, null_prob = NULL_TOKEN, 0, DEFAULT_NULL_PROB
        for lineno, line in enumerate(_decoded_lines(path), start=1):
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, val = item.partition("=")
                    if key == "iterations":
                        iters = int(val)
                    elif key == "null":
                        null = val
                    elif key == "null_prob":
                        null_prob = None if val == "None" else float(val)
                continue
            if not line:
                continue
            try:
                e, f, p = line.split("\t")
                t.setdefault(e, {})[f] = float(p)
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected src<TAB>tgt<TAB>prob") from None
        return cls(t, null, null_prob, iters)


def _priors(n_src: int, null_prob: float | None) -> list[float]:
    """Alignment prior over (null, source positions...)."""
    if null_prob is None or n_src == 0:
        return [1.0 / (n_src + 1)] * (n_src + 1)
    return [null_prob] + [(1.0 - null_prob) / n_src] * n_src


def _estep(t, null, null_prob, chunk):
    counts: dict[str, dict[str, float]] = {}
    loglik = 0.0
    for src, tgt in chunk:
        rows = [t[null]] + [t[e] for e in src]
        keys = (null,) + src
        prior = _priors(len(src), null_prob)
        for f in tgt:
            scores = [p * row[f] for p, row in zip(prior, rows)]
            z = 0.0
            for x in scores:
                z += x
            loglik += math.log(z)
            for e, x in zip(keys, scores):
                c = counts.get(e)
                if c is None:
                    c = counts[e] = {}
                c[f] = c.get(f, 0.0) + x / z
    return counts, loglik


def train_ibm1(
    corpus: Iterable[tuple[Sentence, Sentence]],
    iterations: int = 5,
    workers: int = 1,
    null_token: str = NULL_TOKEN,
    null_prob: float | None = DEFAULT_NULL_PROB,
) -> Model1Params:
    """Estimate t(target | source) with EM.

    Probabilities start uniform over the targets that co-occur with each
    source word (the null word co-occurs with everything). Each target word
    aligns to null with prior ``null_prob`` and to each of the l source
    words with ``(1 - null_prob) / l``; ``null_prob=None`` gives the
    classic uniform ``1 / (l + 1)``. Perplexity of
    the training targets is recorded before every update and once after the
    last one, so ``perplexities`` has ``iterations + 1`` entries.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pairs = [(_toks(s), _toks(t)) for s, t in corpus]
    if not pairs:
        raise DataError("cannot train an aligner on an empty parallel corpus")

    cooc: dict[str, dict[str, None]] = {null_token: {}}
    for src, tgt in pairs:
        for e in (null_token,) + src:
            row = cooc.setdefault(e, {})
            for f in tgt:
                row[f] = None
    t = {e: dict.fromkeys(row, 1.0 / len(row)) if row else {} for e, row in cooc.items()}

    n_target = sum(len(tgt) for _, tgt in pairs) or 1
    chunks = [pairs[i:i + CHUNK_SIZE] for i in range(0, len(pairs), CHUNK_SIZE)]
    if null_prob is not None and not 0.0 <= null_prob < 1.0:
        raise ValueError("null_prob must be in [0, 1)")
    params = Model1Params(t, null_token, null_prob)

    def run_estep():
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                return list(pool.map(lambda c: _estep(t, null_token, null_prob, c), chunks))
        return [_estep(t, null_token, null_prob, c) for c in chunks]

    for it in range(iterations):
        results = run_estep()
        loglik = 0.0
        total: dict[str, dict[str, float]] = {}
        for counts, ll in results:
            loglik += ll
            for e, row in counts.items():
                acc = total.setdefault(e, {})
                for f, c in row.items():
                    acc[f] = acc.get(f, 0.0) + c
        params.perplexities.append(math.exp(-loglik / n_target))
        for e, row in total.items():
            z = sum(row.values())
            t[e] = {f: c / z for f, c in row.items()}
        params.iterations_run = it + 1
        log.info("ibm1 iteration %d: perplexity %.4f", it + 1, params.perplexities[-1])

    params.perplexities.append(math.exp(-sum(ll for _, ll in run_estep()) / n_target))
    return params


def perplexity(params: Model1Params, corpus: Iterable[tuple[Sentence, Sentence]]) -> float:
    """Per-target-token perplexity of ``corpus`` (unseen pairs floor at 1e-300)."""
    loglik, n = 0.0, 0
    for s, tt in corpus:
        src = (params.null_token,) + _toks(s)
        prior = _priors(len(src) - 1, params.null_prob)
        for f in _toks(tt):
            z = sum(p * params.prob(e, f) for p, e in zip(prior, src))
            loglik += math.log(max(z, 1e-300))
            n += 1
    return math.exp(-loglik / n) if n else 1.0


def viterbi_align(params: Model1Params, src: Sentence | Sequence[str], tgt: Sentence | Sequence[str]) -> Alignment:
    """Link each target word to its most probable source word.

    Ties go to the smallest source position. The null word (scored with the
    same alignment prior as in training) takes the target, and no link is
    emitted, only when it scores strictly higher than every real source
    word, or when every score is zero.
    """
    src, tgt = _toks(src), _toks(tgt)
    t = params.t
    null_row = t.get(params.null_token, {})
    rows = [t.get(e) or {} for e in src]
    prior = _priors(len(src), params.null_prob)
    null_weight = prior[0] / prior[1] if src else 0.0
    links = []
    for j, f in enumerate(tgt):
        best, best_i = 0.0, -1
        for i, row in enumerate(rows):
            p = row.get(f, 0.0)
            if p > best:
                best, best_i = p, i
        if best_i >= 0 and best >= null_weight * null_row.get(f, 0.0):
            links.append((best_i, j))
    return frozenset(links)


def parse_pharaoh(line: str, lineno: int = 0, src_len: int | None = None, tgt_len: int | None = None) -> Alignment:
    links = set()
    for item in line.split():
        i, sep, j = item.partition("-")
        if not sep or not i.isdigit() or not j.isdigit():
            raise DataError(f"line {lineno}: malformed alignment link {item!r}")
        i, j = int(i), int(j)
        if (src_len is not None and i >= src_len) or (tgt_len is not None and j >= tgt_len):
            raise DataError(
                f"line {lineno}: link {i}-{j} out of range for lengths ({src_len}, {tgt_len})"
            )
        links.add((i, j))
    return frozenset(links)


def format_pharaoh(alignment: Iterable[tuple[int, int]]) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(alignment))


def import_pharaoh(path: str | Path, lengths: Iterable[tuple[int, int]] | None = None) -> Iterator[Alignment]:
    """Stream alignments from a Pharaoh file, one line per sentence pair.

    ``lengths`` optionally yields (source length, target length) per line for
    range validation.
    """
    lens = iter(lengths) if lengths is not None else None
    for lineno, line in enumerate(_decoded_lines(path), start=1):
        if lens is not None:
            try:
                sl, tl = next(lens)
            except StopIteration:
                raise DataError(f"{path}: more alignment lines than corpus lines") from None
            yield parse_pharaoh(line, lineno, sl, tl)
        else:
            yield parse_pharaoh(line, lineno)


def export_pharaoh(alignments: Iterable[Iterable[tuple[int, int]]], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for a in alignments:
            out.write(format_pharaoh(a))
            out.write("\n")
            n += 1
    return n
