"""Analysis reports: per-bin sentence properties and frequency-bucketed word F-measure."""

from __future__ import annotations

import json
import sys
import statistics
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Sentence, Vocab
from .errors import DataError
from .uncertainty import ScoredSentence


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def bin_property_report(bins: Sequence[Sequence[int]], scores: Mapping[int, ScoredSentence]) -> list[dict]:
    """One row per bin with size, mean/median uncertainty, mean length and,
    when every member carries them, mean word rarity and mean coverage."""
    rows = []
    for b, members in enumerate(bins, start=1):
        recs = [scores[i] for i in members]
        us = [r.uncertainty for r in recs if r.uncertainty is not None]
        row = {
            "bin": b,
            "size": len(recs),
            "mean_U": _mean(us) if us else None,
            "median_U": statistics.median(us) if us else None,
            "mean_length": _mean([r.token_count for r in recs]) if recs else None,
        }
        wr = [r.word_rarity for r in recs]
        if recs and all(x is not None for x in wr):
            row["mean_WR"] = _mean(wr)
        cov = [r.coverage for r in recs if r.coverage is not None]
        if recs and any(r.coverage is not None for r in recs):
            row["mean_coverage"] = _mean(cov) if cov else None
        rows.append(row)
    return rows


def write_rows(rows: list[dict], path: str | Path | None, as_json: bool = False) -> None:
    """TSV with a ``#`` header (columns from the first row), or a JSON list.

    ``path`` None or "-" writes to stdout.
    """
    if path is None or str(path) == "-":
        _emit_rows(rows, sys.stdout, as_json)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        _emit_rows(rows, out, as_json)


def _emit_rows(rows, out, as_json):
    if as_json:
        json.dump(rows, out, indent=2)
        out.write("\n")
        return
    if not rows:
        return
    cols = list(rows[0])
    out.write("#" + "\t".join(cols) + "\n")
    for row in rows:
        out.write("\t".join(_cell(row.get(c)) for c in cols) + "\n")


def _cell(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


FREQ_BUCKETS = ("High", "Medium", "Low")


@dataclass
class BucketScore:
    bucket: str
    hyp_count: int
    ref_count: int
    matched: int
    precision: float
    recall: float
    fmeasure: float

    def as_dict(self) -> dict:
        return dict(vars(self))


def _prf(matched: float, n_hyp: float, n_ref: float) -> tuple[float, float, float]:
    p = matched / n_hyp if n_hyp else 0.0
    r = matched / n_ref if n_ref else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def frequency_buckets(train_vocab: Vocab, high: int = 3000, medium: int = 12000) -> dict[str, str]:
    """Map each training word to High (rank <= high), Medium (<= medium) or Low."""
    out = {}
    for rank, w in enumerate(train_vocab.ranked(), start=1):
        out[w] = "High" if rank <= high else "Medium" if rank <= medium else "Low"
    return out


def word_fmeasure_by_freq(hyps: Iterable[Sentence | Sequence[str]], refs: Iterable[Sentence | Sequence[str]],
                          train_vocab: Vocab, high: int = 3000, medium: int = 12000,
                          per_sentence: bool = False) -> list[BucketScore]:
    """Word-level precision/recall/F per frequency bucket.

    Default is corpus-level: bag-of-words counts are aggregated over all
    lines, a word matches min(hyp count, ref count) times per line. Words
    unseen in ``train_vocab`` fall in Low. ``per_sentence`` averages the
    per-line P/R over lines that have any words of the bucket and reports
    F of those means.
    """
    bucket_of = frequency_buckets(train_vocab, high, medium)
    hyps, refs = list(hyps), list(refs)
    if len(hyps) != len(refs):
        raise DataError(f"{len(hyps)} hypothesis lines but {len(refs)} reference lines")

    totals = {b: [0, 0, 0] for b in FREQ_BUCKETS}  # matched, hyp, ref
    per_line = {b: [[], []] for b in FREQ_BUCKETS}  # precisions, recalls
    for h, r in zip(hyps, refs):
        ch = Counter(h.tokens if isinstance(h, Sentence) else h)
        cr = Counter(r.tokens if isinstance(r, Sentence) else r)
        line = {b: [0, 0, 0] for b in FREQ_BUCKETS}
        for w in ch.keys() | cr.keys():
            acc = line[bucket_of.get(w, "Low")]
            acc[0] += min(ch[w], cr[w])
            acc[1] += ch[w]
            acc[2] += cr[w]
        for b, (m, nh, nr) in line.items():
            t = totals[b]
            t[0] += m
            t[1] += nh
            t[2] += nr
            if per_sentence and (nh or nr):
                p, rc, _ = _prf(m, nh, nr)
                per_line[b][0].append(p)
                per_line[b][1].append(rc)

    out = []
    for b in FREQ_BUCKETS:
        m, nh, nr = totals[b]
        if per_sentence:
            ps, rs = per_line[b]
            p = _mean(ps) if ps else 0.0
            r = _mean(rs) if rs else 0.0
            f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        else:
            p, r, f = _prf(m, nh, nr)
        out.append(BucketScore(b, nh, nr, m, p, r, f))
    return out
