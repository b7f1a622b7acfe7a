import random
import statistics

import pytest

from monoselect.corpus import build_vocab
from monoselect.errors import DataError
from monoselect.report import bin_property_report, frequency_buckets, word_fmeasure_by_freq, write_rows
from monoselect.sampling import rank_bins
from monoselect.uncertainty import ScoredSentence


def test_lengths_per_bin():
    scores = {i: ScoredSentence(i, float(i), n, 0) for i, n in enumerate([2, 2, 4, 4])}
    rows = bin_property_report([[0, 1], [2, 3]], scores)
    assert [r["mean_length"] for r in rows] == [2, 4]
    assert "mean_WR" not in rows[0] and "mean_coverage" not in rows[0]


def test_report_matches_brute_force():
    rng = random.Random(0)
    scores = {i: ScoredSentence(i, rng.random(), rng.randint(1, 30), 0, rng.random() * 8, rng.random())
              for i in range(203)}
    bins = rank_bins(scores.values(), 5)
    rows = bin_property_report(bins, scores)
    assert sum(r["size"] for r in rows) == 203
    assert [r["mean_U"] for r in rows] == sorted(r["mean_U"] for r in rows)
    for row, members in zip(rows, bins):
        us = [scores[i].uncertainty for i in members]
        assert row["mean_U"] == pytest.approx(sum(us) / len(us), abs=1e-12)
        assert row["median_U"] == statistics.median(us)
        assert row["mean_WR"] == pytest.approx(sum(scores[i].word_rarity for i in members) / len(members), abs=1e-12)
        assert row["mean_coverage"] == pytest.approx(sum(scores[i].coverage for i in members) / len(members), abs=1e-12)


def test_write_rows(tmp_path):
    write_rows([{"bin": 1, "x": 0.5, "y": None}], tmp_path / "r.tsv")
    assert (tmp_path / "r.tsv").read_text() == "#bin\tx\ty\n1\t0.500000\tNA\n"
    write_rows([{"bin": 1}], tmp_path / "r.json", as_json=True)
    assert (tmp_path / "r.json").read_text().startswith("[")


def one_bucket(hyp, ref):
    vocab = build_vocab([ref.split()])
    return word_fmeasure_by_freq([hyp.split()], [ref.split()], vocab)[0]


def test_fmeasure_hand_count():
    s = one_bucket("a b b", "a a b")
    assert s.matched == 2 and s.precision == pytest.approx(2 / 3) and s.recall == pytest.approx(2 / 3)
    assert s.fmeasure == pytest.approx(2 / 3, abs=1e-12)


def test_fmeasure_identity_and_disjoint():
    vocab = build_vocab([f"w{i}" for i in range(n)] for n in range(1, 40))
    lines = [[f"w{(i * 7 + j) % 39}" for j in range(6)] for i in range(30)]
    for s in word_fmeasure_by_freq(lines, lines, vocab, high=5, medium=20):
        assert s.fmeasure == 1.0 or (s.hyp_count == 0 and s.fmeasure == 0.0)
    assert one_bucket("x y", "a b").fmeasure == 0.0


def test_buckets():
    vocab = build_vocab([["a"] * 5 + ["b"] * 3 + ["c"] * 2 + ["d"]])
    assert frequency_buckets(vocab, high=1, medium=3) == {"a": "High", "b": "Medium", "c": "Medium", "d": "Low"}
    scores = word_fmeasure_by_freq([["a", "d", "zz"]], [["a", "c", "d"]], vocab, high=1, medium=3)
    by = {s.bucket: s for s in scores}
    assert by["High"].fmeasure == 1.0
    assert by["Medium"].recall == 0.0 and by["Medium"].fmeasure == 0.0
    assert by["Low"].precision == 0.5 and by["Low"].recall == 1.0  # unseen "zz" counts as Low


def test_per_sentence_macro():
    vocab = build_vocab([["a", "b"]])
    scores = word_fmeasure_by_freq([["a"], ["b", "b"]], [["a"], ["b"]], vocab, per_sentence=True)
    # per-line precisions 1 and 1/2, recalls 1 and 1
    assert scores[0].precision == pytest.approx(0.75) and scores[0].recall == 1.0


def test_line_mismatch():
    with pytest.raises(DataError):
        word_fmeasure_by_freq([["a"]], [], build_vocab([["a"]]))
