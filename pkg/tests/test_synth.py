import json

import pytest
from hypothesis import given, strategies as st

from monoselect.corpus import Sentence, read_parallel
from monoselect.errors import DataError
from monoselect.synth import (SyntheticPair, combine_corpora, drop_reason, filter_pairs, pair_translations,
                              read_pairs, write_pairs, write_report)


def toks(n, w="w"):
    return tuple(f"{w}{i}" for i in range(n))


def pair(ns, nt, i=0, tag="t"):
    return SyntheticPair(Sentence(i, toks(ns)), Sentence(i, toks(nt, "x")), tag)


def test_pair_translations():
    sel = [Sentence(4, ("a",)), Sentence(9, ("b",)), Sentence(12, ("c",))]
    hyp = [Sentence(k, (w,)) for k, w in enumerate("xyz")]
    pairs = list(pair_translations(sel, hyp, "uncsamp-1"))
    assert len(pairs) == 3
    assert pairs[1].source.line_index == 9 and pairs[1].target.tokens == ("y",)
    with pytest.raises(DataError, match="3 .* 2"):
        list(pair_translations(sel, hyp[:2], "x"))


def test_provenance_round_trip(tmp_path):
    pairs = [pair(2, 3, 7, "uncsamp-seed42"), pair(1, 1, 8, "uncsamp-seed42")]
    write_pairs(pairs, tmp_path / "p.tsv")
    assert list(read_pairs(tmp_path / "p.tsv")) == pairs
    with pytest.raises(ValueError):
        SyntheticPair(Sentence(0, ("a",)), Sentence(0, ("b",)), "")


@pytest.mark.parametrize("ns, nt, reason", [
    (10, 10, None), (251, 10, "length"), (10, 251, "length"), (250, 250, None),
    (10, 16, "ratio"), (16, 10, "ratio"), (10, 15, None), (5, 0, "empty"),
])
def test_drop_reason(ns, nt, reason):
    assert drop_reason(ns, nt) == reason


def test_one_sided_ratio():
    assert drop_reason(10, 16, symmetric=False) is None
    assert drop_reason(16, 10, symmetric=False) == "ratio"


def test_filter_pairs_report(tmp_path):
    pairs = [pair(10, 10), pair(251, 10), pair(10, 16), pair(3, 0), pair(4, 5)]
    kept, report = filter_pairs(pairs)
    assert kept == [pairs[0], pairs[4]]
    assert dict(report) == {"kept": 2, "length": 1, "ratio": 1, "empty": 1}
    write_report(report, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text()) == {"kept": 2, "empty": 1, "length": 1, "ratio": 1}


@given(st.lists(st.tuples(st.integers(1, 300), st.integers(0, 300)), max_size=30))
def test_idempotent_and_symmetric(lengths):
    pairs = [pair(a, b, i) for i, (a, b) in enumerate(lengths)]
    once, _ = filter_pairs(pairs)
    twice, _ = filter_pairs(once)
    assert once == twice
    for a, b in lengths:
        if a and b:
            assert drop_reason(a, b) == drop_reason(b, a)


def test_combine(tmp_path):
    bitext = [(Sentence(0, ("a",)), Sentence(0, ("x",))), (Sentence(1, ("b",)), Sentence(1, ("y",)))]
    synth = [pair(1, 1, i) for i in range(3)]
    counts = combine_corpora(bitext, synth, tmp_path / "c.tsv")
    assert counts == {"bitext": 2, "synthetic": 3, "total": 5}
    assert (tmp_path / "c.tsv.origin").read_text().split() == ["B", "B", "S", "S", "S"]
    assert len(list(read_parallel(tmp_path / "c.tsv"))) == 5
    combine_corpora(bitext, [], tmp_path / "d.tsv")
    assert (tmp_path / "d.tsv").read_text() == "a\tx\nb\ty\n"
