import itertools
import math
import random

import pytest

from monoselect.corpus import Sentence
from monoselect.errors import DataError
from monoselect.ngram_lm import (BOS, UNK, NGramModel, cross_entropy, drop_count, filter_by_lm,
                                 sentence_logprob, train_lm)

VOCAB = [f"v{i}" for i in range(12)]


def toy_corpus(n=80, seed=0):
    # a little grammar: v0..v5 tend to be followed by v(i+1)
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        w = rng.randrange(6)
        s = []
        for _ in range(rng.randint(1, 8)):
            s.append(VOCAB[w])
            w = (w + 1) % 6 if rng.random() < 0.8 else rng.randrange(12)
        out.append(s)
    return out


def predictable(lm):
    return sorted(lm.vocab) + [UNK]


def observed_contexts(lm):
    for m in range(1, lm.order + 1):
        yield from lm.context_stats[m]


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_normalization(order):
    lm = train_lm(toy_corpus(), order)
    ctxs = list(observed_contexts(lm))
    rng = random.Random(order)
    symbols = VOCAB + [BOS, "never-seen"]
    ctxs += [tuple(rng.choice(symbols) for _ in range(order - 1)) for _ in range(100)]
    for h in ctxs:
        total = sum(lm.prob(w, h) for w in predictable(lm))
        assert abs(total - 1.0) < 1e-6, h
        assert all(lm.prob(w, h) > 0 for w in predictable(lm))


def test_zero_discount_recovers_mle():
    lm = train_lm([["a", "a", "b"]], order=1, discount=0.0, allow_zero_discount=True)
    # </s> is a predicted event, so p(a) = 2/4; among real words a:b = 2:1
    assert lm.prob("a") == pytest.approx(2 / 4)
    assert lm.prob("a") / (lm.prob("a") + lm.prob("b")) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        train_lm([["a"]], 1, 0.0)


def test_kneser_ney_closed_form_bigram():
    # corpus "a b", "a c" with D = 0.5, order 2
    lm = train_lm([["a", "b"], ["a", "c"]], order=2, discount=0.5)
    # continuation counts: a<-{<s>}, b<-{a}, c<-{a}, </s><-{b, c}: total 5 over 4 types
    uni = {"a": 1, "b": 1, "c": 1, "</s>": 2}
    v1 = 5  # |{a, b, c, </s>}| + <unk>
    p_uni = {w: (c - 0.5) / 5 + 0.5 * 4 / 5 / v1 for w, c in uni.items()}
    assert lm.prob("a") == pytest.approx(p_uni["a"])
    # context "a": c(a b)=1, c(a c)=1, total 2, 2 types
    assert lm.prob("b", ["a"]) == pytest.approx((1 - 0.5) / 2 + 0.5 * 2 / 2 * p_uni["b"])
    assert lm.prob("a", ["a"]) == pytest.approx(0.5 * 2 / 2 * p_uni["a"])
    assert lm.prob(UNK, ["a"]) == pytest.approx(0.5 * 2 / 2 * (0.5 * 4 / 5 / v1))


def test_empty_and_bad_args():
    with pytest.raises(DataError):
        train_lm([], 3)
    with pytest.raises(ValueError):
        train_lm([["a"]], 0)


def test_cross_entropy_properties():
    corpus = toy_corpus()
    lm = train_lm(corpus, 3)
    s = Sentence(0, ("v0", "v1", "v2"))
    assert cross_entropy(lm, s) == cross_entropy(lm, s)
    assert cross_entropy(lm, []) == pytest.approx(-math.log(lm.prob("</s>", [BOS, BOS])))
    total, n = sentence_logprob(lm, ["v0", "v1"])
    assert n == 3 and cross_entropy(lm, ["v0", "v1"]) == pytest.approx(-total / 3)


def test_training_sentences_beat_shuffles():
    corpus = toy_corpus()
    lm = train_lm(corpus, 3)
    rng = random.Random(9)
    for s in corpus[:20]:
        if len(set(s)) < 3:
            continue
        shuffles = []
        for _ in range(20):
            t = s[:]
            rng.shuffle(t)
            shuffles.append(cross_entropy(lm, t))
        assert cross_entropy(lm, s) < sum(shuffles) / len(shuffles)


def test_training_corpus_beats_random_tokens():
    corpus = toy_corpus()
    lm = train_lm(corpus, 3)
    rng = random.Random(4)
    rand = [[rng.choice(VOCAB) for _ in s] for s in corpus]
    train_xent = sum(cross_entropy(lm, s) for s in corpus) / len(corpus)
    rand_xent = sum(cross_entropy(lm, s) for s in rand) / len(rand)
    assert train_xent < rand_xent


def test_save_load(tmp_path):
    lm = train_lm(toy_corpus(), 3)
    lm.save(tmp_path / "m.bin")
    back = NGramModel.load(tmp_path / "m.bin")
    for s in toy_corpus(10, seed=3):
        assert cross_entropy(back, s) == cross_entropy(lm, s)
    (tmp_path / "junk.bin").write_bytes(b"not a model")
    with pytest.raises(DataError):
        NGramModel.load(tmp_path / "junk.bin")


def test_filter_by_lm():
    lm = train_lm(toy_corpus(), 3)
    pairs = [(None, s) for s in toy_corpus(10, seed=7)]
    assert filter_by_lm(pairs, lm, 0.0) == pairs
    kept = filter_by_lm(pairs, lm, 0.2)
    assert len(kept) == 8
    # sort oracle
    order = sorted(range(10), key=lambda i: (cross_entropy(lm, pairs[i][1]), i))
    assert kept == [pairs[i] for i in sorted(order[:8])]


def test_filter_ties_drop_later_lines():
    lm = train_lm(toy_corpus(), 2)
    pairs = [(i, ["v0", "v1"]) for i in range(5)]
    assert [i for i, _ in filter_by_lm(pairs, lm, 0.4)] == [0, 1, 2]


@pytest.mark.parametrize("f1, f2", list(itertools.product([0.0, 0.1, 0.25, 0.5], repeat=2)))
def test_filter_composition(f1, f2):
    lm = train_lm(toy_corpus(), 2)
    pairs = [(None, s) for s in toy_corpus(40, seed=8)]
    twice = filter_by_lm(filter_by_lm(pairs, lm, f1), lm, f2)
    assert len(pairs) - len(twice) >= max(drop_count(40, f1), drop_count(40, f2))
