"""Selection of monolingual subsets.

The main strategy draws ``budget`` lines without replacement with
probability proportional to ``(alpha(U) * U) ** beta``, where ``alpha``
linearly penalizes uncertainties above a cap ``U_max`` taken as a percentile
of the bitext source scores. Baselines: uniform random, top word rarity,
lowest LM cross-entropy. Also equal-sized uncertainty bins for analysis.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .uncertainty import ScoredSentence

log = logging.getLogger(__name__)

STRATEGIES = ("uncsamp", "random", "dwf", "srclm")
_TWO_53 = float(1 << 53)


@dataclass
class SamplerConfig:
    budget: int
    beta: float = 2.0
    percentile: float | None = 90.0
    u_max: float | None = None
    seed: int = 0
    strategy: str = "uncsamp"

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "uncsamp":
            if (self.percentile is None) == (self.u_max is None):
                raise ValueError("set exactly one of percentile / u_max")
            if self.u_max is not None and self.u_max <= 0:
                raise ValueError("u_max must be > 0")
            if self.percentile is not None and not 0 < self.percentile <= 100:
                raise ValueError("percentile must be in (0, 100]")


@dataclass
class SampleResult:
    selected: list[int]
    weights: dict[int, float] = field(default_factory=dict)
    u_max: float | None = None
    stats: dict = field(default_factory=dict)


def compute_umax(bitext_scores: Iterable[float], percentile: float) -> float:
    """Nearest-rank percentile: the smallest score with at least ``percentile``% of scores at or below it."""
    xs = sorted(bitext_scores)
    if not xs:
        raise ValueError("compute_umax needs at least one score")
    if not 0 < percentile <= 100:
        raise ValueError("percentile must be in (0, 100]")
    # rounding keeps 0.9 * 100 == 90.00000000000001 from jumping to the next rank
    frac = percentile / 100
    rank = math.ceil(round(frac * len(xs), 9))
    return xs[max(rank, 1) - 1]


def alpha(u: float, u_max: float) -> float:
    if u <= u_max:
        return 1.0
    return max(2.0 * u_max / u - 1.0, 0.0)


def weight(u: float, u_max: float, beta: float) -> float:
    """Unnormalized sampling weight ``(alpha * U) ** beta``."""
    base = alpha(u, u_max) * u
    if base <= 0.0:
        return 0.0
    return base ** beta


def uniform01(seed: int, index: int) -> float:
    """Counter-based uniform draw in the open interval (0, 1) keyed by (seed, index).

    The same (seed, index) always gives the same value, independent of the
    order or sharding in which lines are visited.
    """
    h = hashlib.blake2b(
        (index & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"),
        digest_size=8,
        key=(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"),
    ).digest()
    return ((int.from_bytes(h, "little") >> 11) + 0.5) / _TWO_53


def _sample_key(seed: int, index: int, w: float) -> float:
    # log of the exponential key u ** (1 / w); same order, no underflow for small w
    return math.log(uniform01(seed, index)) / w


class KeyReservoir:
    """Bounded min-heap keeping the ``size`` largest (key, index) items.

    Reservoirs built over disjoint shards can be merged in any order with
    the same result as a single pass.
    """

    def __init__(self, size: int):
        self.size = size
        self.heap: list[tuple[float, int, float]] = []

    def offer(self, key: float, index: int, w: float) -> None:
        # larger key wins; on equal keys the smaller line index wins
        item = (key, -index, w)
        if len(self.heap) < self.size:
            heapq.heappush(self.heap, item)
        elif item > self.heap[0]:
            heapq.heapreplace(self.heap, item)

    def merge(self, other: "KeyReservoir") -> "KeyReservoir":
        for key, neg_idx, w in other.heap:
            self.offer(key, -neg_idx, w)
        return self

    def items(self) -> list[tuple[int, float]]:
        return sorted((-neg_idx, w) for _, neg_idx, w in self.heap)


def _weighted_reservoir(items: Iterable[tuple[int, float]], size: int, seed: int) -> tuple[KeyReservoir, int]:
    res = KeyReservoir(size)
    eligible = 0
    for idx, w in items:
        if w > 0.0:
            eligible += 1
            res.offer(_sample_key(seed, idx, w), idx, w)
    return res, eligible


def _finish(res: KeyReservoir, eligible: int, budget: int, what: str, **stats) -> SampleResult:
    if eligible == 0:
        raise ValueError(f"no eligible lines for {what} sampling")
    if eligible < budget:
        log.warning("only %d eligible lines for a budget of %d; selecting all", eligible, budget)
    chosen = res.items()
    return SampleResult(
        [i for i, _ in chosen], {i: w for i, w in chosen},
        stats={"eligible": eligible, "selected": len(chosen), **stats},
    )


def sample_weighted(scores: Iterable[ScoredSentence], config: SamplerConfig,
                    bitext_scores: Sequence[float] | None = None) -> SampleResult:
    """Draw ``config.budget`` lines without replacement, proportional to their weights.

    Uses exponential keys (largest ``u ** (1/w)`` wins), which reproduces the
    normalized weights as the marginal for a budget of one. Unscorable and
    zero-weight lines are never selected.
    """
    if config.u_max is not None:
        u_max = config.u_max
    else:
        if not bitext_scores:
            raise ValueError("percentile threshold needs bitext scores")
        u_max = compute_umax(bitext_scores, config.percentile)
    seen = unscorable = 0

    def weighted():
        nonlocal seen, unscorable
        for r in scores:
            seen += 1
            if r.uncertainty is None:
                unscorable += 1
                continue
            yield r.line_index, weight(r.uncertainty, u_max, config.beta)

    res, eligible = _weighted_reservoir(weighted(), config.budget, config.seed)
    result = _finish(res, eligible, config.budget, "uncertainty-weighted")
    result.u_max = u_max
    result.stats.update(lines=seen, unscorable=unscorable)
    return result


def sample_random(scores: Iterable[ScoredSentence | int], config: SamplerConfig) -> SampleResult:
    """Uniform sample without replacement over all lines (unscorable lines included)."""
    def unit():
        for r in scores:
            yield (r if isinstance(r, int) else r.line_index), 1.0

    res, eligible = _weighted_reservoir(unit(), config.budget, config.seed)
    result = _finish(res, eligible, config.budget, "random")
    result.stats["lines"] = eligible
    return result


def select_top_rarity(scores: Iterable[ScoredSentence], budget: int) -> SampleResult:
    """The ``budget`` lines with the highest word rarity; ties go to lower line indices."""
    rated = [(r.word_rarity, r.line_index) for r in scores if r.word_rarity is not None]
    if not rated:
        raise ValueError("no lines carry word rarity")
    top = heapq.nsmallest(budget, rated, key=lambda x: (-x[0], x[1]))
    return SampleResult(sorted(i for _, i in top), {i: wr for wr, i in top},
                        stats={"eligible": len(rated), "selected": len(top)})


def select_lowest_xent(lm_scores: Iterable[tuple[int, float]], budget: int) -> SampleResult:
    """The ``budget`` lines with the lowest cross-entropy; ties go to lower line indices."""
    rated = [(x, i) for i, x in lm_scores]
    if not rated:
        raise ValueError("no cross-entropy scores")
    low = heapq.nsmallest(budget, rated)
    return SampleResult(sorted(i for _, i in low), {i: x for x, i in low},
                        stats={"eligible": len(rated), "selected": len(low)})


def rank_bins(scores: Iterable[ScoredSentence], k: int) -> list[list[int]]:
    """Split scorable lines into ``k`` contiguous groups by ascending uncertainty.

    Group sizes differ by at most one and earlier groups take the remainder.
    Bin 0 holds the least uncertain lines.
    """
    ranked = sorted((r.uncertainty, r.line_index) for r in scores if r.uncertainty is not None)
    n = len(ranked)
    if k < 1 or n < k:
        raise ValueError(f"cannot split {n} scored lines into {k} bins")
    size, extra = divmod(n, k)
    bins, start = [], 0
    for b in range(k):
        end = start + size + (b < extra)
        bins.append([i for _, i in ranked[start:end]])
        start = end
    return bins


TERCILE_LABELS = ("Low", "Medium", "High")


def group_terciles(scores: Iterable[ScoredSentence]) -> dict[str, list[int]]:
    return dict(zip(TERCILE_LABELS, rank_bins(scores, 3)))


def write_selection(result: SampleResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for i in result.selected:
            out.write(f"{i}\n")


def read_selection(path: str | Path) -> list[int]:
    with open(path, encoding="utf-8") as fh:
        return [int(line) for line in fh if line.strip()]
