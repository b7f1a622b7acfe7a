"""End-to-end data preparation driven by a flat JSON config.

Stages: train aligner -> align bitext -> build dictionary and entropies ->
score bitext source and monolingual lines -> threshold -> sample ->
(pair with external translations -> filter -> combine) -> bin report.
Each run writes ``manifest.json`` with sha256 hashes of every input and
output so reruns can be compared.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

from . import __version__
from .align import export_pharaoh, import_pharaoh, train_ibm1, viterbi_align
from .bidict import build_dictionary, build_entropy_table, save_entropy_table
from .corpus import build_vocab, read_mono, read_parallel, write_mono
from .errors import DataError
from .ngram_lm import filter_by_lm, score_lines, train_lm
from .report import bin_property_report, write_rows
from .sampling import (SamplerConfig, compute_umax, rank_bins, sample_random, sample_weighted,
                       select_lowest_xent, select_top_rarity, write_selection)
from .synth import combine_corpora, filter_pairs, pair_translations, write_pairs, write_report
from .uncertainty import OOVPolicy, read_scores, score_corpus, write_scores

log = logging.getLogger(__name__)

DEFAULTS = {
    "bitext_src": None,
    "bitext_tgt": None,
    "mono": None,
    "mono_translations": None,
    "out_dir": "out",
    "iters": 5,
    "null_prob": 0.08,
    "min_count": 0,
    "min_prob": 0.0,
    "oov_policy": "exclude",
    "strategy": "uncsamp",
    "budget": 1000,
    "beta": 2.0,
    "r": 90.0,
    "umax": None,
    "seed": 42,
    "bins": 5,
    "max_len": 250,
    "max_ratio": 1.5,
    "one_sided_ratio": False,
    "lm_order": 4,
    "lm_discount": 0.75,
    "lm_filter_drop": 0.0,
    "workers": 1,
}
PATH_KEYS = ("bitext_src", "bitext_tgt", "mono", "mono_translations", "out_dir")
# keys that may not influence any output byte
_RUNTIME_ONLY = ("workers", "out_dir")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


def load_config(path: str | Path, overrides: dict | None = None) -> dict:
    """Merge defaults, the JSON file and ``overrides``.

    Relative paths in the file resolve against the file's directory; relative
    paths in ``overrides`` against the working directory.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise DataError(f"{path}: config must be a JSON object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = (set(raw) | set(overrides)) - set(DEFAULTS)
    if unknown:
        raise DataError(f"unknown config keys {sorted(unknown)}")
    base = path.resolve().parent
    for key in PATH_KEYS:
        if raw.get(key) is not None:
            raw[key] = str(base / raw[key])
        if overrides.get(key) is not None:
            overrides[key] = str(Path(overrides[key]).resolve())
    return {**DEFAULTS, **raw, **overrides}


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _stage(name):
    def wrap(fn):
        def run(*a, **kw):
            log.info("stage %s", name)
            try:
                return fn(*a, **kw)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(name, exc) from exc
        return run
    return wrap


def run_pipeline(cfg: dict) -> dict:
    """Run every stage for ``cfg`` (as returned by ``load_config``) and return the manifest."""
    for key in ("bitext_src", "bitext_tgt", "mono"):
        if not cfg.get(key):
            raise DataError(f"config is missing '{key}'")
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    workers = int(cfg["workers"])
    policy = OOVPolicy.parse(cfg["oov_policy"])
    outputs: list[str] = []

    def bitext():
        return read_parallel(cfg["bitext_src"], cfg["bitext_tgt"])

    def emit(name: str) -> Path:
        outputs.append(name)
        return out / name

    @_stage("align-train")
    def align_train():
        null_prob = cfg["null_prob"]
        params = train_ibm1(bitext(), int(cfg["iters"]), workers=workers,
                            null_prob=None if null_prob is None else float(null_prob))
        params.save(emit("ibm1.params"))
        return params

    @_stage("align")
    def align(params):
        export_pharaoh((viterbi_align(params, s, t) for s, t in bitext()), emit("bitext.align"))

    @_stage("dict-build")
    def dict_build():
        table = build_dictionary(bitext(), import_pharaoh(out / "bitext.align"),
                                 int(cfg["min_count"]), float(cfg["min_prob"]))
        table.save(emit("dictionary.tsv"))
        entropy = build_entropy_table(table)
        save_entropy_table(entropy, emit("entropy.tsv"))
        vocab = build_vocab(s for s, _ in bitext())
        vocab.save(emit("vocab.src.tsv"))
        return entropy, vocab

    @_stage("score-uncertainty")
    def score(entropy, vocab, params):
        write_scores(score_corpus((s for s, _ in bitext()), entropy, oov_policy=policy, workers=workers),
                     emit("bitext.scores"))
        alignments = None
        if cfg["mono_translations"]:
            pairs = read_parallel(cfg["mono"], cfg["mono_translations"])
            alignments = (viterbi_align(params, s, t) for s, t in pairs)
        summary = write_scores(
            score_corpus(read_mono(cfg["mono"]), entropy, vocab, alignments, policy, workers),
            emit("mono.scores"), rarity=True, with_coverage=alignments is not None,
        )
        return summary

    @_stage("umax")
    def umax():
        if cfg["umax"] is not None:
            return float(cfg["umax"])
        us = [r.uncertainty for r in read_scores(out / "bitext.scores") if r.uncertainty is not None]
        return compute_umax(us, float(cfg["r"]))

    @_stage("sample")
    def sample(u_max):
        strategy = cfg["strategy"]
        records = read_scores(out / "mono.scores")
        budget = int(cfg["budget"])
        if strategy == "uncsamp":
            sc = SamplerConfig(budget, float(cfg["beta"]), None, u_max, int(cfg["seed"]), strategy)
            result = sample_weighted(records, sc)
        elif strategy == "random":
            result = sample_random(records, SamplerConfig(budget, seed=int(cfg["seed"]), strategy="random"))
        elif strategy == "dwf":
            result = select_top_rarity(records, budget)
        elif strategy == "srclm":
            lm = train_lm((s for s, _ in bitext()), int(cfg["lm_order"]), float(cfg["lm_discount"]))
            result = select_lowest_xent(score_lines(lm, read_mono(cfg["mono"])), budget)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        write_selection(result, emit("selected.idx"))
        meta = {"strategy": strategy, "seed": int(cfg["seed"]), "budget": budget,
                "u_max": u_max if strategy == "uncsamp" else None,
                "percentile_method": "nearest-rank", **result.stats}
        with open(emit("selected.json"), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        chosen = set(result.selected)
        write_mono((s for s in read_mono(cfg["mono"]) if s.line_index in chosen), emit("selected.src"))
        return result

    @_stage("synthesize")
    def synthesize(result):
        chosen = set(result.selected)
        selected = [s for s in read_mono(cfg["mono"]) if s.line_index in chosen]
        hyps = [t for t in read_mono(cfg["mono_translations"]) if t.line_index in chosen]
        write_mono(hyps, emit("selected.hyp"))
        tag = f"{cfg['strategy']}-seed{cfg['seed']}"
        pairs = list(pair_translations(selected, hyps, tag))
        write_pairs(pairs, emit("synthetic.tsv"))
        kept, report = filter_pairs(pairs, int(cfg["max_len"]), float(cfg["max_ratio"]),
                                    symmetric=not cfg["one_sided_ratio"])
        if float(cfg["lm_filter_drop"]) > 0:
            lm = train_lm((t for _, t in bitext()), int(cfg["lm_order"]), float(cfg["lm_discount"]))
            before = len(kept)
            kept = filter_by_lm(kept, lm, float(cfg["lm_filter_drop"]), target=lambda p: p.target)
            report["lm"] = before - len(kept)
            report["kept"] = len(kept)
        write_pairs(kept, emit("synthetic.filtered.tsv"))
        write_report(report, emit("filter_report.json"))
        counts = combine_corpora(bitext(), kept, emit("train.tsv"), out / "train.tsv.origin")
        outputs.append("train.tsv.origin")
        return counts

    @_stage("analyze-bins")
    def analyze():
        records = {r.line_index: r for r in read_scores(out / "mono.scores")}
        bins = rank_bins(records.values(), int(cfg["bins"]))
        write_rows(bin_property_report(bins, records), emit("bins.tsv"))

    params = align_train()
    align(params)
    entropy, vocab = dict_build()
    summary = score(entropy, vocab, params)
    u_max = umax()
    result = sample(u_max)
    combined = synthesize(result) if cfg["mono_translations"] else None
    analyze()

    manifest = {
        "version": __version__,
        "config": {k: (Path(v).name if k in PATH_KEYS and v else v)
                   for k, v in sorted(cfg.items()) if k not in _RUNTIME_ONLY},
        "config_sha256": hashlib.sha256(json.dumps(
            {k: v for k, v in sorted(cfg.items()) if k not in _RUNTIME_ONLY and k not in PATH_KEYS},
            sort_keys=True).encode()).hexdigest(),
        "inputs": {k: sha256_file(cfg[k]) for k in PATH_KEYS if k != "out_dir" and cfg[k]},
        "outputs": {name: sha256_file(out / name) for name in outputs},
        "u_max": u_max,
        "mono_summary": summary.as_dict(),
        "selected": len(result.selected),
        "combined": combined,
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
