"""Command-line entry point: ``monoselect <subcommand> ...``.

Any flag can also come from ``--config FILE`` (a flat JSON object whose
keys are flag names with dashes or underscores); explicit flags win.
Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import __version__
from .align import Model1Params, export_pharaoh, import_pharaoh, train_ibm1, viterbi_align
from .bidict import (TranslationTable, build_dictionary, build_entropy_table, load_entropy_table,
                     save_entropy_table)
from .corpus import Vocab, build_vocab, read_mono, read_parallel, write_mono
from .errors import DataError
from .ngram_lm import NGramModel, filter_by_lm, score_lines, train_lm
from .pipeline import PipelineError, load_config, run_pipeline
from .report import bin_property_report, word_fmeasure_by_freq, write_rows
from .sampling import (SamplerConfig, STRATEGIES, compute_umax, group_terciles, rank_bins, read_selection,
                       sample_random, sample_weighted, select_lowest_xent, select_top_rarity, write_selection)
from .synth import combine_corpora, filter_pairs, pair_translations, read_pairs, write_pairs, write_report
from .uncertainty import OOVPolicy, read_scores, score_corpus, write_scores

log = logging.getLogger("monoselect")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def need(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _parallel(args):
    if getattr(args, "bitext", None):
        return read_parallel(args.bitext)
    need(args, "src", "tgt")
    return read_parallel(args.src, args.tgt)


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_xent(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith("#") or not line.strip():
                continue
            try:
                i, x = line.rstrip("\n").split("\t")
                out.append((int(i), float(x)))
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected line_index<TAB>cross_entropy") from None
    return out


# -- subcommands -----------------------------------------------------------

def cmd_vocab(args):
    need(args, "corpus", "out")
    vocab = build_vocab(read_mono(args.corpus))
    vocab.save(args.out)
    log.info("%d types, %d tokens", len(vocab), vocab.total_tokens)


def cmd_align_train(args):
    need(args, "out")
    null_prob = None if args.null_prob < 0 else args.null_prob
    params = train_ibm1(_parallel(args), args.iters, workers=args.workers, null_prob=null_prob)
    params.save(args.out)


def cmd_align(args):
    need(args, "params", "out")
    params = Model1Params.load(args.params)
    n = export_pharaoh((viterbi_align(params, s, t) for s, t in _parallel(args)), args.out)
    log.info("aligned %d pairs", n)


def cmd_dict_build(args):
    need(args, "align", "out")
    pairs = list(_parallel(args))
    lengths = [(len(s), len(t)) for s, t in pairs]
    table = build_dictionary(pairs, import_pharaoh(args.align, lengths), args.min_count, args.min_prob)
    table.save(args.out)
    if args.entropy_out:
        save_entropy_table(build_entropy_table(table, args.log_base), args.entropy_out)
    log.info("%d source words, %d entries", len(table), table.n_entries())


def cmd_score(args):
    need(args, "mono", "entropy", "out")
    entropy = load_entropy_table(args.entropy)
    vocab = None
    if args.rarity:
        need(args, "vocab")
        vocab = Vocab.load(args.vocab)
    alignments = None
    if args.coverage:
        need(args, "align")
        alignments = import_pharaoh(args.align)
    records = score_corpus(read_mono(args.mono), entropy, vocab, alignments,
                           OOVPolicy.parse(args.oov_policy), args.workers)
    summary = write_scores(records, args.out, rarity=args.rarity, with_coverage=args.coverage)
    print(json.dumps(summary.as_dict(), sort_keys=True))


def cmd_umax(args):
    need(args, "scores")
    us = [r.uncertainty for r in read_scores(args.scores) if r.uncertainty is not None]
    u_max = compute_umax(us, args.r)
    print(repr(u_max))
    if args.out:
        _write_json({"u_max": u_max, "r": args.r, "method": "nearest-rank", "n": len(us)}, args.out)


def cmd_sample(args):
    need(args, "scores", "out", "budget")
    strategy = args.strategy
    records = read_scores(args.scores)
    if strategy == "uncsamp":
        bitext_scores = None
        if args.umax is None:
            need(args, "bitext_scores")
            bitext_scores = [r.uncertainty for r in read_scores(args.bitext_scores) if r.uncertainty is not None]
        cfg = SamplerConfig(args.budget, args.beta, None if args.umax is not None else args.r,
                            args.umax, args.seed, strategy)
        result = sample_weighted(records, cfg, bitext_scores)
    elif strategy == "random":
        result = sample_random(records, SamplerConfig(args.budget, seed=args.seed, strategy="random"))
    elif strategy == "dwf":
        result = select_top_rarity(records, args.budget)
    else:
        need(args, "lm_scores")
        result = select_lowest_xent(_read_xent(args.lm_scores), args.budget)
    write_selection(result, args.out)
    meta = {"strategy": strategy, "seed": args.seed, "budget": args.budget, "u_max": result.u_max,
            "beta": args.beta if strategy == "uncsamp" else None, "percentile_method": "nearest-rank",
            **result.stats}
    _write_json(meta, args.out + ".json")
    if args.emit_text:
        need(args, "mono")
        chosen = set(result.selected)
        write_mono((s for s in read_mono(args.mono) if s.line_index in chosen), args.out + ".txt")


def cmd_bin(args):
    need(args, "scores", "out")
    records = list(read_scores(args.scores))
    if args.terciles:
        groups = list(group_terciles(records).items())
    else:
        groups = [(str(b), members) for b, members in enumerate(rank_bins(records, args.k), start=1)]
    rows = sorted((i, label) for label, members in groups for i in members)
    with open(args.out, "w", encoding="utf-8", newline="\n") as out:
        out.write("#line_index\tbin\n")
        for i, label in rows:
            out.write(f"{i}\t{label}\n")


def cmd_analyze_bins(args):
    need(args, "scores")
    records = {r.line_index: r for r in read_scores(args.scores)}
    if args.bins:
        groups: dict[str, list[int]] = {}
        with open(args.bins, encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("#") or not line.strip():
                    continue
                i, label = line.rstrip("\n").split("\t")
                groups.setdefault(label, []).append(int(i))
        bins = [groups[k] for k in groups]
    else:
        bins = rank_bins(records.values(), args.k)
    write_rows(bin_property_report(bins, records), args.out, as_json=args.json)


def cmd_lm_train(args):
    need(args, "corpus", "out")
    lm = train_lm(read_mono(args.corpus), args.order, args.discount)
    lm.save(args.out)


def cmd_lm_score(args):
    need(args, "model", "corpus", "out")
    lm = NGramModel.load(args.model)
    with open(args.out, "w", encoding="utf-8", newline="\n") as out:
        out.write("#line_index\tcross_entropy\n")
        for i, x in score_lines(lm, read_mono(args.corpus)):
            out.write(f"{i}\t{x:.6f}\n")


def cmd_filter_lm(args):
    need(args, "pairs", "model", "out")
    lm = NGramModel.load(args.model)
    pairs = list(read_pairs(args.pairs))
    kept = filter_by_lm(pairs, lm, args.drop, target=lambda p: p.target)
    write_pairs(kept, args.out)
    log.info("kept %d of %d pairs", len(kept), len(pairs))


def cmd_pair(args):
    need(args, "mono", "indices", "translations", "out")
    chosen = set(read_selection(args.indices))
    mono = list(read_mono(args.mono))
    selected = [s for s in mono if s.line_index in chosen]
    hyps = list(read_mono(args.translations))
    # translations of the whole monolingual file are subset by line index
    if len(hyps) == len(mono) != len(selected):
        hyps = [h for h in hyps if h.line_index in chosen]
    pairs = pair_translations(selected, hyps, args.tag)
    write_pairs(pairs, args.out)


def cmd_filter_synth(args):
    need(args, "pairs", "out")
    kept, report = filter_pairs(read_pairs(args.pairs), args.max_len, args.max_ratio,
                                symmetric=not args.one_sided)
    write_pairs(kept, args.out)
    write_report(report, args.report or args.out + ".report.json")


def cmd_combine(args):
    need(args, "synthetic", "out")
    counts = combine_corpora(_parallel(args), read_pairs(args.synthetic), args.out)
    print(json.dumps(counts, sort_keys=True))


def cmd_fmeasure(args):
    need(args, "hyp", "ref")
    if args.train_vocab:
        vocab = Vocab.load(args.train_vocab)
    else:
        need(args, "train_corpus")
        vocab = build_vocab(read_mono(args.train_corpus))
    scores = word_fmeasure_by_freq(read_mono(args.hyp), read_mono(args.ref), vocab,
                                   args.high, args.medium, per_sentence=args.per_sentence)
    write_rows([s.as_dict() for s in scores], args.out, as_json=args.json)


def cmd_run(args):
    need(args, "config")
    overrides = {k: getattr(args, k) for k in ("seed", "workers", "out_dir", "budget", "strategy")}
    for item in args.set or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            overrides[key.replace("-", "_")] = json.loads(val)
        except json.JSONDecodeError:
            overrides[key.replace("-", "_")] = val
    manifest = run_pipeline(load_config(args.config, overrides))
    print(json.dumps({"u_max": manifest["u_max"], "selected": manifest["selected"]}, sort_keys=True))


# -- parser ----------------------------------------------------------------

def _parallel_opts(p):
    p.add_argument("--src", help="source side, one sentence per line")
    p.add_argument("--tgt", help="target side, line-aligned with --src")
    p.add_argument("--bitext", help="alternatively, a src<TAB>tgt file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monoselect", description="Uncertainty-based monolingual data selection for self-training.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="flat JSON file supplying flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    # accept --config / -v after the subcommand too, without clobbering a top-level value
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="flat JSON file supplying flag defaults")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    p = sub.add_parser("vocab", help="unigram counts of a corpus")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("align-train", help="train IBM Model 1 on a bitext")
    _parallel_opts(p)
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--null-prob", type=float, default=0.08,
                   help="prior alignment mass on the null word; negative for uniform 1/(l+1)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_align_train)

    p = sub.add_parser("align", help="Viterbi-align a bitext into Pharaoh format")
    _parallel_opts(p)
    p.add_argument("--params")
    p.add_argument("--out")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("dict-build", help="bilingual dictionary and word entropies from alignments")
    _parallel_opts(p)
    p.add_argument("--align")
    p.add_argument("--min-count", type=int, default=0)
    p.add_argument("--min-prob", type=float, default=0.0)
    p.add_argument("--log-base", type=float, default=math.e)
    p.add_argument("--entropy-out")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dict_build)

    p = sub.add_parser("score-uncertainty", help="per-line uncertainty (and rarity/coverage)")
    p.add_argument("--mono")
    p.add_argument("--entropy")
    p.add_argument("--rarity", action="store_true")
    p.add_argument("--vocab")
    p.add_argument("--coverage", action="store_true")
    p.add_argument("--align")
    p.add_argument("--oov-policy", default="exclude")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("umax", help="percentile threshold over bitext scores")
    p.add_argument("--scores")
    p.add_argument("--r", type=float, default=90.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_umax)

    p = sub.add_parser("sample", help="select a monolingual subset")
    p.add_argument("--scores")
    p.add_argument("--strategy", choices=STRATEGIES, default="uncsamp")
    p.add_argument("--budget", type=int)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--r", type=float, default=90.0)
    p.add_argument("--umax", type=float)
    p.add_argument("--bitext-scores")
    p.add_argument("--lm-scores")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--emit-text", action="store_true")
    p.add_argument("--mono")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bin", help="assign lines to equal-sized uncertainty bins")
    p.add_argument("--scores")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--terciles", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bin)

    p = sub.add_parser("analyze-bins", help="per-bin length / rarity / coverage report")
    p.add_argument("--scores")
    p.add_argument("--bins", help="output of 'bin'; default: rank_bins with --k")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze_bins)

    p = sub.add_parser("lm-train", help="train a Kneser-Ney n-gram model")
    p.add_argument("--corpus")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lm_train)

    p = sub.add_parser("lm-score", help="per-line cross-entropy")
    p.add_argument("--model")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lm_score)

    p = sub.add_parser("filter-lm", help="drop the worst-scoring fraction of synthetic pairs")
    p.add_argument("--pairs")
    p.add_argument("--model")
    p.add_argument("--drop", type=float, default=0.2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_filter_lm)

    p = sub.add_parser("pair", help="pair selected lines with teacher translations (of the selection or of the whole file)")
    p.add_argument("--mono")
    p.add_argument("--indices")
    p.add_argument("--translations")
    p.add_argument("--tag", default="uncsamp")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("filter-synth", help="length and length-ratio filters for synthetic pairs")
    p.add_argument("--pairs")
    p.add_argument("--max-len", type=int, default=250)
    p.add_argument("--max-ratio", type=float, default=1.5)
    p.add_argument("--one-sided", action="store_true")
    p.add_argument("--report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_filter_synth)

    p = sub.add_parser("combine", help="concatenate bitext and synthetic pairs")
    _parallel_opts(p)
    p.add_argument("--synthetic")
    p.add_argument("--out")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("fmeasure", help="word F-measure by frequency bucket")
    p.add_argument("--hyp")
    p.add_argument("--ref")
    p.add_argument("--train-vocab")
    p.add_argument("--train-corpus")
    p.add_argument("--high", type=int, default=3000)
    p.add_argument("--medium", type=int, default=12000)
    p.add_argument("--per-sentence", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fmeasure)

    p = sub.add_parser("run", help="run the whole pipeline from a config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--budget", type=int)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    p.set_defaults(func=cmd_run)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` (except for ``run``, which reads it itself)."""
    args = parser.parse_args(argv)
    if not args.config or args.command == "run":
        return args
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    subparser.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items() if k.replace("-", "_") in known})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.command:
        parser.print_help(sys.stderr)
        return 1
    try:
        args.func(args)
    except UsageError as exc:
        print(f"monoselect {args.command}: {exc}", file=sys.stderr)
        return 1
    except (DataError, PipelineError, OSError, ValueError) as exc:
        print(f"monoselect {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
