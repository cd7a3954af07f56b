"""Command-line entry point: ``seqsearch {decode,sweep,compare,gen-instances,score}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys

from ..core import SeqSearchError
from ..metrics import BleuConfig, ChrfConfig, LengthMismatchError, chrf, corpus_bleu, sentence_bleu
from .config import ConfigError, load_config, parse_budgets, parse_objective
from .instances import generate_instances
from .runner import DataError, compare_decoders, fmt, run_decode, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, multi_config: bool = False) -> None:
    if multi_config:
        p.add_argument("--config", action="append", required=True, help="JSON config (give twice to compare two)")
    else:
        p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--corpus", help="source sentences, one per line")
    p.add_argument("--refs", help="reference sentences, one per line")
    p.add_argument("--out", help="output CSV (default: config 'output', else stdout)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--budget", help="comma-separated budget grid")
    p.add_argument("--decoder", help="decoder name (comma-separated list for sweep/compare)")
    p.add_argument("--objective", help="objective: JSON spec or type[:key=value,...]")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqsearch", description="Sequence decoding experiments on toy models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decode", help="decode a corpus at one budget")
    _common(p)
    p.add_argument("--trace", help="per-iteration trace TSV (tree-search decoders)")

    p = sub.add_parser("sweep", help="decode a corpus over the budget grid")
    _common(p)
    p.add_argument("--trace", help="per-iteration trace TSV (tree-search decoders)")

    p = sub.add_parser("compare", help="best-budget comparison of two decoders")
    _common(p, multi_config=True)

    p = sub.add_parser("gen-instances", help="write a seeded family of toy instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--vocab-size", type=int, default=4, help="including EOS")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--Y", "--max-len", dest="max_len", type=int, default=5)
    p.add_argument("--enumeration-limit", type=int, default=1_000_000)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("score", help="corpus BLEU, mean sentence BLEU and mean chrF of a hypothesis file")
    p.add_argument("--hyps", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--out", help="output CSV (default stdout)")
    return parser


def _config(path: str, args):
    cfg = load_config(path)
    budgets = parse_budgets(args.budget) if args.budget else None
    objective = parse_objective(args.objective) if args.objective else None
    return cfg.override(corpus=args.corpus, refs=args.refs, seed=args.seed, budgets=budgets,
                        decoder=args.decoder, objective=objective)


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _cmd_decode(args) -> int:
    cfg = _config(args.config, args)
    with contextlib.ExitStack() as stack:
        trace = stack.enter_context(_output(args.trace)) if args.trace else None
        report = run_decode(cfg, trace=trace)
    with _output(args.out or cfg.output) as fh:
        report.write_csv(fh)
    print(f"{report.decoder} budget={report.budget} objective={report.objective} "
          f"mean_score={fmt(report.mean_score)} corpus_bleu={fmt(report.corpus_bleu)} "
          f"sentences={report.successes} failed={report.failures}", file=sys.stderr)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config(args.config, args)
    with contextlib.ExitStack() as stack:
        trace = stack.enter_context(_output(args.trace)) if args.trace else None
        report = run_sweep(cfg, trace=trace)
    with _output(args.out or cfg.output) as fh:
        report.write_csv(fh)
    if report.failures:
        print(f"warning: {report.failures} sentence decodes failed; aggregates cover successes only",
              file=sys.stderr)
    return EXIT_OK


def _cmd_compare(args) -> int:
    paths = args.config
    if len(paths) == 2:
        cfg_a, cfg_b = (_config(p, args) for p in paths)
        if args.decoder:
            raise ConfigError("with two configs, set the decoders inside them")
    elif len(paths) == 1:
        cfg = _config(paths[0], args)
        if len(cfg.decoder) != 2:
            raise ConfigError("compare needs two configs or exactly two decoders (--decoder a,b)")
        cfg_a, cfg_b = cfg.override(decoder=cfg.decoder[:1]), cfg.override(decoder=cfg.decoder[1:])
    else:
        raise ConfigError("compare takes one or two --config files")
    comparison = compare_decoders(cfg_a, cfg_b)
    with _output(args.out or cfg_a.output) as fh:
        comparison.write_csv(fh)
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.count < 1 or args.vocab_size < 2 or args.order < 0 or args.max_len < 1:
        raise UsageError("count >= 1, vocab-size >= 2, order >= 0 and Y >= 1 are required")
    generate_instances(args.seed, args.count, args.vocab_size, args.order, args.max_len, args.out,
                       args.enumeration_limit)
    return EXIT_OK


def _lines(path) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _cmd_score(args) -> int:
    hyps, refs = _lines(args.hyps), _lines(args.refs)
    if len(hyps) != len(refs):
        raise LengthMismatchError(f"{len(hyps)} hypotheses but {len(refs)} references")
    bcfg, ccfg = BleuConfig(), ChrfConfig()
    n = len(hyps)
    rows = [
        ("corpus_bleu", corpus_bleu(bcfg, hyps, refs)),
        ("mean_sentence_bleu", math.fsum(sentence_bleu(bcfg, h, r) for h, r in zip(hyps, refs)) / n if n else 0.0),
        ("mean_chrf", math.fsum(chrf(ccfg, h, r) for h, r in zip(hyps, refs)) / n if n else 0.0),
        ("sentences", n),
    ]
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("metric", "value"))
        for name, value in rows:
            w.writerow((name, fmt(value)))
    return EXIT_OK


COMMANDS = {
    "decode": _cmd_decode,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "gen-instances": _cmd_gen,
    "score": _cmd_score,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, LengthMismatchError, SeqSearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
