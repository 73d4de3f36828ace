"""Command-line entry point.

Subcommands: train, eval, gradcheck, gen-corpus, diagnose.
Exit codes: 0 success, 1 check failure, 2 input error, 3 runtime abort.
"""

import argparse
import logging
import os
import sys

from .checkpoint import load_checkpoint, vocab_hash
from .config import parse_config_file
from .encoder import load_vocab
from .errors import (
    CheckpointError,
    ConfigError,
    EvalDataError,
    TrainingAbort,
    UnseeError,
)
from .evaluation import collapse_report, load_pairs, sts_eval
from .gradcheck import TOLERANCE, run_full_suite
from .synthetic import generate, write_corpus
from .training import train, write_metrics_csv

log = logging.getLogger("unsee")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_RUNTIME_ABORT = 3


def _setup_logging() -> None:
    level = os.environ.get("UNSEE_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def _read_corpus(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def cmd_train(args) -> int:
    try:
        run = parse_config_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    try:
        corpus = _read_corpus(run.corpus)
        dev = load_pairs(run.dev)
    except (OSError, EvalDataError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    try:
        report = train(run.train, corpus, dev, out_dir=run.out_dir)
    except TrainingAbort as exc:
        print(f"training aborted at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ABORT
    except UnseeError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    write_metrics_csv(report.rows, os.path.join(run.out_dir, "metrics.csv"))
    print(f"best_spearman={report.best_spearman!r} best_step={report.best_step}")
    return EXIT_OK


def _load_model_and_vocab(ckpt_path):
    bundle = load_checkpoint(ckpt_path)
    vocab_path = os.path.join(os.path.dirname(os.path.abspath(ckpt_path)), "vocab.txt")
    vocab = load_vocab(vocab_path)
    if vocab_hash(vocab) != bundle.meta["vocab_hash"]:
        raise CheckpointError(f"vocabulary at {vocab_path} does not match checkpoint hash")
    return bundle, vocab


def cmd_eval(args) -> int:
    try:
        bundle, vocab = _load_model_and_vocab(args.checkpoint)
        pairs = load_pairs(args.pairs)
        result = sts_eval(bundle.model, pairs, vocab)
    except (OSError, UnseeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    print(f"spearman={result.spearman * 100.0!r}")
    print(f"n_pairs={result.n_pairs}")
    print(f"effective_rank={result.diagnostics.effective_rank!r}")
    print(f"mean_dim_std={result.diagnostics.mean_dim_std!r}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    failed = False
    for seed in range(args.seed, args.seed + args.n_seeds):
        results = run_full_suite(seed, perturb=args.perturb)
        for name, err in results.items():
            status = "ok" if err < TOLERANCE else "FAIL"
            print(f"seed={seed} {name}: max_rel_error={err:.3e} {status}")
            if err >= TOLERANCE:
                failed = True
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_gen_corpus(args) -> int:
    try:
        data = generate(args.seed, args.n, args.topics)
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    try:
        os.makedirs(args.out, exist_ok=True)
        write_corpus(
            data,
            os.path.join(args.out, "corpus.txt"),
            os.path.join(args.out, "dev.tsv"),
        )
    except OSError as exc:
        print(f"input error: cannot write to {args.out}: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    print(f"wrote {len(data.sentences)} sentences and {len(data.dev_pairs)} dev pairs to {args.out}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    from .architectures import embed_for_eval
    from .encoder import tokenize_batch

    try:
        bundle, vocab = _load_model_and_vocab(args.checkpoint)
        sentences = _read_corpus(args.corpus)
        if not sentences:
            raise UnseeError("empty corpus")
        batch = tokenize_batch(sentences, vocab, bundle.model.encoder.max_len)
        report = collapse_report(embed_for_eval(bundle.model, batch))
    except (OSError, UnseeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    print(f"effective_rank={report.spectrum.effective_rank!r}")
    print(f"mean_dim_std={report.spectrum.mean_dim_std!r}")
    print(f"mean_pairwise_cosine={report.mean_pairwise_cosine!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unsee",
        description="Non-contrastive sentence-embedding training at desk scale",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train from a key=value config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a pairs TSV")
    p.add_argument("checkpoint")
    p.add_argument("pairs")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-seeds", type=int, default=1)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus + dev TSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--topics", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("diagnose", help="collapse diagnostics for a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
