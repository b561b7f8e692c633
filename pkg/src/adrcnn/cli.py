"""Command-line entry point.

Exit status: 0 success, 1 runtime/experiment failure, 2 usage or file error.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import fields

from . import corpus as corpus_mod
from .embeddings import load_lexicon
from .errors import (AdrCnnError, CheckpointError, CorpusFormatError, EmbeddingFormatError,
                     ShapeError)
from .experiment import ExperimentConfig, render_table, run_experiment, write_outputs
from .neuralnet import load_checkpoint, predict
from .synthetic import write_synthetic
from .textprep import Vocabulary, build_vocabulary, encode_batch, sentence_tokens

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _require(path):
    if not os.path.exists(path):
        raise UsageError(f"no such file: {path}")


def cmd_prepare(args):
    _require(args.pos)
    _require(args.neg)
    records, stats = corpus_mod.load_corpus(args.pos, args.neg, dedup=not args.no_dedup)
    os.makedirs(args.out, exist_ok=True)
    corpus_mod.write_records(records, os.path.join(args.out, "records.tsv"))
    with open(os.path.join(args.out, "stats.json"), "w", encoding="utf-8") as fh:
        fh.write(stats.to_json() + "\n")
    vocab = build_vocabulary(sentence_tokens(r.text, args.lowercase) for r in records)
    vocab.save(os.path.join(args.out, "vocab.tsv"))
    print(stats.to_json())
    return EXIT_OK


def cmd_embeddings_info(args):
    _require(args.emb)
    keep = None
    vocab = None
    if args.vocab:
        _require(args.vocab)
        vocab = Vocabulary.load(args.vocab)
        keep = set(vocab.content_tokens)
    lex = load_lexicon(args.emb, args.format, keep=keep)
    info = {"dim": lex.dim, "count": lex.seen}
    if lex.declared_count is not None:
        info["declared_count"] = lex.declared_count
    if lex.skipped_lines:
        info["skipped_lines"] = lex.skipped_lines
    if vocab is not None:
        info["coverage"] = lex.coverage(vocab)
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def _config_from_args(args):
    data = {}
    if args.config:
        _require(args.config)
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise UsageError("config file must hold a flat JSON object")
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            data[f.name] = value
    try:
        config = ExperimentConfig.from_dict(data)
        config.check_inputs()
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    except FileNotFoundError as exc:
        raise UsageError(f"no such file: {exc}") from None
    return config


def cmd_cv(args):
    config = _config_from_args(args)
    report = run_experiment(config, jobs=args.jobs,
                            fold_dir=os.path.join(args.out, "folds") if args.out else None,
                            save_checkpoints=args.save_checkpoints)
    label = args.label or f"{config.architecture}"
    if args.out:
        write_outputs(report, args.out, label)
    sys.stdout.write(render_table([report], [label]))
    return EXIT_OK


def cmd_score(args):
    _require(args.checkpoint)
    _require(args.input)
    params, manifest = load_checkpoint(args.checkpoint)
    if args.architecture and args.architecture != params.architecture:
        raise CheckpointError(f"checkpoint holds a {params.architecture} model, "
                              f"not {args.architecture}")
    extra = manifest.get("extra", {})
    if "vocabulary" not in extra or "max_len" not in extra:
        raise CheckpointError("checkpoint lacks vocabulary/max_len needed for scoring")
    vocab = Vocabulary(tuple(extra["vocabulary"]))
    if len(vocab) != params.embedding.shape[0]:
        raise CheckpointError("vocabulary size does not match the embedding matrix")
    tau = args.threshold if args.threshold is not None else extra.get("threshold", 0.5)
    with open(args.input, encoding="utf-8") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]
    if not lines:
        return EXIT_OK
    x = encode_batch([sentence_tokens(ln, extra.get("lowercase", False)) for ln in lines],
                     vocab, int(extra["max_len"]))
    scores = predict(x, params)
    out = sys.stdout
    for s in scores:
        out.write(f"{s:.10f}\t{int(s >= tau)}\n")
    return EXIT_OK


def cmd_synth(args):
    pos, neg = write_synthetic(args.out, n=args.n, positive_fraction=args.positive_fraction,
                               seed=args.seed)
    print(json.dumps({"pos": pos, "neg": neg}))
    return EXIT_OK


def _add_config_flags(p):
    for f in fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type is bool or f.type == "bool":
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction,
                           default=None)
        else:
            kind = {"int": int, "float": float}.get(getattr(f.type, "__name__", f.type), str)
            p.add_argument(flag, dest=f.name, type=kind, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adrcnn", description="ADR sentence classification with 1D CNNs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="parse and de-duplicate the ADE corpus")
    p.add_argument("--pos", required=True, help="DRUG-AE.rel")
    p.add_argument("--neg", required=True, help="ADE-NEG.txt")
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("embeddings-info", help="describe a pretrained embedding file")
    p.add_argument("--emb", required=True)
    p.add_argument("--format", required=True, choices=["glove-text", "word2vec-binary"])
    p.add_argument("--vocab", help="vocabulary file (token<TAB>index) for coverage")
    p.set_defaults(func=cmd_embeddings_info)

    p = sub.add_parser("cv", help="run a k-fold cross-validation experiment")
    p.add_argument("--config", help="flat JSON experiment config; flags override it")
    p.add_argument("--out", help="output directory for report.json, table.txt, folds.csv")
    p.add_argument("--jobs", type=int, default=1, help="folds trained in parallel")
    p.add_argument("--label", help="column label in the rendered table")
    p.add_argument("--save-checkpoints", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("score", help="score sentences with a saved checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="one sentence per line")
    p.add_argument("--threshold", type=float, help="defaults to the checkpoint's threshold")
    p.add_argument("--architecture", choices=["huynh", "hughes"])
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("synth", help="write a keyword-labelled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--positive-fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"adrcnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusFormatError, EmbeddingFormatError) as exc:
        print(f"adrcnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AdrCnnError, ShapeError) as exc:
        print(f"adrcnn: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
