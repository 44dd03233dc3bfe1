"""Command-line entry point: ``arn {gen,train,predict,eval,gradcheck,sweep-alpha,inspect}``.

Settings come from dataclass defaults, then an optional JSON ``--config``
file, then command-line flags (highest precedence).

Exit codes: 0 success, 1 usage/config error, 2 validation error,
3 numerical failure (gradient check or divergence).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from typing import Optional

from .autodiff import grad_check
from .config import ConfigError, RunConfig
from .corpus import CorpusError, Mention, Sentence, Token, build_bags, build_vocab, load_corpus, save_corpus
from .decode import anchor_report, decode_corpus, evaluate, load_predictions, prediction_json
from .loss import sentence_loss, sentence_omegas
from .model import ArnParams, CheckpointError, encode_sentence, load_checkpoint, save_checkpoint
from .synthetic import GrammarConfig, generate_synthetic
from .train import DivergenceError, train

log = logging.getLogger("arn")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3
GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_DIMS = dict(word_dim=3, pos_dim=2, char_dim=2, char_hidden=2, hidden=3,
                      mlp_hidden=[3], conv_dim=3, conv_k=1, init_scale=0.5)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


_TYPES = {"int": int, "float": float, "bool": _bool, "str": str, "list[int]": _int_list}


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with flat RunConfig keys")
    group = p.add_argument_group("run configuration")
    for f in dataclasses.fields(RunConfig):
        kind = str(f.type).replace("Optional[", "").rstrip("]")
        kind = "list[int]" if kind.startswith("list[int") else kind
        group.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name,
                           type=_TYPES[kind], default=None, metavar=kind.upper())


def resolve_config(args, base: Optional[dict] = None) -> RunConfig:
    """Defaults < ``base`` < config file < explicit flags."""
    values = dict(base or {})
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        with open(args.config, encoding="utf-8") as f:
            try:
                values.update(json.load(f))
            except json.JSONDecodeError as e:
                raise ConfigError(f"{args.config}: invalid JSON ({e.msg})") from None
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, "cfg_" + f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig.from_json(values).validate()


def _require(cfg: RunConfig, *names):
    for name in names:
        path = getattr(cfg, name)
        if path is None:
            raise ConfigError(f"--{name} is required")
        if name in ("train", "dev", "test", "embeddings") and not os.path.exists(path):
            raise ConfigError(f"{name} file not found: {path}")


# -- commands ------------------------------------------------------------------


def cmd_gen(args) -> int:
    cfg = resolve_config(args)
    grammar = GrammarConfig(n_sentences=cfg.gen_sentences, nesting=cfg.gen_nesting)
    sents = generate_synthetic(grammar, cfg.seed)
    save_corpus(sents, args.out)
    log.info("wrote %d sentences to %s", len(sents), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    _require(cfg, "train", "checkpoint")
    corpus = load_corpus(cfg.train)
    dev = load_corpus(cfg.dev) if cfg.dev else None
    result = train(corpus, cfg, dev=dev, log_path=cfg.log)
    save_checkpoint(cfg.checkpoint, result.params, result.vocab, cfg)
    if result.best_dev is not None:
        print(json.dumps({"best_epoch": result.best_epoch, **result.best_dev.to_json()}))
    return EXIT_OK


def cmd_predict(args) -> int:
    params, vocab, cfg = load_checkpoint(args.checkpoint)
    corpus = load_corpus(args.input)
    unknown = sorted({m.label for s in corpus for m in s.mentions} - set(vocab.entity_types))
    if unknown:
        raise CorpusError(f"{args.input}: labels {unknown} are not in the checkpoint label set {vocab.entity_types}")
    max_len = args.max_len if args.max_len is not None else cfg.max_len
    preds = decode_corpus(corpus, params, vocab, max_len, cfg.anchor_min_prob, jobs=args.jobs)
    with open(args.out, "w", encoding="utf-8") as f:
        for s, p in zip(corpus, preds):
            f.write(json.dumps(prediction_json(s, p), ensure_ascii=False) + "\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    gold = load_corpus(args.gold)
    sents, preds = load_predictions(args.pred)
    if len(sents) != len(gold):
        raise CorpusError(f"{len(sents)} predicted sentences but {len(gold)} gold sentences")
    for k, (a, b) in enumerate(zip(sents, gold)):
        if a.words != b.words:
            raise CorpusError(f"sentence {k}: prediction tokens differ from gold")
    report = evaluate(preds, gold)
    print(report.table())
    print(json.dumps(report.to_json()))
    return EXIT_OK


GRADCHECK_SENTENCE = Sentence(
    [Token(w, p) for w, p in zip(["the", "minister", "of", "the", "department"], ["DT", "NN", "IN", "DT", "NN"])],
    [Mention(0, 4, "PER"), Mention(3, 4, "ORG")],
)


def gradcheck_error(cfg: RunConfig, sentence: Sentence = GRADCHECK_SENTENCE, epsilon: float = 1e-5) -> float:
    """Worst relative error of the full Bag Loss gradient, bag weights held fixed."""
    vocab = build_vocab([sentence])
    params = ArnParams.init(cfg, vocab)
    bags = build_bags(sentence)
    enc = encode_sentence(params, sentence, vocab)
    omegas = sentence_omegas(bags, enc.probs, vocab, cfg.alpha)

    def loss_fn(tape):
        e = encode_sentence(params, sentence, vocab, tape)
        return sentence_loss(sentence, e, vocab, cfg.alpha, cfg.gamma, bags=bags, omegas=omegas,
                             restrict=cfg.restrict_competitors)

    return grad_check(loss_fn, params.arrays, epsilon)


def cmd_gradcheck(args) -> int:
    cfg = resolve_config(args, base=GRADCHECK_DIMS)
    sentence = GRADCHECK_SENTENCE
    if cfg.train:
        sentence = next((s for s in load_corpus(cfg.train) if len(s) == 5 and s.mentions), sentence)
    err = gradcheck_error(cfg, sentence)
    ok = err < GRADCHECK_TOLERANCE
    print(json.dumps({"max_relative_error": err, "tolerance": GRADCHECK_TOLERANCE, "pass": ok}))
    return EXIT_OK if ok else EXIT_NUMERIC


def sweep_alpha(corpus, dev, cfg: RunConfig, alphas) -> list[dict]:
    rows = []
    for alpha in alphas:
        result = train(corpus, cfg.replace(alpha=float(alpha)), dev=dev)
        rep = result.best_dev
        rows.append({"alpha": float(alpha), "dev_p": rep.precision, "dev_r": rep.recall,
                     "dev_f1": rep.f1, "best_epoch": result.best_epoch})
    return rows


def cmd_sweep_alpha(args) -> int:
    cfg = resolve_config(args)
    _require(cfg, "train", "dev")
    alphas = [float(a) for a in args.alphas.split(",")]
    rows = sweep_alpha(load_corpus(cfg.train), load_corpus(cfg.dev), cfg, alphas)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=["alpha", "dev_p", "dev_r", "dev_f1", "best_epoch"])
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_inspect(args) -> int:
    params, vocab, _ = load_checkpoint(args.checkpoint)
    report = anchor_report(load_corpus(args.input), params, vocab, args.top_n)
    for label, words in report.items():
        print(f"{label:<6} " + ", ".join(f"{w} ({n})" for w, n in words))
    print(json.dumps(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("gen", help="write a synthetic nested-mention corpus")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="decode a corpus with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="micro P/R/F1 of predictions against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full Bag Loss gradient")
    _add_config_flags(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sweep-alpha", help="dev F1 for several bag-weight exponents")
    p.add_argument("--alphas", default="0,0.2,0.4,0.6,0.8,1.0,1.2")
    p.add_argument("--out", default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("inspect", help="most frequent anchor words per type")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--top-n", type=int, default=10)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ARN_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, CheckpointError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergenceError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
