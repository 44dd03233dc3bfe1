"""Per-sentence training loop with Adadelta and optional dev-set early stopping."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autodiff import backward
from .config import ConfigError, RunConfig
from .corpus import Sentence, Vocab, build_bags, build_vocab, load_embeddings
from .decode import EvalReport, decode_corpus, evaluate
from .loss import marginal_sentence_loss, naive_sentence_loss, sentence_loss, sentence_omegas
from .model import ArnParams, encode_sentence
from .optim import AdadeltaState, adadelta_step, clip_global_norm

log = logging.getLogger(__name__)

LOG_FIELDS = ["epoch", "seen", "mean_loss", "dev_p", "dev_r", "dev_f1"]


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainResult:
    params: ArnParams
    vocab: Vocab
    log: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_dev: Optional[EvalReport] = None


def sentence_objective(s: Sentence, params: ArnParams, vocab: Vocab, cfg: RunConfig, tape=None):
    """Training loss of one sentence under ``cfg.loss_mode``; returns (tape, loss)."""
    enc = encode_sentence(params, s, vocab, tape)
    if cfg.loss_mode == "marginal":
        loss = marginal_sentence_loss(s, enc, vocab)
    elif cfg.loss_mode == "naive":
        loss = naive_sentence_loss(s, enc, vocab, cfg.gamma, restrict=cfg.restrict_competitors)
    else:
        bags = build_bags(s)
        omegas = sentence_omegas(bags, enc.probs, vocab, cfg.alpha)
        loss = sentence_loss(s, enc, vocab, cfg.alpha, cfg.gamma, bags=bags, omegas=omegas,
                             restrict=cfg.restrict_competitors)
    return enc.tape, loss


def train(corpus: Sequence[Sentence], cfg: RunConfig, dev: Optional[Sequence[Sentence]] = None,
          vocab: Optional[Vocab] = None, params: Optional[ArnParams] = None,
          log_path=None) -> TrainResult:
    """Train an ARN; deterministic for a fixed ``cfg.seed``.

    Each epoch visits the sentences in a seeded random order and applies one
    Adadelta step per sentence. With a dev set, the parameters of the best
    dev-F1 epoch are returned; ``cfg.patience`` and ``cfg.target_f1`` stop
    training early.
    """
    cfg.validate()
    if not corpus:
        raise ConfigError("training corpus is empty")
    vocab = vocab if vocab is not None else build_vocab(corpus)
    if params is None:
        params = ArnParams.init(cfg, vocab)
        if cfg.embeddings:
            load_embeddings(cfg.embeddings, vocab, params["emb.word"])
    state = AdadeltaState(cfg.rho, cfg.eps)
    frozen = () if cfg.train_pos else ("emb.pos",)
    rng = np.random.default_rng(cfg.seed)
    result = TrainResult(params, vocab)
    best_params, best_f1, stale = None, -1.0, 0
    seen = 0

    writer = None
    log_file = open(log_path, "w", newline="", encoding="utf-8") if log_path else None
    try:
        if log_file:
            writer = csv.DictWriter(log_file, fieldnames=LOG_FIELDS)
            writer.writeheader()
        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(len(corpus))
            losses = []
            for idx in order:
                s = corpus[idx]
                tape, loss = sentence_objective(s, params, vocab, cfg)
                value = loss.item()
                if not math.isfinite(value):
                    raise DivergenceError(f"non-finite loss {value} at epoch {epoch} on sentence {idx}: {' '.join(s.words)}")
                grads = backward(tape, loss)
                clip_global_norm(grads, cfg.clip)
                adadelta_step(params.arrays, grads, state, frozen)
                losses.append(value)
                seen += 1
            row = {"epoch": epoch, "seen": seen, "mean_loss": float(np.mean(losses)),
                   "dev_p": "", "dev_r": "", "dev_f1": ""}
            if dev is not None:
                rep = evaluate(decode_corpus(dev, params, vocab, cfg.max_len, cfg.anchor_min_prob), dev)
                row.update(dev_p=rep.precision, dev_r=rep.recall, dev_f1=rep.f1)
                if rep.f1 > best_f1:
                    best_f1, best_params, stale = rep.f1, params.copy(), 0
                    result.best_epoch, result.best_dev = epoch, rep
                else:
                    stale += 1
            log.info("epoch %d loss %.4f dev_f1 %s", epoch, row["mean_loss"], row["dev_f1"])
            result.log.append(row)
            if writer:
                writer.writerow(row)
                log_file.flush()
            if dev is not None:
                if cfg.target_f1 is not None and best_f1 >= cfg.target_f1:
                    break
                if cfg.patience is not None and stale >= cfg.patience:
                    break
    finally:
        if log_file:
            log_file.close()
    if best_params is not None:
        result.params = best_params
    else:
        result.best_epoch = len(result.log)
    return result
