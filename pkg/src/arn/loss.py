"""Bag Loss, max-margin boundary losses, bag weights and the marginalisation baseline."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .autodiff import Node, logsumexp, log_softmax, reduce_max, relu, stack, total
from .corpus import NIL, Bag, Mention, Sentence, Vocab, build_bags
from .model import SentenceEncoding, boundary_scores


@dataclass(frozen=True)
class TrainInstance:
    """``(i, j, k, c)``: token ``i`` of ``bag`` whose mention spans ``j..k`` with label ``c``.

    NIL instances use ``j = k = i``.
    """

    i: int
    j: int
    k: int
    label: str
    bag: Bag

    @property
    def is_nil(self) -> bool:
        return self.label == NIL


@dataclass
class LossBreakdown:
    total: Node
    anchor_term: float
    boundary_term: float
    omega: float


def train_instances(bags: Sequence[Bag]) -> list[TrainInstance]:
    """One instance per token, ordered by token index."""
    out = []
    for bag in bags:
        for i in bag.members:
            if bag.is_nil:
                out.append(TrainInstance(i, i, i, NIL, bag))
            else:
                out.append(TrainInstance(i, bag.source.start, bag.source.end, bag.label, bag))
    out.sort(key=lambda inst: inst.i)
    return out


def _margin(row: Node, gold: int, competitors: list[int], gamma: float) -> Node:
    if not competitors:
        return row.tape.constant(0.0)
    best = reduce_max(row[np.array(competitors)])
    return relu(gamma - row[gold] + best)


def boundary_loss_left(i: int, j: int, L_row: Optional[Node], label: str, gamma: float,
                       restrict: bool = True, tape=None) -> Node:
    """``max(0, gamma - L_ij + max_{t != j} L_it)``; zero for NIL.

    With ``restrict`` the competitors are the positions ``t <= i`` only.
    An empty competitor set gives zero loss.
    """
    if label == NIL:
        return (tape or L_row.tape).constant(0.0)
    if j > i:
        raise ValueError(f"left boundary {j} lies right of anchor {i}")
    n = L_row.value.shape[0]
    span = range(i + 1) if restrict else range(n)
    return _margin(L_row, j, [t for t in span if t != j], gamma)


def boundary_loss_right(i: int, k: int, R_row: Optional[Node], label: str, gamma: float,
                        restrict: bool = True, tape=None) -> Node:
    """Mirror of :func:`boundary_loss_left`; competitors ``t >= i`` when restricted."""
    if label == NIL:
        return (tape or R_row.tape).constant(0.0)
    if k < i:
        raise ValueError(f"right boundary {k} lies left of anchor {i}")
    n = R_row.value.shape[0]
    span = range(i, n) if restrict else range(n)
    return _margin(R_row, k, [t for t in span if t != k], gamma)


def bag_weights(bag: Bag, type_probs: np.ndarray, alpha: float) -> dict[int, float]:
    """Per-member weight ``(P(c|x_t) / max_u P(c|x_u)) ** alpha``.

    ``type_probs[t]`` is the current probability of token ``t`` for the bag's
    type. The result is a plain float (no gradient flows through it).
    """
    p = np.asarray(type_probs, dtype=np.float64)
    best = max(p[t] for t in bag.members)
    if best <= 0.0:
        return {t: 1.0 for t in bag.members}
    return {t: float((p[t] / best) ** alpha) for t in bag.members}


def bag_argmax(bag: Bag, type_probs: np.ndarray) -> int:
    """The member with highest type probability; lowest index on ties."""
    return max(bag.members, key=lambda t: (type_probs[t], -t))


def sentence_omegas(bags: Sequence[Bag], probs: np.ndarray, vocab: Vocab, alpha: float) -> np.ndarray:
    """Bag weight of every token of the sentence."""
    n = sum(len(b.members) for b in bags)
    omega = np.ones(n)
    for bag in bags:
        if bag.is_nil:
            continue
        for t, w in bag_weights(bag, probs[:, vocab.label_id[bag.label]], alpha).items():
            omega[t] = w
    return omega


def bag_loss_instance(inst: TrainInstance, enc: SentenceEncoding, omega: float, gamma: float,
                      vocab: Vocab, restrict: bool = True) -> LossBreakdown:
    """``omega * [-log P(c|x_i) + L_left + L_right] + (1 - omega) * [-log P(NIL|x_i)]``."""
    lp = enc.log_probs
    nil_nll = -lp[inst.i, vocab.nil_id]
    if inst.is_nil:
        return LossBreakdown(nil_nll, nil_nll.item(), 0.0, 1.0)
    anchor_nll = -lp[inst.i, vocab.label_id[inst.label]]
    L_row, R_row = boundary_scores(inst.i, enc.hR, enc.r)
    region = (boundary_loss_left(inst.i, inst.j, L_row, inst.label, gamma, restrict)
              + boundary_loss_right(inst.i, inst.k, R_row, inst.label, gamma, restrict))
    loss = omega * (anchor_nll + region) + (1.0 - omega) * nil_nll
    anchor_term = omega * anchor_nll.item() + (1.0 - omega) * nil_nll.item()
    return LossBreakdown(loss, anchor_term, omega * region.item(), omega)


def sentence_loss(s: Sentence, enc: SentenceEncoding, vocab: Vocab, alpha: float = 1.0, gamma: float = 0.5,
                  bags: Optional[Sequence[Bag]] = None, omegas: Optional[np.ndarray] = None,
                  restrict: bool = True) -> Node:
    """Sum of Bag Loss over every token of the sentence.

    ``omegas`` (one per token) default to the bag weights under the current
    probabilities; pass them explicitly to hold them fixed.
    """
    bags = build_bags(s) if bags is None else bags
    if omegas is None:
        omegas = sentence_omegas(bags, enc.probs, vocab, alpha)
    terms = [bag_loss_instance(inst, enc, float(omegas[inst.i]), gamma, vocab, restrict).total
             for inst in train_instances(bags)]
    return total(stack(terms))


def naive_sentence_loss(s: Sentence, enc: SentenceEncoding, vocab: Vocab, gamma: float = 0.5,
                        bags: Optional[Sequence[Bag]] = None, restrict: bool = True) -> Node:
    """Every bag member treated as an anchor of the bag type."""
    bags = build_bags(s) if bags is None else bags
    lp = enc.log_probs
    terms = []
    for inst in train_instances(bags):
        if inst.is_nil:
            terms.append(-lp[inst.i, vocab.nil_id])
            continue
        L_row, R_row = boundary_scores(inst.i, enc.hR, enc.r)
        region = (boundary_loss_left(inst.i, inst.j, L_row, inst.label, gamma, restrict)
                  + boundary_loss_right(inst.i, inst.k, R_row, inst.label, gamma, restrict))
        terms.append(-lp[inst.i, vocab.label_id[inst.label]] + region)
    return total(stack(terms))


# -- marginalisation baseline ------------------------------------------------


def _marginal_terms(mention: Mention, enc: SentenceEncoding, vocab: Vocab) -> Node:
    """Log of ``P(c|x_i) P_left(j|i) P_right(k|i)`` for each candidate anchor i in the mention."""
    j, k = mention.start, mention.end
    c = vocab.label_id[mention.label]
    n = len(enc)
    terms = []
    for i in range(j, k + 1):
        L_row, R_row = boundary_scores(i, enc.hR, enc.r)
        left = log_softmax(L_row[0:i + 1])[j]
        right = log_softmax(R_row[i:n])[k - i]
        terms.append(enc.log_probs[i, c] + left + right)
    return stack(terms)


def marginal_inner_sum(mention: Mention, enc: SentenceEncoding, vocab: Vocab) -> float:
    return float(np.exp(_marginal_terms(mention, enc, vocab).value).sum())


def marginal_loss(mention: Mention, enc: SentenceEncoding, vocab: Vocab) -> Node:
    """``-log sum_{i in [j, k]} P(c|x_i) P_left(j|i) P_right(k|i)``.

    The boundary distributions are softmaxes of the score rows over the
    valid side of the anchor (``t <= i`` for left, ``t >= i`` for right).
    """
    if mention.label == NIL:
        raise ValueError("marginal loss is defined for entity mentions only")
    return -logsumexp(_marginal_terms(mention, enc, vocab))


def marginal_sentence_loss(s: Sentence, enc: SentenceEncoding, vocab: Vocab) -> Node:
    """Marginal loss of every gold mention plus ``-log P(NIL|x)`` for uncovered tokens."""
    covered = np.zeros(len(s), dtype=bool)
    terms = []
    for m in s.mentions:
        covered[m.start:m.end + 1] = True
        terms.append(marginal_loss(m, enc, vocab))
    terms.extend(-enc.log_probs[t, vocab.nil_id] for t in np.flatnonzero(~covered))
    return total(stack(terms))
