"""Anchor-first decoding and micro-averaged span evaluation."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import NIL, Mention, Sentence, Vocab
from .model import ArnParams, boundary_scores, encode_sentence, predict_anchors


@dataclass(frozen=True)
class MentionPrediction:
    anchor: int
    left: int
    right: int
    label: str
    score: float

    def __post_init__(self):
        if not self.left <= self.anchor <= self.right:
            raise ValueError(f"anchor {self.anchor} outside nugget {self.left}..{self.right}")
        if self.label == NIL:
            raise ValueError("prediction label may not be NIL")

    @property
    def span(self) -> tuple[int, int, str]:
        return self.left, self.right, self.label


@dataclass(frozen=True)
class EvalReport:
    true_positives: int
    predicted: int
    gold: int
    precision: float
    recall: float
    f1: float

    def to_json(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        return "\n".join([
            f"{'':<10}{'value':>10}",
            f"{'P':<10}{self.precision:>10.4f}",
            f"{'R':<10}{self.recall:>10.4f}",
            f"{'F1':<10}{self.f1:>10.4f}",
            f"{'TP':<10}{self.true_positives:>10d}",
            f"{'pred':<10}{self.predicted:>10d}",
            f"{'gold':<10}{self.gold:>10d}",
        ])


def best_position(row: np.ndarray, anchor: int, lo: int, hi: int) -> int:
    """Argmax of ``row[lo..hi]``; ties go to the position nearest ``anchor``, then leftmost."""
    cands = range(lo, hi + 1)
    return max(cands, key=lambda j: (row[j], -abs(j - anchor), -j))


def decode_encoding(enc, vocab: Vocab, max_len: Optional[int] = None,
                    min_prob: Optional[float] = None) -> list[MentionPrediction]:
    n = len(enc)
    best: dict[tuple[int, int, str], MentionPrediction] = {}
    for a in predict_anchors(enc, vocab, min_prob):
        i = a.index
        L_row, R_row = boundary_scores(i, enc.hR, enc.r)
        lo = 0 if max_len is None else max(0, i - max_len + 1)
        left = best_position(L_row.value, i, lo, i)
        hi = n - 1 if max_len is None else min(n - 1, left + max_len - 1)
        right = best_position(R_row.value, i, i, hi)
        p = MentionPrediction(i, left, right, a.label, a.prob)
        prev = best.get(p.span)
        if prev is None or p.score > prev.score:
            best[p.span] = p
    return sorted(best.values(), key=lambda p: (p.left, -p.right, p.label))


def decode_sentence(s: Sentence, params: ArnParams, vocab: Vocab, max_len: Optional[int] = None,
                    min_prob: Optional[float] = None) -> list[MentionPrediction]:
    """Predicted nuggets: each non-NIL anchor expanded by its best left and right boundary.

    With ``max_len`` the left boundary is searched in ``[i - c + 1, i]`` and the
    right one in ``[i, left + c - 1]``, so no nugget is longer than ``c``.
    Exact (span, label) duplicates keep the highest anchor probability.
    """
    return decode_encoding(encode_sentence(params, s, vocab), vocab, max_len, min_prob)


def decode_corpus(corpus: Sequence[Sentence], params: ArnParams, vocab: Vocab,
                  max_len: Optional[int] = None, min_prob: Optional[float] = None,
                  jobs: int = 1) -> list[list[MentionPrediction]]:
    if jobs > 1 and len(corpus) > 1:
        from concurrent.futures import ProcessPoolExecutor
        args = [(s, params, vocab, max_len, min_prob) for s in corpus]
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_decode_args, args, chunksize=max(1, len(args) // (4 * jobs))))
    return [decode_sentence(s, params, vocab, max_len, min_prob) for s in corpus]


def _decode_args(args):
    return decode_sentence(*args)


def _gold_spans(s: Sentence) -> Counter:
    return Counter((m.start, m.end, m.label) for m in s.mentions)


def evaluate(predictions: Sequence[Iterable[MentionPrediction]], gold: Sequence[Sentence]) -> EvalReport:
    """Micro P/R/F1 with exact (left, right, label) matching, one gold mention per hit."""
    if len(predictions) != len(gold):
        raise ValueError(f"{len(predictions)} prediction lists for {len(gold)} gold sentences")
    tp = n_pred = n_gold = 0
    for preds, s in zip(predictions, gold):
        p = Counter(pr.span for pr in preds)
        g = _gold_spans(s)
        tp += sum((p & g).values())
        n_pred += sum(p.values())
        n_gold += sum(g.values())
    return _report(tp, n_pred, n_gold)


def _report(tp: int, n_pred: int, n_gold: int) -> EvalReport:
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(tp, n_pred, n_gold, precision, recall, f1)


def evaluate_anchors(anchors: Sequence[Iterable[tuple[int, str]]], gold: Sequence[Sentence]) -> EvalReport:
    """Anchor-only scoring: an anchor is correct if it lies inside an uncredited gold
    mention of its type; each gold mention is credited at most once."""
    tp = n_pred = n_gold = 0
    for preds, s in zip(anchors, gold):
        free = sorted(s.mentions, key=lambda m: (len(m), m.start))
        n_gold += len(free)
        for i, label in preds:
            n_pred += 1
            hit = next((m for m in free if m.label == label and m.covers(i)), None)
            if hit is not None:
                free.remove(hit)
                tp += 1
    return _report(tp, n_pred, n_gold)


def anchor_report(corpus: Sequence[Sentence], params: ArnParams, vocab: Vocab, top_n: int = 10) -> dict[str, list[tuple[str, int]]]:
    """Most frequent predicted anchor words per type, plus a NIL row of words
    that sit inside gold mentions but are not predicted as anchors."""
    anchors = []
    for s in corpus:
        enc = encode_sentence(params, s, vocab)
        anchors.append([(a.index, a.label) for a in predict_anchors(enc, vocab)])
    return tally_anchors(corpus, anchors, top_n)


def tally_anchors(corpus: Sequence[Sentence], anchors: Sequence[Iterable[tuple[int, str]]], top_n: int = 10) -> dict[str, list[tuple[str, int]]]:
    per_type: dict[str, Counter] = {}
    nil = Counter()
    for s, preds in zip(corpus, anchors):
        preds = list(preds)
        picked = {i for i, _ in preds}
        for i, label in preds:
            per_type.setdefault(label, Counter())[s.tokens[i].surface] += 1
        inside = {t for m in s.mentions for t in range(m.start, m.end + 1)}
        for t in sorted(inside - picked):
            nil[s.tokens[t].surface] += 1
    report = {label: _top(c, top_n) for label, c in sorted(per_type.items())}
    if nil:
        report[NIL] = _top(nil, top_n)
    return report


def _top(c: Counter, n: int) -> list[tuple[str, int]]:
    return sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


def prediction_json(s: Sentence, preds: Iterable[MentionPrediction]) -> dict:
    return {
        "tokens": s.words,
        "pos": [t.pos for t in s.tokens],
        "mentions": [
            {"start": p.left, "end": p.right, "type": p.label, "anchor": p.anchor, "score": p.score}
            for p in preds
        ],
    }


def load_predictions(path) -> tuple[list[Sentence], list[list[MentionPrediction]]]:
    sents, preds = [], []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            sents.append(Sentence.from_json({**obj, "mentions": []}))
            preds.append([
                MentionPrediction(int(m.get("anchor", m["start"])), int(m["start"]), int(m["end"]),
                                  str(m["type"]), float(m.get("score", 1.0)))
                for m in obj["mentions"]
            ])
    return sents, preds
