"""Anchor-Region Network: token representation, anchor detector and region recognizer."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .autodiff import Node, Tape, concat, log_softmax, matmul, take_rows, tanh
from .config import RunConfig
from .corpus import Sentence, Vocab
from .kernels import LstmParams, bilstm, conv1d, lstm_init, lstm_scan, mlp

CHECKPOINT_FORMAT = "arn-checkpoint"
CHECKPOINT_VERSION = 1

# instrumentation: number of boundary_scores evaluations since import
CALLS: Counter = Counter()


class CheckpointError(ValueError):
    pass


class ArnParams:
    """All learnable arrays of both sub-networks, keyed by stable names."""

    def __init__(self, arrays: dict[str, np.ndarray]):
        self.arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def __len__(self):
        return len(self.arrays)

    def names(self) -> list[str]:
        return list(self.arrays)

    def size(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def copy(self) -> "ArnParams":
        return ArnParams({k: v.copy() for k, v in self.arrays.items()})

    def tape(self) -> Tape:
        return Tape(self.arrays)

    @property
    def mlp_depth(self) -> int:
        return sum(1 for k in self.arrays if k.startswith("anchor.mlp.") and k.endswith(".W"))

    @property
    def conv_k(self) -> int:
        hidden2 = self.arrays["region.fwd.b"].shape[0] // 4 * 2
        return (self.arrays["region.conv.W"].shape[1] // hidden2 - 1) // 2

    @classmethod
    def init(cls, cfg: RunConfig, vocab: Vocab, seed: Optional[int] = None) -> "ArnParams":
        rng = np.random.default_rng(cfg.seed if seed is None else seed)

        def mat(rows, cols):
            s = cfg.init_scale if cfg.init_scale is not None else np.sqrt(6.0 / (rows + cols))
            return rng.uniform(-s, s, size=(rows, cols))

        def emb(rows, cols):
            s = cfg.init_scale if cfg.init_scale is not None else np.sqrt(3.0 / cols)
            return rng.uniform(-s, s, size=(rows, cols))

        def lstm(prefix, d_in, h):
            s = cfg.init_scale if cfg.init_scale is not None else np.sqrt(6.0 / (5 * h + d_in))
            a[prefix + ".W"], a[prefix + ".b"] = lstm_init(rng, d_in, h, s)

        a: dict[str, np.ndarray] = {}
        a["emb.word"] = emb(len(vocab.words), cfg.word_dim)
        a["emb.pos"] = emb(len(vocab.pos), cfg.pos_dim)
        a["emb.char"] = emb(len(vocab.chars), cfg.char_dim)
        lstm("char.fwd", cfg.char_dim, cfg.char_hidden)
        lstm("char.bwd", cfg.char_dim, cfg.char_hidden)
        d_x = cfg.word_dim + cfg.pos_dim + 2 * cfg.char_hidden
        H2 = 2 * cfg.hidden
        lstm("anchor.fwd", d_x, cfg.hidden)
        lstm("anchor.bwd", d_x, cfg.hidden)
        widths = [H2] + list(cfg.mlp_hidden) + [vocab.n_labels]
        for k in range(len(widths) - 1):
            a[f"anchor.mlp.{k}.W"] = mat(widths[k + 1], widths[k])
            a[f"anchor.mlp.{k}.b"] = np.zeros(widths[k + 1])
        lstm("region.fwd", d_x, cfg.hidden)
        lstm("region.bwd", d_x, cfg.hidden)
        a["region.conv.W"] = mat(cfg.conv_dim, (2 * cfg.conv_k + 1) * H2)
        a["region.conv.b"] = np.zeros(cfg.conv_dim)
        for side in ("left", "right"):
            a[f"region.{side}.Lambda"] = mat(cfg.conv_dim, H2)
            a[f"region.{side}.U"] = rng.uniform(-0.1, 0.1, size=cfg.conv_dim)
            a[f"region.{side}.b"] = np.zeros(())
        return cls(a)


@dataclass
class SentenceEncoding:
    """Forward activations of one sentence; all sequences aligned with tokens."""

    tape: Tape
    x: Node
    hA: Node
    scores: Node
    log_probs: Node
    hR: Node
    r: Node

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs.value)

    def __len__(self):
        return self.x.value.shape[0]


@dataclass(frozen=True)
class AnchorPrediction:
    index: int
    label: str
    prob: float


def _char_batch(words: list[str], vocab: Vocab, reverse: bool):
    T = max(len(w) for w in words)
    ids = np.zeros((T, len(words)), dtype=np.intp)
    mask = np.zeros((T, len(words)))
    for b, w in enumerate(words):
        chars = w[::-1] if reverse else w
        for t, ch in enumerate(chars):
            ids[t, b] = vocab.char(ch)
            mask[t, b] = 1.0
    return ids, mask


def _char_final_states(tape: Tape, words: list[str], vocab: Vocab, prefix: str, reverse: bool) -> Node:
    ids, mask = _char_batch(words, vocab, reverse)
    T, B = ids.shape
    table = tape.param("emb.char")
    e = take_rows(table, ids.reshape(-1))
    e3 = tape.record("reshape", (e,), e.value.reshape(T, B, -1),
                     lambda g, shape=e.value.shape: (g.reshape(shape),))
    p = LstmParams.from_tape(tape, prefix)
    h = lstm_scan(e3, p.W, p.b, mask)
    return h[T - 1]


def encode_tokens(tape: Tape, s: Sentence, vocab: Vocab) -> Node:
    """Token representations ``[word; pos; char-fwd; char-bwd]``, shape (n, Dw + Dp + 2Hc)."""
    words = s.words
    w = take_rows(tape.param("emb.word"), [vocab.word(t) for t in words])
    p = take_rows(tape.param("emb.pos"), [vocab.tag(t.pos) for t in s.tokens])
    cf = _char_final_states(tape, words, vocab, "char.fwd", reverse=False)
    cb = _char_final_states(tape, words, vocab, "char.bwd", reverse=True)
    return concat([w, p, cf, cb], axis=1)


def anchor_forward(x: Node) -> tuple[Node, Node, Node]:
    """Anchor BiLSTM states, scores (n, |C|) and their row-wise log-softmax."""
    tape = x.tape
    h = bilstm(x, LstmParams.from_tape(tape, "anchor.fwd"), LstmParams.from_tape(tape, "anchor.bwd"))
    depth = sum(1 for k in tape.params if k.startswith("anchor.mlp.") and k.endswith(".W"))
    layers = [(tape.param(f"anchor.mlp.{k}.W"), tape.param(f"anchor.mlp.{k}.b"), "tanh") for k in range(depth)]
    scores = mlp(h, layers)
    return h, scores, log_softmax(scores)


def region_forward(x: Node) -> tuple[Node, Node]:
    """Region BiLSTM states and windowed convolution features."""
    tape = x.tape
    hR = bilstm(x, LstmParams.from_tape(tape, "region.fwd"), LstmParams.from_tape(tape, "region.bwd"))
    W = tape.param("region.conv.W")
    k = (W.value.shape[1] // hR.value.shape[1] - 1) // 2
    r = conv1d(hR, W, tape.param("region.conv.b"), k)
    return hR, r


def boundary_scores(i: int, hR: Node, r: Node) -> tuple[Node, Node]:
    """Left and right boundary score rows of anchor ``i`` over every position j.

    ``L_ij = tanh(r_j . (Lambda_1 hR_i) + U_1 . r_j + b_1)``, likewise R with
    the right-side parameters.
    """
    n = hR.value.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"anchor index {i} out of range for {n} tokens")
    CALLS["boundary_scores"] += 1
    tape = hR.tape
    h_i = hR[i]
    rows = []
    for side in ("left", "right"):
        Lam = tape.param(f"region.{side}.Lambda")
        U = tape.param(f"region.{side}.U")
        b = tape.param(f"region.{side}.b")
        rows.append(tanh(matmul(r, matmul(Lam, h_i)) + matmul(r, U) + b))
    return rows[0], rows[1]


def encode_sentence(params: ArnParams, s: Sentence, vocab: Vocab, tape: Optional[Tape] = None) -> SentenceEncoding:
    tape = tape if tape is not None else params.tape()
    x = encode_tokens(tape, s, vocab)
    hA, scores, log_probs = anchor_forward(x)
    hR, r = region_forward(x)
    return SentenceEncoding(tape, x, hA, scores, log_probs, hR, r)


def predict_anchors(enc: SentenceEncoding, vocab: Vocab, min_prob: Optional[float] = None) -> list[AnchorPrediction]:
    """Tokens whose most probable class is an entity type (optionally above ``min_prob``)."""
    probs = enc.probs
    out = []
    for i, row in enumerate(probs):
        c = int(np.argmax(row))
        if c == vocab.nil_id:
            continue
        if min_prob is not None and row[c] < min_prob:
            continue
        out.append(AnchorPrediction(i, vocab.labels[c], float(row[c])))
    return out


# -- checkpoints --------------------------------------------------------------


def save_checkpoint(path, params: ArnParams, vocab: Vocab, cfg: RunConfig) -> None:
    """JSON checkpoint; floats are written with shortest round-trip repr, so loading is bit-exact."""
    obj = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": cfg.to_json(),
        "vocab": vocab.to_json(),
        "params": {
            name: {"shape": list(a.shape), "data": a.reshape(-1).tolist()}
            for name, a in params.arrays.items()
        },
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f)


def load_checkpoint(path) -> tuple[ArnParams, Vocab, RunConfig]:
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise CheckpointError(f"{path}: not a checkpoint ({e.msg})") from None
    if obj.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: unknown format {obj.get('format')!r}")
    if obj.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {obj.get('version')!r}")
    arrays = {
        name: np.array(p["data"], dtype=np.float64).reshape(p["shape"])
        for name, p in obj["params"].items()
    }
    return ArnParams(arrays), Vocab.from_json(obj["vocab"]), RunConfig.from_json(obj["config"])
