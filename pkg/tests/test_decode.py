import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arn.autodiff import Tape
from arn.corpus import Mention
from arn.decode import (
    MentionPrediction, best_position, decode_corpus, decode_encoding, decode_sentence, evaluate,
    evaluate_anchors, load_predictions, prediction_json, tally_anchors,
)
from arn.model import CALLS, SentenceEncoding, predict_anchors
from conftest import FIGURE_SENTENCE, sentence


def _encoding(r, anchor_labels, vocab_labels=("NIL", "ORG", "PER"), u_left=1.0, u_right=-1.0):
    """Encoding whose boundary rows are tanh(u * r_j) for every anchor (Lambda = 0)."""
    n = len(r)
    params = {
        "region.left.Lambda": np.zeros((1, 1)), "region.left.U": np.array([u_left]), "region.left.b": np.zeros(()),
        "region.right.Lambda": np.zeros((1, 1)), "region.right.U": np.array([u_right]), "region.right.b": np.zeros(()),
    }
    tape = Tape(params)
    lp = np.full((n, len(vocab_labels)), np.log(0.1))
    lp[:, 0] = np.log(0.8)
    for i, (label, p) in anchor_labels.items():
        lp[i] = np.log((1 - p) / (len(vocab_labels) - 1))
        lp[i, vocab_labels.index(label)] = np.log(p)
    c = tape.constant
    return SentenceEncoding(tape, c(np.zeros((n, 1))), c(np.zeros((n, 1))), c(lp), c(lp),
                            c(np.zeros((n, 1))), c(np.array(r, dtype=float)[:, None]))


class _Vocab:
    labels = ["NIL", "ORG", "PER"]
    nil_id = 0


class TestBestPosition:
    def test_argmax(self):
        assert best_position(np.array([0.1, 0.9, 0.3]), 2, 0, 2) == 1

    def test_tie_goes_to_nearest_then_leftmost(self):
        row = np.array([0.5, 0.1, 0.5, 0.1, 0.5])
        assert best_position(row, 3, 0, 4) == 2
        assert best_position(row, 1, 0, 4) == 0
        assert best_position(row, 3, 3, 4) == 4

    def test_respects_range(self):
        assert best_position(np.array([9.0, 0.0, 1.0]), 2, 1, 2) == 2


class TestDecode:
    R = [2.0, 0.0, -1.0, 0.0, 1.0]

    def test_anchor_expansion(self):
        enc = _encoding(self.R, {1: ("PER", 0.9), 3: ("ORG", 0.7)})
        preds = decode_encoding(enc, _Vocab())
        assert [(p.left, p.right, p.label, p.anchor) for p in preds] == [(0, 3, "ORG", 3), (0, 2, "PER", 1)]
        assert preds[1].score == pytest.approx(0.9)

    def test_max_len(self):
        enc = _encoding(self.R, {1: ("PER", 0.9), 3: ("ORG", 0.7)})
        preds = decode_encoding(enc, _Vocab(), max_len=2)
        assert [p.span for p in preds] == [(0, 1, "PER"), (3, 3, "ORG")]

    def test_duplicates_merge_keeping_best_score(self):
        enc = _encoding([2.0, 0.0, 0.0, -1.0], {1: ("PER", 0.6), 2: ("PER", 0.9)})
        preds = decode_encoding(enc, _Vocab())
        assert len(preds) == 1
        assert preds[0].span == (0, 3, "PER") and preds[0].anchor == 2

    def test_same_span_different_types_both_kept(self):
        enc = _encoding([2.0, 0.0, 0.0, -1.0], {1: ("PER", 0.6), 2: ("ORG", 0.9)})
        assert {p.label for p in decode_encoding(enc, _Vocab())} == {"PER", "ORG"}

    def test_min_prob(self):
        enc = _encoding(self.R, {1: ("PER", 0.9), 3: ("ORG", 0.45)})
        assert [p.label for p in decode_encoding(enc, _Vocab(), min_prob=0.5)] == ["PER"]

    def test_no_anchors_no_boundary_calls(self):
        enc = _encoding(self.R, {})
        before = CALLS["boundary_scores"]
        assert decode_encoding(enc, _Vocab()) == []
        assert CALLS["boundary_scores"] == before

    def test_prediction_validation(self):
        with pytest.raises(ValueError):
            MentionPrediction(5, 0, 3, "PER", 1.0)
        with pytest.raises(ValueError):
            MentionPrediction(1, 0, 3, "NIL", 1.0)

    def test_model_predictions_are_well_formed(self, tiny_model):
        params, vocab, corpus = tiny_model
        for c in (None, 1, 3):
            for s in corpus:
                for p in decode_sentence(s, params, vocab, max_len=c):
                    assert 0 <= p.left <= p.anchor <= p.right < len(s)
                    if c is not None:
                        assert p.right - p.left + 1 <= c

    def test_parallel_matches_serial(self, tiny_model):
        params, vocab, corpus = tiny_model
        assert decode_corpus(corpus, params, vocab, jobs=2) == decode_corpus(corpus, params, vocab)


class TestEvaluate:
    def test_duplicate_predictions_count_once_as_hit(self):
        s = sentence("a b", "NN NN", [(0, 1, "PER")])
        preds = [[MentionPrediction(0, 0, 1, "PER", 1.0), MentionPrediction(1, 0, 1, "PER", 0.5)]]
        rep = evaluate(preds, [s])
        assert (rep.true_positives, rep.predicted, rep.gold) == (1, 2, 1)

    def test_empty(self):
        rep = evaluate([[]], [sentence("a", "NN")])
        assert (rep.precision, rep.recall, rep.f1) == (0.0, 0.0, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            evaluate([], [FIGURE_SENTENCE])

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.sampled_from(["PER", "ORG"])), max_size=6))
    def test_perfect_prediction(self, spans):
        mentions = sorted({Mention(min(a, b), max(a, b), c) for a, b, c in spans})
        s = sentence("a b c d e", "NN NN NN NN NN", [(m.start, m.end, m.label) for m in mentions])
        preds = [[MentionPrediction(m.start, m.start, m.end, m.label, 1.0) for m in mentions]]
        rep = evaluate(preds, [s])
        assert rep.true_positives == rep.gold == rep.predicted == len(mentions)
        if mentions:
            assert rep.f1 == 1.0

    def test_table_and_json(self):
        rep = evaluate([[MentionPrediction(1, 0, 6, "PER", 1.0)]], [FIGURE_SENTENCE])
        assert rep.to_json()["recall"] == 0.5
        assert "F1" in rep.table()


class TestAnchorReports:
    def test_anchor_only_scoring(self):
        # anchor 4 (ORG) hits the ORG mention; 1 (PER) hits PER; 2 (PER) finds no uncredited PER mention
        rep = evaluate_anchors([[(4, "ORG"), (1, "PER"), (2, "PER"), (8, "ORG")]], [FIGURE_SENTENCE])
        assert (rep.true_positives, rep.predicted, rep.gold) == (2, 4, 2)

    def test_tally(self):
        report = tally_anchors([FIGURE_SENTENCE], [[(1, "PER"), (4, "ORG")]], top_n=2)
        assert report["PER"] == [("minister", 1)]
        assert report["ORG"] == [("department", 1)]
        assert report["NIL"] == [("of", 2), ("the", 2)]

    def test_predict_anchor_count(self, tiny_model):
        params, vocab, corpus = tiny_model
        from arn.model import encode_sentence
        for s in corpus[:5]:
            enc = encode_sentence(params, s, vocab)
            before = CALLS["boundary_scores"]
            decode_encoding(enc, vocab)
            assert CALLS["boundary_scores"] - before == len(predict_anchors(enc, vocab))


def test_prediction_file_round_trip(tmp_path):
    preds = [MentionPrediction(1, 0, 6, "PER", 0.75), MentionPrediction(4, 3, 6, "ORG", 0.5)]
    path = tmp_path / "p.jsonl"
    import json
    path.write_text(json.dumps(prediction_json(FIGURE_SENTENCE, preds)) + "\n")
    sents, loaded = load_predictions(path)
    assert sents[0].words == FIGURE_SENTENCE.words
    assert loaded == [preds]


def _anchor_dependent_encoding(n, lam_left, lam_right, anchor_labels):
    """hR = r = identity and U = 0, so L_ij = tanh(Lambda_left[j, i]) and likewise R."""
    params = {
        "region.left.Lambda": lam_left, "region.left.U": np.zeros(n), "region.left.b": np.zeros(()),
        "region.right.Lambda": lam_right, "region.right.U": np.zeros(n), "region.right.b": np.zeros(()),
    }
    tape = Tape(params)
    lp = np.full((n, 3), np.log(0.1))
    lp[:, 0] = np.log(0.8)
    for i, label in anchor_labels.items():
        lp[i] = np.log([0.05, 0.05, 0.05])
        lp[i, _Vocab.labels.index(label)] = np.log(0.9)
    c = tape.constant
    return SentenceEncoding(tape, c(np.zeros((n, 1))), c(np.zeros((n, 1))), c(lp), c(lp), c(np.eye(n)), c(np.eye(n)))


class TestAnchorDependentBoundaries:
    def test_figure_layout(self):
        n = 10
        rng = np.random.default_rng(7)
        lam_l, lam_r = rng.uniform(-1, 0, (n, n)), rng.uniform(-1, 0, (n, n))
        lam_l[0, 1] = lam_l[3, 4] = 2.0
        lam_r[6, 1] = lam_r[6, 4] = 2.0
        enc = _anchor_dependent_encoding(n, lam_l, lam_r, {1: "PER", 4: "ORG"})
        preds = decode_encoding(enc, _Vocab())
        assert [p.span for p in preds] == [(0, 6, "PER"), (3, 6, "ORG")]
        # brute force over every span containing each anchor
        L, R = np.tanh(lam_l.T), np.tanh(lam_r.T)
        brute = set()
        for i, label in ((1, "PER"), (4, "ORG")):
            j, k = max(((j, k) for j in range(i + 1) for k in range(i, n)), key=lambda jk: L[i, jk[0]] + R[i, jk[1]])
            brute.add((j, k, label))
        assert brute == {p.span for p in preds}


class TestEvaluateExamples:
    def test_five_predicted_four_gold(self):
        gold = [sentence("a b c d e f", "N N N N N N", [(0, 0, "PER"), (1, 1, "PER"), (2, 2, "ORG"), (3, 5, "ORG")])]
        preds = [[MentionPrediction(i, l, r, t, 1.0) for i, l, r, t in
                  [(0, 0, 0, "PER"), (1, 1, 1, "PER"), (2, 2, 2, "ORG"), (3, 3, 4, "ORG"), (5, 5, 5, "PER")]]]
        rep = evaluate(preds, gold)
        assert (rep.precision, rep.recall) == (pytest.approx(0.6), pytest.approx(0.75))


class TestAnchorReport:
    def test_empty_corpus(self):
        assert tally_anchors([], []) == {}

    def test_counts_are_conserved(self):
        corpus = [FIGURE_SENTENCE, sentence("the president met", "DT NN VBD", [(0, 1, "PER")])]
        anchors = [[(1, "PER"), (5, "ORG"), (8, "ORG")], [(1, "PER")]]
        rep = tally_anchors(corpus, anchors, top_n=100)
        assert sum(c for label, rows in rep.items() if label != "NIL" for _, c in rows) == 4
        inside = sum(len(set(t for m in s.mentions for t in range(m.start, m.end + 1))) for s in corpus)
        picked_inside = 3
        assert sum(c for _, c in rep["NIL"]) == inside - picked_inside

    def test_single_head_ranks_first(self):
        corpus = [sentence("the president spoke", "DT NN VBD", [(0, 1, "PER")]) for _ in range(3)]
        corpus.append(sentence("a president and the minister", "DT NN CC DT NN", [(0, 1, "PER")]))
        rep = tally_anchors(corpus, [[(1, "PER")]] * 4)
        assert rep["PER"][0] == ("president", 4)
