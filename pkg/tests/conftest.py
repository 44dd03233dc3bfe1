"""Shared fixtures, hypothesis strategies and the acceptance summary hook."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from arn.config import RunConfig
from arn.corpus import Mention, Sentence, Token, build_vocab
from arn.decode import decode_corpus, evaluate
from arn.model import ArnParams
from arn.synthetic import GrammarConfig, generate_synthetic
from arn.train import train

LABELS = ["GPE", "LOC", "ORG", "PER"]
WORDS = ["the", "minister", "of", "department", "a", "bank", "city", "met", "in", "river"]

TINY = dict(word_dim=4, pos_dim=2, char_dim=2, char_hidden=2, hidden=3,
            mlp_hidden=[4], conv_dim=3, conv_k=1)


def sentence(words: str, tags: str, mentions=()) -> Sentence:
    toks = [Token(w, p) for w, p in zip(words.split(), tags.split())]
    return Sentence(toks, [Mention(*m) for m in mentions]).validate()


# "the minister of the department of education convened a meeting"
FIGURE_SENTENCE = sentence(
    "the minister of the department of education convened a meeting",
    "DT NN IN DT NN IN NN VBD DT NN",
    [(0, 6, "PER"), (3, 6, "ORG")],
)


@st.composite
def nested_sentences(draw, max_len: int = 14, max_mentions: int = 8):
    """Random sentences whose mentions form a laminar family (nested or disjoint)."""
    n = draw(st.integers(1, max_len))
    words = draw(st.lists(st.sampled_from(WORDS), min_size=n, max_size=n))
    spans = draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.sampled_from(LABELS)),
        max_size=max_mentions,
    ))
    kept: list[Mention] = []
    for a, b, label in spans:
        m = Mention(min(a, b), max(a, b), label)
        if m in kept:
            continue
        if all(o.contains(m) or m.contains(o) or o.end < m.start or m.end < o.start
               or (o.start, o.end) == (m.start, m.end) for o in kept):
            kept.append(m)
    return Sentence([Token(w, "NN") for w in words], kept).validate()


@st.composite
def any_sentences(draw, max_len: int = 12, max_mentions: int = 8):
    """Random sentences with arbitrary (possibly crossing) mentions."""
    n = draw(st.integers(1, max_len))
    spans = draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.sampled_from(LABELS)),
        max_size=max_mentions, unique=True,
    ))
    mentions = sorted({Mention(min(a, b), max(a, b), c) for a, b, c in spans})
    return Sentence([Token(f"w{k}", "NN") for k in range(n)], mentions).validate()


@pytest.fixture
def tiny_cfg() -> RunConfig:
    return RunConfig(**TINY, init_scale=0.5)


@pytest.fixture
def tiny_model(tiny_cfg):
    corpus = generate_synthetic(GrammarConfig(n_sentences=20), seed=3) + [FIGURE_SENTENCE]
    vocab = build_vocab(corpus)
    return ArnParams.init(tiny_cfg, vocab), vocab, corpus


# -- expensive trained models, shared by the acceptance tests ---------------------


@pytest.fixture(scope="session")
def overfit_run():
    """32 sentences with >= 20% nested mentions (including the figure sentence), trained to F1 = 1."""
    import time
    corpus = [FIGURE_SENTENCE] + generate_synthetic(GrammarConfig(n_sentences=31, nesting=0.35), seed=7)
    start = time.perf_counter()
    result = train(corpus, RunConfig(epochs=200, target_f1=1.0), dev=corpus)
    return corpus, result, time.perf_counter() - start


@pytest.fixture(scope="session")
def heldout_run():
    data = generate_synthetic(GrammarConfig(n_sentences=2500), seed=2024)
    train_set, test_set = data[:2000], data[2000:]
    result = train(train_set, RunConfig())
    report = evaluate(decode_corpus(test_set, result.params, result.vocab), test_set)
    return test_set, result, report


# -- acceptance summary -------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
