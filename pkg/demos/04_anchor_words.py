"""Which words does a trained model pick as anchors?

Nobody tells the model which word of a mention is its head. After training,
the most frequent anchors per type are the head nouns, while determiners
and prepositions end up in the NIL row (inside a mention, never an anchor).

Run: python demos/04_anchor_words.py
"""
from arn.config import RunConfig
from arn.decode import anchor_report
from arn.synthetic import GrammarConfig, generate_synthetic
from arn.train import train

data = generate_synthetic(GrammarConfig(n_sentences=600), seed=3)
result = train(data[:400], RunConfig(epochs=3))
for label, words in anchor_report(data[400:], result.params, result.vocab, top_n=6).items():
    print(f"{label:<4} " + ", ".join(f"{w} ({n})" for w, n in words))
