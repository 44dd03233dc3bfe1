"""Train on a synthetic nested-mention corpus and decode a held-out sentence.

Run: python demos/02_train_synthetic.py [--train 400] [--epochs 4]
"""
import argparse

from arn.config import RunConfig
from arn.corpus import nested_fraction
from arn.decode import decode_corpus, decode_sentence, evaluate
from arn.synthetic import GrammarConfig, generate_synthetic
from arn.train import train

parser = argparse.ArgumentParser()
parser.add_argument("--train", type=int, default=400)
parser.add_argument("--test", type=int, default=200)
parser.add_argument("--epochs", type=int, default=4)
args = parser.parse_args()

data = generate_synthetic(GrammarConfig(n_sentences=args.train + args.test), seed=0)
train_set, test_set = data[:args.train], data[args.train:]
print(f"{len(train_set)} training sentences, {nested_fraction(train_set):.0%} of mentions nested")

result = train(train_set, RunConfig(epochs=args.epochs), dev=test_set)
for row in result.log:
    print(f"epoch {row['epoch']}: loss {row['mean_loss']:.3f}  F1 {row['dev_f1']:.4f}")

report = evaluate(decode_corpus(test_set, result.params, result.vocab), test_set)
print(report.table())

# pick a held-out sentence with nesting and show the recovered nuggets
s = next((x for x in test_set if any(a.contains(b) for a in x.mentions for b in x.mentions)), test_set[0])
print("\n" + " ".join(s.words))
for p in decode_sentence(s, result.params, result.vocab):
    print(f"  {p.label:<4} anchor={s.words[p.anchor]!r:<14} {' '.join(s.words[p.left:p.right + 1])}")
print("gold:", [(m.label, " ".join(s.words[m.start:m.end + 1])) for m in s.mentions])
