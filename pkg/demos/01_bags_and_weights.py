"""How a nested sentence is split into bags, and how bag weights react to alpha.

Run: python demos/01_bags_and_weights.py
"""
import numpy as np

from arn.corpus import Mention, Sentence, Token, build_bags
from arn.loss import bag_weights

words = "the minister of the department of education convened a meeting".split()
tags = "DT NN IN DT NN IN NN VBD DT NN".split()
s = Sentence([Token(w, p) for w, p in zip(words, tags)],
             [Mention(0, 6, "PER"), Mention(3, 6, "ORG")]).validate()

# Each token belongs to the shortest mention covering it. The ORG mention is
# nested inside the PER one, so its words are not candidates for the PER anchor.
print("bags:")
for bag in build_bags(s):
    print(f"  {bag.label:<4} {[words[t] for t in bag.members]}")

# Suppose the anchor classifier currently gives these PER probabilities to
# the three words of the PER bag. The weight decides how strongly each word
# is pushed towards PER rather than NIL.
per_probs = np.zeros(len(words))
per_probs[[0, 1, 2]] = [0.20, 0.70, 0.10]
per_bag = build_bags(s)[0]
print("\nweights of the PER bag (the, minister, of):")
for alpha in (0.0, 0.5, 1.0, 2.0, 8.0):
    w = bag_weights(per_bag, per_probs, alpha)
    print(f"  alpha={alpha:<4} " + "  ".join(f"{w[t]:.4f}" for t in per_bag.members))
# alpha = 0 treats every word as an anchor; large alpha keeps only the current best.
