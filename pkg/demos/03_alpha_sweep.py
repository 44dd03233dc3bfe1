"""Dev F1 as a function of the bag-weight exponent on the pinned low-resource split.

alpha = 0 trains every word of a mention as its anchor. Positive alpha lets
the model settle on a few anchors per bag. The marginal-likelihood objective
is shown for comparison.

Run: python demos/03_alpha_sweep.py [--alphas 0,0.4,0.8,1,1.2]   (a few seconds per value)
"""
import argparse

from arn.cli import sweep_alpha
from arn.config import RunConfig
from arn.synthetic import BENCHMARK_EPOCHS, BENCHMARK_SEED, benchmark_split
from arn.train import train

parser = argparse.ArgumentParser()
parser.add_argument("--alphas", default="0,0.4,0.8,1,1.2")
args = parser.parse_args()

train_set, dev = benchmark_split()
cfg = RunConfig(epochs=BENCHMARK_EPOCHS, seed=BENCHMARK_SEED)
for row in sweep_alpha(train_set, dev, cfg, [float(a) for a in args.alphas.split(",")]):
    print(f"alpha={row['alpha']:<4} F1 {row['dev_f1']:.4f}  " + "#" * int(100 * row["dev_f1"] - 80))

marg = train(train_set, cfg.replace(loss_mode="marginal"), dev=dev)
print(f"marginal  F1 {marg.best_dev.f1:.4f}")
