"""Finite-difference check of the full training objective on a 5-token sentence.

The analytic gradient of the Bag Loss (bag weights held fixed) is compared
entry by entry with central differences. Compare with the deliberately
broken operation at the end, which the same check flags at once.

Run: python demos/05_gradient_check.py
"""
import numpy as np

from arn.autodiff import grad_check, total
from arn.cli import GRADCHECK_DIMS, GRADCHECK_SENTENCE, gradcheck_error
from arn.config import RunConfig

print("sentence:", " ".join(GRADCHECK_SENTENCE.words))
for seed in (13, 1, 2):
    cfg = RunConfig(**GRADCHECK_DIMS, seed=seed)
    print(f"seed {seed}: max relative error {gradcheck_error(cfg):.2e}")


def broken_square(tape):
    x = tape.param("x")
    # forward x^2, but the backward rule forgets the factor 2
    return total(tape.record("sq", (x,), x.value ** 2, lambda g: (g * x.value,)))


print(f"broken op: max relative error {grad_check(broken_square, {'x': np.array([0.3, -1.2])}):.2e}")
