#!/usr/bin/env python3
# The asymmetric Huber loss interpolates between the asymmetric squared loss
# (gamma = inf) and an asymmetric absolute-type loss (small gamma).

import math

import numpy as np

from retire import LossSpec, loss_grad, loss_hess, loss_value


u = np.linspace(-4, 4, 9)

# quadratic inside [-gamma, gamma], linear outside; tau tilts the two sides
for tau, gamma in [(0.5, math.inf), (0.8, math.inf), (0.8, 1.0)]:
    spec = LossSpec(tau, gamma)
    print(f"tau={tau} gamma={gamma}")
    print("  loss ", np.round(loss_value(spec, u), 3))
    print("  grad ", np.round(loss_grad(spec, u), 3))
    print("  hess ", np.round(loss_hess(spec, u), 3))

# the gradient is bounded by max(tau, 1 - tau) * gamma, which is where the
# robustness to heavy tails comes from
spec = LossSpec(0.8, 1.0)
print("largest |gradient| at u=1e6:", loss_grad(spec, 1e6))
