#!/usr/bin/env python3
# A small Monte Carlo comparison of retire against its special cases:
# the Huber lasso (tau fixed at 0.5) and the expectile lasso (gamma = inf),
# on heteroscedastic data where the 0.8-expectile depends on the last predictor.

from retire import NoiseDistribution, SimSpec
from retire.bench import run_benchmark


spec = SimSpec("ehet", n=200, d=100, noise=NoiseDistribution("gaussian", 2.0), tau=0.8, seed=11)
res = run_benchmark(spec, reps=4, methods=("retire-l1", "retire-irw", "huber", "sales"),
                    nlambda=20, folds=5)

print(f"{'method':<12}{'l2 error':>10}{'TPR':>8}{'FPR':>8}{'sec':>8}")
for m, row in res["methods"].items():
    print(f"{m:<12}{row['l2_error']['mean']:10.3f}{row['tpr']['mean']:8.2f}"
          f"{row['fpr']['mean']:8.3f}{row['seconds']['mean']:8.2f}")
