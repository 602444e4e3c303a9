"""
End-to-end acceptance checks.  Each test prints one PASS/FAIL line (also
collected in the terminal summary) and then asserts the same condition.
"""
import io
import json
import math
import time

import numpy as np
import pytest

from retire import (Dataset, IrwSpec, LossSpec, NoiseDistribution, PenaltySpec, SimSpec,
                    SolveOptions, fit_retire_lowdim, fit_smooth, fit_sncd, generate,
                    kkt_certificate, lambda_grid, loss_grad, loss_value, noise_expectile)
from retire.bench import run_benchmark
from retire.cli import run
from retire.model import fit_path
from retire.sim import canonical_truth, rng_for, sample_expectile

import oracles

pytestmark = pytest.mark.acceptance
SEED = 2024


def _bench_cli(*argv):
    out = io.StringIO()
    code = run([str(a) for a in argv], out, io.StringIO())
    assert code == 0
    return json.loads(out.getvalue())


def test_c01_ols_collapse(record):
    rng = np.random.default_rng(SEED)
    X = rng.normal(size=(200, 10))
    y = 1.0 + X @ rng.normal(size=10) + rng.normal(size=200)
    data = Dataset(X, y)
    fit_sncd(Dataset(X[:20], y[:20]), LossSpec(), np.zeros(10))   # load compiled kernels
    t0 = time.perf_counter()
    fit = fit_sncd(data, LossSpec(0.5), np.zeros(10))
    secs = time.perf_counter() - t0
    err = float(np.max(np.abs(fit.coef - oracles.ols(X, y))))
    ok = record("C1 OLS collapse", err <= 1e-6 and secs < 1.0,
                f"sup-norm {err:.2e} (<= 1e-6), {secs:.3f}s (< 1s)")
    assert ok


def test_c02_gradient(record):
    rng = np.random.default_rng(SEED)
    h, worst, count = 1e-6, 0.0, 0
    while count < 1000:
        tau = rng.uniform(0.01, 0.99)
        gamma = math.inf if rng.random() < 0.2 else rng.uniform(0.1, 10.0)
        u = rng.normal(scale=5.0)
        kinks = [0.0] if math.isinf(gamma) else [0.0, gamma, -gamma]
        if min(abs(u - k) for k in kinks) <= 1e-4:
            continue
        spec = LossSpec(tau, gamma)
        fd = (loss_value(spec, u + h) - loss_value(spec, u - h)) / (2 * h)
        g = loss_grad(spec, u)
        worst = max(worst, abs(g - fd) / max(abs(g), 1.0))
        count += 1
    ok = record("C2 gradient vs central differences", worst <= 1e-6,
                f"max relative error {worst:.2e} over 1000 triples (<= 1e-6)")
    assert ok


def test_c03_oracle_equivalence(record):
    rng = np.random.default_rng(SEED)
    opts = SolveOptions(tol=1e-8)
    worst, worst_kkt = 0.0, 0.0
    for k in range(25):
        tau = (0.3, 0.5, 0.8)[k % 3]
        gamma = (1.0, 5.0)[k % 2]
        X = rng.normal(size=(50, 20))
        beta = np.zeros(20)
        beta[:5] = rng.normal(scale=2, size=5)
        y = X @ beta + rng.standard_t(3, 50)
        w = np.full(20, 0.1)
        data = Dataset(X, y)
        fit = fit_sncd(data, LossSpec(tau, gamma), w, opts)
        ref = oracles.proximal_gradient(X, y, tau, gamma, w, tol=1e-10)
        worst = max(worst, float(np.max(np.abs(fit.coef - ref))))
        cert = kkt_certificate(data, LossSpec(tau, gamma), w, fit)
        worst_kkt = max(worst_kkt, cert["intercept"], cert["stationarity"], cert["soft_threshold"])
    ok = record("C3 SNCD vs proximal gradient", worst <= 1e-4 and worst_kkt <= opts.kkt_tol,
                f"sup-norm {worst:.2e} (<= 1e-4), KKT {worst_kkt:.2e} (<= {opts.kkt_tol:g})")
    assert ok


def test_c04_table1_gaussian(record):
    t0 = time.perf_counter()
    doc = _bench_cli("bench", "--model", "hom", "--noise", "gaussian:2", "--n", 400, "--d", 200,
                     "--reps", 20, "--seed", SEED, "--methods", "retire-l1,retire-irw",
                     "--tol", 1e-6)
    secs = time.perf_counter() - t0
    l1, irw = doc["methods"]["retire-l1"], doc["methods"]["retire-irw"]
    e1, e2 = l1["l2_error"]["mean"], irw["l2_error"]["mean"]
    tpr = min(l1["tpr"]["mean"], irw["tpr"]["mean"])
    fpr = max(l1["fpr"]["mean"], irw["fpr"]["mean"])
    ok = (0.45 <= e1 <= 0.70 and 0.18 <= e2 <= 0.35 and tpr == 1.0 and fpr <= 0.06
          and secs < 300)
    record("C4 Table 1 Gaussian", ok,
           f"l1 {e1:.3f} [0.45,0.70], irw {e2:.3f} [0.18,0.35], min TPR {tpr:.3f}, "
           f"max FPR {fpr:.4f} (<= 0.06), {secs:.0f}s (< 300s)")
    assert ok


def test_c05_table1_t(record):
    res = run_benchmark(SimSpec("hom", 400, 200, NoiseDistribution("t", 2.1), 0.5, SEED), 20,
                        ("retire-irw", "sales"))
    irw = res["methods"]["retire-irw"]["l2_error"]["mean"]
    sales = res["methods"]["sales"]["l2_error"]["mean"]
    ok = irw < sales and 0.5 <= irw <= 1.2
    record("C5 Table 1 t(2.1) ordering", ok,
           f"irw {irw:.3f} < sales {sales:.3f}: {irw < sales}; irw in [0.5,1.2]: {0.5 <= irw <= 1.2}")
    assert ok


def test_c06_table2_heteroscedastic(record):
    res = run_benchmark(SimSpec("qhet", 400, 200, NoiseDistribution("gaussian", 2.0), 0.8, SEED),
                        20, ("retire-l1", "huber"))
    l1 = res["methods"]["retire-l1"]["l2_error"]["mean"]
    hub = res["methods"]["huber"]["l2_error"]["mean"]
    ok = hub > 1.5 * l1
    record("C6 Table 2 tau=0.8 huber vs l1", ok,
           f"huber {hub:.3f} > 1.5 x l1 {l1:.3f} = {1.5 * l1:.3f}")
    assert ok


def test_c07_ci_coverage(record):
    tau, reps = 0.8, 500
    noise = NoiseDistribution("gaussian", 2.0)
    beta = canonical_truth(5, truncate=True).beta_star
    # the tau-expectile of y given x shifts the intercept by e_tau(eps)
    target = beta.copy()
    target[0] += noise_expectile(noise, tau)
    spec = SimSpec("hom", 2000, 5, noise, tau, SEED, beta=tuple(beta))
    opts = SolveOptions(tol=1e-9, gamma_adaptive=True)
    hits = np.zeros(6)
    t0 = time.perf_counter()
    for rep in range(reps):
        data, _ = generate(spec, rep)
        _, cis = fit_retire_lowdim(data, LossSpec(tau), opts)
        hits += [c.lower <= target[c.index] <= c.upper for c in cis]
    secs = time.perf_counter() - t0
    cover = hits / reps
    ok = bool(np.all((cover >= 0.92) & (cover <= 0.975)) and secs < 300)
    record("C7 CI coverage", ok,
           f"coverage {np.array2string(cover, precision=3)} in [0.92,0.975], {secs:.0f}s (< 300s)")
    assert ok


def test_c08_bias_decay(record):
    # exponential noise with variance 2, centred so its tau-expectile (the mean) is 0
    n, tau, scale = 10 ** 6, 0.5, math.sqrt(2.0)
    rng = rng_for(SEED, 8)
    X = rng.standard_normal((n, 3))
    eps = scale * (rng.standard_exponential(n) - 1.0)
    beta = np.array([2.0, 1.0, -1.0, 0.5])
    data = Dataset(X, beta[0] + X @ beta[1:] + eps)
    err = {g: float(np.linalg.norm(fit_smooth(data, LossSpec(tau, g)).coef - beta))
           for g in (2.0, 4.0, 8.0)}
    r1, r2 = err[2.0] / err[4.0], err[4.0] / err[8.0]
    ok = 1.4 <= r1 <= 3.0 and 1.4 <= r2 <= 3.0
    record("C8 bias ratios", ok,
           f"errors {err[2.0]:.4f}, {err[4.0]:.4f}, {err[8.0]:.4f}; ratios {r1:.2f}, {r2:.2f} "
           f"in [1.4,3.0]")
    assert ok


def test_c09_expectile_oracle(record):
    worst = 0.0
    for k, dist in enumerate((NoiseDistribution("gaussian", 2.0), NoiseDistribution("t", 2.1))):
        z = dist.sample(rng_for(SEED, 9, k), 10 ** 7)
        for tau in (0.1, 0.5, 0.8, 0.9):
            worst = max(worst, abs(noise_expectile(dist, tau) - sample_expectile(z, tau)))
    ok = record("C9 expectile oracle", worst <= 0.01, f"max |exact - empirical| {worst:.4f} (<= 0.01)")
    assert ok


def _path_seconds(d, rep):
    data, _ = generate(SimSpec("hom", d // 2, d, seed=SEED), rep)
    loss = LossSpec(0.5)
    irw = IrwSpec(PenaltySpec("l1", 1.0), 1, SolveOptions(gamma_adaptive=True))
    t0 = time.perf_counter()
    fit_path(data, loss, irw, lambda_grid(data, loss, 50, opts=irw.options))
    return time.perf_counter() - t0


def test_c10_path_timing(record):
    # elapsed time averaged over data sets, as in the timing protocol
    dims, reps = (100, 200, 300, 400, 500), 10
    _path_seconds(100, 0)
    secs = [float(np.mean([_path_seconds(d, r) for r in range(reps)])) for d in dims]
    worst = max(_path_seconds(500, r) for r in range(2))
    monotone = all(a < b for a, b in zip(secs, secs[1:]))
    ratio = secs[-1] / secs[0]
    ok = worst < 60 and monotone and ratio < (dims[-1] / dims[0]) ** 2
    record("C10 path timing", ok,
           f"mean seconds {', '.join(f'{s:.2f}' for s in secs)}; d=500 single path {worst:.2f}s "
           f"(< 60s); monotone {monotone}; t500/t100 {ratio:.1f} (< 25)")
    assert ok
