"""
Command-line interface: ``python -m retire {fit,cv,ci,simulate,bench}``.

JSON goes to stdout (or ``--out``).  Exit status is 0 on success, 2 on bad
input and 3 when a solver does not converge.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bench import METHODS, run_benchmark
from .exceptions import (MissingColumn, NonConvergence, NonNumericCell, RaggedRow,
                         RetireError)
from .loss import LossSpec
from .model import CvRule, IrwSpec, cross_validate, fit_retire_lowdim, fit_retire_penalized
from .penalty import PenaltyKind, PenaltySpec
from .sim import Model, NoiseDistribution, SimSpec, generate
from .solver import Dataset, SolveOptions, fit_sncd

EXIT_OK, EXIT_INPUT, EXIT_NONCONV = 0, 2, 3


def parse_csv(path, response=None) -> Dataset:
    '''
        Read a header-first numeric CSV.  ``response`` is a column name or a
        0-based index (default: the last column); the other columns become
        predictors in header order.
    '''
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MissingColumn(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    ncol = len(header)
    if response is None:
        k = ncol - 1
    elif isinstance(response, int) or str(response).lstrip("-").isdigit():
        k = int(response)
        if not 0 <= k < ncol:
            raise MissingColumn(f"response index {k} out of range for {ncol} columns")
    else:
        if response not in header:
            raise MissingColumn(f"no column named {response!r}")
        k = header.index(response)
    body = np.empty((len(rows) - 1, ncol))
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != ncol:
            raise RaggedRow(i, len(row), ncol)
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCell(i, j, cell) from None
            if not math.isfinite(v):
                raise NonNumericCell(i, j, cell)
            body[i - 1, j] = v
    if body.shape[0] == 0:
        raise MissingColumn(f"{path}: no data rows")
    keep = [j for j in range(ncol) if j != k]
    names = tuple(header[j] for j in keep)
    return Dataset(body[:, keep], body[:, k], names)


def write_csv(path, data: Dataset, response: str = "y"):
    names = data.names or tuple(f"x{j + 1}" for j in range(data.d))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, response])
        for xi, yi in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])


def _num(v: float):
    return "inf" if math.isinf(v) else float(v)


def _gamma(text: str):
    text = text.strip().lower()
    if text == "auto":
        return math.inf, True
    if text in ("inf", "infinity"):
        return math.inf, False
    g = float(text)
    if not g > 0:
        raise ValueError("gamma must be positive, 'inf' or 'auto'")
    return g, False


def _penalty(args, lam):
    kind = PenaltyKind(args.penalty)
    shape = {PenaltyKind.SCAD: args.scad_a, PenaltyKind.MCP: args.mcp_b}.get(kind)
    return PenaltySpec(kind, lam, shape)


def _setup(args):
    gamma, adaptive = _gamma(args.gamma)
    loss = LossSpec(args.tau, gamma)
    opts = SolveOptions(tol=args.tol, max_iter=args.max_iter, gamma_adaptive=adaptive)
    return loss, opts


def _fit_doc(fit, lam):
    return {"intercept": fit.intercept,
            "coefficients": [float(v) for v in fit.slopes],
            "gamma_used": _num(fit.gamma_used),
            "lambda": float(lam),
            "iterations": fit.iterations,
            "kkt_residual": fit.kkt_residual,
            "converged": fit.converged}


def cmd_fit(args):
    data = parse_csv(args.input, args.response)
    loss, opts = _setup(args)
    lam = args.lam or 0.0
    if lam == 0:
        fit = fit_sncd(data, loss, np.zeros(data.d), opts)
    else:
        irw = IrwSpec(_penalty(args, lam), args.irw_steps, opts)
        fit = fit_retire_penalized(data, loss, irw)[-1]
    return _fit_doc(fit, lam)


def cmd_cv(args):
    if args.lam is not None:
        raise ValueError("cv takes --nlambda, not --lambda")
    data = parse_csv(args.input, args.response)
    loss, opts = _setup(args)
    irw = IrwSpec(_penalty(args, 1.0), args.irw_steps, opts)
    cv = cross_validate(data, loss, irw, nlambda=args.nlambda, folds=args.folds,
                        seed=args.seed, rule=args.rule)
    fit = fit_retire_penalized(data, loss, irw.with_lambda(cv.chosen_lambda))[-1]
    doc = _fit_doc(fit, cv.chosen_lambda)
    doc.update({"lambda_grid": [float(v) for v in cv.lambda_grid],
                "mean_loss": [float(v) for v in cv.mean_loss],
                "se_loss": [float(v) for v in cv.se_loss],
                "chosen_lambda": cv.chosen_lambda,
                "rule": cv.rule.value})
    return doc


def cmd_ci(args):
    data = parse_csv(args.input, args.response)
    loss, opts = _setup(args)
    fit, cis = fit_retire_lowdim(data, loss, opts, level=args.level)
    doc = _fit_doc(fit, 0.0)
    names = ("(intercept)",) + (data.names or tuple(f"x{j + 1}" for j in range(data.d)))
    doc["intervals"] = [{"name": names[c.index], "estimate": c.estimate, "stderr": c.stderr,
                         "lower": c.lower, "upper": c.upper, "level": c.level} for c in cis]
    return doc


def _simspec(args):
    return SimSpec(Model(args.model), args.n, args.d, NoiseDistribution.parse(args.noise),
                   args.tau, args.seed)


def cmd_simulate(args):
    if not args.out:
        raise ValueError("simulate needs --out for the CSV file")
    spec = _simspec(args)
    data, truth = generate(spec)
    out = Path(args.out)
    write_csv(out, data)
    truth_path = out.with_name(out.name + ".truth.json")
    doc = {"csv": str(out), "truth": str(truth_path), "n": spec.n, "d": spec.d,
           "model": spec.model.value, "noise": args.noise, "tau": spec.tau, "seed": spec.seed,
           "beta_star": [float(v) for v in truth.beta_star]}
    truth_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return doc, False


def cmd_bench(args):
    spec = _simspec(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    res = run_benchmark(spec, args.reps, methods, serial=args.serial, folds=args.folds,
                        nlambda=args.nlambda, rule=CvRule(args.rule), tol=args.tol,
                        scad_a=args.scad_a, irw_steps=args.irw_steps)
    return {"model": spec.model.value, "noise": args.noise, "n": spec.n, "d": spec.d,
            "tau": spec.tau, "seed": spec.seed, "reps": args.reps, "rule": args.rule,
            "methods": res["methods"]}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tau", type=float, default=0.5)
    common.add_argument("--gamma", default="auto", help="'auto', 'inf' or a positive number")
    common.add_argument("--penalty", choices=["l1", "scad", "mcp"], default="l1")
    common.add_argument("--scad-a", type=float, default=3.7)
    common.add_argument("--mcp-b", type=float, default=3.0)
    common.add_argument("--lambda", dest="lam", type=float, default=None)
    common.add_argument("--nlambda", type=int, default=50)
    common.add_argument("--folds", type=int, default=10)
    common.add_argument("--irw-steps", type=int, default=3)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-7)
    common.add_argument("--max-iter", type=int, default=10_000)
    common.add_argument("--rule", choices=["1se", "min"], default="1se")
    common.add_argument("--out", default=None)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("input", help="CSV file with a header row")
    data.add_argument("--response", default=None, help="response column name or 0-based index")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--model", choices=[m.value for m in Model], default="hom")
    sim.add_argument("--noise", default="gaussian:2", help="gaussian:VAR or t:DF")
    sim.add_argument("--n", type=int, default=400)
    sim.add_argument("--d", type=int, default=200)

    p = argparse.ArgumentParser(prog="retire", description="robust expectile regression")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common, data], help="fit at a fixed lambda")
    sub.add_parser("cv", parents=[common, data], help="cross-validated penalized fit")
    ci = sub.add_parser("ci", parents=[common, data], help="low-dimensional fit with intervals")
    ci.add_argument("--level", type=float, default=0.95)
    sub.add_parser("simulate", parents=[common, sim], help="write a simulated data set")
    b = sub.add_parser("bench", parents=[common, sim], help="Monte Carlo benchmark")
    b.add_argument("--reps", type=int, default=20)
    b.add_argument("--methods", default=",".join(METHODS))
    b.add_argument("--serial", action="store_true")
    return p


COMMANDS = {"fit": cmd_fit, "cv": cmd_cv, "ci": cmd_ci, "simulate": cmd_simulate,
            "bench": cmd_bench}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        doc = COMMANDS[args.command](args)
        to_out = True
        if isinstance(doc, tuple):
            doc, to_out = doc
    except NonConvergence as err:
        print(f"retire: {err}", file=stderr)
        return EXIT_NONCONV
    except (RetireError, ValueError, OSError) as err:
        print(f"retire: {err}", file=stderr)
        return EXIT_INPUT
    text = json.dumps(doc, indent=2) + "\n"
    if args.out and to_out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(run())
