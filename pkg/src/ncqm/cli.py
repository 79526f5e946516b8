"""Batch front end: problem-file ingestion, task dispatch, exact reports.

Input and output are JSON; exact scalars are always strings, never
floats.  Identical (problem, seed) pairs produce byte-identical reports,
so timing is written to stderr only.

Exit codes: 0 all tasks pass, 1 any task fails, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .exact_algebra import (
    GaussianFunction,
    GaussianRational,
    ThetaPoly,
    parse_polynomial,
)
from .operators import Gamma1Tensor, build_xhat, subalgebra_defect
from .poisson import (
    NotPoissonError,
    PoissonBivector,
    assemble_darboux,
    build_gamma,
    jacobi_defect,
    verify_darboux,
)
from .qm_examples import (
    build_fuzzy_oscillator,
    free_particle_check,
    fuzzy_sphere_bivector,
)
from .star import (
    GaugeError,
    MeasureError,
    StarProduct,
    assoc_defect,
    cyclicity_defect,
    gauge_b,
    measure_defect,
)

TASKS = (
    "validate",
    "gamma",
    "darboux-check",
    "star-assoc",
    "trace-check",
    "subalgebra",
    "oscillator",
    "free-particle",
)

RANDOM_DEGREE_MAX = 3
RANDOM_COEFF_HEIGHT = 3
RANDOM_TRIPLES = 20


class ProblemError(ValueError):
    """Malformed problem file."""


@dataclass
class ProblemFile:
    """Validated batch problem."""

    dim: int
    bivector: PoissonBivector
    mu: ThetaPoly
    order: int = 3
    tasks: tuple[str, ...] = ()
    seed: int = 0

    @staticmethod
    def parse(text: str) -> "ProblemFile":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as err:
            raise ProblemError(
                f"parse error at line {err.lineno}, column {err.colno}: {err.msg}")
        if not isinstance(raw, dict):
            raise ProblemError("problem file must be a JSON object")
        dim = raw.get("dim")
        if not isinstance(dim, int) or dim < 1:
            raise ProblemError("'dim' must be a positive integer")
        order = raw.get("order", 3)
        if not isinstance(order, int) or order < 0:
            raise ProblemError("'order' must be a nonnegative integer")
        trunc = max(order, 3)
        entries = {}
        for row in raw.get("bivector", []):
            if not (isinstance(row, dict) and {"i", "j", "poly"} <= set(row)):
                raise ProblemError(
                    "bivector entries must be objects with keys i, j, poly")
            i, j = row["i"], row["j"]
            if not (isinstance(i, int) and isinstance(j, int)):
                raise ProblemError("bivector indices must be integers")
            if not (1 <= i <= dim and 1 <= j <= dim):
                raise ProblemError(
                    f"bivector index ({i},{j}) out of range 1..{dim}")
            if i == j:
                raise ProblemError(
                    f"diagonal bivector entry ({i},{j}) violates antisymmetry")
            try:
                poly = parse_polynomial(row["poly"], dim, trunc)
            except ValueError as err:
                raise ProblemError(f"entry ({i},{j}): {err}")
            key = (i - 1, j - 1)
            if key in entries or (key[1], key[0]) in entries:
                raise ProblemError(f"duplicate bivector entry ({i},{j})")
            entries[key] = poly
        bivector = PoissonBivector(dim, entries)
        mu_text = raw.get("measure", "1")
        try:
            mu = parse_polynomial(mu_text, dim, trunc)
        except ValueError as err:
            raise ProblemError(f"measure: {err}")
        tasks = tuple(raw.get("tasks", []))
        for t in tasks:
            if t not in TASKS:
                raise ProblemError(f"unknown task {t!r}; expected one of {TASKS}")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int):
            raise ProblemError("'seed' must be an integer")
        return ProblemFile(dim, bivector, mu, order, tasks, seed)

    def to_json(self) -> dict:
        rows = []
        for (i, j), poly in sorted(self.bivector.upper.items()):
            rows.append({"i": i + 1, "j": j + 1, "poly": poly.text()})
        return {
            "dim": self.dim,
            "bivector": rows,
            "measure": self.mu.text(),
            "order": self.order,
            "tasks": list(self.tasks),
            "seed": self.seed,
        }


def _random_poly(rng: random.Random, n: int, trunc: int,
                 degree: int = RANDOM_DEGREE_MAX, terms: int = 5) -> ThetaPoly:
    p = ThetaPoly.zero(n, trunc)
    h = RANDOM_COEFF_HEIGHT
    for _ in range(terms):
        ce = [0] * n
        for _ in range(rng.randint(0, degree)):
            ce[rng.randrange(n)] += 1
        c = GaussianRational(Fraction(rng.randint(-h, h)),
                             Fraction(rng.randint(-h, h)))
        p = p + ThetaPoly(n, {(0, tuple(ce), (0,) * n): c}, trunc)
    return p


def run_task(problem: ProblemFile, task: str) -> dict:
    """Execute one task; returns a JSON-ready record with a status."""
    w = problem.bivector
    n = problem.dim
    order = problem.order
    rng = random.Random(problem.seed)
    bounds = {"degree_max": RANDOM_DEGREE_MAX,
              "coeff_height": RANDOM_COEFF_HEIGHT,
              "samples": RANDOM_TRIPLES}

    if task == "validate":
        defect = jacobi_defect(w)
        mdef = measure_defect(problem.mu, w)
        ok = defect.is_zero and all(d.is_zero for d in mdef)
        return {
            "status": "pass" if ok else "fail",
            "jacobi_defect": defect.to_json(),
            "measure_defect": [d.text() for d in mdef],
        }

    if task == "gamma":
        try:
            tower = build_gamma(w, max(order, 1))
        except NotPoissonError as err:
            return {"status": "error", "reason": "not a Poisson bivector",
                    "jacobi_defect": err.defect.to_json()}
        return {"status": "pass", "tensors": tower.to_json()}

    if task == "darboux-check":
        try:
            tower = build_gamma(w, max(order, 1))
        except NotPoissonError as err:
            return {"status": "error", "reason": "not a Poisson bivector",
                    "jacobi_defect": err.defect.to_json()}
        report = verify_darboux(assemble_darboux(tower), w, max(order, 1))
        ok = report.xx_zero and report.pp_zero and report.delta_matches_reference
        out = report.to_json()
        out["status"] = "pass" if ok else "fail"
        return out

    if task == "star-assoc":
        if order > 3:
            return {"status": "error",
                    "reason": "star tasks need order at most 3"}
        try:
            product = StarProduct(w, order)
        except NotPoissonError as err:
            return {"status": "error", "reason": "not a Poisson bivector",
                    "jacobi_defect": err.defect.to_json()}
        failures = []
        for k in range(RANDOM_TRIPLES):
            f = _random_poly(rng, n, product.trunc)
            g = _random_poly(rng, n, product.trunc)
            h = _random_poly(rng, n, product.trunc)
            defect = assoc_defect(f, g, h, product).truncated(order)
            if not defect.is_zero:
                failures.append({"triple": k, "defect": defect.text()})
        return {"status": "pass" if not failures else "fail",
                "bounds": bounds, "failures": failures}

    if task == "trace-check":
        if order > 3:
            return {"status": "error",
                    "reason": "star tasks need order at most 3"}
        try:
            product = StarProduct(w, min(order, 2) if order >= 2 else order,
                                  trunc=max(order, 2))
        except NotPoissonError as err:
            return {"status": "error", "reason": "not a Poisson bivector",
                    "jacobi_defect": err.defect.to_json()}
        mdef = measure_defect(problem.mu, w)
        if any(not d.is_zero for d in mdef):
            return {"status": "fail",
                    "reason": "density fails the divergence condition",
                    "measure_defect": [d.text() for d in mdef]}
        try:
            gauge = gauge_b(problem.mu, w)
        except GaugeError as err:
            return {"status": "error", "reason": str(err)}
        failures = []
        uncorrected = []
        check_order = min(order, 2)
        for k in range(RANDOM_TRIPLES):
            f = GaussianFunction(_random_poly(rng, n, product.trunc))
            g = GaussianFunction(_random_poly(rng, n, product.trunc))
            rep = cyclicity_defect(f, g, product, problem.mu, True,
                                   gauge, check_order)
            if not rep.zero_through(check_order):
                failures.append({
                    "pair": k,
                    "antisymmetric": rep.antisymmetric.text(),
                    "trace_condition": rep.trace_condition.text(),
                })
            raw = cyclicity_defect(f, g, product, problem.mu, False,
                                   gauge, check_order)
            uncorrected.append(raw.trace_condition.theta_slice(2).text())
        return {"status": "pass" if not failures else "fail",
                "bounds": bounds,
                "gauge": gauge.to_json(),
                "corrected_failures": failures,
                "uncorrected_grade2_defects": uncorrected}

    if task == "subalgebra":
        try:
            tower = build_gamma(w, 3)
        except NotPoissonError as err:
            return {"status": "error", "reason": "not a Poisson bivector",
                    "jacobi_defect": err.defect.to_json()}
        product = StarProduct(w, 2, trunc=3)
        xhat = build_xhat(w, tower)
        defects = subalgebra_defect(xhat, w, product)
        ok = all(op.is_zero for op in defects.values())
        bare = build_xhat(w, tower, Gamma1Tensor.zero(n))
        residuals = subalgebra_defect(bare, w, product)
        return {
            "status": "pass" if ok else "fail",
            "defects": {f"({i+1},{j+1})": op.text()
                        for (i, j), op in sorted(defects.items())},
            "residual_without_correction": {
                f"({i+1},{j+1})": op.text()
                for (i, j), op in sorted(residuals.items())},
        }

    if task == "oscillator":
        if n != 3 or w != fuzzy_sphere_bivector():
            return {"status": "error",
                    "reason": "oscillator task needs the fuzzy-sphere bivector"}
        if problem.mu != ThetaPoly.one(n, problem.mu.trunc):
            return {"status": "error",
                    "reason": "oscillator task needs unit density"}
        report = build_fuzzy_oscillator()
        ok = report.identity_holds and report.first_grade_vanishes
        out = report.to_json()
        out["status"] = "pass" if ok else "fail"
        out["correction_coefficient"] = "1/24"
        return out

    if task == "free-particle":
        report = free_particle_check(problem.mu)
        ok = (report.momentum_identity and report.hamiltonian_identity
              and report.momenta_commute)
        out = report.to_json()
        out["status"] = "pass" if ok else "fail"
        return out

    return {"status": "error", "reason": f"unsupported task {task!r}"}


def run(problem: ProblemFile, tasks: Optional[Sequence[str]] = None) -> dict:
    if tasks is None or not tasks:
        tasks = problem.tasks or ("validate",)
    records = {}
    for task in sorted(set(tasks)):
        started = time.monotonic()
        try:
            records[task] = run_task(problem, task)
        except (MeasureError, GaugeError, NotPoissonError) as err:
            records[task] = {"status": "error", "reason": str(err)}
        print(f"[{task}] {time.monotonic() - started:.3f}s", file=sys.stderr)
    status = "pass"
    if any(r.get("status") == "error" for r in records.values()):
        status = "error"
    if any(r.get("status") == "fail" for r in records.values()):
        status = "fail"
    return {
        "problem": problem.to_json(),
        "tasks": records,
        "status": status,
    }


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ncqm",
        description="Exact checks for quantum mechanics with "
                    "coordinate-dependent noncommutativity.")
    parser.add_argument("problem", help="path to a JSON problem file")
    parser.add_argument("--task", action="append", choices=TASKS,
                        help="task to run (repeatable; default: the "
                             "problem file's task list, else validate)")
    parser.add_argument("--order", type=int, default=None,
                        help="override the grading truncation order")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the random seed")
    style = parser.add_mutually_exclusive_group()
    style.add_argument("--json", action="store_true",
                       help="compact single-line JSON (default)")
    style.add_argument("--pretty", action="store_true",
                       help="indented JSON")
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0
    try:
        with open(args.problem, "r", encoding="utf-8") as fh:
            problem = ProblemFile.parse(fh.read())
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ProblemError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.order is not None:
        if args.order < 0:
            print("error: order must be nonnegative", file=sys.stderr)
            return 2
        problem.order = args.order
    if args.seed is not None:
        problem.seed = args.seed
    report = run(problem, args.task)
    if args.pretty:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(json.dumps(report, sort_keys=True, separators=(",", ":")))
    if report["status"] == "pass":
        return 0
    if report["status"] == "fail":
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
