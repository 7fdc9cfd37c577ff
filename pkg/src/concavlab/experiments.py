"""Parameter sweeps that check the theorem families on random instances.

One CSV row is written per (family, sample). Algebraic families
(``collapse``, ``factorization``) compare vectors and report the largest
coordinate deviation relative to the rounding scale in ``rel_err``; their
``lhs``/``rhs`` columns hold the target norms of the two sides. Norm
families report the two norm values directly:

* ``mu-bound``: ``||mu(xs)||_(p)`` against ``prod_m ||x_m||_(p_m)``;
  ``rel_err`` is the one-sided excess ``max(lhs - rhs, 0) / rhs``.
* ``cross-norm``: ``||x_1 (x) ... (x) x_n||_|pi|`` against the same product.
* ``main-isometry``: ``||T(x)||`` in the diagonal quotient against
  ``||x||_(p)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .concavification import ConcaveSpace, concavification_norm
from .lattice import LatticeSpace, NormFamily
from .optim import SolverConfig
from .orthomaps import (
    ALGEBRA_TOL,
    collapse_arguments,
    evaluate,
    factorize,
    mu,
    random_orthomap,
    relative_deviation,
)
from .quotient import diagonal_embed_T, quotient_norm
from .tensor import TensorSpace, elementary, fremlin_norm

__all__ = [
    "FAMILIES",
    "CSV_COLUMNS",
    "ExperimentPlan",
    "PlanError",
    "Row",
    "run_plan",
    "summarize",
    "rows_to_csv",
    "exit_code",
    "summary_schema",
]

FAMILIES = ("collapse", "factorization", "mu-bound", "cross-norm", "main-isometry")
CSV_COLUMNS = ("family", "seed", "d", "n", "p_vec", "norm_spec", "lhs", "rhs", "rel_err", "converged")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_INCONCLUSIVE = 3


class PlanError(ValueError):
    """An experiment plan that cannot be run."""


@dataclass(frozen=True)
class ExperimentPlan:
    """Grid of instances for a sweep.

    Each exponent vector ``p`` is run at arity ``len(p)`` when that arity
    is listed; a listed arity without any matching vector uses all-ones
    exponents. ``norm_specs`` hold NormFamily dicts without a dimension
    (weights default to ones at every ``d``). ``tolerance`` applies to the
    norm families; algebraic families use ``1e-9``.
    """

    dims: tuple = (2, 3)
    arities: tuple = (2, 3)
    exponent_sets: tuple = ((1.0, 1.0), (2.0, 1.0), (0.5, 0.5))
    norm_specs: tuple = ({"kind": "lq", "q": 1}, {"kind": "lq", "q": 2}, {"kind": "sup"})
    samples: int = 50
    seed: int = 0
    tolerance: float = 1e-3
    families: tuple = FAMILIES
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        for name in ("dims", "arities", "exponent_sets", "norm_specs", "families"):
            if len(getattr(self, name)) == 0:
                raise PlanError(f"{name} must be non-empty")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise PlanError(f"samples must be a positive integer, got {self.samples!r}")
        if any(int(d) < 1 for d in self.dims):
            raise PlanError("dims must be positive")
        if any(int(n) < 2 for n in self.arities):
            raise PlanError("arities must be at least 2")
        if any(len(p) < 1 or min(p) <= 0 for p in self.exponent_sets):
            raise PlanError("exponent sets must be non-empty vectors of positive reals")
        if not self.tolerance > 0:
            raise PlanError("tolerance must be positive")
        if self.seed < 0:
            raise PlanError("seed must be non-negative")
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise PlanError(f"unknown families {sorted(unknown)}")
        for spec in self.norm_specs:
            try:
                for d in self.dims:
                    NormFamily.from_dict(spec, int(d))
            except (ValueError, KeyError, TypeError) as err:
                raise PlanError(f"bad norm spec {spec!r}: {err}") from err

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        known = {"dims", "arities", "exponent_sets", "norm_specs", "samples", "seed",
                 "tolerance", "families", "solver"}
        unknown = set(data) - known
        if unknown:
            raise PlanError(f"unknown plan keys {sorted(unknown)}")
        kw = {}
        for key in ("dims", "arities", "families"):
            if key in data:
                kw[key] = tuple(data[key])
        if "exponent_sets" in data:
            kw["exponent_sets"] = tuple(tuple(float(x) for x in p) for p in data["exponent_sets"])
        if "norm_specs" in data:
            kw["norm_specs"] = tuple(dict(s) for s in data["norm_specs"])
        for key in ("samples", "seed", "tolerance"):
            if key in data:
                kw[key] = data[key]
        if "solver" in data:
            try:
                kw["solver"] = SolverConfig.from_dict(data["solver"])
            except (TypeError, ValueError) as err:
                raise PlanError(str(err)) from err
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "arities": list(self.arities),
            "exponent_sets": [list(p) for p in self.exponent_sets],
            "norm_specs": [dict(s) for s in self.norm_specs],
            "samples": self.samples,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "families": list(self.families),
            "solver": self.solver.to_dict(),
        }

    def exponent_vectors(self) -> list:
        """Exponent vectors paired with the listed arities."""
        arities = [int(n) for n in self.arities]
        out = [tuple(p) for p in self.exponent_sets if len(p) in arities]
        for n in arities:
            if not any(len(p) == n for p in out):
                out.append((1.0,) * n)
        return out

    def tasks(self) -> list:
        """``(family, d, p_vec, norm_index, sample, seed)`` in output order."""
        out = []
        vectors = self.exponent_vectors()
        for fi, fam in enumerate(FAMILIES):
            if fam not in self.families:
                continue
            for d in self.dims:
                for pi, pv in enumerate(vectors):
                    for ni in range(len(self.norm_specs)):
                        for s in range(self.samples):
                            ss = np.random.SeedSequence([self.seed, fi, int(d), pi, ni, s])
                            out.append((fam, int(d), pv, ni, s, int(ss.generate_state(1)[0])))
        return out


@dataclass(frozen=True)
class Row:
    family: str
    seed: int
    d: int
    n: int
    p_vec: tuple
    norm_spec: str
    lhs: float
    rhs: float
    rel_err: float
    converged: bool
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.converged and self.rel_err <= self.tolerance

    def csv_fields(self) -> list:
        return [
            self.family,
            self.seed,
            self.d,
            self.n,
            " ".join(_fmt(p) for p in self.p_vec),
            self.norm_spec,
            _fmt(self.lhs),
            _fmt(self.rhs),
            _fmt(self.rel_err),
            "true" if self.converged else "false",
        ]


def _fmt(x: float) -> str:
    return repr(float(x))


def _space(spec: dict, d: int) -> LatticeSpace:
    return LatticeSpace.from_dict({"dim": d, "norm": spec})


def _rel(lhs: float, rhs: float) -> float:
    if lhs == rhs:
        return 0.0
    return abs(lhs - rhs) / abs(rhs) if rhs != 0 else math.inf


def _run_task(args) -> Row:
    plan, (fam, d, pv, ni, _sample, seed) = args
    rng = np.random.default_rng(seed)
    space = _space(plan.norm_specs[ni], d)
    n = len(pv)
    cfg = plan.solver.updated(seed=seed)
    tol = ALGEBRA_TOL if fam in ("collapse", "factorization") else plan.tolerance
    spec = space.spec_string()

    if fam in ("collapse", "factorization"):
        t = int(rng.integers(1, 4))
        structure = "morphism" if rng.random() < 0.5 else "general"
        phi = random_orthomap(int(rng.integers(2**32)), n, (d, t), structure, exponents=pv, source=space)
        xs = [space.vector(rng.standard_normal(d)) for _ in range(n)]
        lhs = evaluate(phi, xs)
        rhs = evaluate(phi, collapse_arguments(phi, xs)) if fam == "collapse" else factorize(phi)(mu(pv, xs))
        scale = float(np.max(evaluate(phi, [x.abs() for x in xs]).coords, initial=0.0))
        err = relative_deviation(lhs, rhs, scale)
        return Row(fam, seed, d, n, pv, spec, lhs.norm(), rhs.norm(), err, True, tol)

    if fam == "mu-bound":
        xs = [space.vector(rng.standard_normal(d)) for _ in range(n)]
        p = float(sum(pv))
        left = concavification_norm(ConcaveSpace(space, p), mu(pv, xs), config=cfg)
        conv = left.converged
        rhs = 1.0
        for x, pm in zip(xs, pv):
            r = concavification_norm(ConcaveSpace(space, pm), x, config=cfg)
            rhs *= r.value
            conv = conv and r.converged
        err = max(left.value - rhs, 0.0) / rhs if rhs > 0 else 0.0
        return Row(fam, seed, d, n, pv, spec, left.value, rhs, err, conv, tol)

    if fam == "cross-norm":
        ts = TensorSpace.power(space, pv)
        xs = [space.vector(np.abs(rng.standard_normal(d)) + 1e-3) for _ in range(n)]
        res = fremlin_norm(elementary(ts, xs), config=cfg)
        conv = res.converged
        rhs = 1.0
        for f, x in zip(ts.factors, xs):
            r = concavification_norm(f, x, config=cfg)
            rhs *= r.value
            conv = conv and r.converged
        return Row(fam, seed, d, n, pv, spec, res.value, rhs, _rel(res.value, rhs), conv, tol)

    # main-isometry
    ts = TensorSpace.power(space, pv)
    x = space.vector(rng.standard_normal(d))
    res = quotient_norm(diagonal_embed_T(x, ts), config=cfg)
    ref = concavification_norm(ConcaveSpace(space, float(sum(pv))), x, config=cfg)
    conv = res.converged and ref.converged
    return Row(fam, seed, d, n, pv, spec, res.value, ref.value, _rel(res.value, ref.value), conv, tol)


def run_plan(plan: ExperimentPlan, workers: int = 1) -> list:
    """Evaluate every task of ``plan``; rows come back in task order.

    Each task draws from its own seed, derived from the plan seed and its
    grid position, so results do not depend on ``workers``.
    """
    jobs = [(plan, t) for t in plan.tasks()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_task, jobs, chunksize=8))
    else:
        rows = [_run_task(j) for j in jobs]
    order = {fam: i for i, fam in enumerate(FAMILIES)}
    keyed = sorted(
        zip(plan.tasks(), rows),
        key=lambda tr: (order[tr[0][0]], tr[0][1], len(tr[0][2]), tr[0][2], tr[0][3], tr[0][4]),
    )
    return [r for _, r in keyed]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def summarize(rows, plan: ExperimentPlan | None = None) -> dict:
    """Per-family ``{count, pass, worst_rel_err, status}``.

    ``status`` is ``inconclusive`` if any row of the family did not
    converge, else ``pass`` when every row is within tolerance.
    """
    fams = {}
    for r in rows:
        f = fams.setdefault(r.family, {"count": 0, "pass": 0, "worst_rel_err": 0.0,
                                       "tolerance": r.tolerance, "unconverged": 0})
        f["count"] += 1
        f["pass"] += int(r.passed)
        f["unconverged"] += int(not r.converged)
        if not r.rel_err <= f["worst_rel_err"]:
            f["worst_rel_err"] = r.rel_err
    for f in fams.values():
        if not math.isfinite(f["worst_rel_err"]):
            f["worst_rel_err"] = None  # JSON has no infinity
        if f["unconverged"]:
            f["status"] = "inconclusive"
        else:
            f["status"] = "pass" if f["pass"] == f["count"] else "fail"
    out = {"families": fams, "all_pass": all(f["status"] == "pass" for f in fams.values())}
    if plan is not None:
        out["plan"] = plan.to_dict()
    return out


def exit_code(summary: dict) -> int:
    statuses = [f["status"] for f in summary["families"].values()]
    if "inconclusive" in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if all(s == "pass" for s in statuses) else EXIT_FAIL


def summary_schema() -> dict:
    """The published JSON schema for sweep summaries."""
    text = resources.files("concavlab").joinpath("schemas/summary.schema.json").read_text()
    return json.loads(text)
