"""Decomposition-infimum solver shared by every norm in the package.

All three infima (concavification, Fremlin projective, diagonal quotient)
are instances of one problem once vectors of ``E_(p)`` are written in their
linear coordinates ``a = x^p``:

    minimise   sum_i prod_m g_m(a_i^(m))
    subject to sum_i a_i^(1) (x) ... (x) a_i^(n) >= B   on the constrained entries
               a_i^(m) >= 0

where ``g_m(a) = ||a^(1/p_m)||^(p_m)`` is the power gauge of factor ``m``.
A concavification norm is the case ``n = 1``. For a Fremlin norm, the inner
concavification infima can be expanded into the outer sum, so the power
gauges suffice and no nested solve is needed.

Two independent routes are provided:

* :func:`minimize_decomposition` runs column generation. A small LP fixes
  the weights of the current rank-one terms, and its dual prices drive an
  alternating-maximisation pricing step. Pricing is closed form per factor
  through :meth:`NormFamily.power_lmo`. Every iterate is feasible, so every
  reported value is an upper bound.
* :func:`brute_force_oracle` enumerates a fixed angular grid of term
  directions, solves the LP over all of them at once, then zooms a local
  grid around the active directions.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .lattice import NormFamily

__all__ = [
    "Gauge",
    "DecompositionProblem",
    "SolverConfig",
    "SolverReport",
    "OracleReport",
    "OracleSizeError",
    "minimize_decomposition",
    "brute_force_oracle",
    "check_witness",
]

log = logging.getLogger(__name__)

PROBLEM_KINDS = ("concavification", "fremlin", "quotient")
SMOOTHING = 0.5


class OracleSizeError(ValueError):
    """The brute-force oracle refuses instances outside its size guard."""


@dataclass(frozen=True)
class Gauge:
    """Power gauge ``a -> ||a^(1/p)||^p`` of a concavified factor."""

    norm: NormFamily
    p: float

    def __call__(self, a) -> float:
        return self.norm.power_gauge(a, self.p)

    def lmo(self, c) -> np.ndarray:
        return self.norm.power_lmo(np.maximum(c, 0.0), self.p)

    def support(self, phi) -> float:
        """``max <phi, a>`` over ``a >= 0`` with gauge at most one."""
        phi = np.maximum(phi, 0.0)
        return float(phi @ self.lmo(phi))

    def dual(self, c) -> np.ndarray:
        phi = self.norm.power_dual(c, self.p)
        s = self.support(phi)
        return phi / s if s > 0 else phi

    def normalize(self, a) -> np.ndarray:
        g = self(a)
        if g <= 0:
            raise ValueError("cannot normalise a zero direction")
        return np.asarray(a, dtype=float) / g


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 16
    max_iters: int = 5000
    rel_tol: float = 1e-7
    part_cap: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.part_cap is not None and self.part_cap < 1:
            raise ValueError("part_cap must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {"restarts", "max_iters", "rel_tol", "part_cap", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "restarts": self.restarts,
            "max_iters": self.max_iters,
            "rel_tol": self.rel_tol,
            "part_cap": self.part_cap,
            "seed": self.seed,
        }

    def updated(self, **kw) -> "SolverConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass(frozen=True, eq=False)
class DecompositionProblem:
    """One instance of the decomposition infimum.

    Parameters
    ----------
    kind : str
        ``"concavification"``, ``"fremlin"`` or ``"quotient"``.
    gauges : tuple of Gauge
        One per tensor factor; ``len(gauges) == target.ndim``.
    target : ndarray
        Nonnegative array ``B`` to dominate.
    mask : ndarray of bool, optional
        Entries where domination is required. Defaults to all entries.
    hints : tuple
        Extra candidate terms (tuples of factor arrays) seeded into the
        first restart.
    """

    kind: str
    gauges: tuple
    target: np.ndarray
    mask: np.ndarray | None = None
    hints: tuple = ()

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        t = np.asarray(self.target, dtype=float)
        if t.ndim != len(self.gauges):
            raise ValueError(f"target has {t.ndim} axes but {len(self.gauges)} gauges given")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValueError("target must be finite and nonnegative")
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "gauges", tuple(self.gauges))
        if self.mask is None:
            object.__setattr__(self, "mask", np.ones(t.shape, dtype=bool))
        elif np.shape(self.mask) != t.shape:
            raise ValueError("mask shape differs from target shape")

    @property
    def shape(self):
        return self.target.shape

    @property
    def arity(self):
        return self.target.ndim

    def rows(self) -> np.ndarray:
        """Flat indices of the entries that actually constrain the problem."""
        return np.flatnonzero(np.asarray(self.mask).ravel() & (self.target.ravel() > 0))

    def default_part_cap(self) -> int:
        dims = self.shape
        if self.kind == "concavification":
            return 8 * dims[0]
        n = len(dims)
        return int(math.ceil(4 * math.prod(dims) ** (1 / n) * n))

    def objective(self, terms) -> float:
        return float(sum(math.prod(g(f) for g, f in zip(self.gauges, term)) for term in terms))


@dataclass(frozen=True, eq=False)
class SolverReport:
    """Outcome of :func:`minimize_decomposition`.

    ``witness`` is a tuple of terms; each term is a tuple of nonnegative
    factor arrays in linear coordinates whose outer product is one summand.
    ``lower_bound`` is the best dual bound met along the way, used only as
    a stopping rule; ``converged`` means ``value`` is within ``rel_tol`` of
    it, so no later round could improve the value by more than ``rel_tol``.
    ``gap`` is ``value / lower_bound``.
    """

    value: float
    witness: tuple
    converged: bool
    restarts_used: int
    cap_hit: bool
    iterations: int = 0
    lower_bound: float = 0.0
    gap: float = 1.0
    history: tuple = ()
    restart_values: tuple = ()


def _outer(factors) -> np.ndarray:
    t = np.asarray(factors[0], dtype=float)
    for f in factors[1:]:
        t = np.multiply.outer(t, f)
    return t


def _contract_except(P, factors, m):
    if P.ndim == 2:
        return P @ factors[1] if m == 0 else factors[0] @ P
    c = P
    for k in range(len(factors) - 1, -1, -1):
        if k != m:
            c = np.tensordot(c, factors[k], axes=([k], [0]))
    return c


def _solve_lp(cols: np.ndarray, b: np.ndarray):
    """min sum(lam) s.t. cols @ lam >= b, lam >= 0. Returns (lam, duals).

    Rows are scaled to right-hand side 1 so that HiGHS's absolute
    feasibility tolerance cannot drop rows with tiny targets; ``b`` must be
    positive.
    """
    k = cols.shape[1]
    s = 1.0 / b
    res = linprog(
        np.ones(k), A_ub=-cols * s[:, None], b_ub=-np.ones_like(b), bounds=(0, None), method="highs"
    )
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    lam = np.maximum(res.x, 0.0)
    duals = np.maximum(-res.ineqlin.marginals, 0.0) * s
    # restore exact domination lost to LP tolerances
    cover = cols @ lam
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(b > 0, b / cover, 0.0)
    rho = float(np.max(ratio, initial=0.0))
    if not math.isfinite(rho):
        raise RuntimeError("LP solution leaves a target row uncovered")
    if rho > 1:
        lam = lam * rho
    return lam, duals


def check_witness(problem: DecompositionProblem, terms, atol=1e-9) -> bool:
    """Independent feasibility re-check of a witness against the target."""
    if any(np.any(np.asarray(f) < 0) for term in terms for f in term):
        return False
    total = np.zeros(problem.shape)
    for term in terms:
        total = total + _outer(term)
    need = np.where(problem.mask, problem.target, 0.0)
    return bool(np.all(total >= need - atol * np.maximum(1.0, need)))


class _ColumnGeneration:
    """One restart of the column-generation solver."""

    def __init__(self, problem, b, rows, config, rng):
        self.problem = problem
        self.b = b
        self.rows = rows
        self.config = config
        self.rng = rng
        self.atoms = []
        self.cols = []
        self.age = []
        self.bound0 = 0.0

    def coverage(self, factors):
        return _outer(factors).ravel()[self.rows]

    def add(self, factors):
        factors = tuple(np.asarray(f, dtype=float) for f in factors)
        try:
            factors = tuple(g.normalize(f) for g, f in zip(self.problem.gauges, factors))
        except ValueError:
            return
        col = self.coverage(factors)
        if not np.any(col > 0):
            return
        self.atoms.append(factors)
        self.cols.append(col)
        self.age.append(0)

    def price(self, duals, active):
        prob = self.problem
        P = np.zeros(prob.target.size)
        P[self.rows] = duals
        P = P.reshape(prob.shape)
        gauges = prob.gauges
        n = prob.arity
        if n == 1:
            a = gauges[0].lmo(P)
            return float(P @ a), (a,)
        starts = [list(self.atoms[i]) for i in active[:3]]
        for j in range(prob.shape[0]):
            e = np.zeros(prob.shape[0])
            e[j] = 1.0
            starts.append([gauges[0].normalize(e)] + [None] * (n - 1))
        starts.append([g.normalize(np.ones(d)) for g, d in zip(gauges, prob.shape)])
        for _ in range(2):
            starts.append([g.normalize(self.rng.random(d) + 0.05) for g, d in zip(gauges, prob.shape)])

        best_val, best = -1.0, None
        for fac in starts:
            fac = list(fac)
            for m in range(1, n):
                if fac[m] is None:
                    fac[m] = gauges[m].normalize(np.ones(prob.shape[m]))
            prev = -1.0
            val = 0.0
            for _ in range(100):
                for m in range(n):
                    c = _contract_except(P, fac, m)
                    fac[m] = gauges[m].lmo(c)
                val = float(c @ fac[n - 1])
                if val <= prev * (1 + 1e-13):
                    break
                prev = val
            if val > best_val:
                best_val, best = val, tuple(f.copy() for f in fac)
        return best_val, best

    def run(self):
        cfg = self.config
        prob = self.problem
        cap = cfg.part_cap or prob.default_part_cap()
        pool_limit = 4 * (cap + len(self.rows))
        history = []
        best_val, best_terms = math.inf, ()
        # Wentges smoothing: price at a convex combination of the LP duals
        # and the best dual seen so far, which damps the oscillation of
        # degenerate LP duals
        center, bound = None, self.bound0
        ratio = math.inf
        converged = False
        it = 0
        for it in range(1, cfg.max_iters + 1):
            cols = np.array(self.cols).T
            lam, duals = _solve_lp(cols, self.b)
            val = float(lam.sum())
            active = [i for i in np.argsort(-lam) if lam[i] > 0]
            if val < best_val:
                best_val = val
                best_terms = tuple(
                    (self.atoms[i][0] * lam[i],) + tuple(self.atoms[i][1:]) for i in active
                )
            history.append(best_val)

            trial = duals if center is None else SMOOTHING * center + (1 - SMOOTHING) * duals
            ratio, atom = self.price(trial, active)
            if ratio > 0 and trial @ self.b / ratio > bound:
                center, bound = trial, float(trial @ self.b / ratio)
            if bound >= best_val * (1 - cfg.rel_tol):
                converged = True
                break
            if self.coverage(atom) @ duals <= 1 + cfg.rel_tol and trial is not duals:
                # mispricing: the smoothed column does not improve the LP
                ratio, atom = self.price(duals, active)
                if ratio > 0 and duals @ self.b / ratio > bound:
                    center, bound = duals, float(duals @ self.b / ratio)
                if bound >= best_val * (1 - cfg.rel_tol):
                    converged = True
                    break

            for i in range(len(self.age)):
                self.age[i] = 0 if lam[i] > 0 else self.age[i] + 1
            self.add(atom)
            if len(self.atoms) > pool_limit:
                order = sorted(range(len(self.atoms)), key=lambda i: -self.age[i])
                drop = set(order[: len(self.atoms) - pool_limit])
                drop -= set(active)
                keep = [i for i in range(len(self.atoms)) if i not in drop]
                self.atoms = [self.atoms[i] for i in keep]
                self.cols = [self.cols[i] for i in keep]
                self.age = [self.age[i] for i in keep]
        return best_val, best_terms, converged, it, bound, history, cap


def _rank_one_bound(problem: DecompositionProblem, B: np.ndarray, rng, starts: int = 3) -> float:
    """Lower bound from dual functionals of the form ``phi_1 (x) ... (x) phi_n``.

    Each ``phi_m >= 0`` is scaled to have support value one on the unit
    gauge ball of its factor, so ``<B, (x) phi_m>`` is below the cost of any
    decomposition. Alternating maximisation picks the functionals.
    """
    gauges = problem.gauges
    n = problem.arity
    shape = problem.shape
    best = 0.0
    inits = []
    inits.append([g.dual(B.max(axis=tuple(k for k in range(n) if k != m)) if n > 1 else B)
                  for m, g in enumerate(gauges)])
    for _ in range(starts - 1):
        inits.append([g.dual(rng.random(d) + 0.05) for g, d in zip(gauges, shape)])
    for phi in inits:
        prev = -1.0
        val = 0.0
        for _ in range(100):
            for m in range(n):
                c = _contract_except(B, phi, m) if n > 1 else B
                phi[m] = gauges[m].dual(c)
            val = float(c @ phi[n - 1])
            if val <= prev * (1 + 1e-13):
                break
            prev = val
        # recompute with explicit normalisation; the bound only relies on this
        sup = math.prod(g.support(f) for g, f in zip(gauges, phi))
        if sup > 0:
            best = max(best, float(np.sum(B * _outer(phi))) / sup)
    return best


def _initial_atoms(problem: DecompositionProblem, rows, restart: int, rng) -> list:
    shape = problem.shape
    n = problem.arity
    atoms = []
    # atom split: one elementary term per constrained entry; always feasible
    for flat in rows:
        idx = np.unravel_index(flat, shape)
        term = []
        for m in range(n):
            e = np.zeros(shape[m])
            e[idx[m]] = 1.0
            term.append(e)
        atoms.append(tuple(term))
    if restart == 0:
        # single part: mode-wise maxima give a rank-one term dominating B;
        # mixtures split some modes into atoms and keep the others whole
        B = np.where(problem.mask, problem.target, 0.0)
        whole = []
        for m in range(n):
            axes = tuple(k for k in range(n) if k != m)
            whole.append(B.max(axis=axes) if axes else B.copy())
        for split in itertools.product((False, True), repeat=n):
            if all(split) or not np.all([w.any() for w in whole]):
                continue
            choices = []
            for m in range(n):
                if split[m]:
                    choices.append([np.eye(shape[m])[j] * whole[m][j] for j in range(shape[m]) if whole[m][j] > 0])
                else:
                    choices.append([whole[m]])
            atoms.extend(itertools.product(*choices))
        atoms.extend(tuple(problem.hints))
    elif restart >= 2:
        for _ in range(max(shape)):
            atoms.append(tuple(rng.random(d) + 1e-3 for d in shape))
    return atoms


def minimize_decomposition(problem: DecompositionProblem, config: SolverConfig | None = None) -> SolverReport:
    """Upper-bound the decomposition infimum of ``problem``.

    Restarts run in index order and stop after the first one that
    converges. The reported value is the minimum over the restarts run,
    with ties going to the lower restart index, so the result depends only
    on ``config``.
    """
    config = config or SolverConfig()
    rows = problem.rows()
    if rows.size == 0:
        return SolverReport(0.0, (), True, 0, False)
    b_raw = problem.target.ravel()[rows]
    scale = float(b_raw.max())
    b = b_raw / scale

    B = np.zeros(problem.target.size)
    B[rows] = b
    bound0 = _rank_one_bound(problem, B.reshape(problem.shape), np.random.default_rng([config.seed, 2**31]))
    best = None
    restart_values = []
    used = 0
    for r in range(config.restarts):
        used = r + 1
        rng = np.random.default_rng([config.seed, r])
        cg = _ColumnGeneration(problem, b, rows, config, rng)
        cg.bound0 = bound0
        for atom in _initial_atoms(problem, rows, r, rng):
            cg.add(atom)
        val, terms, converged, iters, bound, history, cap = cg.run()
        restart_values.append(val * scale)
        if best is None or val < best[0]:
            best = (val, terms, converged, iters, bound, history, cap)
        if converged:
            break
    val, terms, converged, iters, bound, history, cap = best
    terms = tuple((t[0] * scale,) + tuple(t[1:]) for t in terms)
    value = problem.objective(terms)
    if not converged:
        log.warning("decomposition solver hit its iteration cap; reporting best upper bound %g", value)
    return SolverReport(
        value=value,
        witness=terms,
        converged=converged,
        restarts_used=used,
        cap_hit=len(terms) > cap,
        iterations=iters,
        lower_bound=bound * scale,
        gap=val / bound if bound > 0 else math.inf,
        history=tuple(h * scale for h in history),
        restart_values=tuple(restart_values),
    )


# ---------------------------------------------------------------------------
# brute-force oracle


@dataclass(frozen=True)
class OracleReport:
    value: float
    terms: tuple
    trace: tuple = field(default=())


def _snap(v: np.ndarray) -> np.ndarray:
    # cos(pi/2) is 6e-17, not 0; under gauges with p > q such residues cost
    # their 1/p-th power, so edge directions must be exact atoms
    return np.where(np.abs(v) < 1e-14, 0.0, np.clip(v, 0.0, None))


def _sphere_grid(d: int, res: int) -> np.ndarray:
    """Nonnegative unit vectors on an angular grid with ``res`` steps per angle."""
    if d == 1:
        return np.ones((1, 1))
    ang = np.linspace(0.0, np.pi / 2, res + 1)
    if d == 2:
        return _snap(np.stack([np.cos(ang), np.sin(ang)], axis=1))
    if d == 3:
        pts = [[1.0, 0.0, 0.0]]
        for th in ang[1:]:
            for ph in ang:
                pts.append([np.cos(th), np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph)])
        return _snap(np.array(pts))
    raise OracleSizeError(f"oracle supports factor dimension <= 3, got {d}")


def _to_angles(s: np.ndarray) -> np.ndarray:
    d = s.size
    if d == 1:
        return np.zeros(0)
    if d == 2:
        return np.array([math.atan2(s[1], s[0])])
    th = math.atan2(math.hypot(s[1], s[2]), s[0])
    ph = math.atan2(s[2], s[1])
    return np.array([th, ph])


def _from_angles(t: np.ndarray, d: int) -> np.ndarray:
    t = np.clip(t, 0.0, np.pi / 2)
    if d == 1:
        return np.ones(1)
    if d == 2:
        return _snap(np.array([math.cos(t[0]), math.sin(t[0])]))
    return _snap(np.array(
        [math.cos(t[0]), math.sin(t[0]) * math.cos(t[1]), math.sin(t[0]) * math.sin(t[1])]
    ))


class _Oracle:
    def __init__(self, problem: DecompositionProblem, max_columns: int):
        self.problem = problem
        self.rows = problem.rows()
        self.b = problem.target.ravel()[self.rows]
        self.max_columns = max_columns
        self.idx = np.array(np.unravel_index(self.rows, problem.shape)).T

    def grid_atoms(self, res):
        prob = self.problem
        grids = []
        for g, d in zip(prob.gauges, prob.shape):
            s = _sphere_grid(d, res)
            gv = np.array([g(v) for v in s])
            grids.append(s / gv[:, None])
        ncols = math.prod(len(G) for G in grids)
        if ncols > self.max_columns:
            raise OracleSizeError(
                f"resolution {res} needs {ncols} columns (limit {self.max_columns})"
            )
        return grids

    def columns(self, grids):
        # column for a tuple of directions: product of the factor entries at each row
        cols = None
        for m, G in enumerate(grids):
            part = G[:, self.idx[:, m]]  # (K_m, rows)
            if cols is None:
                cols = part
            else:
                cols = (cols[:, None, :] * part[None, :, :]).reshape(-1, len(self.rows))
        return cols.T

    def lp(self, cols):
        lam, _ = _solve_lp(cols, self.b)
        return float(lam.sum()), lam

    def solve_grid(self, res):
        grids = self.grid_atoms(res)
        cols = self.columns(grids)
        val, lam = self.lp(cols)
        active = np.flatnonzero(lam > 0)
        sizes = [len(G) for G in grids]
        terms = []
        for k in active:
            multi = np.unravel_index(k, sizes)
            terms.append((lam[k], tuple(grids[m][multi[m]] for m in range(len(grids)))))
        return val, terms

    def refine(self, terms, rounds=40, width=None):
        """Zoom a local angular grid around each active direction."""
        prob = self.problem
        dims = prob.shape
        current = [tuple(f for f in t[1]) for t in terms]
        best_val = math.inf
        best_terms = terms
        delta = width if width is not None else (np.pi / 2) / 32
        steps = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
        for _ in range(rounds):
            candidates = []
            for atom in current:
                per_factor = []
                for m, (g, d) in enumerate(zip(prob.gauges, dims)):
                    ang = _to_angles(atom[m] / np.linalg.norm(atom[m]))
                    if ang.size == 0:
                        per_factor.append([np.ones(1) / g(np.ones(1))])
                        continue
                    opts = []
                    for shift in itertools.product(steps, repeat=ang.size):
                        s = _from_angles(ang + delta * np.array(shift), d)
                        opts.append(s / g(s))
                    per_factor.append(opts)
                for combo in itertools.product(*per_factor):
                    candidates.append(tuple(combo))
            cols = np.array([_outer(c).ravel()[self.rows] for c in candidates]).T
            val, lam = self.lp(cols)
            active = np.flatnonzero(lam > 0)
            if val <= best_val:
                best_val = val
                best_terms = [(lam[k], candidates[k]) for k in active]
            current = [t[1] for t in best_terms]
            delta *= 0.5
        return best_val, best_terms


def _terms_from(weighted) -> tuple:
    return tuple((w * f[0],) + tuple(f[1:]) for w, f in weighted)


def brute_force_oracle(
    problem: DecompositionProblem,
    resolutions: Sequence[int] = (32, 64),
    refine: bool = True,
    offdiag_scales: Sequence[float] = (1.0, 0.5, 0.0),
    max_columns: int = 2_000_000,
) -> OracleReport:
    """Grid-search upper bound for small decomposition problems.

    The LP over every grid direction at once is the exact minimum over all
    decompositions whose terms point along grid directions, so refining the
    grid (``64`` contains ``32``) can only lower the value. The trace
    records ``("grid", res, value)`` per resolution and
    ``("refine", None, value)`` for the local zoom.

    For ``quotient`` problems the off-diagonal entries of the representative
    are free; the oracle scans them along ``offdiag_scales`` (multiples of
    the given off-diagonal part) and solves a full Fremlin problem for each.
    """
    if min(resolutions) < 32:
        raise OracleSizeError("grid resolution must be at least 32")
    if problem.arity > 2 or max(problem.shape) > 3:
        raise OracleSizeError(
            f"oracle is limited to n <= 2 factors of dimension <= 3, got shape {problem.shape}"
        )
    if problem.kind == "quotient":
        return _quotient_oracle(problem, resolutions, refine, offdiag_scales, max_columns)

    oracle = _Oracle(problem, max_columns)
    if oracle.rows.size == 0:
        return OracleReport(0.0, (), tuple(("grid", r, 0.0) for r in resolutions))
    trace = []
    best_val, best_terms = math.inf, []
    for res in sorted(resolutions):
        val, terms = oracle.solve_grid(res)
        # nested grids: the finer value can only be lower, keep the min anyway
        if val < best_val:
            best_val, best_terms = val, terms
        trace.append(("grid", res, best_val))
    if refine:
        val, terms = oracle.refine(best_terms, width=(np.pi / 2) / max(resolutions))
        if val < best_val:
            best_val, best_terms = val, terms
        trace.append(("refine", None, best_val))
    terms = _terms_from(best_terms)
    return OracleReport(problem.objective(terms), terms, tuple(trace))


def _quotient_oracle(problem, resolutions, refine, scales, max_columns):
    diag = np.asarray(problem.mask)
    full = problem.target
    best = None
    trace = []
    for t in scales:
        target = np.where(diag, full, t * full)
        sub = DecompositionProblem("fremlin", problem.gauges, target)
        rep = brute_force_oracle(sub, resolutions, refine, max_columns=max_columns)
        trace.append(("offdiag", t, rep.value))
        if best is None or rep.value < best.value:
            best = rep
    return OracleReport(best.value, best.terms, tuple(trace) + best.trace)
