"""Fremlin projective tensor products of concavified factors.

A tensor over factors ``E_(p_1), ..., E_(p_n)`` is stored as a dense
``d_1 x ... x d_n`` array in linear coordinates: each factor vector ``x``
enters through ``x^p``, which turns the concavified operations into
ordinary ones. The elementary tensor ``x_1 (x) ... (x) x_n`` therefore has
entries ``prod_m x_m[i_m]^(p_m)`` (signed powers), which is the plain
outer product when every ``p_m = 1``.

The Fremlin norm is the positive-decomposition infimum

    ||u||_|pi| = inf { sum_i prod_m ||x_i^(m)||_(p_m) :
                       |u| <= sum_i x_i^(1) (x) ... (x) x_i^(n), x_i^(m) >= 0 }

(Fremlin 1974, Theorem 1E; see also Schep 1984, Section 2(d)). Since each
``||.||_(p_m)`` is itself a decomposition infimum, the inner decompositions
can be multiplied out into the outer sum, so the solver works with terms
whose factor cost is ``||v||^(p_m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .concavification import ConcaveSpace, NormResult
from .lattice import DimensionError, LatticeSpace, LatticeVector, spow
from .optim import (
    DecompositionProblem,
    SolverConfig,
    brute_force_oracle,
    minimize_decomposition,
)

__all__ = [
    "MAX_ENTRIES",
    "TensorSpace",
    "Tensor",
    "PositiveDecomposition",
    "MultilinearMap",
    "elementary",
    "fremlin_problem",
    "fremlin_norm",
    "apply_universal",
]

MAX_ENTRIES = 4096


@dataclass(frozen=True)
class TensorSpace:
    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if len(factors) < 2:
            raise ValueError("a tensor space needs at least two factors")
        if not all(isinstance(f, ConcaveSpace) for f in factors):
            raise TypeError("factors must be ConcaveSpace instances")
        if math.prod(f.dim for f in factors) > MAX_ENTRIES:
            raise ValueError(f"tensor spaces are limited to {MAX_ENTRIES} entries")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def power(cls, base: LatticeSpace, exponents) -> "TensorSpace":
        """``E_(p_1) (x) ... (x) E_(p_n)`` over one base lattice."""
        return cls(tuple(ConcaveSpace(base, p) for p in exponents))

    @property
    def shape(self) -> tuple:
        return tuple(f.dim for f in self.factors)

    @property
    def arity(self) -> int:
        return len(self.factors)

    @property
    def exponents(self) -> tuple:
        return tuple(f.p for f in self.factors)

    def tensor(self, entries) -> "Tensor":
        return Tensor(self, entries)

    def zeros(self) -> "Tensor":
        return Tensor(self, np.zeros(self.shape))

    def to_dict(self) -> dict:
        return {"factors": [f.to_dict() for f in self.factors]}

    @classmethod
    def from_dict(cls, data: dict) -> "TensorSpace":
        return cls(tuple(ConcaveSpace.from_dict(f) for f in data["factors"]))


@dataclass(frozen=True, eq=False)
class Tensor:
    space: TensorSpace
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.shape != self.space.shape:
            raise DimensionError(f"entries of shape {a.shape} in space of shape {self.space.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("tensor entries must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    def _check(self, other):
        if other.space.shape != self.space.shape:
            raise DimensionError("tensors of different shapes")

    def abs(self) -> "Tensor":
        return Tensor(self.space, np.abs(self.entries))

    __abs__ = abs

    def __add__(self, other):
        self._check(other)
        return Tensor(self.space, self.entries + other.entries)

    def __sub__(self, other):
        self._check(other)
        return Tensor(self.space, self.entries - other.entries)

    def __mul__(self, alpha):
        return Tensor(self.space, float(alpha) * self.entries)

    __rmul__ = __mul__

    def sup(self, other):
        self._check(other)
        return Tensor(self.space, np.maximum(self.entries, other.entries))

    def inf(self, other):
        self._check(other)
        return Tensor(self.space, np.minimum(self.entries, other.entries))

    def to_dict(self) -> dict:
        return {"shape": list(self.space.shape), "entries": self.entries.tolist()}

    @classmethod
    def from_dict(cls, space: TensorSpace, data: dict) -> "Tensor":
        entries = np.array(data["entries"], dtype=float)
        if "shape" in data and tuple(data["shape"]) != entries.shape:
            raise DimensionError(f"shape header {data['shape']} does not match entries {entries.shape}")
        return cls(space, entries)


def elementary(space: TensorSpace, xs) -> Tensor:
    """The elementary tensor ``x_1 (x) ... (x) x_n`` of factor vectors."""
    xs = list(xs)
    if len(xs) != space.arity:
        raise DimensionError(f"{len(xs)} vectors for {space.arity} factors")
    arrays = []
    for f, x in zip(space.factors, xs):
        f._check(x)
        arrays.append(spow(x.coords, f.p))
    t = arrays[0]
    for a in arrays[1:]:
        t = np.multiply.outer(t, a)
    return Tensor(space, t)


@dataclass(frozen=True, eq=False)
class PositiveDecomposition:
    """Terms ``(x_i^(1), ..., x_i^(n))`` of nonnegative factor vectors.

    Their elementary tensors sum to something dominating ``|u|``. ``value``
    is ``sum_i prod_m ||x_i^(m)||^(p_m)``, which bounds the same sum taken
    with the ``||.||_(p_m)`` norms from above, so it is a valid upper
    bound for ``||u||_|pi|``.
    """

    space: TensorSpace
    terms: tuple
    value: float

    def tensor(self) -> Tensor:
        total = np.zeros(self.space.shape)
        for term in self.terms:
            total = total + elementary(self.space, term).entries
        return Tensor(self.space, total)

    def is_feasible_for(self, u: Tensor, atol: float = 1e-9) -> bool:
        if any(np.any(v.coords < 0) for term in self.terms for v in term):
            return False
        total = self.tensor().entries
        need = np.abs(u.entries)
        return bool(np.all(total >= need - atol * np.maximum(1.0, need)))

    def recomputed_value(self) -> float:
        return float(
            sum(
                math.prod(v.norm() ** f.p for f, v in zip(self.space.factors, term))
                for term in self.terms
            )
        )

    def to_dict(self) -> dict:
        return {"terms": [[v.tolist() for v in term] for term in self.terms], "value": self.value}

    @classmethod
    def from_dict(cls, space: TensorSpace, data: dict) -> "PositiveDecomposition":
        terms = tuple(
            tuple(f.vector(v) for f, v in zip(space.factors, term)) for term in data["terms"]
        )
        return cls(space, terms, float(data["value"]))


def _decomposition_from_terms(space: TensorSpace, terms) -> PositiveDecomposition:
    out = []
    for term in terms:
        out.append(
            tuple(f.vector(np.maximum(a, 0.0) ** (1 / f.p)) for f, a in zip(space.factors, term))
        )
    value = float(
        sum(
            math.prod(f.gauge(a) for f, a in zip(space.factors, term))
            for term in terms
        )
    )
    return PositiveDecomposition(space, tuple(out), value)


def fremlin_problem(u: Tensor, kind: str = "fremlin", mask=None, hints=()) -> DecompositionProblem:
    gauges = tuple(f.gauge for f in u.space.factors)
    return DecompositionProblem(kind, gauges, np.abs(u.entries), mask, tuple(hints))


def fremlin_norm(u: Tensor, mode: str = "optimize", config: SolverConfig | None = None) -> NormResult:
    """Upper-bound ``||u||_|pi|`` with a feasible positive decomposition.

    ``mode`` is ``"optimize"`` (column-generation solver) or
    ``"brute_force"`` (grid oracle; two factors of dimension <= 3 only).
    """
    if mode not in ("optimize", "brute_force", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    problem = fremlin_problem(u)
    if mode == "brute_force":
        rep = brute_force_oracle(problem)
        dec = _decomposition_from_terms(u.space, rep.terms)
        return NormResult(dec.value, dec, True, "brute_force", rep)
    rep = minimize_decomposition(problem, config)
    dec = _decomposition_from_terms(u.space, rep.witness)
    return NormResult(dec.value, dec, rep.converged, "optimize", rep)


@dataclass(frozen=True, eq=False)
class MultilinearMap:
    """A positive n-linear map given by its values on atoms.

    ``table[i_1, ..., i_n, :]`` is ``phi(e_{i_1}, ..., e_{i_n})`` in the
    target lattice. The map is n-linear for the concavified operations of
    the factors, so ``phi(x_1, ..., x_n)`` contracts the table against
    ``x_m^(p_m)``.
    """

    space: TensorSpace
    table: np.ndarray
    target: LatticeSpace

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.shape != self.space.shape + (self.target.dim,):
            raise DimensionError(
                f"table shape {t.shape} does not match {self.space.shape + (self.target.dim,)}"
            )
        if np.any(t < 0):
            raise ValueError("a positive multilinear map needs a nonnegative table")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    def __call__(self, xs) -> LatticeVector:
        return apply_universal(self, elementary(self.space, xs))


def apply_universal(phi, u: Tensor) -> LatticeVector:
    """The linearisation ``phi^(x)(u) = sum_i u[i] phi(e_{i_1}, ..., e_{i_n})``."""
    if not isinstance(phi, MultilinearMap):
        phi = phi.as_multilinear(u.space)
    if phi.space.shape != u.space.shape:
        raise DimensionError(
            f"map of arity/shape {phi.space.shape} applied to tensor of shape {u.space.shape}"
        )
    n = u.space.arity
    out = np.tensordot(u.entries, phi.table, axes=(list(range(n)), list(range(n))))
    return phi.target.vector(out)
