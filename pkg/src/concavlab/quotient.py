"""The diagonal of a Fremlin tensor product.

For atomic factors of a common dimension ``d``, the closed ideal generated
by elementary tensors with ``|x_1| ^ ... ^ |x_n| = 0`` is exactly the set of
tensors with zero main diagonal:

* an atom tensor ``e_{i_1} (x) ... (x) e_{i_n}`` with indices not all equal
  has disjoint factors, so every zero-diagonal tensor (a finite sum of such
  atoms) lies in the ideal;
* conversely the diagonal entry ``prod_m x_m[j]^(p_m)`` of a generator
  vanishes for every ``j``, so the zero-diagonal tensors contain the
  generators and already form a closed ideal.

Hence quotient classes are determined by their diagonals. The maps below
realise the isometry of the quotient onto ``E_[p]``, ``p = p_1 + ... + p_n``:
``M`` reads the diagonal and takes its ``1/p`` signed power; ``T`` sends
``x`` to the class of ``x (x) |x| (x) ... (x) |x|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .concavification import ConcaveSpace, NormResult
from .lattice import DimensionError, LatticeVector, StructuralError, spow
from .optim import DecompositionProblem, SolverConfig, brute_force_oracle, minimize_decomposition
from .tensor import Tensor, TensorSpace, _decomposition_from_terms, elementary, fremlin_problem

__all__ = [
    "DIAGONAL_TOL",
    "DiagonalIdeal",
    "QuotientElement",
    "diagonal",
    "ideal_member",
    "quotient_problem",
    "quotient_norm",
    "diagonal_extract_M",
    "diagonal_embed_T",
]

DIAGONAL_TOL = 1e-12


def _require_square(space: TensorSpace) -> int:
    dims = set(space.shape)
    if len(dims) != 1:
        raise DimensionError(f"diagonal needs equal factor dimensions, got {space.shape}")
    return space.shape[0]


def diagonal(u: Tensor) -> np.ndarray:
    """Main diagonal ``u[j, ..., j]``."""
    d = _require_square(u.space)
    j = np.arange(d)
    return u.entries[(j,) * u.space.arity].copy()


def _diagonal_mask(space: TensorSpace) -> np.ndarray:
    d = _require_square(space)
    mask = np.zeros(space.shape, dtype=bool)
    j = np.arange(d)
    mask[(j,) * space.arity] = True
    return mask


@dataclass(frozen=True)
class DiagonalIdeal:
    """Zero-diagonal tensors in a tensor space with equal factor dimensions."""

    space: TensorSpace

    def __post_init__(self):
        _require_square(self.space)

    def contains(self, u: Tensor, tol: float = DIAGONAL_TOL) -> bool:
        if u.space.shape != self.space.shape:
            raise DimensionError("tensor from a different space")
        return bool(np.all(np.abs(diagonal(u)) <= tol))

    def __contains__(self, u: Tensor) -> bool:
        return self.contains(u)


@dataclass(frozen=True, eq=False)
class QuotientElement:
    """The class ``u + I``, compared by diagonals."""

    representative: Tensor
    ideal: DiagonalIdeal

    @classmethod
    def of(cls, u: Tensor) -> "QuotientElement":
        return cls(u, DiagonalIdeal(u.space))

    def diagonal(self) -> np.ndarray:
        return diagonal(self.representative)

    def equals(self, other: "QuotientElement", tol: float = DIAGONAL_TOL) -> bool:
        if other.representative.space.shape != self.representative.space.shape:
            return False
        return bool(np.all(np.abs(self.diagonal() - other.diagonal()) <= tol))

    def __eq__(self, other):
        return isinstance(other, QuotientElement) and self.equals(other)

    __hash__ = None

    def canonical(self) -> Tensor:
        """The representative with zero off-diagonal entries."""
        space = self.representative.space
        return Tensor(space, np.where(_diagonal_mask(space), self.representative.entries, 0.0))


def ideal_member(u: Tensor) -> bool:
    """True iff every main-diagonal entry of ``u`` vanishes (to 1e-12)."""
    return DiagonalIdeal(u.space).contains(u)


def quotient_problem(u: Tensor) -> DecompositionProblem:
    """Decomposition problem for ``||u + I||`` with only the diagonal constrained.

    Off-diagonal entries of a representative are free, and a decomposition
    dominating the diagonal dominates the zero-off-diagonal representative,
    so only diagonal rows carry constraints. The seeded hint is the
    ``x (x) |x| (x) ...`` shape ``b^(p_m/p)`` with ``b = |diag u|``.
    """
    space = u.space
    mask = _diagonal_mask(space)
    b = np.abs(diagonal(u))
    p = sum(space.exponents)
    hint = tuple(b ** (pm / p) for pm in space.exponents)
    hints = (hint,) if np.any(b > 0) else ()
    return fremlin_problem(u, kind="quotient", mask=mask, hints=hints)


def quotient_norm(
    q: QuotientElement | Tensor,
    mode: str = "optimize",
    config: SolverConfig | None = None,
) -> NormResult:
    """``||u + I|| = inf { ||v||_|pi| : v - u in I }``.

    The witness is the minimising representative ``v``. The infimum over
    representatives is attained at the one with zero off-diagonal part,
    since its absolute value is below that of every other representative
    and the Fremlin norm is a lattice norm; the solver therefore only has
    to handle the inner decomposition problem. The report holds the
    decomposition of ``v``.
    """
    if isinstance(q, Tensor):
        q = QuotientElement.of(q)
    u = q.representative
    problem = quotient_problem(u)
    v = q.canonical()
    if mode == "brute_force":
        rep = brute_force_oracle(problem)
    elif mode in ("optimize", "auto"):
        rep = minimize_decomposition(problem, config)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    terms = rep.terms if mode == "brute_force" else rep.witness
    dec = _decomposition_from_terms(u.space, terms)
    converged = True if mode == "brute_force" else rep.converged
    return NormResult(dec.value, v, converged, "brute_force" if mode == "brute_force" else "optimize",
                      {"decomposition": dec, "solver": rep})


def diagonal_extract_M(u: Tensor | QuotientElement, target: ConcaveSpace) -> LatticeVector:
    """``M(u)_j = u[j, ..., j]^(1/p)`` (signed power), ``p = sum p_m``.

    On an elementary tensor this is ``x_1^(p_1/p) ... x_n^(p_n/p)``.
    """
    if isinstance(u, QuotientElement):
        u = u.representative
    d = _require_square(u.space)
    p = sum(u.space.exponents)
    if not math.isclose(target.p, p, rel_tol=1e-12):
        raise StructuralError(f"target exponent {target.p} differs from sum of factor exponents {p}")
    if target.dim != d:
        raise DimensionError(f"target of dim {target.dim} for diagonal of length {d}")
    return target.vector(spow(diagonal(u), 1 / p))


def diagonal_embed_T(x: LatticeVector, space: TensorSpace) -> QuotientElement:
    """The class of ``x (x) |x| (x) ... (x) |x|``."""
    d = _require_square(space)
    if x.space.dim != d:
        raise DimensionError(f"vector of dim {x.space.dim} for factors of dim {d}")
    xs = [x] + [x.abs()] * (space.arity - 1)
    return QuotientElement.of(elementary(space, xs))
