"""The p-concavification ``E_(p)`` and its decomposition norm.

``E_(p)`` has the carrier set and order of ``E`` but the vector operations
``x (+) y = (x^p + y^p)^(1/p)`` and ``a (.) x = a^(1/p) x``. Its norm is

    ||x||_(p) = inf { sum_i ||v_i||^p : |x| <= v_1 (+) ... (+) v_k, v_i >= 0 }.

At finite dimension the seminorm already vanishes only at 0 and the space
is complete, so the Banach lattice ``E_[p]`` (quotient by the kernel, then
completion) is represented by :class:`ConcaveSpace` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import DimensionError, LatticeSpace, LatticeVector, spow
from .optim import (
    DecompositionProblem,
    Gauge,
    SolverConfig,
    SolverReport,
    brute_force_oracle,
    minimize_decomposition,
)

__all__ = [
    "ConcaveSpace",
    "Decomposition",
    "NormResult",
    "KERNEL_TOL",
    "oplus",
    "odot",
    "closed_form_applies",
    "concavification_norm",
    "concavification_problem",
    "nondegeneracy_bound",
    "seminorm_kernel_check",
]

KERNEL_TOL = 1e-10
MODES = ("auto", "closed_form", "optimize", "brute_force")


@dataclass(frozen=True)
class ConcaveSpace:
    """``E_(p)`` over a finite-dimensional base lattice ``E``."""

    base: LatticeSpace
    p: float

    def __post_init__(self):
        p = float(self.p)
        if not p > 0 or not math.isfinite(p):
            raise ValueError(f"p must be a positive real, got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def gauge(self) -> Gauge:
        return Gauge(self.base.norm, self.p)

    def vector(self, coords) -> LatticeVector:
        return self.base.vector(coords)

    def zero(self) -> LatticeVector:
        return self.base.zero()

    def atom(self, j: int) -> LatticeVector:
        return self.base.atom(j)

    def linear(self, x: LatticeVector) -> np.ndarray:
        """Coordinates of ``x`` in the linear picture, ``x^p``.

        ``(+)`` and ``(.)`` become ordinary addition and scaling there.
        """
        self._check(x)
        return spow(x.coords, self.p)

    def from_linear(self, a) -> LatticeVector:
        return self.base.vector(spow(a, 1 / self.p))

    def _check(self, x: LatticeVector):
        if not isinstance(x, LatticeVector):
            raise TypeError(f"expected LatticeVector, got {type(x).__name__}")
        if x.space.dim != self.dim:
            raise DimensionError(f"vector of dim {x.space.dim} in space of dim {self.dim}")

    def to_dict(self) -> dict:
        return {"space": self.base.to_dict(), "p": self.p}

    @classmethod
    def from_dict(cls, data: dict) -> "ConcaveSpace":
        return cls(LatticeSpace.from_dict(data["space"]), float(data["p"]))


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Parts ``v_i >= 0`` with ``|x| <= (sum v_i^p)^(1/p)``; value ``sum ||v_i||^p``."""

    space: ConcaveSpace
    parts: tuple
    value: float

    def is_feasible_for(self, x: LatticeVector, atol: float = 1e-9) -> bool:
        if any(np.any(v.coords < 0) for v in self.parts):
            return False
        p = self.space.p
        total = np.zeros(self.space.dim)
        for v in self.parts:
            total = total + v.coords**p
        cover = total ** (1 / p)
        return bool(np.all(np.abs(x.coords) <= cover + atol * np.maximum(1.0, cover)))

    def recomputed_value(self) -> float:
        p = self.space.p
        return float(sum(v.norm() ** p for v in self.parts))

    def to_dict(self) -> dict:
        return {"parts": [v.tolist() for v in self.parts], "value": self.value}

    @classmethod
    def from_dict(cls, space: ConcaveSpace, data: dict) -> "Decomposition":
        parts = tuple(space.vector(v) for v in data["parts"])
        return cls(space, parts, float(data["value"]))


@dataclass(frozen=True, eq=False)
class NormResult:
    """A norm value together with the witness certifying it as an upper bound.

    Unpacks as ``value, witness``. ``converged`` is False when the solver
    stopped at its iteration cap; ``value`` is then the best bound found.
    """

    value: float
    witness: object
    converged: bool = True
    method: str = "closed_form"
    report: object = None

    def __iter__(self):
        yield self.value
        yield self.witness


def oplus(s: ConcaveSpace, x: LatticeVector, y: LatticeVector) -> LatticeVector:
    """``x (+) y = (x^p + y^p)^(1/p)`` with signed powers."""
    s._check(x)
    s._check(y)
    return s.from_linear(spow(x.coords, s.p) + spow(y.coords, s.p))


def odot(s: ConcaveSpace, alpha: float, x: LatticeVector) -> LatticeVector:
    """``alpha (.) x = alpha^(1/p) x`` with the signed power of the scalar."""
    s._check(x)
    a = float(np.sign(alpha) * abs(alpha) ** (1 / s.p))
    return x.space.vector(a * x.coords)


def closed_form_applies(s: ConcaveSpace) -> bool:
    """Whether ``||.||_(p) = ||.||^p`` is known to hold.

    True for ``p <= 1`` (then ``||.||^p`` is itself a norm on ``E_(p)``) and
    when the base norm is ``p``-convex with constant 1, which for the
    families here means ``l^q`` with ``q >= p`` or the sup norm.
    """
    return s.p <= 1 or s.base.norm.is_p_convex(s.p)


def concavification_problem(s: ConcaveSpace, x: LatticeVector) -> DecompositionProblem:
    s._check(x)
    return DecompositionProblem("concavification", (s.gauge,), np.abs(x.coords) ** s.p)


def _decomposition_from_terms(s: ConcaveSpace, terms) -> Decomposition:
    parts = tuple(s.base.vector(np.maximum(t[0], 0.0) ** (1 / s.p)) for t in terms)
    value = float(sum(v.norm() ** s.p for v in parts))
    return Decomposition(s, parts, value)


def concavification_norm(
    s: ConcaveSpace,
    x: LatticeVector,
    mode: str = "auto",
    config: SolverConfig | None = None,
) -> NormResult:
    """Evaluate ``||x||_(p)`` together with a feasible decomposition.

    Parameters
    ----------
    mode : {"auto", "closed_form", "optimize", "brute_force"}
        ``auto`` uses the closed form where :func:`closed_form_applies` and
        the decomposition solver otherwise. ``closed_form`` raises outside
        those regimes rather than returning an unproven value.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    s._check(x)
    if mode == "auto":
        mode = "closed_form" if closed_form_applies(s) else "optimize"

    if mode == "closed_form":
        if not closed_form_applies(s):
            raise ValueError(
                f"no closed form for p={s.p:g} over {s.base.norm!r}; use mode='optimize'"
            )
        part = x.abs()
        value = part.norm() ** s.p
        parts = (part,) if value > 0 else ()
        return NormResult(value, Decomposition(s, parts, value), True, "closed_form")

    problem = concavification_problem(s, x)
    if mode == "brute_force":
        rep = brute_force_oracle(problem)
        dec = _decomposition_from_terms(s, rep.terms)
        return NormResult(dec.value, dec, True, "brute_force", rep)

    rep: SolverReport = minimize_decomposition(problem, config)
    dec = _decomposition_from_terms(s, rep.witness)
    return NormResult(dec.value, dec, rep.converged, "optimize", rep)


def nondegeneracy_bound(s: ConcaveSpace, x: LatticeVector) -> float:
    """Lower bound ``max_j ||e_j||^p |x_j|^p <= ||x||_(p)``.

    Any feasible decomposition has ``|x_j|^p <= sum_i v_i[j]^p`` and
    ``||v_i|| >= ||e_j|| v_i[j]`` by monotonicity of the norm; summing over
    ``i`` gives the bound for each ``j``.
    """
    s._check(x)
    atoms = np.array([s.base.norm.atom_norm(j) for j in range(s.dim)])
    return float(np.max(atoms**s.p * np.abs(x.coords) ** s.p, initial=0.0))


def seminorm_kernel_check(s: ConcaveSpace, x: LatticeVector, tol: float = KERNEL_TOL) -> bool:
    """True iff ``x`` lies in the kernel of ``||.||_(p)``.

    The upper bound alone cannot separate tiny nonzero vectors from the
    kernel, so a nonzero coordinate is decided by the nondegeneracy lower
    bound (positive in exact arithmetic whenever ``x != 0``).
    """
    s._check(x)
    if np.any(x.coords != 0):
        # log form keeps the certificate positive where the power underflows
        j = int(np.argmax(np.abs(x.coords)))
        log_lower = s.p * (math.log(s.base.norm.atom_norm(j)) + math.log(abs(x.coords[j])))
        if log_lower > -math.inf:
            return False
    return concavification_norm(s, x).value <= tol
