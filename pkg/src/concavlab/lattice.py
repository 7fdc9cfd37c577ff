"""Finite-dimensional Banach lattices with coordinatewise order.

Every space here is ``R^d`` ordered entrywise, so it is atomic with atoms
``e_1, ..., e_d`` and the positively homogeneous function calculus is
literally coordinatewise. Norms come from two families: weighted
``l^q`` (``q >= 1``) and weighted sup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "StructuralError",
    "DimensionError",
    "NormFamily",
    "WeightedLq",
    "Sup",
    "LatticeSpace",
    "LatticeVector",
    "signed_power",
    "signed_product_power",
    "spow",
]


class StructuralError(ValueError):
    """Raised when arguments have incompatible structure (arity, exponents, shape)."""


class DimensionError(StructuralError):
    """Raised when vectors or arrays from incompatible spaces are combined."""


def _as_weights(weights, dim=None):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise ValueError("weights must be a flat sequence")
    if dim is not None and w.size != dim:
        raise DimensionError(f"expected {dim} weights, got {w.size}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("weights must be finite and strictly positive")
    w.flags.writeable = False
    return w


def spow(a, p):
    """Signed power ``|t|**p * sign(t)`` on arrays, with ``0**p = 0``."""
    if p <= 0:
        raise ValueError(f"exponent must be positive, got {p}")
    a = np.asarray(a, dtype=float)
    if p == 1:
        return a.copy()
    return np.sign(a) * np.abs(a) ** p


class NormFamily:
    """Base class for the lattice norms available on ``R^d``.

    Besides evaluating the norm, each family knows how to evaluate the
    *power gauge* ``g_p(a) = ||a^(1/p)||^p`` on the positive cone and how
    to maximise a positive linear functional over ``{a >= 0 : g_p(a) <= 1}``.
    Those two primitives are all the decomposition solver needs.
    """

    kind: str = ""

    def norm(self, coords) -> float:
        raise NotImplementedError

    def power_gauge(self, a, p: float) -> float:
        raise NotImplementedError

    def power_lmo(self, c, p: float) -> np.ndarray:
        raise NotImplementedError

    def power_dual(self, c, p: float) -> np.ndarray:
        """A functional ``phi >= 0`` nearly maximising ``<c, phi>`` over the
        polar of the power-gauge ball.

        Used only to build lower bounds, and callers renormalise by the
        support function, so any nonnegative output stays valid.
        """
        raise NotImplementedError

    def is_p_convex(self, p: float) -> bool:
        """True when the norm is ``p``-convex with constant 1."""
        raise NotImplementedError

    def atom_norm(self, j: int) -> float:
        raise NotImplementedError

    def check_dim(self, dim: int) -> None:
        pass

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(data: dict, dim: int | None = None) -> "NormFamily":
        kind = data.get("kind")
        weights = data.get("weights")
        if kind == "lq":
            if "q" not in data:
                raise ValueError("lq norm needs a 'q' entry")
            q = float(data["q"])
            if math.isinf(q):
                return Sup(weights if weights is not None else np.ones(dim or 1))
            if weights is None:
                if dim is None:
                    raise ValueError("dim is required when weights are omitted")
                weights = np.ones(dim)
            return WeightedLq(q, weights)
        if kind == "sup":
            if weights is None:
                if dim is None:
                    raise ValueError("dim is required when weights are omitted")
                weights = np.ones(dim)
            return Sup(weights)
        raise ValueError(f"unknown norm kind {kind!r}")


@dataclass(frozen=True, eq=False)
class WeightedLq(NormFamily):
    """``(sum_j w_j |x_j|^q)^(1/q)`` with ``q >= 1``."""

    q: float
    weights: np.ndarray
    kind: str = field(default="lq", init=False)

    def __post_init__(self):
        q = float(self.q)
        if not q >= 1 or math.isinf(q):
            raise ValueError(f"q must be a finite real >= 1, got {self.q}; use Sup for q=inf")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "weights", _as_weights(self.weights))

    def __eq__(self, other):
        return (
            isinstance(other, WeightedLq)
            and self.q == other.q
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash(("lq", self.q, self.weights.tobytes()))

    def check_dim(self, dim):
        if self.weights.size != dim:
            raise DimensionError(f"norm has {self.weights.size} weights, space has dim {dim}")

    def norm(self, coords):
        x = np.abs(np.asarray(coords, dtype=float))
        m = x.max(initial=0.0)
        if m == 0:
            return 0.0
        # scale first so large q does not overflow
        return float(m * np.sum(self.weights * (x / m) ** self.q) ** (1 / self.q))

    def power_gauge(self, a, p):
        # ||a^(1/p)||_q^p = (sum_j w_j a_j^r)^(1/r), r = q/p
        a = np.asarray(a, dtype=float)
        r = self.q / p
        m = a.max(initial=0.0)
        if m == 0:
            return 0.0
        return float(m * np.sum(self.weights * (a / m) ** r) ** (1 / r))

    def power_lmo(self, c, p):
        c = np.asarray(c, dtype=float)
        r = self.q / p
        w = self.weights
        a = np.zeros_like(c)
        if r <= 1:
            # unit ball is not convex; its convex hull is spanned by the atoms
            atom_vals = w ** (-1 / r)
            j = int(np.argmax(c * atom_vals))
            a[j] = atom_vals[j]
            return a
        s = c / w
        m = s.max(initial=0.0)
        if m <= 0:
            j = int(np.argmin(w))
            a[j] = w[j] ** (-1 / r)
            return a
        a = (s / m) ** (1 / (r - 1))
        return a / self.power_gauge(a, p)

    def power_dual(self, c, p):
        c = np.maximum(np.asarray(c, dtype=float), 0.0)
        r = self.q / p
        alpha = self.weights ** (1 / r)
        if r <= 1:
            return alpha.copy()
        z = alpha * c
        m = z.max(initial=0.0)
        if m <= 0:
            return alpha.copy()
        return alpha * (z / m) ** (r - 1)

    def is_p_convex(self, p):
        return self.q >= p

    def atom_norm(self, j):
        return float(self.weights[j] ** (1 / self.q))

    def to_dict(self):
        return {"kind": "lq", "q": self.q, "weights": self.weights.tolist()}

    def __repr__(self):
        if np.all(self.weights == 1):
            return f"WeightedLq(q={self.q:g})"
        return f"WeightedLq(q={self.q:g}, weights={self.weights.tolist()})"


@dataclass(frozen=True, eq=False)
class Sup(NormFamily):
    """``max_j w_j |x_j|``."""

    weights: np.ndarray
    kind: str = field(default="sup", init=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_weights(self.weights))

    def __eq__(self, other):
        return isinstance(other, Sup) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(("sup", self.weights.tobytes()))

    def check_dim(self, dim):
        if self.weights.size != dim:
            raise DimensionError(f"norm has {self.weights.size} weights, space has dim {dim}")

    def norm(self, coords):
        x = np.abs(np.asarray(coords, dtype=float))
        return float(np.max(self.weights * x, initial=0.0))

    def power_gauge(self, a, p):
        a = np.asarray(a, dtype=float)
        return float(np.max(self.weights**p * a, initial=0.0))

    def power_lmo(self, c, p):
        return self.weights ** (-p)

    def power_dual(self, c, p):
        c = np.maximum(np.asarray(c, dtype=float), 0.0)
        v = self.weights**p
        phi = np.zeros_like(c)
        k = int(np.argmax(v * c))
        phi[k] = v[k]
        return phi

    def is_p_convex(self, p):
        return True

    def atom_norm(self, j):
        return float(self.weights[j])

    def to_dict(self):
        return {"kind": "sup", "weights": self.weights.tolist()}

    def __repr__(self):
        if np.all(self.weights == 1):
            return "Sup()"
        return f"Sup(weights={self.weights.tolist()})"


@dataclass(frozen=True)
class LatticeSpace:
    """``R^dim`` with the coordinatewise order and a lattice norm."""

    dim: int
    norm: NormFamily

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        self.norm.check_dim(self.dim)

    @classmethod
    def lq(cls, dim, q, weights=None):
        if weights is None:
            weights = np.ones(dim)
        if math.isinf(q):
            return cls(dim, Sup(weights))
        return cls(dim, WeightedLq(q, weights))

    @classmethod
    def sup(cls, dim, weights=None):
        return cls(dim, Sup(np.ones(dim) if weights is None else weights))

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeSpace":
        dim = int(data["dim"])
        return cls(dim, NormFamily.from_dict(data["norm"], dim))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "norm": self.norm.to_dict()}

    def vector(self, coords) -> "LatticeVector":
        return LatticeVector(self, coords)

    def zero(self) -> "LatticeVector":
        return LatticeVector(self, np.zeros(self.dim))

    def ones(self) -> "LatticeVector":
        return LatticeVector(self, np.ones(self.dim))

    def atom(self, j: int) -> "LatticeVector":
        e = np.zeros(self.dim)
        e[j] = 1.0
        return LatticeVector(self, e)

    def norm_of(self, coords) -> float:
        return self.norm.norm(coords)

    def spec_string(self) -> str:
        """Short label such as ``lq2`` or ``sup`` used in reports."""
        n = self.norm
        label = "sup" if isinstance(n, Sup) else f"lq{n.q:g}"
        if not np.all(n.weights == 1):
            label += "w"
        return label


@dataclass(frozen=True, eq=False)
class LatticeVector:
    """An element of a :class:`LatticeSpace`; coordinates are read-only."""

    space: LatticeSpace
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size != self.space.dim:
            raise DimensionError(f"expected {self.space.dim} coordinates, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coordinates must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    def _check(self, other: "LatticeVector") -> None:
        if not isinstance(other, LatticeVector):
            raise TypeError(f"expected LatticeVector, got {type(other).__name__}")
        if other.space.dim != self.space.dim:
            raise DimensionError(
                f"dimension mismatch: {self.space.dim} vs {other.space.dim}"
            )

    def _new(self, coords):
        return LatticeVector(self.space, coords)

    # lattice operations
    def sup(self, other):
        self._check(other)
        return self._new(np.maximum(self.coords, other.coords))

    def inf(self, other):
        self._check(other)
        return self._new(np.minimum(self.coords, other.coords))

    def abs(self):
        return self._new(np.abs(self.coords))

    def pos(self):
        return self._new(np.maximum(self.coords, 0.0))

    def neg(self):
        return self._new(np.maximum(-self.coords, 0.0))

    def add(self, other):
        self._check(other)
        return self._new(self.coords + other.coords)

    def scale(self, alpha: float):
        return self._new(float(alpha) * self.coords)

    __or__ = sup
    __and__ = inf
    __abs__ = abs
    __add__ = add

    def __sub__(self, other):
        self._check(other)
        return self._new(self.coords - other.coords)

    def __neg__(self):
        return self._new(-self.coords)

    def __mul__(self, alpha):
        return self.scale(alpha)

    __rmul__ = __mul__

    def __le__(self, other):
        self._check(other)
        return bool(np.all(self.coords <= other.coords))

    def __ge__(self, other):
        self._check(other)
        return bool(np.all(self.coords >= other.coords))

    def __eq__(self, other):
        return (
            isinstance(other, LatticeVector)
            and other.space.dim == self.space.dim
            and np.array_equal(self.coords, other.coords)
        )

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __len__(self):
        return self.space.dim

    def __getitem__(self, j):
        return self.coords[j]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def norm(self) -> float:
        return self.space.norm.norm(self.coords)

    def is_positive(self) -> bool:
        return bool(np.all(self.coords >= 0))

    def allclose(self, other, atol=1e-12, rtol=0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.coords, other.coords, atol=atol, rtol=rtol))

    def tolist(self):
        return self.coords.tolist()

    def __repr__(self):
        return f"LatticeVector({self.coords.tolist()})"


def signed_power(x: LatticeVector, p: float) -> LatticeVector:
    """Coordinatewise ``t -> |t|^p sign(t)``.

    >>> s = LatticeSpace.lq(2, 2)
    >>> signed_power(s.vector([-2, 3]), 2)
    LatticeVector([-4.0, 9.0])
    """
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {p}")
    return LatticeVector(x.space, spow(x.coords, p))


def signed_product_power(xs: Sequence[LatticeVector], exps: Sequence[float]) -> LatticeVector:
    """Coordinatewise product ``x_1^{p_1} x_2^{p_2} ...`` of signed powers."""
    xs = list(xs)
    exps = [float(e) for e in exps]
    if not xs:
        raise DimensionError("need at least one vector")
    if len(xs) != len(exps):
        raise DimensionError(f"{len(xs)} vectors but {len(exps)} exponents")
    for x in xs[1:]:
        xs[0]._check(x)
    out = spow(xs[0].coords, exps[0])
    for x, e in zip(xs[1:], exps[1:]):
        out = out * spow(x.coords, e)
    return LatticeVector(xs[0].space, out)
