"""Positive orthosymmetric multilinear maps on atomic lattices.

On ``R^d`` with coordinatewise order every positive orthosymmetric n-linear
map is a diagonal form

    phi(x_1, ..., x_n) = sum_j c_j * x_1[j]^(p_1) * ... * x_n[j]^(p_n)

with ``c_j >= 0`` in the target. Two lines suffice: an atom tuple
``(e_{i_1}, ..., e_{i_n})`` with indices not all equal has disjoint
factors, so orthosymmetry sends it to 0, and n-linearity then leaves only
the diagonal tuples ``(e_j, ..., e_j)``, whose images are the ``c_j``.
Powers enter because factor ``m`` carries the concavified operations of
``E_(p_m)``; with every ``p_m = 1`` this is the plain product.

The weighted geometric mean ``mu(x_1, ..., x_n) = x_1^(p_1/p) ... x_n^(p_n/p)``
(``p = sum p_m``) is the universal example: every such ``phi`` factors as
``T o mu`` with ``T`` linear on ``E_(p)`` and ``T(e_j) = c_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .concavification import ConcaveSpace, concavification_norm
from .lattice import (
    DimensionError,
    LatticeSpace,
    LatticeVector,
    signed_product_power,
    spow,
)
from .optim import brute_force_oracle

__all__ = [
    "OrthoMap",
    "LinearMap",
    "mu",
    "evaluate",
    "hat_phi",
    "factorize",
    "collapse_arguments",
    "random_orthomap",
    "relative_deviation",
    "verify_orthomaps",
    "STRUCTURES",
]

STRUCTURES = ("general", "morphism")
ALGEBRA_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OrthoMap:
    """Diagonal normal form ``phi(xs) = sum_j c_j prod_m x_m[j]^(p_m)``.

    ``coeffs[j]`` is the target vector ``c_j``; the array has shape
    ``(source.dim, target.dim)``.
    """

    arity: int
    source_exponents: tuple
    source: LatticeSpace
    target: LatticeSpace
    coeffs: np.ndarray

    def __post_init__(self):
        exps = tuple(float(p) for p in self.source_exponents)
        if self.arity < 1 or len(exps) != self.arity:
            raise DimensionError(f"arity {self.arity} with {len(exps)} exponents")
        if not all(p > 0 and math.isfinite(p) for p in exps):
            raise ValueError("exponents must be positive reals")
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.source.dim, self.target.dim):
            raise DimensionError(
                f"coeffs of shape {c.shape}, expected {(self.source.dim, self.target.dim)}"
            )
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite and nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "source_exponents", exps)
        object.__setattr__(self, "coeffs", c)

    @property
    def p(self) -> float:
        """Total exponent ``p = p_1 + ... + p_n``."""
        return float(sum(self.source_exponents))

    def __call__(self, xs) -> LatticeVector:
        return evaluate(self, xs)

    def is_lattice_morphism(self) -> bool:
        """True iff the ``c_j`` have pairwise disjoint supports.

        Then each target coordinate sees a single diagonal term, so
        ``|phi(xs)| = phi(|x_1|, ..., |x_n|)``. Overlapping supports add
        terms of different signs and break it.
        """
        return bool(np.all(np.count_nonzero(self.coeffs, axis=0) <= 1))

    def as_multilinear(self, space):
        """The map as a table over the atoms of a tensor space."""
        from .tensor import MultilinearMap

        if space.shape != (self.source.dim,) * self.arity:
            raise DimensionError(f"tensor shape {space.shape} for arity {self.arity} on dim {self.source.dim}")
        if not np.allclose(space.exponents, self.source_exponents, rtol=1e-12, atol=0):
            raise ValueError("tensor factor exponents differ from the map's exponents")
        d = self.source.dim
        table = np.zeros(space.shape + (self.target.dim,))
        j = np.arange(d)
        table[(j,) * self.arity] = self.coeffs
        return MultilinearMap(space, table, self.target)

    def to_dict(self) -> dict:
        return {
            "arity": self.arity,
            "exponents": list(self.source_exponents),
            "coeffs": self.coeffs.tolist(),
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict, source: LatticeSpace | None = None,
                  target: LatticeSpace | None = None) -> "OrthoMap":
        """Read ``{"arity", "exponents", "coeffs"}``.

        Optional ``"source"`` / ``"target"`` entries hold LatticeSpace dicts;
        when absent (and not passed in) unit-weight ``l^2`` is assumed. The
        norms only matter for the norm checks.
        """
        c = np.array(data["coeffs"], dtype=float)
        if c.ndim != 2:
            raise DimensionError("coeffs must be a list of target vectors")
        if source is None:
            source = (LatticeSpace.from_dict(data["source"]) if "source" in data
                      else LatticeSpace.lq(c.shape[0], 2))
        if target is None:
            target = (LatticeSpace.from_dict(data["target"]) if "target" in data
                      else LatticeSpace.lq(c.shape[1], 2))
        return cls(int(data["arity"]), tuple(data["exponents"]), source, target, c)


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Linear map ``E_(p) -> F`` fixed by the images of the atoms.

    ``matrix[:, j]`` is the image of ``e_j``; a vector ``x`` is sent to
    ``matrix @ x^p`` since ``x`` is the ``(+)``-sum of ``x_j^p (.) e_j``.
    """

    source: ConcaveSpace
    target: LatticeSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (self.target.dim, self.source.dim):
            raise DimensionError(f"matrix of shape {m.shape} for {self.source.dim} -> {self.target.dim}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def apply(self, x: LatticeVector) -> LatticeVector:
        return self.target.vector(self.matrix @ self.source.linear(x))

    __call__ = apply

    def is_lattice_homomorphism(self) -> bool:
        """Each target coordinate depends on at most one source atom."""
        return bool(np.all(np.count_nonzero(self.matrix, axis=1) <= 1))


def _check_args(phi: OrthoMap, xs) -> list:
    xs = list(xs)
    if len(xs) != phi.arity:
        raise DimensionError(f"{len(xs)} arguments for a map of arity {phi.arity}")
    for x in xs:
        if x.space.dim != phi.source.dim:
            raise DimensionError(f"argument of dim {x.space.dim} for source of dim {phi.source.dim}")
    return xs


def evaluate(phi: OrthoMap, xs) -> LatticeVector:
    """``phi(x_1, ..., x_n) = sum_j c_j prod_m x_m[j]^(p_m)``."""
    xs = _check_args(phi, xs)
    prod = signed_product_power(xs, phi.source_exponents).coords
    return phi.target.vector(prod @ phi.coeffs)


def mu(exps, xs) -> LatticeVector:
    """``x_1^(p_1/p) ... x_n^(p_n/p)`` coordinatewise, ``p = sum p_m``."""
    exps = [float(e) for e in exps]
    xs = list(xs)
    if len(xs) != len(exps):
        raise DimensionError(f"{len(xs)} vectors for {len(exps)} exponents")
    p = sum(exps)
    return signed_product_power(xs, [e / p for e in exps])


def hat_phi(phi: OrthoMap, x: LatticeVector) -> LatticeVector:
    """``phi(x, |x|, ..., |x|)``, additive for the ``(+)`` of ``E_(p)``."""
    return evaluate(phi, [x] + [x.abs()] * (phi.arity - 1))


def factorize(phi: OrthoMap) -> LinearMap:
    """The linear ``T`` on ``E_(p)`` with ``phi = T o mu``; ``T(e_j) = c_j``."""
    return LinearMap(ConcaveSpace(phi.source, phi.p), phi.target, phi.coeffs.T)


def collapse_arguments(phi: OrthoMap, xs) -> list:
    """Arguments ``(z, 1, ..., 1)`` with ``phi(z, 1, ..., 1) = phi(xs)``.

    ``z = (prod_m x_m^(p_m))^(1/p_1)``, which is the product ``x_1 ... x_n``
    when every exponent is 1.
    """
    xs = _check_args(phi, xs)
    prod = signed_product_power(xs, phi.source_exponents).coords
    z = phi.source.vector(spow(prod, 1 / phi.source_exponents[0]))
    return [z] + [phi.source.ones()] * (phi.arity - 1)


def random_orthomap(
    seed: int,
    arity: int,
    dims,
    structure: str = "general",
    exponents=None,
    source: LatticeSpace | None = None,
    target: LatticeSpace | None = None,
) -> OrthoMap:
    """Seeded random map from ``R^d`` into ``R^t`` with ``dims = (d, t)``.

    ``general`` draws a dense nonnegative coefficient matrix with some
    exact zeros. ``morphism`` gives the ``c_j`` pairwise disjoint supports
    (each target atom is owned by at most one source atom), which is what
    makes ``phi`` a lattice n-morphism.
    """
    if structure not in STRUCTURES:
        raise ValueError(f"structure must be one of {STRUCTURES}, got {structure!r}")
    d, t = (dims, dims) if isinstance(dims, int) else tuple(dims)
    rng = np.random.default_rng(seed)
    if exponents is None:
        exponents = (1.0,) * arity
    if structure == "general":
        c = rng.random((d, t)) * (rng.random((d, t)) > 0.2)
    else:
        owner = rng.integers(-1, d, size=t)  # -1 leaves a target atom unused
        c = np.zeros((d, t))
        c[owner[owner >= 0], np.flatnonzero(owner >= 0)] = rng.random(int(np.sum(owner >= 0))) + 0.1
    return OrthoMap(
        arity,
        tuple(exponents),
        source or LatticeSpace.lq(d, 2),
        target or LatticeSpace.lq(t, 2),
        c,
    )


def relative_deviation(lhs: LatticeVector, rhs: LatticeVector, scale: float) -> float:
    """``max_k |lhs_k - rhs_k| / scale`` (0 when both sides vanish)."""
    diff = float(np.max(np.abs(lhs.coords - rhs.coords), initial=0.0))
    if diff == 0.0:
        return 0.0
    return diff / scale if scale > 0 else math.inf


def _scale(phi: OrthoMap, xs) -> float:
    # evaluating on |x_m| bounds every partial sum, so it sets the rounding scale
    return float(np.max(evaluate(phi, [x.abs() for x in xs]).coords, initial=0.0))


def _random_args(rng, space: LatticeSpace, n: int, positive: bool = False) -> list:
    out = []
    for _ in range(n):
        v = rng.standard_normal(space.dim) * rng.choice([1e-2, 1.0, 1e2], size=space.dim)
        out.append(space.vector(np.abs(v) if positive else v))
    return out


def _disjoint_args(rng, space: LatticeSpace, n: int) -> list:
    owner = rng.integers(0, n, size=space.dim)  # each coordinate used by one argument
    return [space.vector(np.where(owner == m, rng.standard_normal(space.dim), 0.0)) for m in range(n)]


def verify_orthomaps(
    samples: int = 1000,
    seed: int = 0,
    arities=(2, 3, 4),
    dims=(2, 3, 4),
    norm_samples: int = 50,
    oracle_samples: int = 5,
) -> dict:
    """Check the collapse and factorisation identities on random maps.

    Returns ``{check: {"count", "failures", "worst"}}``; algebraic checks use
    relative deviation against ``ALGEBRA_TOL``, the ``mu`` norm checks use a
    ``1e-3`` relative slack. ``mu_bound_oracle`` runs only where the oracle
    accepts the instance (``d <= 3``) and outside the closed-form regimes.
    """
    rng = np.random.default_rng(seed)
    checks = {}

    def record(name, dev, tol):
        entry = checks.setdefault(name, {"count": 0, "failures": 0, "worst": 0.0, "tol": tol})
        entry["count"] += 1
        entry["worst"] = max(entry["worst"], dev)
        if not dev <= tol:
            entry["failures"] += 1

    for n in arities:
        for k in range(samples):
            d = int(dims[k % len(dims)])
            structure = "morphism" if k % 2 else "general"
            exps = tuple(rng.choice([0.5, 1.0, 2.0], size=n)) if k % 3 == 2 else None
            phi = random_orthomap(int(rng.integers(2**32)), n, (d, int(rng.integers(1, 4))),
                                  structure, exponents=exps)
            xs = _random_args(rng, phi.source, n)
            lhs = evaluate(phi, xs)
            scale = _scale(phi, xs)
            record("collapse", relative_deviation(lhs, evaluate(phi, collapse_arguments(phi, xs)), scale),
                   ALGEBRA_TOL)
            T = factorize(phi)
            m = mu(phi.source_exponents, xs)
            record("factorization", relative_deviation(lhs, T(m), scale), ALGEBRA_TOL)
            record("hat_phi_of_mu", relative_deviation(lhs, hat_phi(phi, m), scale), ALGEBRA_TOL)
            ys = _disjoint_args(rng, phi.source, n)
            record("orthosymmetry", float(np.max(np.abs(evaluate(phi, ys).coords), initial=0.0)), 0.0)
            if phi.is_lattice_morphism():
                rhs = evaluate(phi, [x.abs() for x in xs])
                record("morphism_abs", relative_deviation(lhs.abs(), rhs, scale), ALGEBRA_TOL)
                x2 = _random_args(rng, phi.source, 1)[0]
                x1 = _random_args(rng, phi.source, 1)[0]
                sup_img = T(x1.sup(x2))
                record("T_preserves_sup", relative_deviation(sup_img, T(x1).sup(T(x2)),
                                                             max(_abs_scale(T, x1), _abs_scale(T, x2))),
                       ALGEBRA_TOL)
            mn = mu(phi.source_exponents, [x.abs() for x in xs])
            record("mu_abs", relative_deviation(m.abs(), mn, max(float(np.max(mn.coords, initial=0)), 1e-300)),
                   ALGEBRA_TOL)
            holder = math.prod(x.norm() ** (pm / phi.p) for x, pm in zip(xs, phi.source_exponents))
            excess = m.norm() - holder * (1 + ALGEBRA_TOL)
            record("holder", max(excess, 0.0) / holder if holder > 0 else 0.0, 0.0)

    for case in mu_bound_cases(rng, norm_samples, oracle_samples):
        record(case["check"], case["excess"], 0.0)
    return checks


def _abs_scale(T: LinearMap, x: LatticeVector) -> float:
    return float(np.max(np.abs(T.matrix) @ np.abs(T.source.linear(x)), initial=0.0))


def mu_bound_instance(space: LatticeSpace, exps, xs, oracle: bool = False) -> tuple:
    """Return ``(lhs, rhs, converged)`` for ``||mu(xs)||_(p) <= prod ||x_m||_(p_m)``.

    With ``oracle`` the left side comes from the brute-force oracle, an
    independent upper bound of the true value.
    """
    p = float(sum(exps))
    target = ConcaveSpace(space, p)
    m = mu(exps, xs)
    if oracle:
        from .concavification import concavification_problem

        lhs = brute_force_oracle(concavification_problem(target, m)).value
        converged = True
    else:
        res = concavification_norm(target, m)
        lhs, converged = res.value, res.converged
    rhs = 1.0
    for x, pm in zip(xs, exps):
        r = concavification_norm(ConcaveSpace(space, pm), x)
        rhs *= r.value
        converged = converged and r.converged
    return lhs, rhs, converged


def mu_bound_cases(rng, closed_samples: int, oracle_samples: int):
    """Random ``mu`` norm-bound instances.

    ``closed_samples`` instances have closed forms on both sides (``p <= 1``
    or ``q >= p``); ``oracle_samples`` instances use ``l^q`` with ``q < p``
    at ``d <= 3`` and take the left side from the oracle.
    """
    out = []
    for k in range(closed_samples):
        d = int(rng.integers(2, 5))
        n = int(rng.integers(2, 4))
        if k % 2:
            exps = tuple(rng.uniform(0.1, 1.0 / n, size=n))
            q = float(rng.choice([1.0, 2.0, math.inf]))
        else:
            exps = tuple(rng.uniform(0.25, 1.5, size=n))
            q = math.inf if k % 4 == 0 else max(1.0, float(sum(exps))) + float(rng.uniform(0, 2))
        space = LatticeSpace.lq(d, q, weights=rng.uniform(0.5, 2.0, size=d))
        xs = [space.vector(rng.standard_normal(d)) for _ in range(n)]
        lhs, rhs, conv = mu_bound_instance(space, exps, xs)
        out.append({"check": "mu_bound_closed_form", "lhs": lhs, "rhs": rhs, "converged": conv,
                    "excess": max(lhs - rhs * (1 + 1e-3), 0.0) / rhs})
    for k in range(oracle_samples):
        d = int(rng.integers(2, 4))
        exps = tuple(rng.uniform(0.75, 1.5, size=2))
        q = float(rng.uniform(1.0, sum(exps) * 0.9))
        space = LatticeSpace.lq(d, q, weights=rng.uniform(0.5, 2.0, size=d))
        xs = [space.vector(rng.standard_normal(d)) for _ in range(2)]
        lhs, rhs, conv = mu_bound_instance(space, exps, xs, oracle=True)
        out.append({"check": "mu_bound_oracle", "lhs": lhs, "rhs": rhs, "converged": conv,
                    "excess": max(lhs - rhs * (1 + 1e-3), 0.0) / rhs})
    return out
