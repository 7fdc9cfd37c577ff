import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from concavlab import DimensionError, LatticeSpace, TensorSpace, apply_universal, elementary
from concavlab.orthomaps import (
    LinearMap,
    OrthoMap,
    collapse_arguments,
    evaluate,
    factorize,
    hat_phi,
    mu,
    mu_bound_instance,
    random_orthomap,
    relative_deviation,
    verify_orthomaps,
)


def simple_map():
    # phi(x, y) = (2 x0 y0, 3 x1 y1 + x0 y0)
    src, tgt = LatticeSpace.lq(2, 2), LatticeSpace.lq(2, 1)
    return OrthoMap(2, (1, 1), src, tgt, [[2, 1], [0, 3]])


class TestOrthoMap:
    def test_evaluate_example(self):
        phi = simple_map()
        x, y = phi.source.vector([1, -2]), phi.source.vector([3, 4])
        assert evaluate(phi, [x, y]).tolist() == [6, -21]

    def test_disjoint_arguments_vanish(self):
        phi = simple_map()
        assert phi([phi.source.atom(0), phi.source.atom(1)]).tolist() == [0, 0]

    def test_validation(self):
        src = LatticeSpace.lq(2, 2)
        with pytest.raises(ValueError):
            OrthoMap(2, (1, 1), src, src, [[-1, 0], [0, 1]])
        with pytest.raises(DimensionError):
            OrthoMap(2, (1,), src, src, np.eye(2))
        with pytest.raises(DimensionError):
            OrthoMap(2, (1, 1), src, src, np.ones((3, 2)))
        with pytest.raises(DimensionError):
            simple_map()([src.ones()])

    def test_morphism_flag(self):
        assert not simple_map().is_lattice_morphism()
        src = LatticeSpace.lq(2, 2)
        assert OrthoMap(2, (1, 1), src, src, [[1, 0], [0, 2]]).is_lattice_morphism()

    def test_overlap_breaks_abs(self):
        phi = simple_map()
        x, y = phi.source.vector([1, -1]), phi.source.vector([1, 1])
        assert abs(phi([x, y])) != phi([abs(x), abs(y)])

    def test_json_round_trip(self):
        phi = random_orthomap(7, 3, (3, 2), exponents=(0.5, 1, 2), source=LatticeSpace.lq(3, 1.5))
        back = OrthoMap.from_dict(phi.to_dict())
        assert back.to_dict() == phi.to_dict()

    def test_json_minimal(self):
        phi = OrthoMap.from_dict({"arity": 2, "exponents": [1, 1], "coeffs": [[1], [2]]})
        assert phi.source.dim == 2 and phi.target.dim == 1

    def test_random_deterministic(self):
        a, b = random_orthomap(5, 2, (3, 3)), random_orthomap(5, 2, (3, 3))
        assert np.array_equal(a.coeffs, b.coeffs)
        assert random_orthomap(5, 2, (3, 3), structure="morphism").is_lattice_morphism()
        with pytest.raises(ValueError):
            random_orthomap(5, 2, 3, structure="bogus")


class TestIdentities:
    def test_mu_example(self):
        s = LatticeSpace.lq(2, 2)
        m = mu((1, 1), [s.vector([4, -9]), s.vector([1, 1])])
        assert m.tolist() == [2, -3]

    def test_collapse_is_product(self):
        phi = simple_map()
        x, y = phi.source.vector([2, -3]), phi.source.vector([5, 0.5])
        z, one = collapse_arguments(phi, [x, y])
        assert z.tolist() == [10, -1.5] and one.tolist() == [1, 1]

    def test_factorize_images_of_atoms(self):
        phi = simple_map()
        T = factorize(phi)
        assert T(phi.source.atom(1)).tolist() == [0, 3]
        assert not T.is_lattice_homomorphism()

    def test_linear_map_shape(self):
        phi = simple_map()
        with pytest.raises(DimensionError):
            LinearMap(factorize(phi).source, phi.target, np.ones((2, 3)))

    @given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 4),
           st.sampled_from(["general", "morphism"]))
    def test_collapse_and_factorization(self, seed, n, d, structure):
        rng = np.random.default_rng(seed)
        exps = tuple(rng.choice([0.5, 1.0, 2.0], size=n))
        phi = random_orthomap(seed, n, (d, 2), structure, exponents=exps)
        xs = [phi.source.vector(rng.standard_normal(d)) for _ in range(n)]
        lhs = phi(xs)
        scale = float(np.max(phi([x.abs() for x in xs]).coords, initial=0.0))
        assert relative_deviation(lhs, phi(collapse_arguments(phi, xs)), scale) <= 1e-9
        m = mu(phi.source_exponents, xs)
        assert relative_deviation(lhs, factorize(phi)(m), scale) <= 1e-9
        assert relative_deviation(lhs, hat_phi(phi, m), scale) <= 1e-9
        if structure == "morphism":
            assert relative_deviation(lhs.abs(), phi([x.abs() for x in xs]), scale) <= 1e-9

    def test_as_multilinear_agrees(self, rng):
        phi = random_orthomap(11, 2, (3, 2), exponents=(2, 1))
        ts = TensorSpace.power(phi.source, (2, 1))
        xs = [phi.source.vector(rng.standard_normal(3)) for _ in range(2)]
        assert apply_universal(phi.as_multilinear(ts), elementary(ts, xs)).allclose(phi(xs), atol=1e-12)
        with pytest.raises(ValueError):
            phi.as_multilinear(TensorSpace.power(phi.source, (1, 1)))

    def test_mu_bound_closed_form(self, rng):
        s = LatticeSpace.lq(3, 4, weights=[1, 2, 0.5])
        xs = [s.vector(rng.standard_normal(3)) for _ in range(2)]
        lhs, rhs, conv = mu_bound_instance(s, (1, 2), xs)
        assert conv and lhs <= rhs * (1 + 1e-9)

    def test_mu_bound_oracle(self, rng):
        s = LatticeSpace.lq(2, 1.5)
        xs = [s.vector(rng.standard_normal(2)) for _ in range(2)]
        lhs, rhs, _ = mu_bound_instance(s, (1, 2), xs, oracle=True)
        assert lhs <= rhs * (1 + 1e-3)


def test_verify_orthomaps_small():
    checks = verify_orthomaps(samples=30, seed=1, norm_samples=10, oracle_samples=2)
    for name, c in checks.items():
        assert c["failures"] == 0, (name, c)
        assert c["count"] > 0
    assert {"collapse", "factorization", "mu_bound_closed_form", "mu_bound_oracle"} <= set(checks)
    assert verify_orthomaps(samples=5, seed=1, norm_samples=2, oracle_samples=0) == verify_orthomaps(
        samples=5, seed=1, norm_samples=2, oracle_samples=0)
    assert math.isfinite(checks["collapse"]["worst"])
