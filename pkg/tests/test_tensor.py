import numpy as np
import pytest

from concavlab import (
    ConcaveSpace,
    DimensionError,
    LatticeSpace,
    MultilinearMap,
    OrthoMap,
    PositiveDecomposition,
    Tensor,
    TensorSpace,
    apply_universal,
    concavification_norm,
    elementary,
    fremlin_norm,
    random_orthomap,
)

# brute_force_oracle values (default grids + refinement), frozen as [DERIVED]
ORACLE_L1 = {((1, 2), (3, 4)): 10.0, ((0.3, 0.0), (1.7, 0.2)): 2.2, ((1, -2), (0.5, 3)): 6.5}
ORACLE_L2 = {((1, 2), (3, 4)): 5.590170174661763, ((2, 1), (0, 1)): 3.0}


def l1_space():
    return TensorSpace.power(LatticeSpace.lq(2, 1), (1, 1))


class TestSpaces:
    def test_needs_two_factors(self):
        with pytest.raises(ValueError):
            TensorSpace((ConcaveSpace(LatticeSpace.lq(2, 1), 1),))

    def test_entry_cap(self):
        with pytest.raises(ValueError):
            TensorSpace.power(LatticeSpace.lq(17, 1), (1, 1, 1))

    def test_shape_checked(self):
        with pytest.raises(DimensionError):
            l1_space().tensor(np.ones((2, 3)))

    def test_json_round_trip(self):
        ts = TensorSpace.power(LatticeSpace.lq(2, 1.5, weights=[1, 2]), (1, 0.5))
        assert TensorSpace.from_dict(ts.to_dict()) == ts
        u = ts.tensor([[1, 2], [3, 4]])
        data = u.to_dict()
        assert data["shape"] == [2, 2]
        assert np.array_equal(Tensor.from_dict(ts, data).entries, u.entries)

    def test_shape_header_mismatch(self):
        with pytest.raises(DimensionError):
            Tensor.from_dict(l1_space(), {"shape": [2, 3], "entries": [[1, 2], [3, 4]]})


class TestElementary:
    def test_atoms(self):
        ts = l1_space()
        b = ts.factors[0].base
        u = elementary(ts, [b.atom(0), b.atom(1)])
        assert u.entries.tolist() == [[0, 1], [0, 0]]

    def test_zero_factor(self, rng):
        ts = l1_space()
        b = ts.factors[0].base
        assert not elementary(ts, [b.vector(rng.standard_normal(2)), b.zero()]).entries.any()

    def test_ones(self):
        ts = l1_space()
        b = ts.factors[0].base
        assert elementary(ts, [b.ones(), b.ones()]).entries.tolist() == [[1, 1], [1, 1]]

    def test_linear_coordinates(self):
        ts = TensorSpace.power(LatticeSpace.lq(2, 1), (2, 1))
        b = ts.factors[0].base
        u = elementary(ts, [b.vector([-2, 3]), b.vector([1, 5])])
        assert u.entries.tolist() == [[-4, -20], [9, 45]]

    def test_arity_mismatch(self):
        ts = l1_space()
        with pytest.raises(DimensionError):
            elementary(ts, [ts.factors[0].base.ones()])


class TestFremlinNorm:
    def test_zero(self):
        res = fremlin_norm(l1_space().zeros())
        assert res.value == 0 and res.witness.terms == ()

    @pytest.mark.parametrize("entries", list(ORACLE_L1))
    def test_l1_product_identity(self, entries):
        u = l1_space().tensor(entries)
        res = fremlin_norm(u)
        assert res.value == pytest.approx(ORACLE_L1[entries], rel=1e-7)
        assert res.value == pytest.approx(np.abs(u.entries).sum(), rel=1e-7)

    @pytest.mark.parametrize("entries", list(ORACLE_L2))
    def test_l2_frozen(self, entries):
        u = TensorSpace.power(LatticeSpace.lq(2, 2), (1, 1)).tensor(entries)
        assert fremlin_norm(u).value == pytest.approx(ORACLE_L2[entries], rel=1e-6)

    def test_brute_force_mode(self):
        u = l1_space().tensor([[1, 2], [3, 4]])
        res = fremlin_norm(u, mode="brute_force")
        assert res.value == pytest.approx(10.0, rel=1e-9)
        assert res.witness.is_feasible_for(u)

    def test_cross_norm(self, rng):
        for k in range(10):
            d = 2 + k % 3
            ps = [(1, 1), (2, 1), (0.5, 0.5), (1, 1, 1)][k % 4]
            base = LatticeSpace.lq(d, [1, 1.5, 2, np.inf][k % 4], weights=rng.uniform(0.5, 2, d))
            ts = TensorSpace.power(base, ps)
            xs = [base.vector(np.abs(rng.standard_normal(d))) for _ in ps]
            ref = np.prod([concavification_norm(f, x).value for f, x in zip(ts.factors, xs)])
            assert fremlin_norm(elementary(ts, xs)).value == pytest.approx(ref, rel=1e-4)

    def test_witness_feasible(self, rng):
        ts = TensorSpace.power(LatticeSpace.lq(3, 1.5), (1, 2))
        u = ts.tensor(rng.standard_normal((3, 3)))
        res = fremlin_norm(u)
        assert isinstance(res.witness, PositiveDecomposition)
        assert res.witness.is_feasible_for(u, atol=1e-9)
        assert res.witness.recomputed_value() == pytest.approx(res.value, rel=1e-12)

    def test_monotone_against_oracle(self, rng):
        ts = TensorSpace.power(LatticeSpace.lq(2, 1.5), (1, 1))
        for _ in range(3):
            v = rng.random((2, 2))
            u = v * rng.random((2, 2))
            nu, nv = fremlin_norm(ts.tensor(u)).value, fremlin_norm(ts.tensor(v), mode="brute_force").value
            assert nu <= nv + 1e-6

    def test_decomposition_json(self):
        ts = l1_space()
        w = fremlin_norm(ts.tensor([[1, 2], [3, 4]])).witness
        back = PositiveDecomposition.from_dict(ts, w.to_dict())
        assert back.value == w.value
        assert np.allclose(back.tensor().entries, w.tensor().entries)


class TestUniversal:
    def test_elementary_pairing(self, rng):
        for n in (2, 3):
            phi = random_orthomap(int(rng.integers(1000)), n, (3, 2), exponents=(1.0, 2.0, 0.5)[:n])
            ts = TensorSpace.power(phi.source, phi.source_exponents)
            xs = [phi.source.vector(rng.standard_normal(3)) for _ in range(n)]
            assert apply_universal(phi, elementary(ts, xs)).allclose(phi(xs), atol=1e-12)

    def test_zero(self):
        phi = random_orthomap(0, 2, (2, 2))
        ts = TensorSpace.power(phi.source, (1, 1))
        assert apply_universal(phi, ts.zeros()).tolist() == [0, 0]

    def test_unit_coordinate_form(self):
        for d in (2, 3, 4):
            src = LatticeSpace.lq(d, 2)
            phi = OrthoMap(2, (1, 1), src, LatticeSpace.lq(1, 2), np.ones((d, 1)))
            ts = TensorSpace.power(src, (1, 1))
            assert apply_universal(phi, ts.tensor(np.ones((d, d)))).tolist() == [d]

    def test_linear_in_u(self, rng):
        table = rng.random((2, 3, 2))
        ts = TensorSpace((ConcaveSpace(LatticeSpace.lq(2, 1), 1), ConcaveSpace(LatticeSpace.lq(3, 1), 1)))
        phi = MultilinearMap(ts, table, LatticeSpace.lq(2, 1))
        u, v = ts.tensor(rng.standard_normal((2, 3))), ts.tensor(rng.standard_normal((2, 3)))
        lhs = apply_universal(phi, u + 2.5 * v)
        rhs = apply_universal(phi, u) + 2.5 * apply_universal(phi, v)
        assert lhs.allclose(rhs, atol=1e-12)

    def test_morphism_abs_on_decomposable(self, rng):
        phi = random_orthomap(3, 2, (3, 3), structure="morphism")
        ts = TensorSpace.power(phi.source, (1, 1))
        for _ in range(20):
            xs = [phi.source.vector(rng.standard_normal(3)) for _ in range(2)]
            u = elementary(ts, xs)
            assert abs(apply_universal(phi, u)).allclose(apply_universal(phi, abs(u)), atol=1e-12)

    def test_arity_mismatch(self):
        phi = random_orthomap(0, 3, (2, 2))
        with pytest.raises(DimensionError):
            apply_universal(phi, l1_space().zeros())

    def test_negative_table_rejected(self):
        ts = l1_space()
        with pytest.raises(ValueError):
            MultilinearMap(ts, -np.ones((2, 2, 1)), LatticeSpace.lq(1, 1))
