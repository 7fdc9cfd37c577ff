import numpy as np
import pytest

from concavlab import (
    ConcaveSpace,
    DiagonalIdeal,
    DimensionError,
    LatticeSpace,
    QuotientElement,
    StructuralError,
    TensorSpace,
    concavification_norm,
    diagonal_embed_T,
    diagonal_extract_M,
    elementary,
    ideal_member,
    oplus,
    quotient_norm,
)

# nested brute-force oracle (off-diagonal scan + grid LP), frozen as [DERIVED]
ORACLE_QUOTIENT_D2 = 3.0  # l^1(2) factors, p = (1, 1), u = [[1, 5], [3, 2]]


def space(d=2, q=1, ps=(1, 1)):
    return TensorSpace.power(LatticeSpace.lq(d, q), ps)


class TestIdeal:
    def test_disjoint_atoms(self):
        ts = space()
        b = ts.factors[0].base
        assert ideal_member(elementary(ts, [b.atom(0), b.atom(1)]))

    def test_diagonal_embedding_not_member(self, rng):
        ts = space(3, 2, (1, 1, 1))
        x = ts.factors[0].base.vector(rng.standard_normal(3))
        assert not ideal_member(elementary(ts, [x, abs(x), abs(x)]))

    def test_zero(self):
        assert ideal_member(space().zeros())

    def test_unequal_dims(self):
        ts = TensorSpace((ConcaveSpace(LatticeSpace.lq(2, 1), 1), ConcaveSpace(LatticeSpace.lq(3, 1), 1)))
        with pytest.raises(StructuralError):
            ideal_member(ts.zeros())
        with pytest.raises(StructuralError):
            DiagonalIdeal(ts)


class TestQuotientNorm:
    def test_member_has_zero_norm(self):
        u = space().tensor([[0, 3], [4, 0]])
        assert quotient_norm(QuotientElement.of(u)).value == 0

    def test_frozen_oracle_value(self):
        u = space().tensor([[1, 5], [3, 2]])
        res = quotient_norm(QuotientElement.of(u))
        assert res.value == pytest.approx(ORACLE_QUOTIENT_D2, rel=1e-7)
        assert np.array_equal(res.witness.entries, [[1, 0], [0, 2]])
        assert res.report["decomposition"].is_feasible_for(res.witness)

    def test_brute_force_mode(self):
        u = space().tensor([[1, 5], [3, 2]])
        assert quotient_norm(u, mode="brute_force").value == pytest.approx(3.0, rel=1e-9)

    @pytest.mark.parametrize("q", [1, 2, np.inf])
    def test_isometry_n_equals_p(self, q, rng):
        for n in (2, 3):
            ts = space(3, q, (1,) * n)
            x = ts.factors[0].base.vector(rng.standard_normal(3))
            lhs = quotient_norm(diagonal_embed_T(x, ts)).value
            rhs = concavification_norm(ConcaveSpace(ts.factors[0].base, n), x).value
            assert lhs == pytest.approx(rhs, rel=1e-3)

    def test_contraction_chain(self, rng):
        # quotient norm of T(x) <= prod ||x||_(p_m) <= ||x||^p in p-convex regimes
        ts = space(3, 4, (1, 2))
        x = ts.factors[0].base.vector(rng.standard_normal(3))
        q = quotient_norm(diagonal_embed_T(x, ts)).value
        prod = np.prod([concavification_norm(f, x).value for f in ts.factors])
        assert q <= prod * (1 + 1e-9)
        assert prod <= x.norm() ** 3 * (1 + 1e-12)


class TestMaps:
    def test_extract_elementary(self, rng):
        ts = space(3, 2, (2, 1))
        b = ts.factors[0].base
        xs = [b.vector(rng.standard_normal(3)) for _ in range(2)]
        out = diagonal_extract_M(elementary(ts, xs), ConcaveSpace(b, 3))
        ref = np.sign(xs[0].coords) * np.abs(xs[0].coords) ** (2 / 3) * np.sign(xs[1].coords) * np.abs(
            xs[1].coords
        ) ** (1 / 3)
        assert np.allclose(out.coords, ref, rtol=1e-12, atol=0)

    def test_extract_zero(self):
        ts = space()
        assert diagonal_extract_M(ts.zeros(), ConcaveSpace(ts.factors[0].base, 2)).tolist() == [0, 0]

    def test_extract_square_roots(self):
        ts = space()
        u = ts.tensor([[4, 7], [-1, 9]])
        assert diagonal_extract_M(u, ConcaveSpace(ts.factors[0].base, 2)).tolist() == [2, 3]

    def test_exponent_mismatch(self):
        ts = space()
        with pytest.raises(StructuralError):
            diagonal_extract_M(ts.zeros(), ConcaveSpace(ts.factors[0].base, 1))

    def test_embed_atom(self):
        ts = space(3, 2, (1, 1, 1))
        e = ts.factors[0].base.atom(0)
        rep = diagonal_embed_T(e, ts).representative
        assert rep.entries[0, 0, 0] == 1 and rep.entries.sum() == 1

    def test_embed_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            diagonal_embed_T(LatticeSpace.lq(3, 1).ones(), space())

    def test_inverse_pair(self, rng):
        for ps in [(1, 1), (2, 1), (0.5, 0.5), (1, 1, 1)]:
            ts = space(3, 2, ps)
            target = ConcaveSpace(ts.factors[0].base, sum(ps))
            for _ in range(20):
                x = ts.factors[0].base.vector(rng.standard_normal(3))
                assert np.allclose(diagonal_extract_M(diagonal_embed_T(x, ts), target).coords, x.coords,
                                   rtol=1e-12, atol=0)
                u = ts.tensor(rng.standard_normal(ts.shape))
                back = diagonal_embed_T(diagonal_extract_M(u, target), ts)
                assert np.allclose(back.diagonal(), QuotientElement.of(u).diagonal(), rtol=1e-12, atol=0)

    def test_M_is_lattice_homomorphism(self, rng):
        ts = space(3, 2, (1, 2))
        target = ConcaveSpace(ts.factors[0].base, 3)
        for _ in range(20):
            u, v = ts.tensor(rng.standard_normal((3, 3))), ts.tensor(rng.standard_normal((3, 3)))
            # sup of classes is computed on diagonals
            mu_, mv = diagonal_extract_M(u, target), diagonal_extract_M(v, target)
            assert diagonal_extract_M(u.sup(v), target) == (mu_ | mv)
            assert diagonal_extract_M(u + v, target).allclose(oplus(target, mu_, mv), atol=1e-12)


class TestQuotientElement:
    def test_equality_by_diagonal(self):
        ts = space()
        a = QuotientElement.of(ts.tensor([[1, 5], [3, 2]]))
        b = QuotientElement.of(ts.tensor([[1, 0], [9, 2]]))
        c = QuotientElement.of(ts.tensor([[1, 0], [9, 2.1]]))
        assert a == b and a != c

    def test_canonical(self):
        ts = space()
        q = QuotientElement.of(ts.tensor([[1, 5], [3, 2]]))
        assert q.canonical().entries.tolist() == [[1, 0], [0, 2]]
