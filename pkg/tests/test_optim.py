import math

import numpy as np
import pytest

from concavlab import (
    ConcaveSpace,
    DecompositionProblem,
    LatticeSpace,
    OracleSizeError,
    SolverConfig,
    TensorSpace,
    brute_force_oracle,
    concavification_norm,
    diagonal_embed_T,
    minimize_decomposition,
    quotient_norm,
)
from concavlab.optim import Gauge, _rank_one_bound, check_witness


def gauge(d, q, p, weights=None):
    return Gauge(LatticeSpace.lq(d, q, weights=weights).norm, p)


def hard_problem(rng):
    # generic 3x3 target with smooth factors: needs many pricing rounds
    return DecompositionProblem("fremlin", (gauge(3, 1.5, 1), gauge(3, 1.5, 1)), rng.random((3, 3)))


class TestSolverConfig:
    def test_defaults(self):
        c = SolverConfig()
        assert (c.restarts, c.max_iters, c.rel_tol) == (16, 5000, 1e-7)

    @pytest.mark.parametrize("kw", [{"restarts": 0}, {"max_iters": 0}, {"rel_tol": 1.0},
                                    {"rel_tol": 0}, {"part_cap": 0}, {"seed": -1}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ValueError):
            SolverConfig.from_dict({"restart": 3})

    def test_updated_ignores_none(self):
        c = SolverConfig(seed=3).updated(seed=None, restarts=2)
        assert (c.seed, c.restarts) == (3, 2)

    def test_round_trip(self):
        c = SolverConfig(restarts=3, part_cap=9, seed=11)
        assert SolverConfig.from_dict(c.to_dict()) == c


class TestProblem:
    def test_validation(self):
        with pytest.raises(ValueError):
            DecompositionProblem("fremlin", (gauge(2, 1, 1),), np.ones((2, 2)))
        with pytest.raises(ValueError):
            DecompositionProblem("fremlin", (gauge(2, 1, 1),) * 2, -np.ones((2, 2)))
        with pytest.raises(ValueError):
            DecompositionProblem("other", (gauge(2, 1, 1),), np.ones(2))

    def test_default_caps(self):
        assert DecompositionProblem("concavification", (gauge(3, 1, 2),), np.ones(3)).default_part_cap() == 24
        prob = DecompositionProblem("fremlin", (gauge(4, 1, 1),) * 2, np.ones((4, 4)))
        assert prob.default_part_cap() == 32


class TestMinimize:
    def test_p_le_1_matches_closed_form(self, rng):
        cfg = SolverConfig()
        for _ in range(10):
            x = np.abs(rng.standard_normal(4))
            p = rng.uniform(0.2, 1.0)
            g = gauge(4, rng.uniform(1, 3), p)
            rep = minimize_decomposition(DecompositionProblem("concavification", (g,), x**p), cfg)
            assert rep.value == pytest.approx(g(x**p), rel=cfg.rel_tol * 10)

    def test_positive_elementary_target(self, rng):
        cfg = SolverConfig()
        for q, ps in [(1.5, (1, 1)), (1, (2, 1)), (2, (0.5, 0.5, 1))]:
            gs = tuple(gauge(3, q, p) for p in ps)
            xs = [np.abs(rng.standard_normal(3)) ** p for p in ps]
            target = xs[0]
            for x in xs[1:]:
                target = np.multiply.outer(target, x)
            rep = minimize_decomposition(DecompositionProblem("fremlin", gs, target), cfg)
            # factor norms by the concavification solver
            ref = math.prod(
                minimize_decomposition(DecompositionProblem("concavification", (g,), x), cfg).value
                for g, x in zip(gs, xs)
            )
            assert rep.converged
            assert rep.value == pytest.approx(ref, rel=cfg.rel_tol * 10)

    def test_witness_feasible_and_consistent(self, rng):
        prob = hard_problem(rng)
        rep = minimize_decomposition(prob)
        assert check_witness(prob, rep.witness)
        assert rep.value == pytest.approx(prob.objective(rep.witness), rel=1e-12)

    def test_deterministic(self, rng):
        prob = hard_problem(rng)
        a = minimize_decomposition(prob, SolverConfig(seed=5))
        b = minimize_decomposition(prob, SolverConfig(seed=5))
        assert a.value == b.value
        assert a.history == b.history
        for ta, tb in zip(a.witness, b.witness):
            for fa, fb in zip(ta, tb):
                assert np.array_equal(fa, fb)

    def test_history_non_increasing(self, rng):
        rep = minimize_decomposition(hard_problem(rng))
        assert all(b <= a for a, b in zip(rep.history, rep.history[1:]))

    def test_converged_means_small_gap(self, rng):
        cfg = SolverConfig()
        rep = minimize_decomposition(hard_problem(rng), cfg)
        assert rep.converged
        assert rep.lower_bound >= rep.value * (1 - cfg.rel_tol) - 1e-15

    def test_iteration_cap_reports_unconverged(self, rng):
        rep = minimize_decomposition(hard_problem(rng), SolverConfig(max_iters=1, restarts=2))
        assert not rep.converged
        assert rep.restarts_used == 2
        assert math.isfinite(rep.value)

    def test_zero_target(self):
        rep = minimize_decomposition(DecompositionProblem("fremlin", (gauge(2, 1, 1),) * 2, np.zeros((2, 2))))
        assert rep.value == 0 and rep.witness == () and rep.converged

    def test_masked_rows_only(self):
        mask = np.eye(2, dtype=bool)
        prob = DecompositionProblem("quotient", (gauge(2, 1, 1),) * 2, np.array([[1.0, 50.0], [50.0, 2.0]]), mask)
        rep = minimize_decomposition(prob)
        assert rep.value == pytest.approx(3.0, rel=1e-9)

    @pytest.mark.parametrize("kind", ["concavification", "fremlin", "quotient"])
    def test_against_oracle_d2(self, kind, rng):
        for _ in range(4):
            q, p = rng.choice([1.0, 1.5, 2.0]), rng.choice([0.5, 1.0, 2.0])
            gs = (gauge(2, q, p, rng.uniform(0.5, 2, 2)),)
            if kind == "concavification":
                prob = DecompositionProblem(kind, gs, np.abs(rng.standard_normal(2)))
            else:
                gs = gs + (gauge(2, rng.choice([1.0, 2.0]), rng.choice([0.5, 1.0])),)
                mask = np.eye(2, dtype=bool) if kind == "quotient" else None
                prob = DecompositionProblem(kind, gs, rng.random((2, 2)), mask)
            opt = minimize_decomposition(prob).value
            orc = brute_force_oracle(prob).value
            assert abs(opt - orc) <= 1e-6 * max(1.0, orc)

    def test_rank_one_bound_is_a_lower_bound(self, rng):
        for _ in range(5):
            gs = (gauge(2, 1.5, 1.0), gauge(2, 1.0, 2.0))
            prob = DecompositionProblem("fremlin", gs, rng.random((2, 2)))
            bound = _rank_one_bound(prob, prob.target, rng)
            assert bound <= brute_force_oracle(prob).value * (1 + 1e-12)


class TestOracle:
    def test_size_guard(self):
        with pytest.raises(OracleSizeError):
            brute_force_oracle(DecompositionProblem("fremlin", (gauge(4, 1, 1),) * 2, np.ones((4, 4))))
        with pytest.raises(OracleSizeError):
            brute_force_oracle(DecompositionProblem("fremlin", (gauge(2, 1, 1),) * 3, np.ones((2, 2, 2))))
        with pytest.raises(OracleSizeError):
            brute_force_oracle(DecompositionProblem("concavification", (gauge(2, 1, 1),), np.ones(2)),
                               resolutions=(16,))

    def test_single_part_exact(self):
        g = gauge(3, 2, 1)
        x = np.array([1.0, 0.0, 0.0])
        assert brute_force_oracle(DecompositionProblem("concavification", (g,), x)).value == pytest.approx(
            1.0, abs=1e-8
        )

    def test_refinement_monotone(self, rng):
        for _ in range(5):
            prob = DecompositionProblem("fremlin", (gauge(2, 1.5, 1), gauge(2, 2, 0.5)), rng.random((2, 2)))
            trace = brute_force_oracle(prob, resolutions=(32, 64)).trace
            grid = {res: v for kind, res, v in trace if kind == "grid"}
            assert grid[64] <= grid[32] + 1e-12
            assert trace[-1][2] <= grid[64] + 1e-12

    def test_refinement_monotone_d3(self, rng):
        g = gauge(3, 1.2, 2.0, rng.uniform(0.5, 2, 3))
        prob = DecompositionProblem("concavification", (g,), np.abs(rng.standard_normal(3)))
        trace = brute_force_oracle(prob).trace
        assert trace[1][2] <= trace[0][2] + 1e-12

    def test_closed_form_regimes(self, rng):
        for _ in range(6):
            d = int(rng.integers(2, 4))
            q = rng.uniform(2, 4)
            p = rng.uniform(0.3, 2)
            g = gauge(d, q, p, rng.uniform(0.5, 2, d))
            x = np.abs(rng.standard_normal(d))
            val = brute_force_oracle(DecompositionProblem("concavification", (g,), x**p)).value
            assert val == pytest.approx(g(x**p), rel=1e-5)


def test_tiny_target_rows_stay_covered():
    # |x_2|^3 ~ 4e-10 sits below the LP's absolute feasibility tolerance
    base = LatticeSpace.lq(2, 2)
    x = base.vector([-1.71765612, 7.36280160e-04])
    ts = TensorSpace.power(base, (2, 1))
    res = quotient_norm(diagonal_embed_T(x, ts), config=SolverConfig(restarts=2, max_iters=50))
    assert res.converged
    assert res.value == pytest.approx(concavification_norm(ConcaveSpace(base, 3), x).value, rel=1e-6)
    assert res.report["decomposition"].is_feasible_for(res.witness, atol=0)
