import math

import mpmath
import numpy as np
import pytest

from repfusion import oracle
from repfusion.cost_model import (
    CostSpec,
    Exponential,
    Linear,
    LinearMinusOne,
    LogConcave,
    Polynomial,
    Power,
    Tabulated,
)
from repfusion.errors import DomainError, UnsupportedRegimeError
from repfusion.verify import verify_config


class TestIncrementalValues:
    @pytest.mark.parametrize(
        "form",
        [Exponential(1.5, 0.7), Power(2.0, 3.0), Power(1.0, 0.5), Linear(2.0), LogConcave(1.0, 2.0)],
    )
    def test_matches_model(self, form):
        x = np.geomspace(1e-3, 20, 50)
        got = oracle.incremental_values(form, x)
        np.testing.assert_allclose(got, [form.value(t) for t in x], rtol=1e-12)

    def test_tabulated(self):
        form = Tabulated(((0.0, 0.0), (1.0, 1.0), (2.0, 3.0)))
        np.testing.assert_allclose(oracle.incremental_values(form, np.array([0.5, 1.5])), [0.5, 2.0])
        with pytest.raises(DomainError):
            oracle.incremental_values(form, np.array([2.5]))


class TestWeights:
    def test_equal_pair(self):
        w, mse = oracle.brute_force_weights([1.0, 1.0], 0.01)
        np.testing.assert_allclose(w, [0.5, 0.5])
        assert mse == pytest.approx(0.5)

    def test_unequal_pair(self):
        w, mse = oracle.brute_force_weights([1.0, 3.0], 0.01)
        np.testing.assert_allclose(w, [0.25, 0.75])
        assert mse == pytest.approx(0.25)

    def test_single(self):
        w, mse = oracle.brute_force_weights([2.0], 0.01)
        assert w.tolist() == [1.0]
        assert mse == pytest.approx(0.5)

    def test_lattice_size(self):
        # C(k + n - 1, n - 1) points
        assert oracle._simplex_lattice(4, 100).shape == (math.comb(103, 3), 4)
        assert np.all(oracle._simplex_lattice(3, 20).sum(axis=1) == 20)

    @pytest.mark.parametrize("theta,step", [([1.0] * 5, 0.01), ([1.0], 0.1), ([1.0], 0.0), ([0.0, 1.0], 0.01)])
    def test_limits(self, theta, step):
        with pytest.raises(DomainError):
            oracle.brute_force_weights(theta, step)


class TestAllocation:
    def test_quadratic_picks_uniform(self):
        theta, total = oracle.brute_force_allocation(CostSpec(0.0, Power(1.0, 2.0)), 0.5, 2)
        np.testing.assert_allclose(theta, [1.0, 1.0])
        assert total == pytest.approx(2.0)

    def test_linear_tie_reports_uniform(self):
        spec = CostSpec(0.0, Linear(3.0))
        theta, total = oracle.brute_force_allocation(spec, 0.5, 2)
        np.testing.assert_allclose(theta, [1.0, 1.0])
        assert total == pytest.approx(6.0)

    def test_exponential(self):
        theta, _ = oracle.brute_force_allocation(CostSpec(1.0, Exponential(1.0, 1.0)), 1.0, 2)
        np.testing.assert_allclose(theta, [0.5, 0.5])

    def test_three_units_sum_to_budget(self):
        theta, _ = oracle.brute_force_allocation(CostSpec(0.0, Exponential(2.0, 0.5)), 0.25, 3)
        assert theta.sum() == pytest.approx(4.0)
        np.testing.assert_allclose(theta, 4 / 3, atol=4 / 200)

    def test_concave_prefers_extremes(self):
        theta, _ = oracle.brute_force_allocation(CostSpec(0.0, Power(1.0, 0.5)), 1.0, 2)
        assert theta.max() > 0.98

    @pytest.mark.parametrize("n", [1, 4])
    def test_unit_limits(self, n):
        with pytest.raises(DomainError):
            oracle.brute_force_allocation(CostSpec(0.0, Linear(1.0)), 1.0, n)


class TestSweep:
    def test_example_argmins(self, example_cost, example_fusion):
        # direct summation of the cost formula; confirmed with 40-digit arithmetic
        got = [oracle.sweep_integer_n(example_cost, example_fusion, t, 50)[0] for t in (0.5, 0.1, 0.05)]
        assert got == [1, 5, 10]

    def test_table_against_mpmath(self, example_cost, example_fusion):
        _, table = oracle.sweep_integer_n(example_cost, example_fusion, 0.1, 8)
        with mpmath.workdps(40):
            for n, c in table:
                ref = n * (mpmath.expm1(mpmath.mpf(10) / n) + 7) + (n - 1)
                assert c == pytest.approx(float(ref), rel=1e-14)

    def test_single_row(self, example_cost, example_fusion):
        best, table = oracle.sweep_integer_n(example_cost, example_fusion, 0.1, 1)
        assert best == 1 and len(table) == 1

    def test_tie_goes_to_smaller_n(self):
        # linear G and zero fusion cost: every N costs c_min N + alpha/tau; with c_min=0 all tie
        best, _ = oracle.sweep_integer_n(CostSpec(0.0, Linear(1.0)), LinearMinusOne(0.0), 1.0, 10)
        assert best == 1

    def test_rejects(self, example_cost, example_fusion):
        with pytest.raises(DomainError):
            oracle.sweep_integer_n(example_cost, example_fusion, 0.1, 0)
        with pytest.raises(DomainError):
            oracle.sweep_integer_n(example_cost, example_fusion, 0.0, 5)


class TestVInverse:
    def test_exponential_example(self, example_cost):
        # V(tau) = 1 + exp(1/tau)(1/tau - 1); target c_min + gamma = 8
        t = oracle.bisect_v_inverse(example_cost, 8.0)
        assert t == pytest.approx(0.5068067304173033, rel=1e-10)

    def test_quadratic_closed_form(self):
        # V(tau) = tau^-2
        assert oracle.bisect_v_inverse(CostSpec(3.0, Power(1.0, 2.0)), 4.0) == pytest.approx(0.5, rel=1e-10)

    def test_linear_out_of_range(self):
        with pytest.raises(DomainError):
            oracle.bisect_v_inverse(CostSpec(1.0, Linear(1.0)), 2.0)

    def test_tabulated_unsupported(self):
        spec = CostSpec(1.0, Tabulated(((0.0, 0.0), (1.0, 1.0), (2.0, 3.0))))
        with pytest.raises(UnsupportedRegimeError):
            oracle.bisect_v_inverse(spec, 1.0)

    def test_rejects_nonpositive_target(self, example_cost):
        with pytest.raises(DomainError):
            oracle.bisect_v_inverse(example_cost, 0.0)


class TestSubadditivity:
    def test_concave_and_convex(self):
        pairs = np.random.default_rng(0).uniform(0.01, 10, (1000, 2))
        assert oracle.subadditivity_gap(CostSpec(0.0, Power(1.0, 0.5)), pairs) <= 0
        assert oracle.subadditivity_gap(CostSpec(0.0, LogConcave(1.0, 1.0)), pairs) <= 0
        assert oracle.subadditivity_gap(CostSpec(0.0, Power(1.0, 2.0)), pairs) > 0


class TestVerify:
    def test_example_passes(self, example_cost, example_fusion):
        verdicts = verify_config(example_cost, example_fusion, seed=0)
        assert all(v.passed for v in verdicts)
        assert {v.claim for v in verdicts} >= {"mmse_weights", "uniform_allocation", "threshold_T"}

    def test_concave_skips_threshold(self):
        verdicts = verify_config(CostSpec(0.0, LogConcave(1.0, 1.0)), LinearMinusOne(0.0), seed=0)
        by_claim = {v.claim: v for v in verdicts}
        assert by_claim["threshold_T"].skipped
        assert all(v.passed for v in verdicts)

    def test_polynomial_fusion(self):
        verdicts = verify_config(CostSpec(2.0, Power(1.0, 2.5)), Polynomial((0.5, 0.2)), seed=1)
        assert all(v.passed for v in verdicts), [v.line() for v in verdicts]

    def test_verdict_line(self):
        v = oracle.OracleVerdict("x", 1.0, 1.0, 0.0, True)
        assert v.line().startswith("PASS x")
        assert oracle.OracleVerdict("x", 1.0, 2.0, 1.0, False).line().startswith("FAIL")
