"""Unit tests for the clustered-spectrum problem family and the
truncation preconditioner."""

import numpy as np
import pytest

from krylovmp import linalg, problems


def bench_spec(i=55):
    return problems.ProblemSpec(n=85, lambda_1=1.0, lambda_n=1e5, rho=0.6, trunc_index=i)


class TestProblemSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            problems.ProblemSpec(n=10, lambda_1=2.0, lambda_n=1.0, rho=0.5, trunc_index=5)
        with pytest.raises(ValueError):
            problems.ProblemSpec(n=10, lambda_1=1.0, lambda_n=2.0, rho=1.5, trunc_index=5)
        with pytest.raises(ValueError):
            problems.ProblemSpec(n=10, lambda_1=1.0, lambda_n=2.0, rho=0.5, trunc_index=1)


class TestBuildMatrix:
    def test_endpoints_exact(self):
        a = problems.build_matrix(bench_spec())
        assert a.diag[0] == 1.0
        assert a.diag[-1] == 1e5

    def test_formula_spot_values(self):
        # lambda_i = lambda_1 + (i-1)/(n-1)(lambda_n - lambda_1) rho^(n-i)
        spec = bench_spec()
        a = problems.build_matrix(spec)
        for i in (2, 30, 55, 84):  # 1-based
            expected = 1.0 + (i - 1) / 84 * (1e5 - 1.0) * 0.6 ** (85 - i)
            assert a.diag[i - 1] == pytest.approx(expected, rel=1e-15)

    def test_monotone_increasing(self):
        a = problems.build_matrix(bench_spec())
        assert np.all(np.diff(a.diag) > 0)

    def test_condition_number(self):
        a = problems.build_matrix(bench_spec())
        assert linalg.cond2(a) == 1e5

    def test_clustering(self):
        # with rho < 1 most eigenvalues cluster near lambda_1
        a = problems.build_matrix(bench_spec())
        assert np.sum(a.diag < 2.0) > 60


class TestRhs:
    def test_normalized_ones(self):
        b = problems.build_rhs(85)
        assert np.all(b == b[0])
        assert linalg.norm2(b) == pytest.approx(1.0, rel=1e-15)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            problems.build_rhs(0)


class TestPreconditioner:
    def test_truncation(self):
        spec = bench_spec(i=55)
        a = problems.build_matrix(spec)
        m = problems.build_preconditioner(spec, a)
        assert np.array_equal(m.diag[:54], a.diag[:54])
        assert np.all(m.diag[54:] == a.diag[54])

    def test_preconditioned_kappa_benchmark_values(self):
        # i = 55: kappa(M^-1 A) ~ 9.86e4, kappa(M^-1) = lambda_55 ~ 1.0142
        spec = bench_spec(i=55)
        a = problems.build_matrix(spec)
        m = problems.build_preconditioner(spec, a)
        kappa_ma = linalg.cond2(linalg.SpdMatrix.diagonal(a.diag / m.diag))
        assert kappa_ma == pytest.approx(9.86e4, rel=1e-2)
        assert linalg.cond2(m) / linalg.cond2(a) == pytest.approx(
            a.diag[54] / 1e5, rel=1e-12
        )

    def test_full_truncation_is_identityish(self):
        # i = n keeps the whole spectrum: M = A
        spec = bench_spec(i=85)
        a = problems.build_matrix(spec)
        m = problems.build_preconditioner(spec, a)
        assert np.array_equal(m.diag, a.diag)


class TestReferenceSolution:
    def test_diagonal_exact(self):
        a = linalg.SpdMatrix.diagonal([2.0, 4.0])
        x = problems.reference_solution(a, [1.0, 1.0])
        assert np.array_equal(x, [0.5, 0.25])

    def test_dense_refined(self):
        rng = np.random.default_rng(17)
        g = rng.standard_normal((12, 12))
        a = linalg.SpdMatrix.from_dense(g @ g.T + 12 * np.eye(12))
        x_true = rng.standard_normal(12)
        b = a.dense @ x_true
        x = problems.reference_solution(a, b)
        assert np.linalg.norm(x - x_true) <= 1e-13 * np.linalg.norm(x_true)
