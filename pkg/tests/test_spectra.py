import csv
import io
import json
import math

import numpy as np
import pytest

from h4precond.spectra import (
    CSV_FIELDS,
    DEFAULT_W_LIST,
    REFERENCE_LOG10_KAPPA,
    ConditionReport,
    Table1Row,
    condition_number_dense,
    condition_number_lanczos,
    lanczos_extremes,
    rows_to_csv,
    rows_to_json,
    scaled_matrix,
    scaled_operator,
    table1_report,
)
from h4precond.tensor2d import apply_B, build_C_dense, build_preconditioner, gram_set


def _check_report(r):
    assert r.lambda_min > 0
    assert r.kappa >= 1
    assert abs(r.log10_kappa - math.log10(r.kappa)) <= 1e-12


@pytest.mark.parametrize("W", [0, 1, 4, 10])
def test_dense_report_invariants(W):
    r = condition_number_dense(W, eigensolver="lapack")
    _check_report(r)
    assert r.method == "dense"
    assert r.lambda_min == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("W", [4, 8])
def test_jacobi_and_lapack_agree(W):
    a = condition_number_dense(W, eigensolver="jacobi")
    b = condition_number_dense(W, eigensolver="lapack")
    assert a.kappa == pytest.approx(b.kappa, rel=1e-12)


def test_dense_matches_reference_at_small_degree():
    r = condition_number_dense(4)
    assert abs(r.log10_kappa - REFERENCE_LOG10_KAPPA[4]) <= 0.02


def test_scaled_matrix_is_the_generalized_problem():
    # eigenvalues of B x = lambda C x straight from dense B and C
    W = 5
    grams = gram_set(W)
    n = W + 1
    B = np.column_stack([apply_B(grams, e.reshape(n, n)).ravel() for e in np.eye(n * n)])
    C = build_C_dense(W)
    L = np.linalg.cholesky(C)
    Li = np.linalg.inv(L)
    ref = np.linalg.eigvalsh(Li @ B @ Li.T)
    got = np.linalg.eigvalsh(scaled_matrix(W))
    np.testing.assert_allclose(got, ref, rtol=1e-8)


def test_scaled_operator_matches_matrix():
    W = 6
    A = scaled_matrix(W)
    op, n = scaled_operator(W)
    v = np.random.default_rng(0).standard_normal(n)
    np.testing.assert_allclose(op(v), A @ v, rtol=1e-11, atol=1e-11 * np.abs(A).max())


def test_dense_cap():
    with pytest.raises(ValueError):
        condition_number_dense(33)
    with pytest.raises(ValueError):
        condition_number_dense(6, dense_cap=5)
    with pytest.raises(ValueError):
        condition_number_dense(4, eigensolver="qr")


@pytest.mark.parametrize("W", [4, 8, 12])
def test_lanczos_agrees_with_dense(W):
    d = condition_number_dense(W, eigensolver="lapack")
    l = condition_number_lanczos(W, max_iters=200)
    _check_report(l)
    assert l.method == "lanczos"
    assert abs(l.kappa - d.kappa) <= 0.01 * d.kappa


def test_ritz_values_are_nested():
    W = 12
    op, n = scaled_operator(W)
    prev = None
    for m in (50, 100, 200):
        lmin, lmax, k = lanczos_extremes(op, n, m, seed=42)
        assert k <= m
        if prev is not None:
            assert lmax >= prev[1] - 1e-10
            assert lmin <= prev[0] + 1e-10
        prev = (lmin, lmax)


def test_lanczos_small_operator_is_exact():
    # invariant subspace reached immediately: full spectrum in n steps
    A = np.diag(np.arange(1.0, 6.0))
    lmin, lmax, k = lanczos_extremes(lambda v: A @ v, 5, 50)
    assert k == 5
    assert lmin == pytest.approx(1.0) and lmax == pytest.approx(5.0)


def test_lanczos_restarts_after_early_breakdown():
    # identity: every start vector is an eigenvector, breakdown at step 1
    from h4precond.errors import BreakdownError

    with pytest.raises(BreakdownError):
        lanczos_extremes(lambda v: 2.0 * v, 30, 20)


def test_lanczos_rejects_tiny_budget():
    with pytest.raises(ValueError):
        condition_number_lanczos(4, max_iters=9)


def test_lanczos_is_deterministic():
    a = condition_number_lanczos(8, max_iters=60, seed=7)
    b = condition_number_lanczos(8, max_iters=60, seed=7)
    assert (a.lambda_min, a.lambda_max) == (b.lambda_min, b.lambda_max)


@pytest.mark.parametrize("W", [4, 9, 16])
def test_rayleigh_sandwich(W):
    r = condition_number_dense(W, eigensolver="lapack")
    pre = build_preconditioner(W)
    grams = gram_set(W)
    n = W + 1
    from h4precond.tensor2d import apply_C

    rng = np.random.default_rng(W)
    for _ in range(50):
        X = rng.standard_normal((n, n))
        q = np.sum(X * apply_B(grams, X)) / np.sum(X * apply_C(pre, X))
        assert r.lambda_min - 1e-10 <= q <= r.lambda_max + 1e-10


@pytest.fixture(scope="module")
def small_table():
    return table1_report([4, 8, 12], eigensolver="lapack")


def test_table_rows(small_table):
    assert [row.report.W for row in small_table] == [4, 8, 12]
    for row in small_table:
        assert row.abs_dev == abs(row.report.log10_kappa - row.paper_log10_kappa)
        assert row.abs_dev <= 0.02
    kappas = [row.report.kappa for row in small_table]
    assert kappas == sorted(kappas)


def test_table_parallel_matches_serial(small_table):
    par = table1_report([4, 8, 12], eigensolver="lapack", workers=3)
    for a, b in zip(small_table, par):
        assert a.report.kappa == b.report.kappa


def test_table_without_reference_value():
    (row,) = table1_report([6], eigensolver="lapack")
    assert row.paper_log10_kappa is None and row.abs_dev is None
    text = rows_to_csv([row])
    assert text.splitlines()[1].split(",")[4:6] == ["", ""]


def test_default_w_list():
    assert DEFAULT_W_LIST == (4, 8, 12, 16, 20, 24, 28, 32)


def test_csv_output(small_table):
    text = rows_to_csv(small_table)
    lines = text.splitlines()
    assert lines[0] == "W,log10_kappa,lambda_min,lambda_max,paper_log10_kappa,abs_dev,method,wall_time_s"
    recs = list(csv.DictReader(io.StringIO(text)))
    assert len(recs) == 3
    assert float(recs[0]["log10_kappa"]) == small_table[0].report.log10_kappa


def test_json_output(small_table):
    data = json.loads(rows_to_json(small_table))
    assert len(data) == 3
    for rec in data:
        assert tuple(rec) == CSV_FIELDS
        assert rec["method"] == "dense"


def test_untimed_output_is_reproducible():
    a = rows_to_csv(table1_report([4, 6], eigensolver="lapack"), timing=False)
    b = rows_to_csv(table1_report([4, 6], eigensolver="lapack"), timing=False)
    assert a == b


def test_report_from_extremes():
    r = ConditionReport.from_extremes(3, 1.0, 100.0, "dense", 0.0)
    assert r.log10_kappa == 2.0
    assert Table1Row(r, 2.01).abs_dev == pytest.approx(0.01)
