"""Shared fixtures: the benchmark-scale experiment runs are expensive
enough (2500 iterations each) that acceptance criteria 1, 2, 5 and 6
share one set of session-scoped traces, and criteria 4 and 5 share one
sweep."""

from __future__ import annotations

import numpy as np
import pytest

from krylovmp import cli, pcg, problems
from krylovmp.fpx import get_format


@pytest.fixture(scope="session")
def bench_problem():
    return cli.default_problem()  # n=85, lambda in [1, 1e5], rho=0.6, i=55


@pytest.fixture(scope="session")
def bench_setup(bench_problem):
    cfg = cli.ExperimentConfig(problem=bench_problem)
    return cli.build_setup(cfg)


@pytest.fixture(scope="session")
def left_traces(bench_problem, bench_setup):
    """Left-PCG traces for all four application formats, 2500 iters."""
    traces = {}
    for name in ("fp64", "fp32", "bfloat16", "fp16"):
        scheme = pcg.PreconditionerScheme(
            mode="left", factor=bench_setup.factor, fmt_s=get_format(name)
        )
        traces[name] = pcg.pcg_run(
            bench_setup.a,
            bench_setup.b,
            np.zeros(bench_problem.n),
            scheme,
            2500,
            keep_vectors=True,
        )
    return traces


@pytest.fixture(scope="session")
def sweep_rows(bench_problem, tmp_path_factory):
    """The 16-cell (fmt_L, fmt_R) sweep, parsed into dict rows."""
    out = tmp_path_factory.mktemp("sweep") / "sweep.csv"
    cfg = cli.ExperimentConfig(problem=bench_problem, output_path=str(out))
    assert cli.cmd_sweep(cfg) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    header = lines[0].split(",")
    assert header == cli.SWEEP_COLUMNS
    rows = {}
    for line in lines[1:]:
        vals = dict(zip(header, line.split(",")))
        rows[(vals["fmt_L"], vals["fmt_R"])] = vals
    return rows


def random_diag_problem(rng, n_max=60, kappa_max=1e3):
    """A random ProblemSpec with a positive clustered spectrum."""
    n = int(rng.integers(4, n_max + 1))
    lam1 = float(10.0 ** rng.uniform(-2, 1))
    lamn = lam1 * float(10.0 ** rng.uniform(0.5, np.log10(kappa_max)))
    rho = float(rng.uniform(0.3, 0.95))
    idx = int(rng.integers(2, n + 1))
    return problems.ProblemSpec(n=n, lambda_1=lam1, lambda_n=lamn, rho=rho, trunc_index=idx)


def min_rel_residual(trace: pcg.PcgTrace, setup) -> float:
    vals = [
        rec.norm_true_residual
        for rec in trace.records
        if np.isfinite(rec.norm_true_residual)
    ]
    return min(vals) / (setup.norm_A * setup.norm_xref)


def report(criterion: int, passed: bool, detail: str) -> None:
    print(f"CRITERION {criterion}: {'PASS' if passed else 'FAIL'} — {detail}")
