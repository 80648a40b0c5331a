"""Command-line experiment runner.

Three subcommands reproduce the experiment families as CSV data:

* ``run`` — one PCG run, one row per iteration plus the k = 0 record.
* ``compare-saad`` — matched Algorithm-2-split and Saad-split runs,
  two CSV files plus a stdout summary line with the stagnation ratio.
* ``sweep`` — the (fmt_L, fmt_R) format grid for split PCG under the
  A-norm-error-minimum stopping rule, one row per cell.

Configs are flat ``key = value`` lines with ``#`` comments and dotted
keys.  Every emitted CSV starts with comment lines echoing the full
resolved config (round-trippable) plus the problem norms needed to
reconstruct the normalized quantities.  Exit codes: 0 run finished
(Converged/MaxIter), 1 config error, 2 breakdown.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import re
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import bounds, pcg
from .fpx import FP64, FORMATS, get_format
from .linalg import LowerTriangular, SpdMatrix, a_norm, cholesky, eigvals_spd, spectral_norm
from .problems import (
    ProblemSpec,
    build_matrix,
    build_preconditioner,
    build_rhs,
    reference_solution,
)

CSV_COLUMNS = [
    "k",
    "alpha",
    "beta",
    "norm_rhat",
    "norm_true_residual",
    "residual_gap",
    "a_norm_error",
    "f_value",
    "local_orth",
    "norm_x",
    "backward_bound",
    "forward_bound",
    "assumption_lhs",
    "status",
]

SWEEP_COLUMNS = [
    "fmt_L",
    "fmt_R",
    "best_k",
    "relative_forward_error_Anorm",
    "relative_backward_error",
    "status",
]

MODES = ("none", "left", "right", "split", "saad-split")
STOP_RULES = ("none", "true_residual", "recursive_residual", "a_norm_min")
PRECONDS = ("trunc", "identity")


class ConfigError(Exception):
    """Configuration problem; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec
    mode: str = "left"
    precond: str = "trunc"
    fmt_s: str = "fp64"
    fmt_q: str = "fp64"
    fmt_z: str = "fp64"
    fmt_L: str = "fp64"  # saad-split / sweep axis names
    fmt_R: str = "fp64"
    maxiter: int = 2500
    stop_rule: str = "none"
    stop_tau: float = 1e-14
    stop_patience: int = 200
    bound_variant: str = "plot"
    sweep_formats: str = "fp64,fp32,fp16,bfloat16"
    output_path: str = "out.csv"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode: unknown value {self.mode!r} (choose from {MODES})")
        if self.precond not in PRECONDS:
            raise ConfigError(f"precond: unknown value {self.precond!r}")
        if self.stop_rule not in STOP_RULES:
            raise ConfigError(f"stop.rule: unknown value {self.stop_rule!r}")
        if self.bound_variant not in ("plot", "strict"):
            raise ConfigError(f"bound_variant: unknown value {self.bound_variant!r}")
        for key in ("fmt_s", "fmt_q", "fmt_z", "fmt_L", "fmt_R"):
            name = getattr(self, key)
            if name not in FORMATS:
                raise ConfigError(f"{key}: unknown float format {name!r}")
        if self.maxiter < 1:
            raise ConfigError("maxiter: must be >= 1")

    def to_flat(self) -> dict[str, str]:
        p = self.problem
        return {
            "problem.n": str(p.n),
            "problem.lambda_1": repr(p.lambda_1),
            "problem.lambda_n": repr(p.lambda_n),
            "problem.rho": repr(p.rho),
            "problem.trunc_index": str(p.trunc_index),
            "mode": self.mode,
            "precond": self.precond,
            "fmt_s": self.fmt_s,
            "fmt_q": self.fmt_q,
            "fmt_z": self.fmt_z,
            "fmt_L": self.fmt_L,
            "fmt_R": self.fmt_R,
            "maxiter": str(self.maxiter),
            "stop.rule": self.stop_rule,
            "stop.tau": repr(self.stop_tau),
            "stop.patience": str(self.stop_patience),
            "bound_variant": self.bound_variant,
            "sweep.formats": self.sweep_formats,
            "out": self.output_path,
        }

    @classmethod
    def from_flat(cls, flat: dict[str, str]) -> "ExperimentConfig":
        defaults = cls(problem=default_problem())
        base = defaults.to_flat()
        unknown = set(flat) - set(base)
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown config key")
        merged = {**base, **flat}
        problem = ProblemSpec(
            n=_parse_int(merged, "problem.n"),
            lambda_1=_parse_float(merged, "problem.lambda_1"),
            lambda_n=_parse_float(merged, "problem.lambda_n"),
            rho=_parse_float(merged, "problem.rho"),
            trunc_index=_parse_int(merged, "problem.trunc_index"),
        )
        return cls(
            problem=problem,
            mode=merged["mode"],
            precond=merged["precond"],
            fmt_s=merged["fmt_s"],
            fmt_q=merged["fmt_q"],
            fmt_z=merged["fmt_z"],
            fmt_L=merged["fmt_L"],
            fmt_R=merged["fmt_R"],
            maxiter=_parse_int(merged, "maxiter"),
            stop_rule=merged["stop.rule"],
            stop_tau=_parse_float(merged, "stop.tau"),
            stop_patience=_parse_int(merged, "stop.patience"),
            bound_variant=merged["bound_variant"],
            sweep_formats=merged["sweep.formats"],
            output_path=merged["out"],
        )


def default_problem() -> ProblemSpec:
    return ProblemSpec(n=85, lambda_1=1.0, lambda_n=1e5, rho=0.6, trunc_index=55)


_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")


def parse_config_text(text: str) -> dict[str, str]:
    """Flat `key = value` grammar: one pair per line, `#` comments."""
    flat: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"{key or raw.strip()!r}: invalid config key (line {lineno})")
        flat[key] = value.strip()
    return flat


def _parse_int(flat: dict[str, str], key: str) -> int:
    try:
        return int(flat[key])
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {flat[key]!r}") from None


def _parse_float(flat: dict[str, str], key: str) -> float:
    try:
        return float(flat[key])
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {flat[key]!r}") from None


def load_config(path: str | None, overrides: dict[str, str]) -> ExperimentConfig:
    flat: dict[str, str] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            flat = parse_config_text(fh.read())
    flat.update(overrides)
    return ExperimentConfig.from_flat(flat)


def _fmt_num(v: float | int) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _build_stop(cfg: ExperimentConfig) -> pcg.StoppingRule:
    if cfg.stop_rule == "true_residual":
        return pcg.TrueResidualBelow(cfg.stop_tau)
    if cfg.stop_rule == "recursive_residual":
        return pcg.RecursiveResidualBelow(cfg.stop_tau)
    if cfg.stop_rule == "a_norm_min":
        return pcg.ANormErrorMin(cfg.stop_patience)
    return pcg.NoStop()


@dataclass(frozen=True)
class ExperimentSetup:
    a: SpdMatrix
    b: np.ndarray
    m: SpdMatrix | None
    factor: LowerTriangular
    x_ref: np.ndarray
    norm_A: float
    norm_b: float
    norm_xref: float


def build_setup(cfg: ExperimentConfig) -> ExperimentSetup:
    a = build_matrix(cfg.problem)
    b = build_rhs(cfg.problem.n)
    if cfg.precond == "identity" or cfg.mode == "none":
        m = None
        factor = LowerTriangular.identity(cfg.problem.n)
    else:
        m = build_preconditioner(cfg.problem, a)
        factor = cholesky(m)
    x_ref = reference_solution(a, b)
    return ExperimentSetup(
        a=a,
        b=b,
        m=m,
        factor=factor,
        x_ref=x_ref,
        norm_A=spectral_norm(a),
        norm_b=float(np.sqrt(np.dot(b, b))),
        norm_xref=float(np.sqrt(np.dot(x_ref, x_ref))),
    )


def _bound_inputs(cfg: ExperimentConfig, setup: ExperimentSetup, trace: pcg.PcgTrace):
    """(BoundInputs, bound-mode string) for the run's bound overlays."""
    a = setup.a
    if setup.m is None:
        kappa_minv = 1.0
        norm_minv = 1.0
        kappa_pre = bounds.kappa_preconditioned(a, SpdMatrix.diagonal(np.ones(a.n)))
        bound_mode = "none" if cfg.mode == "none" else cfg.mode
    else:
        kappa_minv = float(eigvals_spd(setup.m)[-1] / eigvals_spd(setup.m)[0])
        norm_minv = float(1.0 / eigvals_spd(setup.m)[0])
        kappa_pre = bounds.kappa_preconditioned(a, setup.m)
        bound_mode = cfg.mode
    if cfg.mode == "saad-split":
        # Saad's variant applies L^-1 (fmt_L) and L^-T (fmt_R); assess
        # with the split-case table.
        bound_mode = "split"
        u_s = get_format(cfg.fmt_L).unit_roundoff
        u_q = get_format(cfg.fmt_R).unit_roundoff
        u_z = u_s
    else:
        u_s = get_format(cfg.fmt_s).unit_roundoff
        u_q = get_format(cfg.fmt_q).unit_roundoff
        u_z = get_format(cfg.fmt_z).unit_roundoff
    norms_x = [rec.norm_x for rec in trace.records if np.isfinite(rec.norm_x)]
    max_xratio = max(1.0, max(norms_x) / setup.norm_xref) if norms_x else 1.0
    inputs = bounds.BoundInputs(
        n=cfg.problem.n,
        u=FP64.unit_roundoff,
        u_s=u_s,
        u_q=u_q,
        u_z=u_z,
        kappa_A=float(eigvals_spd(a)[-1] / eigvals_spd(a)[0]),
        kappa_Minv=kappa_minv,
        kappa_precond=kappa_pre,
        norm_A=setup.norm_A,
        norm_Minv=norm_minv,
        norm_xref=setup.norm_xref,
        max_xratio=max_xratio,
    )
    return inputs, bound_mode


def run_experiment(cfg: ExperimentConfig) -> tuple[pcg.PcgTrace, ExperimentSetup]:
    setup = build_setup(cfg)
    x0 = np.zeros(cfg.problem.n)
    stop = _build_stop(cfg)
    if cfg.mode == "saad-split":
        trace = pcg.saad_split_run(
            setup.a,
            setup.b,
            x0,
            setup.factor,
            get_format(cfg.fmt_L),
            get_format(cfg.fmt_R),
            cfg.maxiter,
            stop,
        )
    else:
        scheme = pcg.PreconditionerScheme(
            mode=cfg.mode,
            factor=None if cfg.mode == "none" else setup.factor,
            fmt_s=get_format(cfg.fmt_s),
            fmt_q=get_format(cfg.fmt_q),
            fmt_z=get_format(cfg.fmt_z),
        )
        trace = pcg.pcg_run(setup.a, setup.b, x0, scheme, cfg.maxiter, stop)
    return trace, setup


def write_trace_csv(path: str, cfg: ExperimentConfig, trace: pcg.PcgTrace, setup: ExperimentSetup) -> None:
    inputs, bound_mode = _bound_inputs(cfg, setup, trace)
    lines = []
    for key, value in cfg.to_flat().items():
        lines.append(f"# {key} = {value}")
    lines.append(f"# norm_A = {repr(setup.norm_A)}")
    lines.append(f"# norm_xref = {repr(setup.norm_xref)}")
    lines.append(f"# norm_b = {repr(setup.norm_b)}")
    lines.append(",".join(CSV_COLUMNS))
    for rec in trace.records:
        row = [
            str(rec.k),
            _fmt_num(rec.alpha),
            _fmt_num(rec.beta),
            _fmt_num(rec.norm_rhat),
            _fmt_num(rec.norm_true_residual),
            _fmt_num(rec.residual_gap),
            _fmt_num(rec.a_norm_error),
            _fmt_num(rec.f_value),
            _fmt_num(rec.local_orth),
            _fmt_num(rec.norm_x),
            _fmt_num(bounds.backward_bound(inputs, rec.k, cfg.bound_variant)),
            _fmt_num(bounds.forward_bound(inputs, rec.k, cfg.bound_variant)),
            _fmt_num(bounds.assumption_lhs(inputs, bound_mode, rec.k)),
            rec.status,
        ]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_trace_csv_header(path: str) -> ExperimentConfig:
    """Recover the ExperimentConfig echoed in a CSV file's comments."""
    flat: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, value = body.split("=", 1)
            key = key.strip()
            if key in ("norm_A", "norm_xref", "norm_b"):
                continue
            flat[key] = value.strip()
    return ExperimentConfig.from_flat(flat)


def _exit_code(trace: pcg.PcgTrace) -> int:
    if trace.status in (pcg.BREAKDOWN_NONFINITE, pcg.BREAKDOWN_ZERO):
        return 2
    return 0


def cmd_run(cfg: ExperimentConfig) -> int:
    trace, setup = run_experiment(cfg)
    write_trace_csv(cfg.output_path, cfg, trace, setup)
    return _exit_code(trace)


def _min_true_residual(trace: pcg.PcgTrace) -> float:
    vals = [rec.norm_true_residual for rec in trace.records if np.isfinite(rec.norm_true_residual)]
    return min(vals) if vals else np.inf


def _sibling_path(path: str, tag: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}.{tag}{ext or '.csv'}"


def cmd_compare_saad(cfg: ExperimentConfig) -> int:
    """Matched Algorithm-2-split and Saad-split runs; prints the ratio
    of minimal true-residual norms (saad / split)."""
    split_cfg = replace(cfg, mode="split", output_path=_sibling_path(cfg.output_path, "split"))
    saad_cfg = replace(cfg, mode="saad-split", output_path=_sibling_path(cfg.output_path, "saad"))
    split_trace, split_setup = run_experiment(split_cfg)
    saad_trace, saad_setup = run_experiment(saad_cfg)
    write_trace_csv(split_cfg.output_path, split_cfg, split_trace, split_setup)
    write_trace_csv(saad_cfg.output_path, saad_cfg, saad_trace, saad_setup)
    ratio = _min_true_residual(saad_trace) / _min_true_residual(split_trace)
    print(f"min_true_residual_ratio_saad_over_split = {repr(float(ratio))}")
    return max(_exit_code(split_trace), _exit_code(saad_trace))


def _sweep_cell(cfg: ExperimentConfig, fmt_l: str, fmt_r: str) -> list[str]:
    cell_cfg = replace(
        cfg,
        mode="split",
        fmt_s=fmt_l,
        fmt_q=fmt_r,
        fmt_z=fmt_r,
        fmt_L=fmt_l,
        fmt_R=fmt_r,
        stop_rule="a_norm_min",
    )
    trace, setup = run_experiment(cell_cfg)
    best_k = trace.best_k if trace.best_k is not None else trace.argmin_a_norm_error()
    rec = trace.records[best_k]
    xref_anorm = a_norm(setup.a, setup.x_ref)
    fwd = rec.a_norm_error / xref_anorm
    bwd = rec.norm_true_residual / (setup.norm_A * rec.norm_x + setup.norm_b)
    return [fmt_l, fmt_r, str(best_k), _fmt_num(fwd), _fmt_num(bwd), trace.status]


def cmd_sweep(cfg: ExperimentConfig) -> int:
    names = [s for s in re.split(r"[,\s]+", cfg.sweep_formats.strip()) if s]
    for name in names:
        if name not in FORMATS:
            raise ConfigError(f"sweep.formats: unknown float format {name!r}")
    pairs = [(fl, fr) for fl in names for fr in names]
    threads = int(os.environ.get("KRYLOVMP_THREADS", "0")) or min(len(pairs), os.cpu_count() or 1)
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(lambda p: _sweep_cell(cfg, *p), pairs))
    rows.sort(key=lambda row: (row[0], row[1]))
    lines = [f"# {key} = {value}" for key, value in cfg.to_flat().items()]
    lines.append(",".join(SWEEP_COLUMNS))
    lines.extend(",".join(row) for row in rows)
    with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="krylovmp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare-saad", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--maxiter", type=int, default=None)
        p.add_argument("--mode", default=None)
        p.add_argument("--fmt-s", default=None)
        p.add_argument("--fmt-q", default=None)
        p.add_argument("--fmt-z", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides: dict[str, str] = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.maxiter is not None:
        overrides["maxiter"] = str(args.maxiter)
    if args.mode is not None:
        overrides["mode"] = args.mode
    for key, value in (("fmt_s", args.fmt_s), ("fmt_q", args.fmt_q), ("fmt_z", args.fmt_z)):
        if value is not None:
            overrides[key] = value
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "compare-saad":
            return cmd_compare_saad(cfg)
        return cmd_sweep(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
