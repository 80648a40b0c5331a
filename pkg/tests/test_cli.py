"""Tests for config parsing, CSV schema and determinism, exit codes,
and the three subcommands."""

import numpy as np
import pytest

from krylovmp import cli


def write_cfg(tmp_path, text):
    p = tmp_path / "cfg.txt"
    p.write_text(text)
    return str(p)


class TestConfigGrammar:
    def test_basic_parse(self):
        flat = cli.parse_config_text("a.b = 1\n# comment\nkey=value # trailing\n\n")
        assert flat == {"a.b": "1", "key": "value"}

    def test_whitespace_tolerant(self):
        flat = cli.parse_config_text("  problem.n   =   85  ")
        assert flat == {"problem.n": "85"}

    def test_rejects_bad_line(self):
        with pytest.raises(cli.ConfigError, match="line 1"):
            cli.parse_config_text("just some words")

    def test_rejects_bad_key(self):
        with pytest.raises(cli.ConfigError, match="9bad"):
            cli.parse_config_text("9bad = 1")

    def test_unknown_key_named(self):
        with pytest.raises(cli.ConfigError, match="problem.shape"):
            cli.ExperimentConfig.from_flat({"problem.shape": "3"})

    def test_bad_value_named(self):
        with pytest.raises(cli.ConfigError, match="maxiter"):
            cli.ExperimentConfig.from_flat({"maxiter": "many"})

    def test_unknown_format_named(self):
        with pytest.raises(cli.ConfigError, match="fmt_s"):
            cli.ExperimentConfig.from_flat({"fmt_s": "fp8"})

    def test_defaults(self):
        cfg = cli.ExperimentConfig.from_flat({})
        assert cfg.problem == cli.default_problem()
        assert cfg.mode == "left" and cfg.maxiter == 2500
        assert cfg.stop_patience == 200

    def test_flat_roundtrip(self):
        cfg = cli.ExperimentConfig.from_flat(
            {"mode": "split", "fmt_s": "fp16", "problem.rho": "0.25", "stop.tau": "1e-9"}
        )
        assert cli.ExperimentConfig.from_flat(cfg.to_flat()) == cfg


class TestRun:
    def test_schema_and_roundtrip(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = cli.ExperimentConfig(
            problem=cli.default_problem(), maxiter=50, output_path=str(out)
        )
        assert cli.cmd_run(cfg) == 0
        lines = out.read_text().splitlines()
        header = next(l for l in lines if not l.startswith("#"))
        assert header == ",".join(cli.CSV_COLUMNS)
        assert cli.parse_trace_csv_header(str(out)) == cfg
        # one row per iteration incl. the k = 0 record
        rows = [l for l in lines if not l.startswith("#")][1:]
        assert len(rows) == 51
        assert rows[0].startswith("0,nan,nan,")

    def test_header_norm_comments(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = cli.ExperimentConfig(problem=cli.default_problem(), maxiter=5, output_path=str(out))
        cli.cmd_run(cfg)
        text = out.read_text()
        for key in ("# norm_A = ", "# norm_xref = ", "# norm_b = "):
            assert key in text

    def test_byte_determinism(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = cli.ExperimentConfig(problem=cli.default_problem(), maxiter=40, output_path=str(out))
        cli.cmd_run(cfg)
        first = out.read_bytes()
        cli.cmd_run(cfg)
        assert out.read_bytes() == first

    def test_floats_roundtrip_binary64(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = cli.ExperimentConfig(problem=cli.default_problem(), maxiter=20, output_path=str(out))
        cli.cmd_run(cfg)
        rows = [l for l in out.read_text().splitlines() if not l.startswith("#")][1:]
        for row in rows:
            vals = row.split(",")
            for v in vals[1:-1]:
                x = float(v)  # shortest round-trip decimal: parse-repr identity
                assert repr(x) == v

    def test_maxiter_one_no_stop(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = cli.ExperimentConfig(problem=cli.default_problem(), maxiter=1, output_path=str(out))
        assert cli.cmd_run(cfg) == 0
        rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(rows) == 3  # header + k=0 + k=1

    def test_fp16_breakdown_exit_code(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = cli.ExperimentConfig(
            problem=cli.default_problem(), fmt_s="fp16", maxiter=2500, output_path=str(out)
        )
        assert cli.cmd_run(cfg) == 2
        rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert rows[-1].endswith("Breakdown(NonFinite)")

    def test_exit_codes_via_main(self, tmp_path):
        out = tmp_path / "m.csv"
        rc = cli.main(["run", "--out", str(out), "--maxiter", "10"])
        assert rc == 0 and out.exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfgfile = write_cfg(tmp_path, "maxiter = banana\n")
        rc = cli.main(["run", "--config", cfgfile, "--out", str(tmp_path / "x.csv")])
        assert rc == 1
        assert "maxiter" in capsys.readouterr().err

    def test_cli_overrides(self, tmp_path):
        cfgfile = write_cfg(tmp_path, "mode = left\nmaxiter = 500\n")
        out = tmp_path / "o.csv"
        rc = cli.main(
            ["run", "--config", cfgfile, "--out", str(out), "--maxiter", "5", "--mode", "split", "--fmt-s", "fp32"]
        )
        assert rc == 0
        cfg = cli.parse_trace_csv_header(str(out))
        assert cfg.maxiter == 5 and cfg.mode == "split" and cfg.fmt_s == "fp32"


class TestCompareSaad:
    def test_identity_ratio_is_one(self, tmp_path, capsys):
        cfg = cli.ExperimentConfig(
            problem=cli.default_problem(),
            precond="identity",
            maxiter=100,
            output_path=str(tmp_path / "cmp.csv"),
        )
        rc = cli.cmd_compare_saad(cfg)
        assert rc in (0, 2)
        line = capsys.readouterr().out.strip()
        ratio = float(line.split("=")[1])
        assert ratio == 1.0  # bitwise-identical runs
        assert (tmp_path / "cmp.split.csv").exists()
        assert (tmp_path / "cmp.saad.csv").exists()

    def test_fp64_ratio_moderate(self, tmp_path, capsys):
        from dataclasses import replace

        prob = replace(cli.default_problem(), trunc_index=65)
        cfg = cli.ExperimentConfig(problem=prob, maxiter=2500, output_path=str(tmp_path / "c.csv"))
        cli.cmd_compare_saad(cfg)
        ratio = float(capsys.readouterr().out.strip().split("=")[1])
        assert 0.1 <= ratio <= 10.0


class TestSweep:
    def test_single_format_one_row(self, tmp_path):
        out = tmp_path / "sweep.csv"
        cfg = cli.ExperimentConfig(
            problem=cli.default_problem(),
            sweep_formats="fp64",
            maxiter=600,
            output_path=str(out),
        )
        assert cli.cmd_sweep(cfg) == 0
        rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert rows[0] == ",".join(cli.SWEEP_COLUMNS)
        assert len(rows) == 2
        assert rows[1].startswith("fp64,fp64,")

    def test_rows_sorted_and_deterministic(self, tmp_path, monkeypatch):
        out = tmp_path / "sweep.csv"
        cfg = cli.ExperimentConfig(
            problem=cli.default_problem(),
            sweep_formats="fp32,fp64",
            maxiter=600,
            output_path=str(out),
        )
        cli.cmd_sweep(cfg)
        first = out.read_bytes()
        names = [l.split(",")[:2] for l in out.read_text().splitlines() if "," in l][1:]
        assert names == sorted(names)
        monkeypatch.setenv("KRYLOVMP_THREADS", "1")  # different parallelism, same bytes
        cli.cmd_sweep(cfg)
        assert out.read_bytes() == first

    def test_unknown_sweep_format(self, tmp_path):
        cfg = cli.ExperimentConfig(
            problem=cli.default_problem(),
            sweep_formats="fp64,tf32",
            output_path=str(tmp_path / "s.csv"),
        )
        with pytest.raises(cli.ConfigError, match="tf32"):
            cli.cmd_sweep(cfg)


class TestBoundColumns:
    def test_backward_forward_ratio(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = cli.ExperimentConfig(problem=cli.default_problem(), maxiter=10, output_path=str(out))
        cli.cmd_run(cfg)
        rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
        idx_b = cli.CSV_COLUMNS.index("backward_bound")
        idx_f = cli.CSV_COLUMNS.index("forward_bound")
        for row in rows:
            b, f = float(row[idx_b]), float(row[idx_f])
            assert f / b == pytest.approx(np.sqrt(1e5), rel=1e-12)
