import subprocess
import sys

import pytest

from sct.cli import CSV_COLUMNS, ConfigError, UsageError, main, parse_run_config, read_pvalues, read_results_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestDist:
    def test_cauchy_quantile(self, capsys):
        code, out, _ = run(capsys, "dist", "quantile", "--alpha", "1", "--beta", "0", "--p", "0.975")
        assert code == 0
        assert out.strip() == "12.7062047362"

    def test_cauchy_cdf(self, capsys):
        code, out, _ = run(capsys, "dist", "cdf", "--alpha", "1", "--beta", "0", "--x", "1")
        assert (code, out.strip()) == (0, "0.75")

    def test_pdf_scaled(self, capsys):
        code, out, _ = run(capsys, "dist", "pdf", "--alpha", "2", "--beta", "0", "--tau", "2", "--x", "0")
        # N(0, 8) density at 0
        assert code == 0 and float(out) == pytest.approx(1 / (2 * 3.141592653589793**0.5 * 2), rel=1e-11)

    def test_bad_alpha(self, capsys):
        code, _, err = run(capsys, "dist", "cdf", "--alpha", "3", "--beta", "0", "--x", "1")
        assert code == 1 and "alpha" in err

    def test_missing_point(self, capsys):
        assert run(capsys, "dist", "quantile", "--alpha", "1.5", "--beta", "0")[0] == 1
        assert run(capsys, "dist", "quantile", "--alpha", "1.5", "--beta", "0", "--p", "1")[0] == 1

    def test_argparse_errors_exit_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["dist", "median", "--alpha", "1", "--beta", "0"])
        assert exc.value.code == 1


class TestCombine:
    def parse(self, out):
        return dict(line.split("\t") for line in out.strip().splitlines())

    def test_medians(self, tmp_path, capsys):
        path = write(tmp_path, "p.txt", "0.5\n" * 40)
        code, out, _ = run(capsys, "combine", path, "--alpha", "1", "--beta", "0")
        fields = self.parse(out)
        assert code == 0
        assert float(fields["statistic"]) == 0.0
        assert fields["decision"] == "accept"
        assert float(fields["cutoff"]) == pytest.approx(6.31375151468, rel=1e-11)

    def test_single_pvalue(self, tmp_path, capsys):
        path = write(tmp_path, "p.txt", "# one test\n0.01\n")
        code, out, _ = run(capsys, "combine", path, "--alpha", "1.5", "--beta", "0.6")
        fields = self.parse(out)
        assert code == 0
        assert float(fields["combined_p"]) == pytest.approx(0.01, rel=1e-7)
        assert fields["decision"] == "reject"

    def test_weights_column_and_file_agree(self, tmp_path, capsys):
        inline = write(tmp_path, "a.txt", "0.01 2\n0.2 3\n0.9 5\n")
        plain = write(tmp_path, "b.txt", "0.01\n0.2\n0.9\n")
        weights = write(tmp_path, "w.txt", "0.2\n0.3\n0.5\n")
        _, out1, _ = run(capsys, "combine", inline, "--alpha", "1.5", "--beta", "1")
        _, out2, _ = run(capsys, "combine", plain, "--weights", weights, "--alpha", "1.5", "--beta", "1")
        assert out1 == out2
        assert float(self.parse(out1)["statistic"]) == pytest.approx(1.9838289307449695, rel=1e-8)

    def test_preset(self, tmp_path, capsys):
        path = write(tmp_path, "p.txt", "0.3\n0.4\n")
        code, out, _ = run(capsys, "combine", path, "--preset", "weak-dep")
        assert code == 0 and "statistic" in out

    def test_malformed_line(self, tmp_path, capsys):
        path = write(tmp_path, "p.txt", "0.1\n0.2\nabc\n")
        code, _, err = run(capsys, "combine", path, "--alpha", "1", "--beta", "0")
        assert code == 1
        assert ":3:" in err

    @pytest.mark.parametrize("text", ["1.5\n", "", "0.1 1 2\n", "0.1 1\n0.2\n", "0.1 -1\n"])
    def test_invalid_inputs(self, tmp_path, capsys, text):
        path = write(tmp_path, "p.txt", text)
        assert run(capsys, "combine", path, "--alpha", "1", "--beta", "0")[0] == 1

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "combine", str(tmp_path / "nope"), "--alpha", "1", "--beta", "0")[0] == 1

    def test_needs_law(self, tmp_path, capsys):
        path = write(tmp_path, "p.txt", "0.1\n")
        assert run(capsys, "combine", path)[0] == 1

    def test_weights_normalized(self, tmp_path):
        p, w = read_pvalues(write(tmp_path, "p.txt", "0.1 1\n0.2 3\n"))
        assert list(w) == [0.25, 0.75]


class TestConfig:
    def test_defaults(self):
        cfg = parse_run_config("").simulation
        assert (cfg.n, cfg.reps, cfg.level) == (40, 1000, 0.05)
        assert cfg.truncation == (1e-6, 1 - 1e-6)

    def test_full(self):
        text = """
n: 20
reps: 10
level: 0.1
seed: 3
threads: 2
models:
  - {type: ar1, rho: 0.4}
  - {type: independent}
alphas: [0.5, 1.5]
betas: [0.0]
include_cct: false
include_stouffer: true
include_fisher: true
include_bonferroni: true
alternative: {gamma: 0.3, r: 0.5, sign_rule: random}
truncation: {lo: 1.0e-5, hi: 0.99999}
output_dir: out
"""
        run_cfg = parse_run_config(text)
        cfg = run_cfg.simulation
        assert cfg.n == 20 and cfg.models[0].rho == 0.4
        assert cfg.alternative.sign_rule == "random"
        assert cfg.truncation == (1e-5, 0.99999)
        assert str(run_cfg.output_dir) == "out"
        assert [m.name for m in cfg.methods()] == ["sct", "sct", "stouffer", "fisher", "bonferroni"]

    @pytest.mark.parametrize(
        "text",
        [
            "bogus: 1\n",
            "models:\n  - {type: ar1, rho: 0.4, extra: 1}\n",
            "alternative: {gamma: 0.3, shape: 2}\n",
            "models:\n  - {rho: 0.4}\n",
            "models:\n  - {type: ar1, rho: 1.5}\n",
            "reps: 0\n",
            "truncation: {lo: 0.5, hi: 0.1}\n",
            "- a list\n",
            "n: [unclosed\n",
        ],
    )
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_run_config(text)

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="bogus"):
            parse_run_config("bogus: 1\n")


CONFIG = """
reps: 60
seed: 5
alphas: [1.5]
betas: [0.0, 1.0]
models:
  - {type: exchangeable, rho: 0.4}
  - {type: independent}
"""


class TestSimulate:
    def test_csv_schema_and_determinism(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.yaml", CONFIG)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(capsys, "simulate", "--config", cfg, "--threads", "1", "--out", str(a))[0] == 0
        assert run(capsys, "simulate", "--config", cfg, "--threads", "8", "--out", str(b))[0] == 0
        assert a.read_bytes() == b.read_bytes()
        raw = a.read_bytes()
        assert b"\r" not in raw
        rows = read_results_csv(a)
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == 2 * 4 * 3
        for r in rows:
            assert r["metric"] in ("size", "raw_power", "adj_power")
            assert 0.0 <= float(r["value"]) <= 1.0
            assert len(r["value"].split(".")[1]) == 6
        assert rows[0]["model"] == "exchangeable" and rows[0]["rho"] == "0.4"
        assert {r["alpha"] for r in rows if r["method"] == "cct"} == {""}

    def test_overrides(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.yaml", CONFIG)
        out = tmp_path / "o.csv"
        run(capsys, "simulate", "--config", cfg, "--seed", "9", "--reps", "20", "--metric", "size", "--out", str(out))
        rows = read_results_csv(out)
        assert {r["seed"] for r in rows} == {"9"}
        assert {r["reps"] for r in rows} == {"20"}
        assert {r["metric"] for r in rows} == {"size"}

    def test_default_output_dir(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.yaml", CONFIG + f"output_dir: {tmp_path / 'res'}\n")
        assert run(capsys, "simulate", "--config", cfg, "--reps", "5")[0] == 0
        assert (tmp_path / "res" / "results.csv").exists()

    def test_bad_config(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.yaml", "colour: red\n")
        code, _, err = run(capsys, "simulate", "--config", cfg)
        assert code == 1 and "colour" in err

    def test_bad_threads(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--threads", "0"])
        assert exc.value.code == 1


class TestFigures:
    def test_from_csv(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.yaml", CONFIG)
        csv_path = tmp_path / "r.csv"
        run(capsys, "simulate", "--config", cfg, "--reps", "20", "--out", str(csv_path))
        code, out, _ = run(capsys, "figures", "--csv", str(csv_path), "--out-dir", str(tmp_path / "figs"))
        assert code == 0
        svgs = sorted((tmp_path / "figs").glob("*.svg"))
        assert [p.name for p in svgs] == ["figure_exchangeable_rho0.4.svg", "figure_independent_rho0.svg"]
        first = svgs[0].read_bytes()
        assert first.startswith(b"<?xml") and b"<svg" in first
        run(capsys, "figures", "--csv", str(csv_path), "--out-dir", str(tmp_path / "figs"))
        assert svgs[0].read_bytes() == first

    def test_simulate_then_render(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.yaml", CONFIG)
        code, _, _ = run(capsys, "figures", "--config", cfg, "--reps", "10", "--out-dir", str(tmp_path / "f"))
        assert code == 0
        assert (tmp_path / "f" / "results.csv").exists()
        assert len(list((tmp_path / "f").glob("*.svg"))) == 2

    def test_wrong_csv(self, tmp_path, capsys):
        path = write(tmp_path, "x.csv", "a,b\n1,2\n")
        assert run(capsys, "figures", "--csv", path)[0] == 1


class TestVerify:
    def test_selected_checks(self, capsys):
        code, out, _ = run(capsys, "verify", "normalizer", "lemma_g", "--quick")
        lines = [line.split("\t") for line in out.strip().splitlines()]
        assert [line[0] for line in lines] == ["normalizer", "lemma_g"]
        assert all(line[2] == "pass" for line in lines)
        assert code == 0

    def test_failing_check_exit_code(self, capsys):
        code, out, _ = run(capsys, "verify", "lemma_gtilde", "--quick")
        assert out.split("\t")[2].strip() == "FAIL"
        assert code == 2

    def test_unknown_check(self, capsys):
        assert run(capsys, "verify", "lemma_z")[0] == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sct", "dist", "cdf", "--alpha", "1", "--beta", "0", "--x", "0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "0.5"


def test_usage_error_type():
    assert issubclass(ConfigError, UsageError)
