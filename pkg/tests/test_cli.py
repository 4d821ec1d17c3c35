import json
import subprocess
import sys
from pathlib import Path

import pytest

from afakit import fileio
from afakit.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestConstruct:
    def test_count_file(self, tmp_path, capsys):
        out = tmp_path / "c.afa"
        code, _, _ = run(capsys, "construct", "count", "--m", 5, "--t", 3, "--out", out)
        assert code == 0
        M = fileio.load(out)
        assert M.n == 3 and M.kind == "afa"
        assert out.read_text() == (GOLDEN / "count_m5_t3.afa").read_text()

    def test_nfa2afa_from_file(self, tmp_path, capsys):
        nfa = tmp_path / "end3.nfa"
        assert run(capsys, "construct", "end", "--n", 3, "--out", nfa)[0] == 0
        code, out, _ = run(capsys, "construct", "nfa2afa", "--in", nfa, "--t", 10)
        assert code == 0
        M = fileio.loads(out)
        assert M.n == 5

    def test_mod2k_is_real(self, capsys):
        code, out, _ = run(capsys, "construct", "mod2k", "--k", 2)
        assert code == 0
        M = fileio.loads(out)
        assert M.n == 3 and not M.regime.is_exact

    @pytest.mark.parametrize("argv", [
        ["construct", "count"],
        ["construct", "count", "--m", "-1"],
        ["construct", "modp", "--p", "4", "--t", "10"],
        ["construct", "modp", "--p", "5", "--t", "1"],
        ["construct", "nfa2afa"],
        ["construct", "pfa2afa", "--in", "/nonexistent/file"],
    ])
    def test_precondition_errors(self, argv, capsys):
        code, _, err = run(capsys, *argv)
        assert code == 2
        assert err.startswith("error:")

    def test_argparse_errors_exit_2(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["construct", "nosuch"])
        assert info.value.code == 2


class TestEval:
    @pytest.fixture
    def count_file(self, tmp_path, capsys):
        path = tmp_path / "c.afa"
        run(capsys, "construct", "count", "--m", 5, "--t", 3, "--out", path)
        return path

    def test_exact_values(self, count_file, capsys):
        assert run(capsys, "eval", count_file, "aaaaa")[1] == "1\n"
        assert run(capsys, "eval", count_file, "aaaaaa")[1] == "1/7\n"

    def test_end_nfa_afa(self, tmp_path, capsys):
        path = tmp_path / "e.afa"
        run(capsys, "construct", "nfa2afa", "--family", "end", "--n", 2, "--t", 1, "--out", path)
        assert run(capsys, "eval", path, "01")[1] == "0\n"
        assert run(capsys, "eval", path, "10")[1] == "2/3\n"

    def test_real_decimal(self, tmp_path, capsys):
        path = tmp_path / "p.afa"
        run(capsys, "construct", "modp", "--p", 3, "--t", 10, "--out", path)
        code, out, _ = run(capsys, "eval", path, "a", "--places", 6)
        assert code == 0 and out == "0.030636\n"

    def test_nfa_prints_path_count(self, tmp_path, capsys):
        path = tmp_path / "m.nfa"
        run(capsys, "construct", "modxor", "--k", 1, "--out", path)
        assert run(capsys, "eval", path, "10")[1] == "1\n"

    def test_alphabet_error(self, count_file, capsys):
        code, _, err = run(capsys, "eval", count_file, "ab")
        assert code == 2 and "not in alphabet" in err

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.afa"
        bad.write_text("afakit-automaton 1\nkind afa\n")
        code, _, err = run(capsys, "eval", bad, "")
        assert code == 2 and "missing 'end'" in err


class TestVerify:
    def test_count_pass(self, capsys):
        code, out, _ = run(capsys, "verify", "count", "--m", 5, "--t", 3, "--mode", "neg-one-sided",
                           "--eps", "1/7", "--max-len", 20)
        assert code == 0
        assert out.rstrip().endswith("PASS")

    def test_count_fail_prints_witness(self, capsys):
        code, out, _ = run(capsys, "verify", "count", "--m", 5, "--t", 3, "--mode", "zero", "--max-len", 8)
        assert code == 1
        assert "FAIL" in out and "witness ''" in out

    def test_modp_pass(self, capsys):
        code, out, _ = run(capsys, "verify", "modp", "--p", 5, "--t", 100, "--max-len", 25)
        assert code == 0
        line = next(l for l in out.splitlines() if l.startswith("max non-member prob"))
        assert float(line.split()[3]) < 0.0137638

    def test_modxor_zero_error(self, tmp_path, capsys):
        report = tmp_path / "r.json"
        code, out, _ = run(capsys, "verify", "nfa-zero", "--family", "modxor", "--k", 2,
                           "--max-len", 12, "--report", report)
        assert code == 0 and out.rstrip().endswith("PASS")
        doc = json.loads(report.read_text())
        assert doc["summary"]["verdict"] == "PASS"
        assert {r["paths"] for r in doc["rows"] if r["oracle"] == "member"} == {1}

    def test_nfa_zero_path_promise(self, capsys):
        code, out, _ = run(capsys, "verify", "nfa-zero", "--family", "end", "--n", 2,
                           "--paths", 2, "--max-len", 4)
        assert code == 1
        assert "path-count promise broken" in out

    def test_mod2k_promise(self, capsys):
        assert run(capsys, "verify", "mod2k", "--k", 3, "--promise-bound", 10)[0] == 0
        assert run(capsys, "verify", "mod2k", "--k", 1)[0] == 0

    def test_batch(self, capsys):
        code, out, _ = run(capsys, "verify", "nfa-zero", "--family", "end", "--n", 4,
                           "--max-len", 10, "--batch")
        assert code == 0 and out.rstrip().endswith("PASS")

    def test_file_target_needs_oracle(self, tmp_path, capsys):
        path = tmp_path / "c.afa"
        run(capsys, "construct", "count", "--m", 2, "--out", path)
        assert run(capsys, "verify", "file", "--in", path, "--max-len", 5, "--mode", "zero")[0] == 2
        code, _, _ = run(capsys, "verify", "file", "--in", path, "--oracle", "count", "--m", 2,
                         "--max-len", 5, "--mode", "neg-one-sided", "--eps", "1/3")
        assert code == 0

    def test_exact_machine_rejects_tolerance(self, capsys):
        code, _, err = run(capsys, "verify", "count", "--m", 2, "--tol", "1e-9")
        assert code == 2


class TestSweepAndDiff:
    def test_golden_csv(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        assert run(capsys, "sweep", "count", "--m", 2, "--t", 1, "--max-len", 5, "--out", out)[0] == 0
        assert run(capsys, "report-diff", out, GOLDEN / "count_m2_t1_L5.csv")[0] == 0

    def test_golden_json(self, tmp_path, capsys):
        out = tmp_path / "s.json"
        run(capsys, "sweep", "nfa", "--family", "end", "--n", 2, "--t", 1, "--max-len", 3, "--out", out)
        assert out.read_text() == (GOLDEN / "end2_t1_L3.json").read_text()

    def test_diff_detects_change(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        run(capsys, "sweep", "count", "--m", 2, "--t", 2, "--max-len", 5, "--out", out)
        code, text, _ = run(capsys, "report-diff", out, GOLDEN / "count_m2_t1_L5.csv")
        assert code == 1 and "line 2 differs" in text

    def test_diff_missing_file(self, capsys):
        assert run(capsys, "report-diff", "/nonexistent/a", "/nonexistent/b")[0] == 2

    def test_real_sweep_is_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "sweep", "modp", "--p", 7, "--t", 30, "--max-len", 14, "--out", a)
        run(capsys, "sweep", "modp", "--p", 7, "--t", 30, "--max-len", 14, "--out", b, "--jobs", 2)
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().endswith("\n")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "afakit.cli", "eval", str(GOLDEN / "count_m5_t3.afa"), "aaaaaaa"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout == "1/13\n"


def test_precision_env_var():
    import os

    env = dict(os.environ, AFAKIT_PRECISION="256")
    proc = subprocess.run([sys.executable, "-m", "afakit.cli", "construct", "mod2k", "--k", "2"],
                          capture_output=True, text=True, env=env, check=False)
    assert proc.returncode == 0
    assert "regime real 256" in proc.stdout
