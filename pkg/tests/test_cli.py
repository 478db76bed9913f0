import os
import subprocess
import sys

import numpy as np
import pytest

from fastsvd.cli import main
from fastsvd.fixedpoint import FixedFormat
from fastsvd.matrixio import MatrixParseError, format_matrix, parse_matrix, read_matrix

F16 = FixedFormat(16, 12)


def write(tmp_path, text, name="A.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_decompose_outputs(tmp_path):
    m = write(tmp_path, "2 2\n1 2\n0 1\n")
    out = tmp_path / "out"
    assert main(["decompose", str(m), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["Sigma.txt", "U.txt", "V.txt", "summary.txt", "trace.csv"]
    S = read_matrix(out / "Sigma.txt", FixedFormat(64, 40)).to_float()
    assert S[0, 0] == pytest.approx(1 + 2**0.5, abs=2**-10)
    assert "converged true" in (out / "summary.txt").read_text()
    assert (out / "trace.csv").read_text().startswith("sweep,offdiag_norm\n0,2\n")


def test_rerun_is_byte_identical(tmp_path):
    rng = np.random.Generator(np.random.PCG64(0))
    A = rng.uniform(-4, 4, (6, 6))
    m = write(tmp_path, "6 6\n" + "\n".join(" ".join(f"{v:.4f}" for v in r) for r in A) + "\n")
    for d in ("a", "b"):
        assert main(["decompose", str(m), "--out", str(tmp_path / d)]) == 0
    for name in ("U.txt", "Sigma.txt", "V.txt", "trace.csv", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize(
    "text",
    ["", "2\n1 2\n", "2 2\n1 2\n3\n", "2 2\n1 x\n3 4\n", "2 2\n1 2\n", "2 2\n1 2\n3 4\n5 6\n", "2 2\n1 2\n3 99\n"],
)
def test_bad_input_exits_1_without_outputs(tmp_path, text):
    m = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["decompose", str(m), "--out", str(out)]) == 1
    assert not out.exists() or not any(out.iterdir())


def test_parse_error_positions():
    with pytest.raises(MatrixParseError) as e:
        parse_matrix("2 2\n1 2\n3 abc\n", F16)
    assert (e.value.line, e.value.column) == (3, 3)


def test_matrix_text_roundtrip():
    M = parse_matrix("2 2\n1.5 -0.000244140625\n-8 7.999755859375\n", F16)
    assert parse_matrix(format_matrix(M), F16) == M or np.array_equal(parse_matrix(format_matrix(M), F16).raw, M.raw)
    W = FixedFormat(64, 62)
    raw = parse_matrix("1 1\n1.9999999999999999997\n", W)
    assert np.array_equal(parse_matrix(format_matrix(raw), W).raw, raw.raw)


def test_bad_config_and_usage_exit_1(tmp_path):
    m = write(tmp_path, "2 2\n1 2\n0 1\n")
    assert main(["decompose", str(m), "--bits", "8", "--frac-bits", "12", "--out", str(tmp_path)]) == 1
    assert main(["decompose", str(tmp_path / "missing.txt"), "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as e:
        main(["decompose", str(m), "--variant", "qr"])
    assert e.value.code == 1


def test_non_convergence_exits_2(tmp_path):
    rng = np.random.Generator(np.random.PCG64(1))
    A = rng.uniform(-2, 2, (8, 8))
    m = write(tmp_path, "8 8\n" + "\n".join(" ".join(f"{v:.3f}" for v in r) for r in A) + "\n")
    assert main(["decompose", str(m), "--sweeps", "1", "--out", str(tmp_path / "o")]) == 2
    assert "converged false" in (tmp_path / "o" / "summary.txt").read_text()


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FASTSVD_OUT", str(tmp_path / "env"))
    assert main(["complexity"]) == 0
    assert (tmp_path / "env" / "complexity.csv").exists()


def test_complexity_model_file(tmp_path):
    model = write(tmp_path, "delay.add = 10\n", "model.txt")
    assert main(["complexity", "--model", str(model), "--out", str(tmp_path)]) == 0
    assert "delay.step_1,25\n" in (tmp_path / "complexity.csv").read_text()
    bad = write(tmp_path, "delay.add = ten\n", "bad.txt")
    assert main(["complexity", "--model", str(bad), "--out", str(tmp_path / "x")]) == 1


def test_grid_and_rmsodn(tmp_path):
    assert main(["grid", "--tau-min", "-1", "--tau-max", "1", "--tau-step", "0.5", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "grid_erfhsvd.csv").read_text().splitlines()
    assert lines[0] == "tau1,tau2,D" and len(lines) == 26
    assert main(["grid", "--symmetric", "--variant", "frnsvd", "--tau-step", "1", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "grid_frnsvd.csv").read_text().splitlines()) == 22
    args = ["rmsodn", "--size", "8", "--trials", "3", "--sweeps", "4", "--out", str(tmp_path)]
    assert main(args + ["--variant", "erfhsvd", "--variant", "nsvd"]) == 0
    assert len((tmp_path / "rmsodn_nsvd.csv").read_text().splitlines()) == 6
    assert main(["rmsodn", "--trials", "0", "--out", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "fastsvd", "complexity", "--bits", "16", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        env={**os.environ},
    )
    assert r.returncode == 0 and "extrapolated" in r.stdout
