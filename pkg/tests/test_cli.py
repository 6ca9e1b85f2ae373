import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from matshrink.cli import main
from matshrink.model import read_matrix

FIX = Path(__file__).parent / "fixtures"
CONFIGS = Path(__file__).resolve().parents[1] / "src" / "matshrink" / "configs"


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def test_estimate_scalar_fixture():
    code, text = run("estimate", "--x", FIX / "x_scalar.csv", "--s", FIX / "s_scalar.csv", "--n", 2, "--k0", 0.5)
    assert code == 0
    assert text.split("# mean\n")[1].strip() == "1.5"
    assert "# k0 = 0.5" in text and "# case = m>=p" in text


def test_estimate_zero_x(tmp_path):
    (tmp_path / "x.csv").write_text("0,0,0\n0,0,0\n")
    code, text = run("estimate", "--x", tmp_path / "x.csv", "--s", FIX / "s_3x3.csv", "--n", 12, "--k0", 0.4)
    assert code == 0 and set(text.split("# mean\n")[1].split()) == {"0.0,0.0,0.0"}


@pytest.mark.parametrize("label", ["GB", "G1", "G2", "EM"])
def test_estimate_defaults_write_files(tmp_path, label):
    code, text = run("estimate", "--x", FIX / "x_3x6.csv", "--s", FIX / "s_6x6.csv", "--n", 12,
                     "--estimator", label, "--out-mean", tmp_path / "m.csv", "--out-cov", tmp_path / "c.csv")
    assert code == 0 and "# case = p>m" in text
    assert read_matrix(tmp_path / "m.csv").shape == (3, 6)
    assert np.all(np.linalg.eigvalsh(read_matrix(tmp_path / "c.csv")) > 0)


def test_estimate_explicit_params():
    code, text = run("estimate", "--x", FIX / "x_6x3.csv", "--s", FIX / "s_3x3.csv", "--n", 12,
                     "--estimator", "G2", "--alpha", 0.3, "--beta", 0.6)
    assert code == 0 and "alpha = 0.3" in text and "# covariance" in text
    code, text = run("estimate", "--x", FIX / "x_6x3.csv", "--s", FIX / "s_3x3.csv", "--n", 12,
                     "--a", 2, "--c", 1)
    assert code == 0 and "b = -7" in text


@pytest.mark.parametrize("x,s", [("malformed.csv", "s_3x3.csv"), ("x_6x3.csv", "not_spd.csv"),
                                 ("x_6x3.csv", "s_6x6.csv"), ("missing.csv", "s_3x3.csv")])
def test_estimate_validation_errors(x, s, capsys):
    code, _ = run("estimate", "--x", FIX / x, "--s", FIX / s, "--n", 12)
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_estimate_numerical_failure(tmp_path):
    # rank-deficient X: the Efron-Morris F^{-1} term is undefined
    (tmp_path / "x.csv").write_text("1,0,0,0,0\n" * 2)
    (tmp_path / "s.csv").write_text("\n".join(",".join("1" if i == j else "0" for j in range(5)) for i in range(5)))
    code, _ = run("estimate", "--x", tmp_path / "x.csv", "--s", tmp_path / "s.csv", "--n", 12, "--estimator", "EM")
    assert code == 2


def test_unknown_flags_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "--x", "a", "--s", "b", "--n", "2", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["oracle", "--F", "1", "--a", "1", "--b", "1", "--c", "1", "--m", "1", "--p", "1", "--n", "3"])
    assert exc.value.code == 1  # --seed is required


def test_check_defaults_gb():
    code, text = run("check", "--p", 10, "--n", 25, "--m", 5, "--defaults", "GB")
    assert code == 0
    assert "a = 5.000000" in text and "c = 13.117647" in text and "k0 = 0.235294" in text
    kl = [l for l in text.splitlines() if l.startswith(("KL", "GB KL"))]
    assert kl and all(l.endswith("PASS") for l in kl)


def test_check_prop41_note():
    code, text = run("check", "--p", 4, "--n", 10, "--m", 6, "--label", "G2", "--alpha", 0.5, "--beta", 1.0)
    assert code == 0 and "no Stein-loss dominance possible" in text


def test_check_not_applicable():
    code, text = run("check", "--p", 5, "--n", 10, "--m", 5, "--label", "G1", "--alpha", 0.5, "--beta", 1,
                     "--only", "matrix")
    assert code == 0 and "NOT APPLICABLE" in text
    code, _ = run("check", "--p", 5, "--n", 10, "--m", 5, "--defaults", "G1")
    assert code == 1
    code, _ = run("check", "--p", 5, "--n", 4, "--m", 5, "--defaults", "G2")
    assert code == 1


def test_oracle_closed_form_and_determinism(tmp_path):
    args = ["oracle", "--F", "5,2,0.5", "--a", 2, "--b", -7, "--c", 1, "--m", 3, "--p", 6, "--n", 12,
            "--samples", 20000, "--seed", 3]
    code, text = run(*args)
    assert code == 0 and "closed_form_b = True" in text and "diagonality" in text
    body = text.split("# lambda_mean\n")[1].split("# se\n")
    mean = np.array([[float(v) for v in r.split(",")] for r in body[0].split()])
    se = np.array([[float(v) for v in r.split(",")] for r in body[1].split("#")[0].split()])
    k0 = (2 - 1 + 6 + 3 - 1) / (2 + 3 + 6 + 3)
    assert np.all(np.abs(mean - k0 * np.eye(3)) <= 3 * se + 1e-12)
    run(*args, "--out", tmp_path / "a.txt")
    run(*args, "--out", tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_oracle_low_ess_warning(capsys):
    code, text = run("oracle", "--F", "10000", "--a", 2, "--b", 400, "--c", 0.5, "--m", 1, "--p", 1,
                     "--n", 5, "--samples", 5000, "--seed", 1)
    assert code == 0 and "# warning" in text
    assert "WARNING" in capsys.readouterr().err


def test_oracle_bad_f():
    code, _ = run("oracle", "--F", "1,x", "--a", 2, "--b", 1, "--c", 0.5, "--m", 1, "--p", 2,
                  "--n", 5, "--seed", 1)
    assert code == 1


def test_simulate_smoke_and_determinism(tmp_path):
    smoke = CONFIGS / "smoke.yaml"
    assert run("simulate", smoke, "--out", tmp_path / "a.csv")[0] == 0
    assert run("simulate", smoke, "--out", tmp_path / "b.csv", "--jobs", 2)[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.manifest.txt").exists()


def test_simulate_flag_overrides(tmp_path):
    run("simulate", CONFIGS / "smoke.yaml", "--out", tmp_path / "a.csv", "--seed", 99, "--reps", 3)
    row = (tmp_path / "a.csv").read_text().splitlines()[1].split(",")
    assert row[-2:] == ["3", "99"]


def test_simulate_bad_config(capsys):
    code, _ = run("simulate", FIX / "bad_config.yaml", "--out", "/tmp/never.csv")
    assert code == 1
    err = capsys.readouterr().err
    for key in ("dims[0]", "s0[0]", "cov_kinds[0]", "reps", "seed"):
        assert key in err


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "matshrink", "check", "--p", "10", "--n", "25", "--m", "20",
                        "--defaults", "GB"], capture_output=True, text=True)
    assert r.returncode == 0 and "a = -4.347826" in r.stdout
