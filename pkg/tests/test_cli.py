import filecmp
import subprocess
import sys
from pathlib import Path

import pytest

from rcbar.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
REFERENCE = str(CONFIGS / "reference.yaml")
NOISELESS = str(CONFIGS / "noiseless.yaml")


def test_validate_exit_codes(capsys, tmp_path):
    assert main(["validate", REFERENCE]) == EXIT_OK
    assert "H.4 PASS" in capsys.readouterr().out
    assert main(["validate", str(CONFIGS / "explosive.yaml")]) == EXIT_FAIL
    assert "H.1 FAIL" in capsys.readouterr().out
    bad = tmp_path / "bad.yaml"
    bad.write_text("coeff: {}\n")
    assert main(["validate", str(bad)]) == EXIT_USAGE
    assert "bad.yaml:1:" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.yaml")]) == EXIT_USAGE


def test_simulate_writes_reproducible_csv(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", REFERENCE, "--gens", "2", "--seed", "7", "--out", str(a)]) == EXIT_OK
    assert main(["simulate", REFERENCE, "--gens", "2", "--seed", "7", "--out", str(b)]) == EXIT_OK
    lines = a.read_text().splitlines()
    assert lines[0] == "node,value" and len(lines) == 8
    assert a.read_bytes() == b.read_bytes()
    assert main(["simulate", REFERENCE, "--gens", "3", "--seed", "7", "--record-draws",
                 "--out", str(b)]) == EXIT_OK
    assert b.read_text().splitlines()[0] == "node,value,a,b,eps_even,eps_odd"


def test_simulate_generation_cap(tmp_path):
    assert main(["simulate", REFERENCE, "--gens", "41", "--seed", "1",
                 "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE


def test_seed_required(tmp_path, capsys):
    assert main(["simulate", NOISELESS, "--gens", "2", "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert "--seed" in capsys.readouterr().err


def test_estimate_noiseless_tree(tmp_path, capsys):
    tree, est = tmp_path / "t.csv", tmp_path / "e.csv"
    assert main(["simulate", NOISELESS, "--gens", "3", "--seed", "0", "--out", str(tree)]) == EXIT_OK
    assert main(["estimate", "--tree", str(tree), "--n", "2:3", "--out", str(est)]) == EXIT_OK
    rows = est.read_text().splitlines()
    assert len(rows) == 3
    vals = [float(v) for v in rows[2].split(",")[1:5]]
    assert vals == pytest.approx([0.5, 1.0, 0.3, 2.0], abs=1e-12)
    assert "theta=(0.5, 1, 0.3, 2)" in capsys.readouterr().out


def test_estimate_from_config(capsys):
    assert main(["estimate", "--config", REFERENCE, "--gens", "5", "--seed", "3", "--n", "5"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("n= 5")


def test_estimate_input_errors(tmp_path):
    assert main(["estimate", "--tree", str(tmp_path / "none.csv")]) == EXIT_USAGE
    assert main(["estimate"]) == EXIT_USAGE
    bad = tmp_path / "bad.csv"
    bad.write_text("node,value\n1,1\n2,2\n")
    assert main(["estimate", "--tree", str(bad)]) == EXIT_USAGE
    tree = tmp_path / "t.csv"
    main(["simulate", NOISELESS, "--gens", "2", "--seed", "0", "--out", str(tree)])
    assert main(["estimate", "--tree", str(tree), "--n", "3"]) == EXIT_USAGE


def test_limits_degenerate(tmp_path, capsys):
    out = tmp_path / "lim.csv"
    code = main(["limits", str(CONFIGS / "degenerate_t.yaml"), "--samples", "10", "--seed", "1",
                 "--out", str(out)])
    text = capsys.readouterr().out
    assert code == EXIT_FAIL
    assert "C = [[0.5, 0.5], [0.5, 0.5]]" in text
    assert "warning: only 10 T samples" in text
    assert out.read_text().splitlines()[0] == "matrix,row,col,value,mc_se"


def test_limits_reference_model(capsys):
    assert main(["limits", REFERENCE, "--samples", "20000", "--seed", "4"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "E[T]   closed form 2.361111111" in text
    assert "cov_theta = " in text


def _bundle(outdir):
    return sorted(p.name for p in Path(outdir).iterdir())


def test_experiment_noiseless(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["experiment", NOISELESS, "--gens", "3", "--reps", "1", "--seed", "0",
                 "--no-hypothesis-check", "--outdir", str(out)]) == EXIT_OK
    assert _bundle(out) == ["hist.csv", "qsl.csv", "rates.csv", "scaled_errors.csv", "summary.csv"]
    assert main(["experiment", NOISELESS, "--gens", "3", "--reps", "1", "--seed", "0",
                 "--outdir", str(out)]) == EXIT_FAIL


def test_experiment_bundles_identical_across_workers(tmp_path):
    dirs = []
    for w in (1, 2):
        d = tmp_path / f"w{w}"
        code = main(["experiment", REFERENCE, "--gens", "5", "--reps", "100", "--seed", "9",
                     "--samples", "20000", "--workers", str(w), "--outdir", str(d)])
        assert code in (EXIT_OK, EXIT_FAIL)
        dirs.append(d)
    match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], _bundle(dirs[0]), shallow=False)
    assert not mismatch and not errors and len(match) == 5


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rcbar", "validate", NOISELESS],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_FAIL
    assert "H.2 FAIL" in r.stdout
