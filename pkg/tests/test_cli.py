import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from rglasso.bench.cli import main, parse_groups, read_samples
from rglasso.errors import BadConfig


def write_samples(path, rng, n=25, p=6, header=True):
    X = rng.standard_normal((n, p))
    y = X @ np.array([1.0, -0.5, 0, 0, 0.8, 0]) + 0.05 * rng.standard_normal(n)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{i + 1}" for i in range(p)] + ["y"])
        w.writerows(np.column_stack([X, y]).tolist())
    return X, y


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_parse_groups():
    assert [list(g) for g in parse_groups("2x3", 6).groups] == [[0, 1], [2, 3], [4, 5]]
    assert [list(g) for g in parse_groups("1,2", 3).groups] == [[0], [1, 2]]
    assert sorted(map(sorted, parse_groups("1-3;4,6;5", 6).groups)) == [[0, 1, 2], [3, 5], [4]]
    for bad in ("2x2", "a,b", "1-3;3"):
        with pytest.raises(BadConfig):
            parse_groups(bad, 6)


def test_read_samples(tmp_path, rng):
    X, y = write_samples(tmp_path / "s.csv", rng, header=False)
    Xr, yr = read_samples(tmp_path / "s.csv")
    np.testing.assert_allclose(Xr, X)
    np.testing.assert_allclose(yr, y)
    (tmp_path / "e.csv").write_text("a,b\n")
    with pytest.raises(BadConfig):
        read_samples(tmp_path / "e.csv")


def test_identify(tmp_path, rng):
    write_samples(tmp_path / "s.csv", rng)
    out = tmp_path / "id"
    code = main(["identify", "--input", str(tmp_path / "s.csv"), "--groups", "2x3", "--lambda", "0.1",
                 "--gamma", "0.95", "--out", str(out)])
    assert code == 0
    assert len(rows(out / "coefficients.csv")) == 7
    pred = rows(out / "predictions.csv")
    assert pred[0] == ["sample", "y", "prediction", "prior_error"] and len(pred) == 26
    counters = json.loads((out / "counters.json").read_text())
    assert counters["samples"] == 25


def test_trace(tmp_path, rng):
    write_samples(tmp_path / "s.csv", rng)
    out = tmp_path / "tr"
    assert main(["trace", "--input", str(tmp_path / "s.csv"), "--groups", "2x3", "--lambda", "0.1",
                 "--gamma", "0.9", "--out", str(out)]) == 0
    lam, beta = rows(out / "lambda_trace.csv"), rows(out / "beta_trace.csv")
    assert lam[0][0] == "lambda" and beta[0][0] == "beta"
    assert beta[0] == ["beta", "condition", "target", "rho", "active_groups", "nnz"]
    ident = tmp_path / "id"
    main(["identify", "--input", str(tmp_path / "s.csv"), "--groups", "2x3", "--lambda", "0.1",
          "--gamma", "0.9", "--out", str(ident)])
    c = json.loads((ident / "counters.json").read_text())
    assert len(lam) - 1 == c["k1_total"] and len(beta) - 1 == c["k2_total"]


def test_run(tmp_path):
    cfg = {"p": 10, "n_samples": 12, "change_at": 6, "trials": 1, "group_sizes": [5, 5],
           "true_support": {"start": 2, "length": 3, "shift": 4}, "steady_window": 3}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    out = tmp_path / "run"
    assert main(["run", "--config", str(tmp_path / "cfg.json"), "--out", str(out), "--seed", "4"]) == 0
    assert len(rows(out / "mse.csv")) == 13
    assert json.loads((out / "summary.json").read_text())["config"]["seed"] == 4


def test_exit_codes(tmp_path, rng):
    write_samples(tmp_path / "s.csv", rng)
    (tmp_path / "bad.json").write_text('{"p": -1}')
    assert main(["run", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 2
    assert main(["identify", "--input", str(tmp_path / "s.csv"), "--groups", "4x4", "--lambda", "0.1"]) == 2
    assert main(["identify", "--input", str(tmp_path / "nope.csv"), "--groups", "2x3", "--lambda", "0.1"]) == 2
    assert main(["identify", "--input", str(tmp_path / "s.csv"), "--groups", "2x3", "--lambda", "0.01",
                 "--max-events", "0", "--out", str(tmp_path / "o")]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rglasso.bench", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "identify" in proc.stdout
