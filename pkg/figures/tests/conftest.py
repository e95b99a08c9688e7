"""Golden CSV inputs produced by the metric toolkit's own CLI.

The renderer only ever sees files, so the fixtures exercise the real
producer once per session instead of hand-rolling lookalike CSVs.
"""

import json
import random
import subprocess
import sys

import pytest


def run_primary(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "wkmetric.cli", *argv],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def golden(tmp_path_factory):
    root = tmp_path_factory.mktemp("golden")

    cfg = root / "conv.json"
    cfg.write_text(
        json.dumps(
            {
                "scenario": "demo",
                "model": {"family": "student_t", "nu": 2.5},
                "q": 1.2,
                "n_grid": [50, 100, 200],
                "M": 60,
                "repetitions": 2,
            }
        )
    )
    conv = root / "conv.csv"
    run_primary(
        "convergence", "--config", str(cfg), "--seed", "9", "--out", str(conv), "--threads", "1"
    )

    single_cfg = root / "single.json"
    single_cfg.write_text(
        json.dumps(
            {
                "scenario": "solo",
                "model": {"family": "pareto", "alpha": 2.8, "xm": 1.0},
                "q": 1.0,
                "n_grid": [50, 100],
                "M": 40,
                "repetitions": 2,
                "metrics": ["weighted"],
            }
        )
    )
    single = root / "single.csv"
    run_primary(
        "convergence",
        "--config",
        str(single_cfg),
        "--seed",
        "3",
        "--out",
        str(single),
        "--threads",
        "1",
    )

    rng = random.Random(7)
    data = root / "sample.csv"
    data.write_text("\n".join(repr(rng.gauss(0.0, 1.0)) for _ in range(300)) + "\n")
    gauss_model = root / "model_gauss.json"
    gauss_model.write_text(json.dumps({"family": "gaussian", "mu": 0.0, "sigma": 1.0}))
    t_model = root / "model_t.json"
    t_model.write_text(json.dumps({"family": "student_t", "nu": 3.0}))

    grid = root / "grid.csv"
    run_primary(
        "grid", "--data", str(data), "--model", str(gauss_model),
        "--Q", "0.5,1.0,1.5,2.0", "--label", "gaussian", "--out", str(grid),
    )
    run_primary(
        "grid", "--data", str(data), "--model", str(t_model),
        "--Q", "0.5,1.0,1.5,2.0", "--label", "student_t", "--out", str(grid), "--append",
    )

    return {"conv": conv, "single": single, "grid": grid, "root": root}
