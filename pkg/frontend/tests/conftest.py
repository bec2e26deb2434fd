import json
import subprocess
import sys

import pytest


def run_harness(config: dict, out_dir, extra=()):
    """Invoke the solver harness CLI; the file outputs are the interface."""
    cfg_path = out_dir.parent / (out_dir.name + ".json")
    cfg_path.write_text(json.dumps(config), encoding="utf-8")
    cmd = [sys.executable, "-m", "proxlm.cli", "run", str(cfg_path),
           "--out", str(out_dir), *extra]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out_dir


@pytest.fixture(scope="session")
def rosen2_runs(tmp_path_factory):
    """High-accuracy 2-D comparison (the order/trajectory instance)."""
    out = tmp_path_factory.mktemp("rosen2")
    config = {
        "problem": {"kind": "rosenbrock2"},
        "epsilon": 1e-12,
        "budget": 1.2e5,
        "log_iterates": True,
        "solvers": [
            {"name": "lm", "rho_min": [1e-2]},
            {"name": "dp", "mu": [1e-3, 1e-1], "L": [1e2],
             "max_iters": 2000},
            {"name": "pg", "l_min": [1e-2], "max_iters": 50_000},
        ],
    }
    return run_harness(config, out)


@pytest.fixture(scope="session")
def rosen100_runs(tmp_path_factory):
    """Grid comparison on the d=100 instance (the oracle-cost benchmark)."""
    out = tmp_path_factory.mktemp("rosen100")
    config = {
        "problem": {"kind": "rosenbrock_nd", "d": 100},
        "epsilon": 1e-9,
        "budget": 7.5e4,
        "solvers": [
            {"name": "lm", "rho_min": [1e-2]},
            {"name": "pg", "l_min": [1e-3, 1e0], "max_iters": 100_000},
            {"name": "dp", "mu": [1e-1, 1e1], "L": [1e2, 1e5],
             "max_iters": 5000},
        ],
    }
    return run_harness(config, out)
