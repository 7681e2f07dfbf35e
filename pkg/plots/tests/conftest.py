"""Golden CSV fixtures produced through the qorbit CLI (the published interface)."""

from __future__ import annotations

import subprocess
import sys

import pytest


def _bundled_scenario(name: str) -> str:
    out = subprocess.run(
        [sys.executable, "-c", f"from qorbit.cli import scenario_path; print(scenario_path('{name}'))"],
        capture_output=True,
        text=True,
        check=True,
    )
    return out.stdout.strip()


def _run_scenario(name: str, out_dir) -> str:
    cfg = _bundled_scenario(name)
    proc = subprocess.run(
        [sys.executable, "-m", "qorbit.cli", "run", cfg, "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return str(out_dir / "trajectory.csv")


@pytest.fixture(scope="session")
def golden_csv_51(tmp_path_factory) -> str:
    return _run_scenario("5_1", tmp_path_factory.mktemp("golden_5_1"))


@pytest.fixture(scope="session")
def golden_csv_52(tmp_path_factory) -> str:
    return _run_scenario("5_2", tmp_path_factory.mktemp("golden_5_2"))
