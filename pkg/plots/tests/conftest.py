"""Produce desk-scale figure CSVs by driving the experiment CLI.

The plotting package consumes the primary tool only through its external
interface: the `aloha-lab figure` command and the CSV files it writes.
"""

from __future__ import annotations

import subprocess
import sys

import pytest

SCALE_CONFIG = {
    "fig3": "slots = 50000\nwarmup = 2000\nseed = 7\n",
    "fig9": "slots = 300000\nwarmup = 20000\nseed = 7\n",
    "fig11": "slots = 150000\nwarmup = 15000\nseed = 7\nreplications = 2\n",
    "fig12": "slots = 150000\nwarmup = 15000\nseed = 7\nreplications = 2\n",
    "fig13": "slots = 150000\nwarmup = 15000\nseed = 7\nreplications = 2\n",
}


@pytest.fixture(scope="session")
def figure_csvs(tmp_path_factory):
    root = tmp_path_factory.mktemp("csv")
    paths = {}
    for figure_id, scale in SCALE_CONFIG.items():
        cfg = root / f"{figure_id}.cfg"
        cfg.write_text(scale)
        out = root / f"{figure_id}.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "batchaloha.cli", "figure", figure_id,
             "--config", str(cfg), "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, f"{figure_id}: {proc.stderr}"
        paths[figure_id] = str(out)
    return paths
