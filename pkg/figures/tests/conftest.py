import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def desk_dir(tmp_path_factory):
    """Generate the default desk-scale dataset once via the simulation CLI.

    The figure package consumes only the CSV artifacts, so the dataset is
    produced through the public command line rather than any Python API.
    """
    out = tmp_path_factory.mktemp("dataset") / "run"
    result = subprocess.run(
        [sys.executable, "-m", "bubblesim", "run", "--out", str(out)],
        capture_output=True,
        text=True,
        timeout=1800,
    )
    assert result.returncode == 0, result.stderr[-2000:]
    return out
