import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from epitest.presets import probe_beliefs, tiny_scenarios


@pytest.fixture(scope="session")
def scenarios():
    return tiny_scenarios()


@pytest.fixture(scope="session")
def probes_by_n():
    return {n: probe_beliefs(n, 20, seed=555 + n) for n in (1, 2, 3)}


SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


@pytest.fixture(scope="session")
def scenario_dir():
    return SCENARIO_DIR
