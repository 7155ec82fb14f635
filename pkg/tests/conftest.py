import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # genwb / oracles helpers
sys.setrecursionlimit(20_000)  # oracle recursion over deep reference chains

from genwb import random_workbook  # noqa: E402

CORPUS_SEED = 20240917
CORPUS_SIZE = 1000


@pytest.fixture(scope="session")
def corpus():
    """The shared random-workbook corpus used by the acceptance suites."""
    rng = random.Random(CORPUS_SEED)
    return [random_workbook(rng, max_cells=200, max_sheets=4) for _ in range(CORPUS_SIZE)]
