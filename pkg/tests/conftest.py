import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pit2crack.material import q235  # noqa: E402


@pytest.fixture(scope="session")
def material():
    return q235()
