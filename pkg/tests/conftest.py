import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fieldutil import build_field  # noqa: E402


@pytest.fixture
def make_field():
    """Synthetic Field from a 2-D class grid (0 converged, 1 diverged)."""
    return build_field
