import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from src.wavemodel import PhysicalConstants  # noqa: E402


@pytest.fixture
def c():
    return PhysicalConstants()
