import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from tests.spn_factories import fig1_spn, selective_two_var_spn, single_sum_spn  # noqa: E402


@pytest.fixture
def test_data_dir() -> Path:
    return ROOT / "test_data"


@pytest.fixture
def fig1():
    return fig1_spn()


@pytest.fixture
def single_sum():
    return single_sum_spn()


@pytest.fixture
def selective_two_var():
    return selective_two_var_spn()
