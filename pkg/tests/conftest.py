import sys
import warnings
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from expertcover.errors import DuplicateScopeWarning  # noqa: E402
from expertcover.model import Ensemble  # noqa: E402

EXAMPLE_COVER_5_3 = [[1, 2, 3], [1, 4, 5], [2, 3, 4], [2, 3, 5]]


@pytest.fixture
def cover53():
    return Ensemble(5, EXAMPLE_COVER_5_3)


@st.composite
def ensembles(draw, max_k=6, max_m=6):
    K = draw(st.integers(2, max_k))
    m = draw(st.integers(1, max_m))
    scopes = [
        draw(st.sets(st.integers(1, K), min_size=2, max_size=K)) for _ in range(m)
    ]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateScopeWarning)
        return Ensemble(K, [sorted(s) for s in scopes])
