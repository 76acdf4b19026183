import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from vmshortcut import REAL_BACKEND_AVAILABLE

requires_real = pytest.mark.skipif(
    not REAL_BACKEND_AVAILABLE, reason="real backend needs Linux + compiled extension"
)

BACKENDS = ["emulated"] + (["real"] if REAL_BACKEND_AVAILABLE else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def pool(backend):
    from vmshortcut import create_pool

    p = create_pool(4, shrink_threshold=2, backend=backend)
    yield p
    p.close()


@pytest.fixture
def real_pool():
    from vmshortcut import create_pool

    if not REAL_BACKEND_AVAILABLE:
        pytest.skip("real backend unavailable")
    p = create_pool(4, shrink_threshold=2, backend="real")
    yield p
    p.close()
