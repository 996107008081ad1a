import numpy as np
import pytest

from posmap.rand import rng_for


@pytest.fixture
def rng(request):
    """Per-test deterministic generator keyed by the test's own name."""
    return rng_for(0, request.node.name)


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
