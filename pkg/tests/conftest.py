import numpy as np
import pytest

from fsmn.data import PackedBatch


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def frame_batch(rng, in_dim, lengths, n_classes, dtype=np.float64):
    """Random float frames shaped for a model without a projection layer."""
    total = sum(lengths)
    return PackedBatch(
        rng.standard_normal((in_dim, total)).astype(dtype),
        rng.integers(0, n_classes, size=total),
        tuple(lengths),
    )
