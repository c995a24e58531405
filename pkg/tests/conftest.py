import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def random_mask(rng, h, w, p=0.5):
    from occlusionkit.core import Mask
    return Mask(rng.random((h, w)) < p)


def random_frame(rng, h, w):
    from occlusionkit.core import Frame
    return Frame(pixels=rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
