import numpy as np
import pytest

from twophoton.stack import ImageStack


def random_stack(rng, shape=(2, 3, 4, 5), scale=100.0):
    return ImageStack(rng.random(shape).astype(np.float32) * scale)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def smooth_texture(rows, cols, seed=0, n=12):
    """Sum of broad Gaussian bumps: smooth enough for sub-pixel registration tests."""
    from twophoton._kernels import render_blobs

    g = np.random.default_rng(seed)
    centers = np.column_stack([g.uniform(8, rows - 9, n), g.uniform(8, cols - 9, n)])
    amps = g.uniform(40, 120, n)
    return render_blobs(rows, cols, centers, amps, 3.0, base=10.0)
