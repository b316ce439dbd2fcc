import numpy as np
import pytest

import synth
from sdpf.dithering import IndexedImage
from sdpf.imaging import Image
from sdpf.patterns import build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, h, w):
    return Image(rng.integers(0, 256, (h, w, 3)).astype(np.uint8))


def random_index_grid(rng, h, w):
    return IndexedImage(rng.integers(1, 9, (h, w)).astype(np.uint8))


def random_pattern_grid(rng, gh, gw):
    return build_grid(random_index_grid(rng, 2 * gh, 2 * gw))


@pytest.fixture(scope="session")
def dataset_root(tmp_path_factory):
    """10-class, 20-images-per-class shape dataset on disk."""
    root = tmp_path_factory.mktemp("corpus") / "dataset"
    return synth.write_dataset(root, per_class=20, size=192)


@pytest.fixture(scope="session")
def small_dataset_root(tmp_path_factory):
    """Small 3-class dataset for harness plumbing tests."""
    root = tmp_path_factory.mktemp("small") / "dataset"
    return synth.write_dataset(root, n_classes=3, per_class=5, size=96)
