"""Shared fixtures.

The tiny dataset keeps unit tests fast; the default dataset is the fixed
benchmark the acceptance suite runs against, generated once per session.
"""

import numpy as np
import pytest

from clickrank.store import Dataset, SynthConfig, generate_synthetic

# Small enough that every protocol run finishes in milliseconds, large
# enough that the k=10 feedback pool never degenerates.
TINY = SynthConfig(n_items=60, n_attributes=30, attrs_per_item=3, dim=16, noise_sigma=0.2, seed=11)


@pytest.fixture(scope="session")
def tiny_dataset() -> Dataset:
    return generate_synthetic(TINY)


@pytest.fixture(scope="session")
def default_dataset() -> Dataset:
    return generate_synthetic(SynthConfig())


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240814)


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """Random unit-norm float32 rows, resampled away from zero norm."""
    rows = rng.standard_normal((n, dim))
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return (rows / norms).astype(np.float32)
