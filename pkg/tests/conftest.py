"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from meancov import SampleSet, generate_truth, sample_data


def random_unit(p: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(p)
    return v / np.linalg.norm(v)


def simulated_data(n: int, p: int, seed: int) -> SampleSet:
    """A data set drawn from a random constrained truth."""
    rng = np.random.default_rng(seed)
    return sample_data(generate_truth(p, rng), n, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
