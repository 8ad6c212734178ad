import numpy as np
import pytest

from evosel.dataset import Dataset, synth_dataset


@pytest.fixture
def five_point_data() -> Dataset:
    """Two-descriptor fixture whose fit is frozen against a normal-equation oracle."""
    return Dataset(
        ("a", "b", "c", "d", "e"),
        ("x1", "x2"),
        np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 1.0], [3.0, 0.0], [4.0, 1.0]]),
        np.array([1.1, 1.9, 3.2, 3.8, 5.1]),
    )


@pytest.fixture(scope="session")
def noiseless_synth():
    """n=50, m=10, k_true=2, no noise: the true pair attains r2 = 1 exactly."""
    return synth_dataset(50, 10, 2, 0.0, seed=1)
