import numpy as np
import pytest

from disagree import (
    TrainConfig,
    fit_standardizer,
    standardize,
    synthetic_compas,
    train_mlp,
    train_test_split,
)


@pytest.fixture(scope="session")
def compas():
    return synthetic_compas()


@pytest.fixture(scope="session")
def compas_split(compas):
    """Standardized 70/30 split of the recidivism stand-in."""
    train_ds, test_ds = train_test_split(compas, 0.3, seed=0)
    std = fit_standardizer(train_ds)
    return train_ds.with_X(standardize(std, train_ds.X)), test_ds.with_X(standardize(std, test_ds.X))


@pytest.fixture(scope="session")
def small_mlp(compas_split):
    """A quickly trained small network for explainer unit tests."""
    train_std, _ = compas_split
    return train_mlp(train_std, [16, 16], TrainConfig(learning_rate=0.02, epochs=30, seed=1))


def random_mlp(rng, d, hidden=(8, 6)):
    """Untrained network with random weights, for oracle checks."""
    from disagree.models import MlpModel

    dims = [d] + list(hidden) + [1]
    weights = [rng.normal(0, 1.0, size=(a, b)) / np.sqrt(a) for a, b in zip(dims[:-1], dims[1:])]
    biases = [rng.normal(0, 0.3, size=b) for b in dims[1:]]
    return MlpModel(weights, biases)
