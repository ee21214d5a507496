"""Shared fixtures."""

import pytest

from vrt_engine.providers.synthetic import SyntheticWorld
from vrt_engine.training.toy_trainer import TrainConfig, train_embedder


@pytest.fixture(scope="session")
def acceptance_world():
    """The fixed world used by the training acceptance checks."""
    return SyntheticWorld(seed=1, latent_dim=16, raw_dim=32, noise_sigma=0.1, num_concepts=256)


@pytest.fixture(scope="session")
def trained_embedder(acceptance_world):
    """Adapter and history after 30 epochs at batch 32."""
    return train_embedder(acceptance_world, TrainConfig(epochs=30, batch_size=32, seed=0))
