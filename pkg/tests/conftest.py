import numpy as np
import pytest

from stormloc.calibrate import fit_temperature
from stormloc.grid import DEFAULT_GRID
from stormloc.nn.unet import ModelConfig, build_unet
from stormloc.synth import NoiseModel, build_dataset
from stormloc.train import TrainConfig, train


@pytest.fixture(scope="session")
def tiny_dataset():
    """24 samples on the default grid; enough for format/service tests."""
    return build_dataset(24, NoiseModel(), seed=1, grid=DEFAULT_GRID)


@pytest.fixture(scope="session")
def small_run():
    """A briefly trained desk model plus its dataset (shared; ~30 s once)."""
    data = build_dataset(120, NoiseModel(), seed=0, grid=DEFAULT_GRID)
    model = build_unet(ModelConfig(grid=DEFAULT_GRID), seed=0)
    result = train(model, data, TrainConfig(epochs=6, seed=0))
    fit_temperature(result.model, data.subset("val"))
    return data, result


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
