import numpy as np
import pytest

import aquaprobe as aq
from aquaprobe.modelfile import SavedModel


@pytest.fixture(scope="session")
def desk_model():
    """A small trained forecaster shared by the attack and campaign tests.

    400 days, short windows, few epochs: enough structure for gradients to
    point somewhere meaningful without slowing the suite down.
    """
    series = aq.synthesize(aq.Rng(11), 400)
    dataset = aq.build_dataset(series, 15)
    result = aq.train(dataset, aq.TrainConfig(hidden_units=8, epochs=15, seed=11))
    saved = SavedModel(params=result.params, scaler=dataset.scaler,
                       sequence_length=15, tag="LSTM")
    return saved, dataset


@pytest.fixture()
def rng():
    return aq.Rng(123)


@pytest.fixture()
def windows(desk_model):
    _, dataset = desk_model
    X, y = dataset.test
    return np.array(X, copy=True), np.array(y, copy=True)
