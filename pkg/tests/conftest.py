"""Shared fixtures: a small synthetic dataset with a trained bundle."""
import numpy as np
import pytest

from runwaygrip import pipeline as pl
from runwaygrip import synthgen as sg
from runwaygrip.service import DataStore, train_bundle


@pytest.fixture(scope="session")
def small_dataset():
    # seed 14 packs a storm into 8 days: 36 slippery of 320 landings
    cfg = sg.GeneratorConfig(seed=14, n_days=8, landings_per_day=40,
                             rate_tolerance=100.0)
    ds = sg.generate(cfg)
    slip, _ = sg.label_oracle(ds.ground_truth)
    assert slip.sum() >= 2, "fixture seed must produce some positives"
    return ds


@pytest.fixture(scope="session")
def small_feats(small_dataset):
    return pl.featurize_dataset(small_dataset)


@pytest.fixture(scope="session")
def small_bundle(small_feats):
    return train_bundle(small_feats.matrix, small_feats.slippery,
                        small_feats.mu, seed=4)


@pytest.fixture(scope="session")
def store(small_dataset):
    return DataStore(small_dataset.weather, small_dataset.snowtams,
                     runways=small_dataset.config.runways)


@pytest.fixture(scope="session")
def sample_minute(small_dataset):
    # a minute late in the record, guaranteed covered by weather
    series = small_dataset.weather["RW1"]
    return int(series.end_minute - 120)
