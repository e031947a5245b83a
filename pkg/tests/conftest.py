"""Shared fixtures: a small labeled dataset and seeded bag sampling."""

import random

import pytest
from hypothesis import HealthCheck, settings

from fourops import dataset

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SAMPLE_SEED = 1105


def sample_bag_pairs(n: int, seed: int = SAMPLE_SEED):
    """n distinct (bag_id, bag) pairs drawn without replacement."""
    bags = dataset.enumerate_bags()
    rng = random.Random(seed)
    ids = sorted(rng.sample(range(len(bags)), n))
    return [(i, bags[i]) for i in ids]


@pytest.fixture(scope="session")
def small_dataset_path(tmp_path_factory):
    """A 40-bag labeled dataset (36,000 rows) spread across the bag space,
    large enough that every difficulty class appears on both sides of a
    0.2 bag split."""
    path = tmp_path_factory.mktemp("data") / "small.csv"
    dataset.generate_dataset(sample_bag_pairs(40), output_path=path, worker_count=1)
    return path
