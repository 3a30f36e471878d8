import numpy as np
import pytest
from hypothesis import settings

from slukit.data import build_vocabularies
from slukit.generator import (GeneratorConfig, default_catalog, default_tables,
                              generate_dataset)
from slukit.model import AblationFlags, ModelConfig, ModelDims, SluModel

settings.register_profile("ci", derandomize=True, max_examples=60, deadline=None)
settings.load_profile("ci")

TINY_DIMS = ModelDims(d_emb=6, d_r=8, d_a=6, d_i=6, d_int=3, d_slot=3, h_s=8)


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def tables():
    return default_tables()


@pytest.fixture(scope="session")
def small_splits(catalog, tables):
    return generate_dataset(GeneratorConfig(n_samples=240, seed=7), catalog, tables)


@pytest.fixture(scope="session")
def small_vocabs(small_splits):
    return build_vocabularies(small_splits.train)


@pytest.fixture(scope="session")
def tiny_pack(catalog, tables):
    """A 24-sample dataset plus vocabularies, for fast model-level tests."""
    splits = generate_dataset(GeneratorConfig(n_samples=24, seed=5), catalog, tables)
    samples = splits.all_samples()
    vocabs = build_vocabularies(samples)
    return samples, vocabs


def make_tiny_model(vocabs, catalog, fusion_mode="hierarchical",
                    flags=AblationFlags(), seed=3, dims=TINY_DIMS,
                    zero_init=False) -> SluModel:
    config = ModelConfig(dims=dims, fusion_mode=fusion_mode, flags=flags,
                         up_length=catalog.schema.up_length,
                         ca_length=catalog.schema.ca_length)
    return SluModel.create(config, vocabs, seed=seed, zero_init=zero_init)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
