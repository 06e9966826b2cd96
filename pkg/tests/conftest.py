from __future__ import annotations

from pathlib import Path

import pytest

from scholarchat.augment import AugmentConfig, build_dataset
from scholarchat.core import load_schema
from scholarchat.engine import DialogueEngine, EngineConfig
from scholarchat.nlu.embeddings import EmbeddingTable
from scholarchat.nlu.pipeline import MlModels

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "scholarchat" / "data"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def registry():
    return load_schema(DATA_DIR / "schema.yaml")


@pytest.fixture(scope="session")
def augment_config():
    return AugmentConfig.load(DATA_DIR / "augment.yaml")


@pytest.fixture(scope="session")
def dataset(augment_config):
    return build_dataset(augment_config)


@pytest.fixture(scope="session")
def embedding_table():
    return EmbeddingTable.load(DATA_DIR / "embeddings" / "fixture_300d.txt")


@pytest.fixture(scope="session")
def trained_models(dataset, embedding_table):
    train, _, _ = dataset
    return MlModels.train(train, embedding_table)


@pytest.fixture(scope="session")
def models_dir(trained_models, tmp_path_factory):
    path = tmp_path_factory.mktemp("models")
    trained_models.save(path)
    return path


@pytest.fixture(scope="session")
def rules_engine():
    """Engine without ML models: template matching plus fallback only."""
    return DialogueEngine()


@pytest.fixture(scope="session")
def ml_engine(models_dir):
    return DialogueEngine(EngineConfig(models_dir=models_dir))
