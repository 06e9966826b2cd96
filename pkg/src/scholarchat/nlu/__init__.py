from .dataset import Instance, NluDataset, Split, bio_repair, bio_spans, bio_violations
from .embeddings import (
    CentroidClassifier,
    EmbeddingIntentClassifier,
    EmbeddingSlotTagger,
    EmbeddingTable,
    SlotCentroidTagger,
    embed_average,
)
from .hmm import HmmSlotTagger
from .linear import LinearIntentClassifier
from .pipeline import MlModels, NluPipeline
from .tfidf import TfidfVectorizer

__all__ = [
    "Instance",
    "NluDataset",
    "Split",
    "bio_repair",
    "bio_spans",
    "bio_violations",
    "CentroidClassifier",
    "EmbeddingIntentClassifier",
    "EmbeddingSlotTagger",
    "EmbeddingTable",
    "SlotCentroidTagger",
    "embed_average",
    "HmmSlotTagger",
    "LinearIntentClassifier",
    "MlModels",
    "NluPipeline",
    "TfidfVectorizer",
]
