"""Word-embedding utterance encoding and the embedding-based NLU models.

Utterances are encoded as the arithmetic mean of their token vectors;
out-of-vocabulary tokens contribute a zero vector. Slot features are the
token's own vector joined with the mean of its neighbors within radius 2.

Two model families share these encodings. The centroid forms
(CentroidClassifier, SlotCentroidTagger) are the simplest realization:
cosine-nearest class or tag centroid. The shipped pipeline instead uses the
max-margin forms (EmbeddingIntentClassifier, EmbeddingSlotTagger), hinge
classifiers over the same features, because plain centroids cannot separate
this many fine-grained classes at fixture scale.
"""
from __future__ import annotations

import hashlib
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import NluDataset, bio_repair
from .model_io import load_model, save_model
from .subgradient import DEFAULT_EPOCHS, DEFAULT_L2, DEFAULT_SEED, train_one_vs_rest

WINDOW_RADIUS = 2
SLOT_TAGGER_EPOCHS = 10


class EmbeddingTable:
    def __init__(self, dim: int, vectors: dict[str, np.ndarray]):
        self.dim = dim
        self.vectors = vectors
        self._zero = np.zeros(dim)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def vector(self, word: str) -> np.ndarray:
        return self.vectors.get(word, self._zero)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        """Read the plain text format: `word v1 v2 ... vd`, one per line."""
        vectors: dict[str, np.ndarray] = {}
        dim: int | None = None
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split()
            word, values = parts[0], np.asarray([float(v) for v in parts[1:]])
            if dim is None:
                dim = values.size
            elif values.size != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, got {values.size}")
            vectors[word] = values
        if dim is None:
            raise ValueError(f"{path}: empty embedding file")
        return cls(dim, vectors)

    def save(self, path: str | Path) -> None:
        lines = []
        for word in sorted(self.vectors):
            values = " ".join(f"{v:.4f}" for v in self.vectors[word])
            lines.append(f"{word} {values}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def hashed(cls, words: Iterable[str], dim: int = 50) -> "EmbeddingTable":
        """Deterministic pseudo-embeddings: each word's vector is seeded from
        a digest of the word itself. Used for the shipped fixture table."""
        vectors = {}
        for word in sorted(set(words)):
            digest = hashlib.sha256(f"embed:{word}".encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
            vectors[word] = np.round(rng.standard_normal(dim) / np.sqrt(dim), 4)
        return cls(dim, vectors)


def embed_average(table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray:
    """Mean of the token vectors; unknown tokens count as zero vectors.

    An empty utterance encodes to the zero vector.
    """
    if not tokens:
        return np.zeros(table.dim)
    total = np.zeros(table.dim)
    for token in tokens:
        total += table.vector(token)
    return total / len(tokens)


def _cosine_rows(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return np.zeros(matrix.shape[0])
    row_norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(row_norms == 0.0, 1.0, row_norms)
    return (matrix @ vector) / (safe * norm)


class CentroidClassifier:
    """Intent = cosine-nearest centroid of average-embedding vectors."""

    def __init__(self, classes: Sequence[str], centroids: np.ndarray, build_id: str = ""):
        self.classes = tuple(classes)
        self.centroids = np.asarray(centroids, dtype=np.float64)
        self.build_id = build_id

    @classmethod
    def train(cls, train: NluDataset, table: EmbeddingTable) -> "CentroidClassifier":
        """Centroid = mean of the per-utterance embedding directions.

        Averaging unit directions (not raw vectors) keeps utterances with
        large-norm rare words from dominating their class."""
        classes = train.intents
        if len(classes) < 2:
            raise ValueError("need at least two intent classes to train")
        index = {c: i for i, c in enumerate(classes)}
        sums = np.zeros((len(classes), table.dim))
        counts = np.zeros(len(classes))
        for instance in train.instances:
            vector = embed_average(table, instance.tokens)
            norm = float(np.linalg.norm(vector))
            if norm > 0:
                sums[index[instance.intent]] += vector / norm
            counts[index[instance.intent]] += 1
        return cls(classes, sums / counts[:, None], build_id=train.build_id)

    def predict(self, table: EmbeddingTable, tokens: Sequence[str]) -> tuple[str, float]:
        """Class plus a [0, 1] score ((1 + cosine) / 2). Ties and the
        zero-vector case resolve to the alphabetically first class."""
        similarity = _cosine_rows(self.centroids, embed_average(table, tokens))
        best = int(np.argmax(similarity))
        return self.classes[best], float((1.0 + similarity[best]) / 2.0)

    def save(self, path: str | Path) -> None:
        save_model(
            path,
            "centroid-intent",
            {"classes": list(self.classes), "centroids": self.centroids.tolist()},
            build_id=self.build_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "CentroidClassifier":
        doc = load_model(path, "centroid-intent")
        return cls(doc["classes"], np.asarray(doc["centroids"]), build_id=doc["build_id"])


def token_features(table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray:
    """Per-token feature: own vector concatenated with the mean vector of
    its neighbors within radius 2 (the token itself stays out of the window;
    it already occupies the first half)."""
    n = len(tokens)
    own = np.stack([table.vector(t) for t in tokens]) if n else np.zeros((0, table.dim))
    features = np.zeros((n, 2 * table.dim))
    for i in range(n):
        lo, hi = max(0, i - WINDOW_RADIUS), min(n, i + WINDOW_RADIUS + 1)
        neighbors = [j for j in range(lo, hi) if j != i]
        features[i, : table.dim] = own[i]
        if neighbors:
            features[i, table.dim :] = own[neighbors].mean(axis=0)
    return features


class SlotCentroidTagger:
    """Per-tag centroids over token-window features, cosine-nearest decoding."""

    def __init__(self, tags: Sequence[str], centroids: np.ndarray, build_id: str = ""):
        self.tags = tuple(tags)
        self.centroids = np.asarray(centroids, dtype=np.float64)
        self.build_id = build_id

    @classmethod
    def train(cls, train: NluDataset, table: EmbeddingTable) -> "SlotCentroidTagger":
        if not train.instances:
            raise ValueError("cannot train a slot tagger on an empty dataset")
        tags = train.tags
        index = {t: i for i, t in enumerate(tags)}
        sums = np.zeros((len(tags), 2 * table.dim))
        counts = np.zeros(len(tags))
        for instance in train.instances:
            features = token_features(table, instance.tokens)
            for row, tag in zip(features, instance.tags):
                sums[index[tag]] += row
                counts[index[tag]] += 1
        return cls(tags, sums / np.maximum(counts, 1)[:, None], build_id=train.build_id)

    def raw_tags(self, table: EmbeddingTable, tokens: Sequence[str]) -> tuple[str, ...]:
        features = token_features(table, tokens)
        out = []
        for row in features:
            if not row.any():
                out.append("O")  # no evidence at all
                continue
            similarity = _cosine_rows(self.centroids, row)
            out.append(self.tags[int(np.argmax(similarity))])
        return tuple(out)

    def tag(self, table: EmbeddingTable, tokens: Sequence[str]) -> tuple[str, ...]:
        return bio_repair(self.raw_tags(table, tokens))

    def save(self, path: str | Path) -> None:
        save_model(
            path,
            "centroid-slots",
            {"tags": list(self.tags), "centroids": self.centroids.tolist()},
            build_id=self.build_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "SlotCentroidTagger":
        doc = load_model(path, "centroid-slots")
        return cls(doc["tags"], np.asarray(doc["centroids"]), build_id=doc["build_id"])


def _normalized(vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    return vector / norm if norm > 0 else vector


class EmbeddingIntentClassifier:
    """Intent from the utterance's average embedding direction, scored by
    one-vs-rest hinge classifiers (same trainer as the tf-idf model)."""

    def __init__(
        self,
        classes: Sequence[str],
        weights: np.ndarray,
        bias: np.ndarray,
        build_id: str = "",
    ):
        self.classes = tuple(classes)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.build_id = build_id

    @classmethod
    def train(
        cls,
        train: NluDataset,
        table: EmbeddingTable,
        l2: float = DEFAULT_L2,
        epochs: int = DEFAULT_EPOCHS,
        seed: int = DEFAULT_SEED,
    ) -> "EmbeddingIntentClassifier":
        classes = train.intents
        if len(classes) < 2:
            raise ValueError("need at least two intent classes to train")
        index = {c: i for i, c in enumerate(classes)}
        features = [
            _normalized(embed_average(table, inst.tokens)) for inst in train.instances
        ]
        labels = np.array([index[inst.intent] for inst in train.instances])
        weights, bias = train_one_vs_rest(
            features, labels, len(classes), table.dim, l2=l2, epochs=epochs, seed=seed
        )
        return cls(classes, weights, bias, build_id=train.build_id)

    def predict(self, table: EmbeddingTable, tokens: Sequence[str]) -> tuple[str, float]:
        """Best class plus a logistic-squashed margin in [0, 1]. An utterance
        with no in-vocabulary token carries no evidence and scores 0.0."""
        vector = embed_average(table, tokens)
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            best = int(np.argmax(self.bias))
            return self.classes[best], 0.0
        margins = self.weights @ (vector / norm) + self.bias
        best = int(np.argmax(margins))
        return self.classes[best], 1.0 / (1.0 + math.exp(-margins[best]))

    def save(self, path: str | Path) -> None:
        save_model(
            path,
            "embedding-intent",
            {
                "classes": list(self.classes),
                "weights": self.weights.tolist(),
                "bias": self.bias.tolist(),
            },
            build_id=self.build_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingIntentClassifier":
        doc = load_model(path, "embedding-intent")
        return cls(
            doc["classes"],
            np.asarray(doc["weights"]),
            np.asarray(doc["bias"]),
            build_id=doc["build_id"],
        )


class EmbeddingSlotTagger:
    """Per-token BIO tagging: hinge classifiers over the token-plus-window
    embedding features, then BIO repair."""

    def __init__(
        self,
        tags: Sequence[str],
        weights: np.ndarray,
        bias: np.ndarray,
        build_id: str = "",
    ):
        self.tags = tuple(tags)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.build_id = build_id

    @classmethod
    def train(
        cls,
        train: NluDataset,
        table: EmbeddingTable,
        l2: float = DEFAULT_L2,
        epochs: int = SLOT_TAGGER_EPOCHS,
        seed: int = DEFAULT_SEED,
    ) -> "EmbeddingSlotTagger":
        if not train.instances:
            raise ValueError("cannot train a slot tagger on an empty dataset")
        tags = train.tags
        index = {t: i for i, t in enumerate(tags)}
        rows: list[np.ndarray] = []
        labels: list[int] = []
        for instance in train.instances:
            rows.extend(token_features(table, instance.tokens))
            labels.extend(index[tag] for tag in instance.tags)
        weights, bias = train_one_vs_rest(
            rows, np.array(labels), len(tags), 2 * table.dim, l2=l2, epochs=epochs, seed=seed
        )
        return cls(tags, weights, bias, build_id=train.build_id)

    def raw_tags(self, table: EmbeddingTable, tokens: Sequence[str]) -> tuple[str, ...]:
        if not tokens:
            return ()
        features = token_features(table, tokens)
        out = []
        for row in features:
            if not row.any():
                out.append("O")  # no evidence at all
                continue
            margins = self.weights @ row + self.bias
            out.append(self.tags[int(np.argmax(margins))])
        return tuple(out)

    def tag(self, table: EmbeddingTable, tokens: Sequence[str]) -> tuple[str, ...]:
        return bio_repair(self.raw_tags(table, tokens))

    def save(self, path: str | Path) -> None:
        save_model(
            path,
            "embedding-slots",
            {
                "tags": list(self.tags),
                "weights": self.weights.tolist(),
                "bias": self.bias.tolist(),
            },
            build_id=self.build_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingSlotTagger":
        doc = load_model(path, "embedding-slots")
        return cls(
            doc["tags"],
            np.asarray(doc["weights"]),
            np.asarray(doc["bias"]),
            build_id=doc["build_id"],
        )
