"""One-vs-rest max-margin intent classifier on tf-idf vectors.

Trained by deterministic epoch-based subgradient descent on L2-regularized
hinge loss (no external solver). A fixed shuffle seed makes retraining
reproduce bit-identical weights.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import NluDataset
from .model_io import load_model, save_model
from .subgradient import DEFAULT_EPOCHS, DEFAULT_L2, DEFAULT_SEED, train_one_vs_rest
from .tfidf import TfidfVectorizer


class LinearIntentClassifier:
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
        if self.weights.shape[0] != len(self.classes):
            raise ValueError("one weight row per class required")
        self.build_id = build_id

    @classmethod
    def train(
        cls,
        train: NluDataset,
        vectorizer: TfidfVectorizer,
        l2: float = DEFAULT_L2,
        epochs: int = DEFAULT_EPOCHS,
        seed: int = DEFAULT_SEED,
    ) -> "LinearIntentClassifier":
        classes = train.intents
        if len(classes) < 2:
            raise ValueError("need at least two intent classes to train")
        class_index = {c: i for i, c in enumerate(classes)}
        n_classes, dim = len(classes), vectorizer.dim

        features = [vectorizer.transform_pairs(inst.tokens) for inst in train.instances]
        labels = np.array([class_index[inst.intent] for inst in train.instances])
        weights, bias = train_one_vs_rest(
            features, labels, n_classes, dim, l2=l2, epochs=epochs, seed=seed
        )
        return cls(classes, weights, bias, build_id=train.build_id)

    def margins(self, vectorizer: TfidfVectorizer, tokens: Sequence[str]) -> np.ndarray:
        indices, values = vectorizer.transform_pairs(tokens)
        if indices.size == 0:
            return self.bias.copy()
        return self.weights[:, indices] @ values + self.bias

    def predict(
        self, vectorizer: TfidfVectorizer, tokens: Sequence[str]
    ) -> tuple[str, float]:
        """Best class and a confidence in [0, 1].

        The winning margin goes through a logistic squash. Classes are stored
        sorted, so argmax resolves ties toward the alphabetically first name.
        An utterance with no in-vocabulary token carries no evidence at all
        and scores 0.0.
        """
        indices, values = vectorizer.transform_pairs(tokens)
        if indices.size == 0:
            best = int(np.argmax(self.bias))
            return self.classes[best], 0.0
        margins = self.weights[:, indices] @ values + self.bias
        best = int(np.argmax(margins))
        return self.classes[best], 1.0 / (1.0 + math.exp(-margins[best]))

    def save(self, path: str | Path) -> None:
        save_model(
            path,
            "linear-intent",
            {
                "classes": list(self.classes),
                "weights": self.weights.tolist(),
                "bias": self.bias.tolist(),
            },
            build_id=self.build_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "LinearIntentClassifier":
        doc = load_model(path, "linear-intent")
        return cls(
            doc["classes"],
            np.asarray(doc["weights"]),
            np.asarray(doc["bias"]),
            build_id=doc["build_id"],
        )
