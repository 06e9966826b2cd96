"""TF-IDF utterance vectors.

tf is the raw in-utterance count divided by utterance length, idf is
ln(N / df) with document frequencies counted over the training split only.
Vectors are L2-normalized; an all-zero vector stays zero.
"""
from __future__ import annotations

import math
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import NluDataset
from .model_io import load_model, save_model


class TfidfVectorizer:
    def __init__(self, vocabulary: dict[str, int], idf: np.ndarray, build_id: str = ""):
        self.vocabulary = vocabulary
        self.idf = np.asarray(idf, dtype=np.float64)
        self.build_id = build_id

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    @classmethod
    def fit(cls, train: NluDataset) -> "TfidfVectorizer":
        if not train.instances:
            raise ValueError("cannot fit tf-idf on an empty dataset")
        df: Counter[str] = Counter()
        for instance in train.instances:
            df.update(set(instance.tokens))
        vocabulary = {token: index for index, token in enumerate(sorted(df))}
        n_docs = len(train.instances)
        idf = np.zeros(len(vocabulary))
        for token, index in vocabulary.items():
            idf[index] = math.log(n_docs / df[token])
        return cls(vocabulary, idf, build_id=train.build_id)

    def transform_pairs(self, tokens: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Sparse form of the vector: (sorted indices, values). Unknown tokens
        contribute nothing."""
        counts = Counter(tokens)
        length = len(tokens)
        indices, values = [], []
        for token, count in counts.items():
            index = self.vocabulary.get(token)
            if index is None:
                continue
            indices.append(index)
            values.append((count / length) * self.idf[index])
        if not indices:
            return np.empty(0, dtype=np.int64), np.empty(0)
        order = np.argsort(indices)
        indices = np.asarray(indices, dtype=np.int64)[order]
        values = np.asarray(values, dtype=np.float64)[order]
        norm = float(np.sqrt((values**2).sum()))
        if norm > 0:
            values = values / norm
        return indices, values

    def transform(self, tokens: Sequence[str]) -> np.ndarray:
        vector = np.zeros(self.dim)
        indices, values = self.transform_pairs(tokens)
        vector[indices] = values
        return vector

    def save(self, path: str | Path) -> None:
        save_model(
            path,
            "tfidf",
            {"vocabulary": self.vocabulary, "idf": self.idf.tolist()},
            build_id=self.build_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "TfidfVectorizer":
        doc = load_model(path, "tfidf")
        return cls(doc["vocabulary"], np.asarray(doc["idf"]), build_id=doc["build_id"])
