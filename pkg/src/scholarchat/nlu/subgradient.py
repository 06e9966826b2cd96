"""Shared one-vs-rest subgradient descent on L2-regularized hinge loss.

Both the tf-idf intent classifier and the embedding-feature models train
with this routine. Deterministic: a fixed shuffle seed reproduces bitwise
identical weights. Weights are stored as scale * matrix so the per-step
shrink is O(1); the bias rides along as a weight on an implicit constant
feature (an unregularized bias diverges at these step sizes).
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

DEFAULT_L2 = 1e-4
DEFAULT_EPOCHS = 50
DEFAULT_SEED = 7


def train_one_vs_rest(
    features: Sequence,
    labels: np.ndarray,
    n_classes: int,
    dim: int,
    l2: float = DEFAULT_L2,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = DEFAULT_SEED,
) -> tuple[np.ndarray, np.ndarray]:
    """Train C one-vs-rest hinge classifiers over sparse or dense samples.

    `features[i]` is either a dense 1-d array or an (indices, values) pair.
    Returns (weights (C, dim), bias (C,)).
    """
    scale = 1.0
    matrix = np.zeros((n_classes, dim))
    bias = np.zeros(n_classes)
    rng = np.random.default_rng(seed)
    step = 1
    for _ in range(epochs):
        for sample in rng.permutation(len(features)):
            step += 1
            eta = 1.0 / (l2 * step)
            feature = features[sample]
            sparse = isinstance(feature, tuple)
            if sparse:
                indices, values = feature
                margins = scale * (matrix[:, indices] @ values + bias)
            else:
                margins = scale * (matrix @ feature + bias)
            signs = np.full(n_classes, -1.0)
            signs[labels[sample]] = 1.0
            violating = signs * margins < 1.0
            scale *= 1.0 - eta * l2
            if scale < 1e-9:
                matrix *= scale
                bias *= scale
                scale = 1.0
            if violating.any():
                rows = np.flatnonzero(violating)
                if sparse:
                    if indices.size:
                        matrix[np.ix_(rows, indices)] += np.outer(
                            (eta / scale) * signs[rows], values
                        )
                else:
                    matrix[rows] += np.outer((eta / scale) * signs[rows], feature)
                bias[rows] += (eta / scale) * signs[rows]
    return scale * matrix, scale * bias
