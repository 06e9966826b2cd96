"""First-order HMM slot tagger over BIO sequences.

Maximum-likelihood start/transition/emission estimates with add-one
smoothing; every unknown token shares one uniform smoothing cell per state.
Decoding is log-space Viterbi followed by BIO repair.
"""
from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import NluDataset, bio_repair
from .model_io import load_model, save_model


class HmmSlotTagger:
    def __init__(
        self,
        states: Sequence[str],
        vocabulary: dict[str, int],
        start: np.ndarray,
        transition: np.ndarray,
        emission: np.ndarray,
        build_id: str = "",
    ):
        self.states = tuple(states)
        self.vocabulary = vocabulary
        self.start = np.asarray(start, dtype=np.float64)
        self.transition = np.asarray(transition, dtype=np.float64)
        # emission has one extra column: the unknown-token cell
        self.emission = np.asarray(emission, dtype=np.float64)
        self.build_id = build_id
        self._log_start = np.log(self.start)
        self._log_transition = np.log(self.transition)
        self._log_emission = np.log(self.emission)

    @classmethod
    def train(cls, train: NluDataset) -> "HmmSlotTagger":
        if not train.instances:
            raise ValueError("cannot train an HMM on an empty dataset")
        states = train.tags
        state_index = {s: i for i, s in enumerate(states)}
        vocabulary = {
            token: index
            for index, token in enumerate(sorted({t for i in train.instances for t in i.tokens}))
        }
        n_states, n_tokens = len(states), len(vocabulary)

        start_counts = np.zeros(n_states)
        transition_counts = np.zeros((n_states, n_states))
        emission_counts = np.zeros((n_states, n_tokens))
        for instance in train.instances:
            tags = [state_index[t] for t in instance.tags]
            start_counts[tags[0]] += 1
            for left, right in zip(tags, tags[1:]):
                transition_counts[left, right] += 1
            for token, tag in zip(instance.tokens, tags):
                emission_counts[tag, vocabulary[token]] += 1

        start = (start_counts + 1) / (start_counts.sum() + n_states)
        transition = (transition_counts + 1) / (
            transition_counts.sum(axis=1, keepdims=True) + n_states
        )
        emitted = emission_counts.sum(axis=1, keepdims=True)
        emission = np.concatenate(
            [emission_counts + 1, np.ones((n_states, 1))], axis=1
        ) / (emitted + n_tokens + 1)
        return cls(states, vocabulary, start, transition, emission, build_id=train.build_id)

    def observation_indices(self, tokens: Sequence[str]) -> list[int]:
        unknown = len(self.vocabulary)
        return [self.vocabulary.get(token, unknown) for token in tokens]

    def viterbi_path(self, tokens: Sequence[str]) -> tuple[str, ...]:
        """Raw max-probability state path (before BIO repair).

        np.argmax picks the first of equal scores, and states are sorted, so
        ties resolve toward the path whose reversed tag tuple is smallest.
        """
        observations = self.observation_indices(tokens)
        if not observations:
            return ()
        n_states = len(self.states)
        dp = self._log_start + self._log_emission[:, observations[0]]
        pointers = np.zeros((len(observations), n_states), dtype=int)
        for t in range(1, len(observations)):
            candidate = dp[:, None] + self._log_transition
            pointers[t] = np.argmax(candidate, axis=0)
            dp = candidate[pointers[t], np.arange(n_states)] + self._log_emission[
                :, observations[t]
            ]
        best = int(np.argmax(dp))
        path = [best]
        for t in range(len(observations) - 1, 0, -1):
            best = int(pointers[t][best])
            path.append(best)
        path.reverse()
        return tuple(self.states[i] for i in path)

    def tag(self, tokens: Sequence[str]) -> tuple[str, ...]:
        if not tokens:
            return ()
        return bio_repair(self.viterbi_path(tokens))

    def save(self, path: str | Path) -> None:
        save_model(
            path,
            "hmm-slots",
            {
                "states": list(self.states),
                "vocabulary": self.vocabulary,
                "start": self.start.tolist(),
                "transition": self.transition.tolist(),
                "emission": self.emission.tolist(),
            },
            build_id=self.build_id,
        )

    @classmethod
    def load(cls, path: str | Path) -> "HmmSlotTagger":
        doc = load_model(path, "hmm-slots")
        return cls(
            doc["states"],
            doc["vocabulary"],
            np.asarray(doc["start"]),
            np.asarray(doc["transition"]),
            np.asarray(doc["emission"]),
            build_id=doc["build_id"],
        )
