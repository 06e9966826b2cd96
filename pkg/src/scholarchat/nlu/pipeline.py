"""Full NLU: rule templates first, ML models as the fallback path.

The rule matcher is highly precise, so any template hit wins outright with
confidence 1.0. When no template covers the utterance, intent comes from the
linear max-margin classifier and slots from the embedding tagger. Inputs the
models cannot ground (no in-vocabulary token, or a score under the
threshold) route to the fallback intent.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..core import DialogueState, SchemaRegistry, SlotValue, StateKind, Utterance
from ..templates import Template, match_utterance
from .dataset import bio_spans
from .embeddings import (
    EmbeddingIntentClassifier,
    EmbeddingSlotTagger,
    EmbeddingTable,
)
from .hmm import HmmSlotTagger
from .linear import LinearIntentClassifier
from .tfidf import TfidfVectorizer

DEFAULT_CONFIDENCE_THRESHOLD = 0.3

FALLBACK_INTENT = "fallback"

MODEL_FILES = {
    "vectorizer": "tfidf.json",
    "intent": "intent_linear.json",
    "intent_embedding": "intent_embedding.json",
    "hmm": "slots_hmm.json",
    "slots": "slots_embedding.json",
    "baselines": "baselines.json",
}


@dataclass
class MlModels:
    vectorizer: TfidfVectorizer
    intent: LinearIntentClassifier
    slots: EmbeddingSlotTagger
    table: EmbeddingTable
    intent_embedding: EmbeddingIntentClassifier | None = None
    hmm: HmmSlotTagger | None = None
    baselines: dict = field(default_factory=dict)

    def save(self, models_dir: str | Path) -> None:
        models_dir = Path(models_dir)
        models_dir.mkdir(parents=True, exist_ok=True)
        self.vectorizer.save(models_dir / MODEL_FILES["vectorizer"])
        self.intent.save(models_dir / MODEL_FILES["intent"])
        self.slots.save(models_dir / MODEL_FILES["slots"])
        if self.intent_embedding is not None:
            self.intent_embedding.save(models_dir / MODEL_FILES["intent_embedding"])
        if self.hmm is not None:
            self.hmm.save(models_dir / MODEL_FILES["hmm"])
        (models_dir / MODEL_FILES["baselines"]).write_text(
            json.dumps(self.baselines, sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, models_dir: str | Path, table: EmbeddingTable) -> "MlModels":
        models_dir = Path(models_dir)
        embedding_path = models_dir / MODEL_FILES["intent_embedding"]
        hmm_path = models_dir / MODEL_FILES["hmm"]
        baselines_path = models_dir / MODEL_FILES["baselines"]
        baselines = (
            json.loads(baselines_path.read_text(encoding="utf-8"))
            if baselines_path.exists()
            else {}
        )
        return cls(
            vectorizer=TfidfVectorizer.load(models_dir / MODEL_FILES["vectorizer"]),
            intent=LinearIntentClassifier.load(models_dir / MODEL_FILES["intent"]),
            slots=EmbeddingSlotTagger.load(models_dir / MODEL_FILES["slots"]),
            table=table,
            intent_embedding=(
                EmbeddingIntentClassifier.load(embedding_path)
                if embedding_path.exists()
                else None
            ),
            hmm=HmmSlotTagger.load(hmm_path) if hmm_path.exists() else None,
            baselines=baselines,
        )

    @classmethod
    def train(cls, train_split, table: EmbeddingTable) -> "MlModels":
        """Train the full model bundle on one dataset split."""
        vectorizer = TfidfVectorizer.fit(train_split)
        majority_intent = Counter(i.intent for i in train_split.instances).most_common(1)
        majority_tag = Counter(
            t for i in train_split.instances for t in i.tags
        ).most_common(1)
        return cls(
            vectorizer=vectorizer,
            intent=LinearIntentClassifier.train(train_split, vectorizer),
            slots=EmbeddingSlotTagger.train(train_split, table),
            table=table,
            intent_embedding=EmbeddingIntentClassifier.train(train_split, table),
            hmm=HmmSlotTagger.train(train_split),
            baselines={
                "majority_intent": majority_intent[0][0] if majority_intent else None,
                "majority_tag": majority_tag[0][0] if majority_tag else None,
            },
        )


class NluPipeline:
    def __init__(
        self,
        templates: list[Template],
        registry: SchemaRegistry,
        models: MlModels | None = None,
        threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    ):
        self.templates = list(templates)
        self.registry = registry
        self.models = models
        self.threshold = threshold

    def parse(self, utterance: Utterance) -> DialogueState:
        hit = match_utterance(self.templates, utterance)
        if hit is not None:
            return hit[1]
        if self.models is None:
            return self._fallback(utterance)
        return self._parse_ml(utterance)

    def _parse_ml(self, utterance: Utterance) -> DialogueState:
        models = self.models
        intent, score = models.intent.predict(models.vectorizer, utterance.tokens)
        if score < self.threshold:
            return self._fallback(utterance, confidence=score)
        schema = self.registry.intent_schema(intent)
        if schema is None:
            return self._fallback(utterance, confidence=score)

        tags = models.slots.tag(models.table, utterance.tokens)
        slots: dict[str, SlotValue] = {}
        for name, start, end in bio_spans(tags):
            # only slots the intent declares survive; first span of a type wins
            if name in schema.input_slots and name not in slots:
                slots[name] = SlotValue(name, " ".join(utterance.tokens[start:end]))
        return DialogueState(
            kind=StateKind.INPUT,
            domain_path=schema.domain_path,
            intent=intent,
            slots=slots,
            confidence=score,
            turn_index=utterance.turn_index,
        )

    def _fallback(self, utterance: Utterance, confidence: float = 0.0) -> DialogueState:
        path = self.registry.domain_path_of(FALLBACK_INTENT) or ("Master",)
        return DialogueState(
            kind=StateKind.INPUT,
            domain_path=path,
            intent=FALLBACK_INTENT,
            slots={},
            confidence=confidence,
            turn_index=utterance.turn_index,
        )
