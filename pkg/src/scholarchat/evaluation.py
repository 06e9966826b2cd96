"""Evaluation: the NLU metric grid and scripted probe scoring.

The grid reports intent and slot accuracy for the analytic random baseline,
the train-majority baseline, the HMM, the linear classifier, and the
embedding models, with dashes where a model does not apply. Probe files
drive two end-to-end scores over a live agent: diversity (share of
alternative phrasings answered correctly) and coverage (share of slot
values answered correctly). Probe correctness is a case-insensitive
substring match of an expected answer in the reply, a mechanical stand-in
for the human judgment the original study used.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import yaml

from .nlu.dataset import NluDataset, bio_spans
from .nlu.pipeline import MlModels

# Live-system reference scores (percent). Recorded for context only: they
# came from human judges and live web sources, so they are not reproducible
# offline.
REFERENCE_DIVERSITY = 45.83
REFERENCE_COVERAGE = 37.50
REFERENCE_NLU = {
    "random baseline": (2.67, 7.32),
    "majority baseline": (6.34, 64.96),
    "hmm": (None, 87.20),
    "linear classifier": (94.98, None),
    "embedding": (92.22, 98.45),
}


class SplitMismatchError(ValueError):
    pass


class ProbeFileError(ValueError):
    pass


@dataclass(frozen=True)
class MetricRow:
    model: str
    intent_accuracy: float | None
    slot_accuracy: float | None
    slot_span_f1: float | None = None


@dataclass(frozen=True)
class NluReport:
    rows: tuple[MetricRow, ...]
    build_id: str
    n_instances: int

    def row(self, model: str) -> MetricRow:
        for row in self.rows:
            if row.model == model:
                return row
        raise KeyError(model)

    def render(self) -> str:
        def cell(value: float | None) -> str:
            return "-" if value is None else f"{value:.2f}"

        lines = [
            f"{'model':<20} {'intent accuracy':>16} {'slot accuracy':>14}",
        ]
        for row in self.rows:
            lines.append(
                f"{row.model:<20} {cell(row.intent_accuracy):>16} {cell(row.slot_accuracy):>14}"
            )
        return "\n".join(lines)


def _span_f1(gold: Sequence[tuple], predicted: Sequence[tuple]) -> float:
    gold_set, pred_set = set(gold), set(predicted)
    if not gold_set and not pred_set:
        return 100.0
    true_positive = len(gold_set & pred_set)
    precision = true_positive / len(pred_set) if pred_set else 0.0
    recall = true_positive / len(gold_set) if gold_set else 0.0
    if precision + recall == 0:
        return 0.0
    return 200.0 * precision * recall / (precision + recall)


def evaluate_nlu(models: MlModels, test: NluDataset) -> NluReport:
    """Accuracy grid (percent) of all models on one test split.

    Raises SplitMismatchError when the models were trained against a
    different dataset build than `test`.
    """
    if models.intent.build_id and test.build_id and models.intent.build_id != test.build_id:
        raise SplitMismatchError(
            f"models built from {models.intent.build_id}, test split from {test.build_id}"
        )
    if not test.instances:
        raise ValueError("empty test split")

    n_tokens = sum(len(i.tags) for i in test.instances)

    def intent_accuracy(predict: Callable) -> float:
        hits = sum(predict(i.tokens) == i.intent for i in test.instances)
        return 100.0 * hits / len(test.instances)

    def slot_scores(tag: Callable) -> tuple[float, float]:
        hits = 0
        gold_spans: list[tuple] = []
        pred_spans: list[tuple] = []
        for index, instance in enumerate(test.instances):
            predicted = tag(instance.tokens)
            hits += sum(a == b for a, b in zip(predicted, instance.tags))
            gold_spans.extend((index, *s) for s in bio_spans(instance.tags))
            pred_spans.extend((index, *s) for s in bio_spans(predicted))
        return 100.0 * hits / n_tokens, _span_f1(gold_spans, pred_spans)

    # analytic random baseline: expected accuracy of a uniform guess
    random_intent = 100.0 / len(models.intent.classes)
    random_slot = 100.0 / len(models.slots.tags)

    majority_intent_label = models.baselines.get("majority_intent")
    majority_tag_label = models.baselines.get("majority_tag")
    majority_intent = 100.0 * sum(
        i.intent == majority_intent_label for i in test.instances
    ) / len(test.instances)
    majority_slot = 100.0 * sum(
        t == majority_tag_label for i in test.instances for t in i.tags
    ) / n_tokens

    hmm_slot, hmm_f1 = slot_scores(models.hmm.tag) if models.hmm else (None, None)
    linear_intent = intent_accuracy(
        lambda tokens: models.intent.predict(models.vectorizer, tokens)[0]
    )
    embedding_intent = (
        intent_accuracy(lambda tokens: models.intent_embedding.predict(models.table, tokens)[0])
        if models.intent_embedding
        else None
    )
    embedding_slot, embedding_f1 = slot_scores(lambda tokens: models.slots.tag(models.table, tokens))

    rows = (
        MetricRow("random baseline", random_intent, random_slot),
        MetricRow("majority baseline", majority_intent, majority_slot),
        MetricRow("hmm", None, hmm_slot, hmm_f1),
        MetricRow("linear classifier", linear_intent, None),
        MetricRow("embedding", embedding_intent, embedding_slot, embedding_f1),
    )
    return NluReport(rows=rows, build_id=test.build_id, n_instances=len(test.instances))


@dataclass(frozen=True)
class ProbeOutcome:
    key: str
    asked: str
    reply: str
    correct: bool


@dataclass(frozen=True)
class ProbeReport:
    outcomes: tuple[ProbeOutcome, ...]

    @property
    def percent(self) -> float:
        if not self.outcomes:
            return 0.0
        return 100.0 * sum(o.correct for o in self.outcomes) / len(self.outcomes)


Agent = Callable[[str, str], str]  # (session id, user text) -> reply text


def _matches(reply: str, expected: Sequence[str]) -> bool:
    lowered = reply.lower()
    return any(e.lower() in lowered for e in expected)


def evaluate_diversity(probe_path: str | Path, agent: Agent) -> ProbeReport:
    """Share of alternative formulations answered correctly.

    Each probe block names one piece of information, several formulations,
    and the expected-answer substrings. Every formulation runs in a fresh
    session so context cannot leak between phrasings.
    """
    raw = yaml.safe_load(Path(probe_path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or "probes" not in raw:
        raise ProbeFileError(f"{probe_path}: expected a mapping with a 'probes' list")
    outcomes = []
    for probe in raw["probes"]:
        try:
            key = probe["key"]
            formulations = probe["formulations"]
            expected = probe["expect"]
        except (TypeError, KeyError) as exc:
            raise ProbeFileError(f"{probe_path}: malformed probe block ({exc})") from exc
        for number, text in enumerate(formulations):
            reply = agent(f"diversity:{key}:{number}", text)
            outcomes.append(ProbeOutcome(key, text, reply, _matches(reply, expected)))
    return ProbeReport(tuple(outcomes))


def evaluate_coverage(probe_path: str | Path, agent: Agent) -> ProbeReport:
    """Share of slot values answered correctly through a fixed template."""
    raw = yaml.safe_load(Path(probe_path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or "probes" not in raw:
        raise ProbeFileError(f"{probe_path}: expected a mapping with a 'probes' list")
    outcomes = []
    for probe in raw["probes"]:
        try:
            template = probe["template"]
            slot = probe["slot"]
            values = probe["values"]
        except (TypeError, KeyError) as exc:
            raise ProbeFileError(f"{probe_path}: malformed probe block ({exc})") from exc
        for number, entry in enumerate(values):
            value, expected = entry["value"], entry["expect"]
            text = template.replace("{" + slot + "}", value)
            reply = agent(f"coverage:{slot}:{number}", text)
            outcomes.append(ProbeOutcome(f"{slot}={value}", text, reply, _matches(reply, expected)))
    return ProbeReport(tuple(outcomes))
