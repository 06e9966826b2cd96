"""Training-data construction: frequent conversational n-gram openers from
dialogue corpora, combined with the informative fragments of the seed
templates, then instantiated with concrete slot values.

The pipeline is a pure function of (config, seed): template-level split,
expression extraction per split, prefix x expression augmentation, and
seeded slot instantiation. Nothing may leak across splits, neither template
patterns nor exact utterance strings.
"""
from __future__ import annotations

import hashlib
import logging
import random
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from .core import tokenize
from .nlu.dataset import Instance, NluDataset, Split, tags_for_span_layout
from .templates import (
    Direction,
    Segment,
    SegmentKind,
    Template,
    TemplateSource,
    TemplateSyntaxError,
    compile_template,
    load_template_file,
)

logger = logging.getLogger(__name__)

WH_WORDS = ("where", "when", "which", "whose")
QUESTION_OPENERS = ("what", "who")
DETERMINERS = ("the", "a")

DEFAULT_INSTANCE_CAP = 8


class MissingVocabularyError(ValueError):
    def __init__(self, slot: str):
        super().__init__(f"no vocabulary values for slot {slot}")
        self.slot = slot


@dataclass(frozen=True)
class NgramPrefix:
    tokens: tuple[str, ...]
    frequency: int

    def __post_init__(self):
        if len(self.tokens) not in (2, 3, 4):
            raise ValueError(f"prefix length must be 2-4, got {self.tokens}")
        if self.frequency < 1:
            raise ValueError("prefix frequency must be at least 1")


class ExtractionRule(str, Enum):
    WH_QUESTION = "wh_question"
    DET_PHRASE = "det_phrase"


@dataclass(frozen=True)
class InformativeExpression:
    segments: tuple[Segment, ...]
    rule: ExtractionRule
    intent: str
    domain_path: tuple[str, ...]

    @property
    def pattern(self) -> str:
        return " ".join(s.pattern_text() for s in self.segments)


def extract_top_ngrams(corpora: Sequence[str | Path], k: int) -> list[NgramPrefix]:
    """Most frequent 2-, 3-, and 4-grams pooled over the corpora.

    One utterance per line, normalized like user input. Ties break
    lexicographically; asking for more n-grams than exist returns them all.
    Empty corpus files are skipped with a warning.
    """
    if not corpora:
        raise ValueError("no corpora given")
    if k < 1:
        raise ValueError("k must be at least 1")
    counts: Counter[tuple[str, ...]] = Counter()
    for corpus in corpora:
        text = Path(corpus).read_text(encoding="utf-8")
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            logger.warning("corpus %s is empty, skipping", corpus)
            continue
        for line in lines:
            tokens = tokenize(line)
            for n in (2, 3, 4):
                for i in range(len(tokens) - n + 1):
                    counts[tokens[i : i + n]] += 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [NgramPrefix(tokens, freq) for tokens, freq in ranked[:k]]


def extract_informative_expressions(templates: Iterable[Template]) -> list[InformativeExpression]:
    """Content-bearing fragments of templates, via two rules.

    (i) a template containing an embedded question word (where / when /
    which / whose) yields the suffix starting there; (ii) a template opening
    with what / who yields the phrase from its first `the` or `a` onward.
    Duplicates are removed; each expression keeps its source intent and the
    rule that produced it.
    """
    expressions: list[InformativeExpression] = []
    seen: set[tuple[tuple[Segment, ...], str]] = set()

    def emit(segments: tuple[Segment, ...], rule: ExtractionRule, template: Template) -> None:
        key = (segments, template.intent)
        if not segments or key in seen:
            return
        seen.add(key)
        expressions.append(
            InformativeExpression(segments, rule, template.intent, template.domain_path)
        )

    for template in templates:
        segments = template.segments
        for index, seg in enumerate(segments):
            if seg.kind is SegmentKind.LITERAL and seg.value in WH_WORDS:
                emit(segments[index:], ExtractionRule.WH_QUESTION, template)
                break
        first = segments[0]
        if first.kind is SegmentKind.LITERAL and first.value in QUESTION_OPENERS:
            for index, seg in enumerate(segments[1:], start=1):
                if seg.kind is SegmentKind.LITERAL and seg.value in DETERMINERS:
                    emit(segments[index:], ExtractionRule.DET_PHRASE, template)
                    break
    return expressions


def augment_templates(
    prefixes: Sequence[NgramPrefix],
    expressions: Sequence[InformativeExpression],
    slots: frozenset[str],
) -> list[Template]:
    """Compile every prefix + expression concatenation as a new nlu template.

    Each candidate keeps the expression's intent and domain path and is
    marked source=augmented. Duplicates collapse; candidates that fail to
    compile are skipped.
    """
    out: list[Template] = []
    seen: set[str] = set()
    failures = 0
    for prefix in prefixes:
        for expression in expressions:
            pattern = " ".join(prefix.tokens) + " " + expression.pattern
            try:
                template = compile_template(
                    pattern,
                    direction=Direction.NLU,
                    domain_path=expression.domain_path,
                    intent=expression.intent,
                    slots=slots,
                    source=TemplateSource.AUGMENTED,
                )
            except TemplateSyntaxError:
                failures += 1
                continue
            if template.id in seen:
                continue
            seen.add(template.id)
            out.append(template)
    if failures:
        logger.info("augmentation skipped %d uncompilable candidates", failures)
    return out


def load_slot_vocabulary(path: str | Path) -> dict[str, list[str]]:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    return {slot: [str(v) for v in values] for slot, values in raw.items()}


def instantiate_templates(
    templates: Sequence[Template],
    slot_vocab: Mapping[str, Sequence[str]],
    cap: int = DEFAULT_INSTANCE_CAP,
    seed: int = 0,
) -> list[Instance]:
    """Expand templates into labeled instances with sampled slot values.

    Sampling is seeded per template, so the result is independent of how
    the template list is chunked. Wildcards contribute no tokens. A
    placeholder without vocabulary raises MissingVocabularyError.
    """
    instances: list[Instance] = []
    for template in templates:
        placeholders = template.placeholders
        for name in placeholders:
            if not slot_vocab.get(name):
                raise MissingVocabularyError(name)
        rng = random.Random(f"{seed}:{template.id}")
        draws = 1 if not placeholders else cap
        seen_tokens: set[tuple[str, ...]] = set()
        for _ in range(draws):
            values = {name: rng.choice(slot_vocab[name]) for name in placeholders}
            tokens: list[str] = []
            layout: list[tuple[str | None, int]] = []
            for segment in template.segments:
                if segment.kind is SegmentKind.LITERAL:
                    tokens.append(segment.value)
                    layout.append((None, 1))
                elif segment.kind is SegmentKind.PLACEHOLDER:
                    value_tokens = tokenize(values[segment.value])
                    tokens.extend(value_tokens)
                    layout.append((segment.value, len(value_tokens)))
                # wildcards expand to nothing
            key = tuple(tokens)
            if key in seen_tokens:
                continue
            seen_tokens.add(key)
            instances.append(
                Instance(key, template.intent, tags_for_span_layout(layout))
            )
    return instances


@dataclass(frozen=True)
class DatasetStats:
    human_templates: dict[str, int]
    added_templates: dict[str, int]
    instances: dict[str, int]
    build_id: str

    def to_yaml(self) -> str:
        lines = [
            f"build_id: {self.build_id}",
            "rows:",
            f"  human_templates: {{train: {self.human_templates['train']}, test: {self.human_templates['test']}}}",
            f"  added_templates: {{train: {self.added_templates['train']}, test: {self.added_templates['test']}}}",
            f"  instances: {{train: {self.instances['train']}, test: {self.instances['test']}}}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AugmentConfig:
    corpora: tuple[Path, ...]
    seed_templates: Path
    slot_vocab: Path
    k_prefixes: int = 74
    instance_cap: int = 1
    train_fraction: float = 0.64
    seed: int = 13

    @classmethod
    def load(cls, path: str | Path) -> "AugmentConfig":
        path = Path(path)
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        base = path.parent

        def resolve(p: str) -> Path:
            candidate = Path(p)
            return candidate if candidate.is_absolute() else base / candidate

        return cls(
            corpora=tuple(resolve(p) for p in raw["corpora"]),
            seed_templates=resolve(raw["seed_templates"]),
            slot_vocab=resolve(raw["slot_vocab"]),
            k_prefixes=int(raw.get("k_prefixes", 74)),
            instance_cap=int(raw.get("instance_cap", 1)),
            train_fraction=float(raw.get("train_fraction", 0.64)),
            seed=int(raw.get("seed", 13)),
        )

    def fingerprint(self) -> str:
        material = "|".join(
            [
                *(p.read_text(encoding="utf-8") for p in self.corpora),
                self.seed_templates.read_text(encoding="utf-8"),
                self.slot_vocab.read_text(encoding="utf-8"),
                str(self.k_prefixes),
                str(self.instance_cap),
                str(self.train_fraction),
                str(self.seed),
            ]
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()[:12]


def split_templates(
    templates: Sequence[Template], train_fraction: float, seed: int
) -> tuple[list[Template], list[Template]]:
    """Seeded per-intent split so every intent keeps at least one training
    template; paraphrase leakage across splits is impossible because whole
    templates move as units."""
    by_intent: dict[str, list[Template]] = {}
    for template in templates:
        by_intent.setdefault(template.intent, []).append(template)
    train: list[Template] = []
    test: list[Template] = []
    for intent in sorted(by_intent):
        group = sorted(by_intent[intent], key=lambda t: t.id)
        random.Random(f"{seed}:split:{intent}").shuffle(group)
        n_train = max(1, round(train_fraction * len(group)))
        train.extend(group[:n_train])
        test.extend(group[n_train:])
    order = {t.id: i for i, t in enumerate(templates)}
    train.sort(key=lambda t: order[t.id])
    test.sort(key=lambda t: order[t.id])
    return train, test


def build_dataset(config: AugmentConfig) -> tuple[NluDataset, NluDataset, DatasetStats]:
    """Run the full pipeline: split, augment, instantiate, and tally."""
    slot_vocab = load_slot_vocabulary(config.slot_vocab)
    slots = frozenset(slot_vocab)
    seed_templates = [
        t
        for t in load_template_file(config.seed_templates, slots)
        if t.direction is Direction.NLU
    ]
    train_human, test_human = split_templates(
        seed_templates, config.train_fraction, config.seed
    )
    prefixes = extract_top_ngrams(config.corpora, config.k_prefixes)

    train_added = augment_templates(
        prefixes, extract_informative_expressions(train_human), slots
    )
    train_ids = {t.id for t in train_human} | {t.id for t in train_added}
    test_added = [
        t
        for t in augment_templates(
            prefixes, extract_informative_expressions(test_human), slots
        )
        if t.id not in train_ids
    ]

    train_instances = instantiate_templates(
        train_human + train_added, slot_vocab, config.instance_cap, config.seed
    )
    test_instances = instantiate_templates(
        test_human + test_added, slot_vocab, config.instance_cap, config.seed
    )
    train_strings = {instance.tokens for instance in train_instances}
    test_instances = [i for i in test_instances if i.tokens not in train_strings]

    build_id = config.fingerprint()
    train = NluDataset(tuple(train_instances), Split.TRAIN, build_id)
    test = NluDataset(tuple(test_instances), Split.TEST, build_id)
    stats = DatasetStats(
        human_templates={"train": len(train_human), "test": len(test_human)},
        added_templates={"train": len(train_added), "test": len(test_added)},
        instances={"train": len(train), "test": len(test)},
        build_id=build_id,
    )
    return train, test, stats
