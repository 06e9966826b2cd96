"""Shared dialogue types: utterances, states, and the intent/slot schema registry.

Every other component exchanges data through the value objects defined here.
All of them are immutable and safe to share across threads; the registry is
read-only after loading.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml


class SchemaError(ValueError):
    """Raised when a schema configuration file violates its own rules."""


class EmptyUtteranceError(ValueError):
    """Raised for input text that contains no alphanumeric character."""


class UnresolvedSlotsError(ValueError):
    """Raised when required slots are still missing after memory merging.

    Carries the partially merged state so callers can build a clarification
    reply from whatever was resolved.
    """

    def __init__(self, state: "DialogueState", missing: Sequence[str]):
        super().__init__(f"unresolved required slots: {', '.join(missing)}")
        self.state = state
        self.missing = tuple(missing)


# Alphanumeric runs stay together; every other non-space character becomes
# its own token.
_TOKEN_RE = re.compile(r"[a-z0-9]+|[^a-z0-9\s]")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase `text` and split it into word and punctuation tokens."""
    return tuple(_TOKEN_RE.findall(text.lower()))


@dataclass(frozen=True)
class Utterance:
    raw: str
    tokens: tuple[str, ...]
    turn_index: int = 0

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def normalize_utterance(raw: str, turn_index: int = 0) -> Utterance:
    """Normalize `raw` into an Utterance.

    Lowercases, collapses whitespace, and isolates punctuation into its own
    tokens. Deterministic. Raises EmptyUtteranceError when the text carries
    no alphanumeric character at all.
    """
    if not any(ch.isalnum() for ch in raw):
        raise EmptyUtteranceError("input contains no alphanumeric character")
    return Utterance(raw=raw, tokens=tokenize(raw), turn_index=turn_index)


class StateKind(str, Enum):
    INPUT = "input"
    RESPONSE = "response"


@dataclass(frozen=True)
class SlotValue:
    slot_type: str
    surface: str
    canonical: str | None = None

    def __post_init__(self):
        if not self.surface:
            raise ValueError("slot surface must be non-empty")


@dataclass(frozen=True)
class DialogueState:
    """Salient content of one utterance: domain path, intent, and slots."""

    kind: StateKind
    domain_path: tuple[str, ...]
    intent: str
    slots: Mapping[str, SlotValue] = field(default_factory=dict)
    confidence: float = 1.0
    turn_index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        object.__setattr__(self, "domain_path", tuple(self.domain_path))
        object.__setattr__(self, "slots", dict(self.slots))

    def with_slots(self, slots: Mapping[str, SlotValue]) -> "DialogueState":
        return DialogueState(
            kind=self.kind,
            domain_path=self.domain_path,
            intent=self.intent,
            slots=slots,
            confidence=self.confidence,
            turn_index=self.turn_index,
        )

    def slot_surface(self, name: str) -> str | None:
        value = self.slots.get(name)
        return value.surface if value else None


@dataclass(frozen=True)
class IntentSchema:
    name: str
    domain_path: tuple[str, ...]
    required: tuple[str, ...] = ()
    optional: tuple[str, ...] = ()
    answers: tuple[str, ...] = ()

    @property
    def input_slots(self) -> frozenset[str]:
        return frozenset(self.required) | frozenset(self.optional)

    @property
    def all_slots(self) -> frozenset[str]:
        return self.input_slots | frozenset(self.answers)


@dataclass(frozen=True)
class DomainNode:
    name: str
    children: tuple["DomainNode", ...] = ()
    intents: tuple[str, ...] = ()
    handler: str | None = None


class SchemaRegistry:
    """Read-only registry of the domain tree, intents, and slot inventory."""

    def __init__(
        self,
        root: DomainNode,
        intents: Mapping[str, IntentSchema],
        slot_inventory: Iterable[str],
        answer_slots: Iterable[str] = (),
        response_intents: Iterable[str] = (),
    ):
        self.root = root
        self.intents = dict(intents)
        self.slot_inventory = frozenset(slot_inventory)
        self.answer_slots = frozenset(answer_slots)
        self.response_intents = frozenset(response_intents)
        self._paths = _collect_paths(root)
        self._check()

    def _check(self) -> None:
        overlap = self.slot_inventory & self.answer_slots
        if overlap:
            raise SchemaError(f"slots declared both entity and answer: {sorted(overlap)}")
        for intent in self.intents.values():
            if tuple(intent.domain_path) not in self._paths:
                raise SchemaError(f"intent {intent.name}: unknown domain path {intent.domain_path}")
            for slot in intent.required + intent.optional:
                if slot not in self.slot_inventory:
                    raise SchemaError(f"intent {intent.name}: undeclared slot {slot}")
            for slot in intent.answers:
                if slot not in self.registered_slots:
                    raise SchemaError(f"intent {intent.name}: undeclared answer slot {slot}")

    @property
    def registered_slots(self) -> frozenset[str]:
        return self.slot_inventory | self.answer_slots

    @property
    def intent_names(self) -> frozenset[str]:
        return frozenset(self.intents)

    def is_domain_path(self, path: Sequence[str]) -> bool:
        return tuple(path) in self._paths

    def domain_path_of(self, intent: str) -> tuple[str, ...] | None:
        schema = self.intents.get(intent)
        return schema.domain_path if schema else None

    def intent_schema(self, intent: str) -> IntentSchema | None:
        return self.intents.get(intent)

    def iter_nodes(self) -> Iterable[DomainNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


def _collect_paths(root: DomainNode) -> set[tuple[str, ...]]:
    paths: set[tuple[str, ...]] = set()

    def walk(node: DomainNode, prefix: tuple[str, ...]) -> None:
        path = prefix + (node.name,)
        paths.add(path)
        seen = set()
        for child in node.children:
            if child.name in seen:
                raise SchemaError(f"duplicate sibling name {child.name} under {node.name}")
            seen.add(child.name)
            walk(child, path)

    walk(root, ())
    return paths


def load_schema(path: str | Path) -> SchemaRegistry:
    """Load the schema configuration file (domain tree, intents, slots)."""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or "tree" not in raw or "slots" not in raw:
        raise SchemaError(f"{path}: expected a mapping with 'tree' and 'slots' keys")

    slot_inventory = list(raw["slots"])
    answer_slots = list(raw.get("answer_slots", {}))
    intents: dict[str, IntentSchema] = {}

    def build(node_raw: dict, prefix: tuple[str, ...]) -> DomainNode:
        name = node_raw["name"]
        path = prefix + (name,)
        intent_names = []
        for intent_name, spec in (node_raw.get("intents") or {}).items():
            if intent_name in intents:
                raise SchemaError(f"intent {intent_name} declared under more than one domain")
            spec = spec or {}
            intents[intent_name] = IntentSchema(
                name=intent_name,
                domain_path=path,
                required=tuple(spec.get("required", ())),
                optional=tuple(spec.get("optional", ())),
                answers=tuple(spec.get("answers", ())),
            )
            intent_names.append(intent_name)
        children = tuple(build(child, path) for child in node_raw.get("children") or ())
        return DomainNode(
            name=name,
            children=children,
            intents=tuple(intent_names),
            handler=node_raw.get("handler"),
        )

    root = build(raw["tree"], ())
    return SchemaRegistry(
        root=root,
        intents=intents,
        slot_inventory=slot_inventory,
        answer_slots=answer_slots,
        response_intents=raw.get("response_intents", ()),
    )


def validate_state(state: DialogueState, registry: SchemaRegistry) -> list[str]:
    """Check a state against the registry; returns a list of violations.

    Violations are data, not errors: an empty list means the state satisfies
    every schema invariant.
    """
    violations: list[str] = []
    if not registry.is_domain_path(state.domain_path):
        violations.append(f"unknown domain path: {'>'.join(state.domain_path) or '(empty)'}")

    universal = state.intent in registry.response_intents
    schema = registry.intent_schema(state.intent)
    if schema is None and not universal:
        violations.append(f"unknown intent: {state.intent}")
    elif schema is not None and schema.domain_path != state.domain_path:
        violations.append(
            f"intent {state.intent} is not registered under {'>'.join(state.domain_path)}"
        )

    for name, value in state.slots.items():
        if name != value.slot_type:
            violations.append(f"slot key {name} holds a value typed {value.slot_type}")
        if name not in registry.registered_slots:
            violations.append(f"unknown slot: {name}")
            continue
        if universal or schema is None:
            continue
        allowed = schema.input_slots if state.kind is StateKind.INPUT else schema.all_slots
        if name not in allowed:
            violations.append(f"slot {name} is not declared for intent {state.intent}")
    return violations


def merge_slots(
    current: DialogueState,
    memory: Sequence[DialogueState],
    registry: SchemaRegistry,
) -> DialogueState:
    """Fill required-but-missing slots of `current` from recent states.

    `memory` must be ordered most-recent-first. Slots already present are
    never overwritten. Raises UnresolvedSlotsError (carrying the partially
    merged state) when required slots remain missing.
    """
    schema = registry.intent_schema(current.intent)
    if schema is None:
        return current

    merged = dict(current.slots)
    for name in schema.required:
        if name in merged:
            continue
        for past in memory:
            value = past.slots.get(name)
            if value is not None:
                merged[name] = value
                break

    result = current.with_slots(merged)
    missing = [name for name in schema.required if name not in merged]
    if missing:
        raise UnresolvedSlotsError(result, missing)
    return result
