"""Dialogue management: the skill tree, active context paths, and memory.

Routing keeps one active root-to-node path per session. An input whose
intent is handled by the terminal of that path (or any ancestor on it)
stays there; otherwise the whole path deactivates and the unique path to
the owning node activates. General-branch skills are one-shots: they answer
without disturbing an active task context. Unroutable intents land in the
fallback node.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .core import (
    DialogueState,
    DomainNode,
    IntentSchema,
    SchemaRegistry,
    UnresolvedSlotsError,
    merge_slots,
)
from .templates import Direction, Template

DEFAULT_MEMORY_CAPACITY = 50

GENERAL_BRANCH = "General"
FALLBACK_INTENT = "fallback"


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class SkillTree:
    root: DomainNode
    owner: dict[str, tuple[str, ...]]  # intent -> owning node path
    handlers: dict[tuple[str, ...], str]  # node path -> skill implementation id

    def node_at(self, path: Sequence[str]) -> DomainNode | None:
        node = self.root
        if not path or path[0] != node.name:
            return None
        for name in path[1:]:
            node = next((c for c in node.children if c.name == name), None)
            if node is None:
                return None
        return node

    @property
    def fallback_path(self) -> tuple[str, ...]:
        return self.owner[FALLBACK_INTENT]


def build_tree(registry: SchemaRegistry, known_handlers: frozenset[str]) -> SkillTree:
    """Validate the configured domain tree and index intent ownership.

    Errors: an intent owned by two nodes, or an intent-bearing node whose
    handler id has no implementation.
    """
    owner: dict[str, tuple[str, ...]] = {}
    handlers: dict[tuple[str, ...], str] = {}

    def walk(node: DomainNode, prefix: tuple[str, ...]) -> None:
        path = prefix + (node.name,)
        if node.intents:
            if node.handler is None:
                raise TreeError(f"node {'>'.join(path)} declares intents but no handler")
            if node.handler not in known_handlers:
                raise TreeError(f"node {'>'.join(path)}: unknown handler id {node.handler!r}")
            handlers[path] = node.handler
            for intent in node.intents:
                if intent in owner:
                    raise TreeError(f"intent {intent} owned by two nodes")
                owner[intent] = path
        for child in node.children:
            walk(child, path)

    walk(registry.root, ())
    return SkillTree(root=registry.root, owner=owner, handlers=handlers)


@dataclass(frozen=True)
class ActivePath:
    nodes: tuple[str, ...]
    activated_turn: int


class MemoryStack:
    """Bounded stack of input and response states, most recent on top."""

    def __init__(self, capacity: int = DEFAULT_MEMORY_CAPACITY):
        self.capacity = capacity
        self._states: list[DialogueState] = []

    def push(self, state: DialogueState) -> None:
        self._states.append(state)
        if len(self._states) > self.capacity:
            del self._states[0 : len(self._states) - self.capacity]

    def recent(self) -> tuple[DialogueState, ...]:
        return tuple(reversed(self._states))

    def __len__(self) -> int:
        return len(self._states)

    def __iter__(self):
        return iter(self._states)


@dataclass
class Session:
    id: str
    memory: MemoryStack = field(default_factory=MemoryStack)
    active_path: ActivePath | None = None
    created: float = 0.0
    last_active: float = 0.0
    turn_counter: int = 0
    last_template_id: str | None = None


def route(
    session: Session, state: DialogueState, tree: SkillTree
) -> tuple[tuple[str, ...], ActivePath | None]:
    """Pick the target node for an input state and the session's new active
    path. Deterministic given (session state, input)."""
    intent = state.intent

    if session.active_path is not None:
        path = session.active_path.nodes
        for depth in range(len(path), 0, -1):
            node = tree.node_at(path[:depth])
            if node is not None and intent in node.intents:
                return path[:depth], session.active_path

    owner = tree.owner.get(intent)
    if owner is None:
        return tree.fallback_path, session.active_path
    if len(owner) > 1 and owner[1] == GENERAL_BRANCH:
        return owner, session.active_path
    return owner, ActivePath(owner, state.turn_index)


def resolve_followup(
    session: Session, state: DialogueState, registry: SchemaRegistry
) -> DialogueState:
    """Fill required slots from the session's memory stack.

    Raises UnresolvedSlotsError when memory cannot supply them either.
    """
    return merge_slots(state, session.memory.recent(), registry)


def push_memory(
    session: Session, state: DialogueState, responses: Iterable[DialogueState]
) -> None:
    session.memory.push(state)
    for response in responses:
        session.memory.push(response)


def _derive_intent_schemas(
    path: tuple[str, ...],
    nlu_templates: Sequence[Template],
    nlg_templates: Sequence[Template],
    registry: SchemaRegistry,
) -> dict[str, IntentSchema]:
    """Slot schemas for newly registered intents, derived from their
    templates: slots every nlu template mentions are required, the rest
    optional; nlg-only slots become answer slots."""
    schemas: dict[str, IntentSchema] = {}
    intents = {t.intent for t in nlu_templates} | {t.intent for t in nlg_templates}
    for intent in sorted(intents):
        nlu_sets = [set(t.placeholders) for t in nlu_templates if t.intent == intent]
        union = set().union(*nlu_sets) if nlu_sets else set()
        required = set.intersection(*nlu_sets) if nlu_sets else set()
        nlg_slots = {
            name
            for t in nlg_templates
            if t.intent == intent
            for name in t.placeholders
        }
        answers = {s for s in nlg_slots if s not in union} | (
            nlg_slots & registry.answer_slots
        )
        schemas[intent] = IntentSchema(
            name=intent,
            domain_path=path,
            required=tuple(sorted(required)),
            optional=tuple(sorted(union - required)),
            answers=tuple(sorted(answers)),
        )
    return schemas


def register_skill(
    tree: SkillTree,
    registry: SchemaRegistry,
    parent_name: str,
    node_name: str,
    nlu_templates: Sequence[Template],
    nlg_templates: Sequence[Template],
    handler_id: str,
    known_handlers: frozenset[str],
) -> tuple[SkillTree, SchemaRegistry]:
    """Attach a new skill node under `parent_name` and make it routable.

    The caller merges the given template lists into its matcher and
    generator sets. Errors: unknown or ambiguous parent, duplicate sibling,
    intents owned elsewhere, no NLG templates, unknown handler.
    """
    if not nlg_templates or not any(t.direction is Direction.NLG for t in nlg_templates):
        raise TreeError(f"skill {node_name} has no nlg templates and could not respond")
    if handler_id not in known_handlers:
        raise TreeError(f"unknown handler id {handler_id!r}")

    matches: list[tuple[str, ...]] = []

    def find(node: DomainNode, prefix: tuple[str, ...]) -> None:
        path = prefix + (node.name,)
        if node.name == parent_name:
            matches.append(path)
        for child in node.children:
            find(child, path)

    find(registry.root, ())
    if not matches:
        raise TreeError(f"parent node {parent_name!r} does not exist")
    if len(matches) > 1:
        raise TreeError(f"parent name {parent_name!r} is ambiguous")
    parent_path = matches[0]

    parent = tree.node_at(parent_path)
    if any(child.name == node_name for child in parent.children):
        raise TreeError(f"node {node_name!r} already registered under {parent_name!r}")

    new_path = parent_path + (node_name,)
    new_intents = {t.intent for t in nlu_templates} | {t.intent for t in nlg_templates}
    for intent in sorted(new_intents):
        if intent in tree.owner:
            raise TreeError(f"intent {intent} owned by two nodes")
    for template in list(nlu_templates) + list(nlg_templates):
        if template.domain_path != new_path:
            raise TreeError(
                f"template {template.id} labeled {'>'.join(template.domain_path)}, "
                f"expected {'>'.join(new_path)}"
            )

    schemas = _derive_intent_schemas(new_path, nlu_templates, nlg_templates, registry)
    new_node = DomainNode(
        name=node_name,
        intents=tuple(sorted(new_intents)),
        handler=handler_id,
    )

    def rebuild(node: DomainNode, prefix: tuple[str, ...]) -> DomainNode:
        path = prefix + (node.name,)
        children = tuple(rebuild(c, path) for c in node.children)
        if path == parent_path:
            children = children + (new_node,)
        return replace(node, children=children)

    new_root = rebuild(registry.root, ())
    new_registry = SchemaRegistry(
        root=new_root,
        intents={**registry.intents, **schemas},
        slot_inventory=registry.slot_inventory,
        answer_slots=registry.answer_slots,
        response_intents=registry.response_intents,
    )
    return build_tree(new_registry, known_handlers), new_registry
