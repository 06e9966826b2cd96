"""Response generation: pick the most informative fillable template, render.

Candidates are the nlg templates of the responding skill. Only templates
whose placeholders are all filled by the response state are eligible; among
those with the maximal placeholder count one is chosen uniformly at random
(seeded). When several maximal templates exist, the immediately previous
choice is avoided so consecutive identical responses do not repeat.
"""
from __future__ import annotations

import random
from typing import Sequence

from .core import DialogueState
from .templates import Direction, Template, render_template


class NoFillableTemplateError(LookupError):
    def __init__(self, intent: str):
        super().__init__(f"no nlg template fillable for intent {intent}")
        self.intent = intent


def fillable_templates(
    candidates: Sequence[Template], state: DialogueState
) -> list[Template]:
    filled = {name for name, value in state.slots.items() if value.surface}
    return [
        t
        for t in candidates
        if t.direction is Direction.NLG and set(t.placeholders) <= filled
    ]


def select_template(
    candidates: Sequence[Template],
    state: DialogueState,
    rng: random.Random,
    avoid_id: str | None = None,
) -> Template:
    """Seeded-uniform choice among the maximally fillable candidates."""
    eligible = fillable_templates(candidates, state)
    if not eligible:
        raise NoFillableTemplateError(state.intent)
    top = max(len(t.placeholders) for t in eligible)
    maximal = sorted(
        (t for t in eligible if len(t.placeholders) == top), key=lambda t: t.id
    )
    if avoid_id is not None and len(maximal) > 1:
        maximal = [t for t in maximal if t.id != avoid_id] or maximal
    return maximal[rng.randrange(len(maximal))]


def generate_response(
    state: DialogueState,
    candidates: Sequence[Template],
    rng: random.Random,
    avoid_id: str | None = None,
) -> tuple[str, str]:
    """Select and render; returns (reply text, template id)."""
    template = select_template(candidates, state, rng, avoid_id)
    return render_template(template, state), template.id


class NlgRegistry:
    """All nlg templates, indexed by intent with skill-path preference."""

    def __init__(self, templates: Sequence[Template]):
        self._by_intent: dict[str, list[Template]] = {}
        for template in templates:
            if template.direction is Direction.NLG:
                self._by_intent.setdefault(template.intent, []).append(template)

    def add(self, templates: Sequence[Template]) -> None:
        for template in templates:
            if template.direction is Direction.NLG:
                self._by_intent.setdefault(template.intent, []).append(template)

    def candidates_for(self, state: DialogueState) -> list[Template]:
        """Templates of the responding skill: same intent and domain path
        when such exist, otherwise any template of that intent (universal
        response intents are defined once, not per skill)."""
        pool = self._by_intent.get(state.intent, [])
        local = [t for t in pool if t.domain_path == state.domain_path]
        return local or list(pool)

    def intents(self) -> frozenset[str]:
        return frozenset(self._by_intent)

    def all_templates(self) -> list[Template]:
        return [t for pool in self._by_intent.values() for t in pool]
