"""Templates of literal tokens, slot placeholders, and wildcards.

One compiled form serves both directions: matching user text against nlu
templates and rendering nlg templates from response states. Patterns use
`{SLOT_NAME}` for placeholders and `...` for wildcards, e.g.

    when is the deadline for {CONF_NAME}
    when does ... start ?

Matching is anchored at both ends of the utterance: a template must consume
every token. Placeholders capture at least one token; wildcards may capture
none.
"""
from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .core import DialogueState, SlotValue, StateKind, Utterance, tokenize

logger = logging.getLogger(__name__)


class TemplateSyntaxError(ValueError):
    """Raised for malformed template patterns."""


class MissingSlotError(KeyError):
    """Raised when rendering hits a placeholder the state does not fill."""

    def __init__(self, slot: str, template_id: str):
        super().__init__(slot)
        self.slot = slot
        self.template_id = template_id

    def __str__(self) -> str:
        return f"template {self.template_id}: no value for placeholder {self.slot}"


class SegmentKind(str, Enum):
    LITERAL = "literal"
    PLACEHOLDER = "placeholder"
    WILDCARD = "wildcard"


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    value: str = ""  # token for literals, slot name for placeholders

    def pattern_text(self) -> str:
        if self.kind is SegmentKind.LITERAL:
            return self.value
        if self.kind is SegmentKind.PLACEHOLDER:
            return "{" + self.value + "}"
        return "..."


class Direction(str, Enum):
    NLU = "nlu"
    NLG = "nlg"


class TemplateSource(str, Enum):
    HUMAN = "human"
    AUGMENTED = "augmented"


@dataclass(frozen=True)
class Template:
    id: str
    direction: Direction
    domain_path: tuple[str, ...]
    intent: str
    segments: tuple[Segment, ...]
    source: TemplateSource = TemplateSource.HUMAN

    @property
    def literal_count(self) -> int:
        return sum(1 for s in self.segments if s.kind is SegmentKind.LITERAL)

    @property
    def wildcard_count(self) -> int:
        return sum(1 for s in self.segments if s.kind is SegmentKind.WILDCARD)

    @property
    def placeholders(self) -> tuple[str, ...]:
        return tuple(s.value for s in self.segments if s.kind is SegmentKind.PLACEHOLDER)

    @property
    def pattern(self) -> str:
        return " ".join(s.pattern_text() for s in self.segments)


@dataclass(frozen=True)
class MatchResult:
    template_id: str
    captured: dict[str, str]
    literal_count: int
    wildcard_count: int


_PLACEHOLDER_RE = re.compile(r"\{([^{}]*)\}")
_VARIABLE_KINDS = (SegmentKind.PLACEHOLDER, SegmentKind.WILDCARD)


def _parse_segments(pattern: str, slots: frozenset[str]) -> tuple[Segment, ...]:
    if pattern.count("{") != pattern.count("}"):
        raise TemplateSyntaxError(f"unbalanced braces in pattern: {pattern!r}")
    segments: list[Segment] = []
    pos = 0
    # Split on placeholders first, then carve wildcards out of the literal
    # stretches; plain tokenization would shred both.
    for match in _PLACEHOLDER_RE.finditer(pattern):
        _extend_literal(segments, pattern[pos : match.start()])
        name = match.group(1)
        if name not in slots:
            raise TemplateSyntaxError(f"unknown slot {name!r} in pattern: {pattern!r}")
        segments.append(Segment(SegmentKind.PLACEHOLDER, name))
        pos = match.end()
    _extend_literal(segments, pattern[pos:])
    if "{" in pattern[pos:] or "}" in pattern[pos:]:
        raise TemplateSyntaxError(f"stray brace in pattern: {pattern!r}")
    return tuple(segments)


def _extend_literal(segments: list[Segment], chunk: str) -> None:
    for part in re.split(r"(\.\.\.)", chunk):
        if part == "...":
            segments.append(Segment(SegmentKind.WILDCARD))
        else:
            for token in tokenize(part):
                segments.append(Segment(SegmentKind.LITERAL, token))


def compile_template(
    pattern: str,
    *,
    direction: Direction | str,
    domain_path: Sequence[str],
    intent: str,
    slots: frozenset[str],
    source: TemplateSource = TemplateSource.HUMAN,
) -> Template:
    """Compile a pattern string into a Template.

    Literal tokens are normalized exactly like utterances. Raises
    TemplateSyntaxError for unbalanced braces, unknown slots, adjacent
    placeholders/wildcards, an nlu template without a literal, duplicate
    placeholders in an nlu template, or a wildcard in an nlg template.
    """
    direction = Direction(direction)
    segments = _parse_segments(pattern, slots)
    if not segments:
        raise TemplateSyntaxError("empty pattern")
    for left, right in zip(segments, segments[1:]):
        if left.kind in _VARIABLE_KINDS and right.kind in _VARIABLE_KINDS:
            raise TemplateSyntaxError(
                f"adjacent placeholders/wildcards are undecidable: {pattern!r}"
            )
    names = [s.value for s in segments if s.kind is SegmentKind.PLACEHOLDER]
    if direction is Direction.NLU:
        if not any(s.kind is SegmentKind.LITERAL for s in segments):
            raise TemplateSyntaxError(f"nlu template needs at least one literal: {pattern!r}")
        if len(names) != len(set(names)):
            raise TemplateSyntaxError(f"duplicate placeholder in nlu template: {pattern!r}")
    else:
        if any(s.kind is SegmentKind.WILDCARD for s in segments):
            raise TemplateSyntaxError(f"wildcards are not allowed in nlg templates: {pattern!r}")

    canonical = " ".join(s.pattern_text() for s in segments)
    digest = hashlib.sha1(canonical.encode("utf-8")).hexdigest()[:10]
    return Template(
        id=f"{direction.value}:{intent}:{digest}",
        direction=direction,
        domain_path=tuple(domain_path),
        intent=intent,
        segments=segments,
        source=source,
    )


def _find_assignment(
    segments: Sequence[Segment], tokens: Sequence[str]
) -> dict[str, str] | None:
    """Full-cover span assignment, lexicographically shortest captures first.

    Placeholders consume 1..k tokens, wildcards 0..k, literals exactly their
    own token. Trying shorter spans first makes the returned assignment the
    unique one with minimal capture lengths left to right.
    """

    captured: dict[str, str] = {}

    def solve(si: int, ti: int) -> bool:
        if si == len(segments):
            return ti == len(tokens)
        seg = segments[si]
        if seg.kind is SegmentKind.LITERAL:
            return ti < len(tokens) and tokens[ti] == seg.value and solve(si + 1, ti + 1)
        start = 1 if seg.kind is SegmentKind.PLACEHOLDER else 0
        for length in range(start, len(tokens) - ti + 1):
            if solve(si + 1, ti + length):
                if seg.kind is SegmentKind.PLACEHOLDER:
                    captured[seg.value] = " ".join(tokens[ti : ti + length])
                return True
        return False

    return captured if solve(0, 0) else None


def match_template(template: Template, utterance: Utterance) -> MatchResult | None:
    """Match a single template against an utterance, or None."""
    assignment = _find_assignment(template.segments, utterance.tokens)
    if assignment is None:
        return None
    return MatchResult(
        template_id=template.id,
        captured=assignment,
        literal_count=template.literal_count,
        wildcard_count=template.wildcard_count,
    )


def match_utterance(
    templates: Iterable[Template], utterance: Utterance
) -> tuple[MatchResult, DialogueState] | None:
    """Best full-cover match over a template set, or None.

    Ranking: most literal tokens, then fewest wildcards, then smallest
    template id. Deterministic regardless of input order.
    """
    best: tuple[tuple[int, int, str], MatchResult, Template] | None = None
    for template in templates:
        if template.direction is not Direction.NLU:
            continue
        result = match_template(template, utterance)
        if result is None:
            continue
        key = (-result.literal_count, result.wildcard_count, template.id)
        if best is None or key < best[0]:
            best = (key, result, template)
    if best is None:
        return None
    _, result, template = best
    state = DialogueState(
        kind=StateKind.INPUT,
        domain_path=template.domain_path,
        intent=template.intent,
        slots={name: SlotValue(name, surface) for name, surface in result.captured.items()},
        confidence=1.0,
        turn_index=utterance.turn_index,
    )
    return result, state


def render_template(template: Template, state: DialogueState) -> str:
    """Fill an nlg template's placeholders from `state` and join the tokens.

    Braces never survive into the output; they are template metacharacters
    and are stripped from slot surfaces.
    """
    if template.direction is not Direction.NLG:
        raise ValueError(f"template {template.id} is not an nlg template")
    parts: list[str] = []
    for seg in template.segments:
        if seg.kind is SegmentKind.LITERAL:
            parts.append(seg.value)
        else:
            value = state.slots.get(seg.value)
            if value is None:
                raise MissingSlotError(seg.value, template.id)
            parts.append(value.surface.replace("{", "").replace("}", ""))
    return " ".join(parts)


def load_template_file(path: str | Path, slots: frozenset[str]) -> list[Template]:
    """Load templates from a file.

    One record per line: `direction <TAB> dotted-domain-path <TAB> intent
    <TAB> pattern`. Lines starting with `#` and blank lines are skipped.
    Raises TemplateSyntaxError naming the line for malformed records and for
    duplicate templates.
    """
    path = Path(path)
    templates: list[Template] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split("\t")
        if len(fields) != 4:
            raise TemplateSyntaxError(
                f"{path.name}:{lineno}: expected 4 tab-separated fields, got {len(fields)}"
            )
        direction, dotted_path, intent, pattern = (f.strip() for f in fields)
        try:
            template = compile_template(
                pattern,
                direction=direction,
                domain_path=tuple(dotted_path.split(".")),
                intent=intent,
                slots=slots,
            )
        except (TemplateSyntaxError, ValueError) as exc:
            raise TemplateSyntaxError(f"{path.name}:{lineno}: {exc}") from exc
        if template.id in seen:
            raise TemplateSyntaxError(
                f"{path.name}:{lineno}: duplicate of line {seen[template.id]}"
            )
        seen[template.id] = lineno
        templates.append(template)
    logger.info("loaded %d templates from %s", len(templates), path)
    return templates
