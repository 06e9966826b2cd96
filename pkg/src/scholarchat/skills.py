"""Skill implementations behind the dialogue tree leaves.

Every handler is a pure function of (input state, context): it reads the
snapshot, never mutates anything, and returns one or more response states
whose slots carry the answer for the generator. A failed lookup produces a
`no-result` response, never an exception.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .core import DialogueState, SchemaRegistry, SlotValue, StateKind, tokenize
from .kb import EVENT_KINDS, EventRecord, KbSnapshot, PaperRecord, PersonRecord, resolve_entity

SLOT_PHRASES = {
    "CONF_NAME": "conference name",
    "PAPER_TITLE": "paper title",
    "PERSON_NAME": "person name",
    "TUTORIAL_TITLE": "tutorial title",
    "KEYNOTE_TITLE": "keynote title",
    "EVENT_NAME": "event name",
    "DATE": "date",
    "YEAR": "year",
    "VENUE": "venue",
    "NEWS_TOPIC": "news topic",
    "SECTION_NAME": "section name",
}

LATEST_NEWS_COUNT = 3
PROGRAM_ITEM_CAP = 6
DEADLINE_LIST_CAP = 5


@dataclass(frozen=True)
class SkillContext:
    kb: KbSnapshot
    registry: SchemaRegistry
    memory: tuple[DialogueState, ...] = ()  # most recent first
    active_path: tuple[str, ...] | None = None


Handler = Callable[[DialogueState, SkillContext], list[DialogueState]]

_HANDLERS: dict[str, Handler] = {}


def handler(name: str) -> Callable[[Handler], Handler]:
    def register(fn: Handler) -> Handler:
        _HANDLERS[name] = fn
        return fn

    return register


def known_handlers() -> frozenset[str]:
    return frozenset(_HANDLERS)


def skill_handle(
    handler_id: str, state: DialogueState, ctx: SkillContext
) -> list[DialogueState]:
    """Dispatch one input state to its skill implementation."""
    fn = _HANDLERS.get(handler_id)
    if fn is None:
        raise KeyError(f"no skill implementation registered for {handler_id!r}")
    return fn(state, ctx)


def _respond(
    state: DialogueState,
    slots: dict[str, str],
    intent: str | None = None,
    path: tuple[str, ...] | None = None,
) -> DialogueState:
    return DialogueState(
        kind=StateKind.RESPONSE,
        domain_path=path if path is not None else state.domain_path,
        intent=intent or state.intent,
        slots={k: SlotValue(k, v) for k, v in slots.items() if v},
        confidence=1.0,
        turn_index=state.turn_index,
    )


def no_result(state: DialogueState, about: str) -> list[DialogueState]:
    return [_respond(state, {"ANSWER": about}, intent="no-result")]


def clarification(state: DialogueState, missing: Sequence[str]) -> DialogueState:
    phrase = " and the ".join(SLOT_PHRASES.get(name, name.lower()) for name in missing)
    return _respond(state, {"ANSWER": phrase}, intent="clarify")


def prompt_for_input(state: DialogueState) -> DialogueState:
    return _respond(state, {}, intent="prompt-input")


# ---------------------------------------------------------------------------
# General branch: canned one-shot responses
# ---------------------------------------------------------------------------


def _canned(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    return [_respond(state, {})]


handler("greeting")(_canned)
handler("identity")(_canned)
handler("menu")(_canned)
handler("feedback")(_canned)
handler("fallback")(_canned)
handler("survey")(_canned)


@handler("exit")
def _exit(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    goodbye = _respond(state, {})
    survey_path = state.domain_path + ("Survey",)
    prompt = _respond(state, {}, intent="survey-prompt", path=survey_path)
    return [goodbye, prompt]


@handler("context")
def _context(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    if state.intent == "show-active-topic":
        topic = " > ".join(ctx.active_path) if ctx.active_path else "no active topic"
        return [_respond(state, {"ANSWER": topic})]
    if not ctx.memory:
        return [_respond(state, {"ANSWER": "nothing yet"})]
    parts = []
    for past in ctx.memory[:4]:
        described = past.intent
        if past.slots:
            values = ", ".join(v.surface for v in past.slots.values())
            described += f" ({values})"
        parts.append(described)
    return [_respond(state, {"ANSWER": " ; ".join(parts)})]


# ---------------------------------------------------------------------------
# Paper skills
# ---------------------------------------------------------------------------


def _paper(state: DialogueState, ctx: SkillContext) -> PaperRecord | None:
    surface = state.slot_surface("PAPER_TITLE")
    ref = resolve_entity(ctx.kb, "PAPER_TITLE", surface) if surface else None
    return ref.record if ref else None


def _join_names(names: Sequence[str]) -> str:
    if len(names) <= 1:
        return names[0] if names else ""
    return ", ".join(names[:-1]) + " and " + names[-1]


@handler("paper_metadata")
def _paper_metadata(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    if state.intent == "give-title":
        return _title_by_author(state, ctx)
    paper = _paper(state, ctx)
    if paper is None:
        return no_result(state, state.slot_surface("PAPER_TITLE") or "that paper")
    echo = {"PAPER_TITLE": paper.title}
    if state.intent == "give-authors":
        return [_respond(state, {**echo, "PERSON_NAME": _join_names(paper.authors)})]
    if state.intent == "give-year":
        return [_respond(state, {**echo, "YEAR": str(paper.year)})]
    if state.intent == "give-venue":
        return [_respond(state, {**echo, "VENUE": paper.venue})]
    if state.intent == "give-bib":
        return [_respond(state, {**echo, "ANSWER": paper.bib})]
    if state.intent == "give-url":
        return [_respond(state, {**echo, "ANSWER": paper.url})]
    if state.intent == "give-citations":
        if paper.citations is None:
            return no_result(state, f"citation counts for {paper.title}")
        return [_respond(state, {**echo, "COUNT": str(paper.citations)})]
    return no_result(state, state.intent)


def _title_by_author(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    surface = state.slot_surface("PERSON_NAME")
    ref = resolve_entity(ctx.kb, "PERSON_NAME", surface) if surface else None
    if ref is None:
        return no_result(state, surface or "that person")
    person: PersonRecord = ref.record
    papers = [p for p in ctx.kb.papers if p.id in person.paper_ids]
    year_filter = state.slot_surface("YEAR")
    if year_filter:
        papers = [p for p in papers if str(p.year) == year_filter]
    if not papers:
        return no_result(state, f"papers by {person.name}")
    newest = max(papers, key=lambda p: (p.year, p.id))
    return [
        _respond(
            state,
            {
                "PERSON_NAME": person.name,
                "PAPER_TITLE": newest.title,
                "YEAR": str(newest.year),
            },
        )
    ]


@handler("paper_discourse")
def _paper_discourse(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    paper = _paper(state, ctx)
    if paper is None:
        return no_result(state, state.slot_surface("PAPER_TITLE") or "that paper")
    echo = {"PAPER_TITLE": paper.title}
    if state.intent == "give-abstract":
        return [_respond(state, {**echo, "ANSWER": paper.abstract.strip()})]
    if state.intent == "give-conclusion":
        if not paper.conclusion:
            return no_result(state, f"the conclusion of {paper.title}")
        return [_respond(state, {**echo, "ANSWER": paper.conclusion.strip()})]
    if state.intent == "give-figures":
        if not paper.figures:
            return no_result(state, f"figures of {paper.title}")
        return [_respond(state, {**echo, "ANSWER": " ; ".join(paper.figures)})]
    if state.intent == "give-section":
        wanted = state.slot_surface("SECTION_NAME") or ""
        key = " ".join(tokenize(wanted))
        text = paper.sections.get(key)
        if not text:
            return no_result(state, f"the {wanted} section of {paper.title}")
        return [_respond(state, {**echo, "SECTION_NAME": wanted, "ANSWER": text.strip()})]
    return no_result(state, state.intent)


# ---------------------------------------------------------------------------
# Conference skills
# ---------------------------------------------------------------------------


def _conference(state: DialogueState, ctx: SkillContext):
    surface = state.slot_surface("CONF_NAME")
    ref = resolve_entity(ctx.kb, "CONF_NAME", surface) if surface else None
    return ref.record if ref else None


@handler("conference")
def _conference_venue(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    record = _conference(state, ctx)
    if record is None or not record.venue:
        return no_result(state, state.slot_surface("CONF_NAME") or "that conference")
    return [_respond(state, {"CONF_NAME": record.display, "VENUE": record.venue})]


@handler("conference_dates")
def _conference_dates(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    record = _conference(state, ctx)
    if record is None or record.start is None:
        return no_result(state, state.slot_surface("CONF_NAME") or "that conference")
    echo = {"CONF_NAME": record.display, "DATE": record.start.isoformat()}
    if state.intent == "give-conference-dates" and record.end is not None:
        return [_respond(state, {**echo, "DATE_END": record.end.isoformat()})]
    return [_respond(state, echo)]


@handler("deadlines")
def _deadlines(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    if state.intent == "list-upcoming-deadlines":
        year = state.slot_surface("YEAR")
        entries = [
            (deadline.due, f"{conf.display} {deadline.kind}")
            for conf in ctx.kb.conferences
            for deadline in conf.deadlines
            if year is None or str(deadline.due.year) == year
        ]
        if not entries:
            return no_result(state, f"deadlines in {year}" if year else "deadlines")
        entries.sort()
        listed = " ; ".join(f"{label} on {due.isoformat()}" for due, label in entries[:DEADLINE_LIST_CAP])
        return [_respond(state, {"ANSWER": listed})]

    record = _conference(state, ctx)
    if record is None or not record.deadlines:
        return no_result(state, state.slot_surface("CONF_NAME") or "that conference")
    submission = next(
        (d for d in record.deadlines if d.kind == "submission"),
        min(record.deadlines, key=lambda d: d.due),
    )
    return [
        _respond(
            state,
            {
                "CONF_NAME": record.display,
                "DATE": submission.due.isoformat(),
                "ANSWER": submission.kind,
            },
        )
    ]


def _events_for(ctx: SkillContext, record, kinds: tuple[str, ...]) -> list[EventRecord]:
    display = " ".join(tokenize(record.display))
    return [
        e
        for e in ctx.kb.events
        if e.kind in kinds and " ".join(tokenize(e.conference)) == display
    ]


def _find_event(
    ctx: SkillContext, kinds: tuple[str, ...], surface: str, conference: str | None
) -> EventRecord | None:
    slot_type = {
        ("keynote",): "KEYNOTE_TITLE",
        ("tutorial",): "TUTORIAL_TITLE",
    }.get(kinds, "EVENT_NAME")
    ref = resolve_entity(ctx.kb, slot_type, surface)
    if ref is None:
        return None
    event: EventRecord = ref.record
    if conference and " ".join(tokenize(event.conference)) != " ".join(tokenize(conference)):
        # the named conference disagrees; try among that conference only
        candidates = [
            e
            for e in ctx.kb.events
            if e.kind in kinds
            and " ".join(tokenize(e.conference)) == " ".join(tokenize(conference))
            and " ".join(tokenize(e.title)) == " ".join(tokenize(ref.display))
        ]
        return candidates[0] if candidates else None
    return event


def _event_listing(
    state: DialogueState, ctx: SkillContext, kinds: tuple[str, ...], label: str
) -> list[DialogueState]:
    record = _conference(state, ctx)
    if record is None:
        return no_result(state, state.slot_surface("CONF_NAME") or "that conference")
    events = _events_for(ctx, record, kinds)
    if not events:
        return no_result(state, f"{label} at {record.display}")
    events.sort(key=lambda e: (e.start or e.title, e.title))
    names = " ; ".join(e.title for e in events)
    return [_respond(state, {"CONF_NAME": record.display, "ANSWER": names})]


def _event_detail(
    state: DialogueState,
    ctx: SkillContext,
    kinds: tuple[str, ...],
    title_slot: str,
    want: str,
) -> list[DialogueState]:
    surface = state.slot_surface(title_slot)
    event = _find_event(ctx, kinds, surface or "", state.slot_surface("CONF_NAME"))
    if event is None:
        return no_result(state, surface or "that event")
    echo = {title_slot: event.title, "CONF_NAME": event.conference}
    if want == "time":
        if event.start is None:
            return no_result(state, f"the time of {event.title}")
        return [_respond(state, {**echo, "DATE": event.start.strftime("%Y-%m-%d %H:%M")})]
    if want == "location":
        if not event.location:
            return no_result(state, f"the location of {event.title}")
        return [_respond(state, {**echo, "VENUE": event.location})]
    if want == "speaker":
        if not event.speakers:
            return no_result(state, f"the speaker of {event.title}")
        return [_respond(state, {**echo, "PERSON_NAME": _join_names(event.speakers)})]
    return no_result(state, want)


@handler("keynotes")
def _keynotes(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    if state.intent == "give-keynotes":
        return _event_listing(state, ctx, ("keynote",), "keynotes")
    want = "time" if state.intent == "give-keynote-time" else "speaker"
    return _event_detail(state, ctx, ("keynote",), "KEYNOTE_TITLE", want)


@handler("tutorials")
def _tutorials(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    if state.intent == "give-tutorials":
        return _event_listing(state, ctx, ("tutorial",), "tutorials")
    want = "time" if state.intent == "give-tutorial-time" else "location"
    return _event_detail(state, ctx, ("tutorial",), "TUTORIAL_TITLE", want)


@handler("social_events")
def _social(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    if state.intent == "give-social-events":
        return _event_listing(state, ctx, ("social",), "social events")
    return _event_detail(state, ctx, ("social",), "EVENT_NAME", "time")


@handler("program")
def _program(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    if state.intent == "give-event-time":
        return _event_detail(state, ctx, EVENT_KINDS, "EVENT_NAME", "time")
    if state.intent == "give-event-location":
        return _event_detail(state, ctx, EVENT_KINDS, "EVENT_NAME", "location")
    record = _conference(state, ctx)
    if record is None:
        return no_result(state, state.slot_surface("CONF_NAME") or "that conference")
    events = _events_for(ctx, record, EVENT_KINDS)
    wanted_date = state.slot_surface("DATE")
    if wanted_date:
        # captured surfaces carry spaced punctuation ("2019 - 06 - 03")
        compact = wanted_date.replace(" ", "")
        events = [
            e for e in events if e.start is not None and e.start.date().isoformat() == compact
        ]
    if not events:
        return no_result(state, f"program entries for {record.display}")
    events.sort(key=lambda e: (e.start or e.title, e.title))
    listed = " ; ".join(
        f"{e.title} ({e.kind}) on {e.start.strftime('%Y-%m-%d %H:%M')}"
        if e.start
        else f"{e.title} ({e.kind})"
        for e in events[:PROGRAM_ITEM_CAP]
    )
    return [_respond(state, {"CONF_NAME": record.display, "ANSWER": listed})]


# ---------------------------------------------------------------------------
# People and news
# ---------------------------------------------------------------------------


@handler("people")
def _people(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    surface = state.slot_surface("PERSON_NAME")
    ref = resolve_entity(ctx.kb, "PERSON_NAME", surface) if surface else None
    if ref is None:
        return no_result(state, surface or "that person")
    person: PersonRecord = ref.record
    echo = {"PERSON_NAME": person.name}
    if state.intent == "give-h-index":
        if person.h_index is None:
            return no_result(state, f"the h-index of {person.name}")
        return [_respond(state, {**echo, "COUNT": str(person.h_index)})]
    if state.intent == "give-affiliation":
        if not person.affiliation:
            return no_result(state, f"the affiliation of {person.name}")
        return [_respond(state, {**echo, "ANSWER": person.affiliation})]
    if state.intent == "give-paper-count":
        return [_respond(state, {**echo, "COUNT": str(len(person.paper_ids))})]
    if state.intent == "give-person-papers":
        titles = [p.title for p in ctx.kb.papers if p.id in person.paper_ids]
        if not titles:
            return no_result(state, f"papers by {person.name}")
        return [_respond(state, {**echo, "ANSWER": " ; ".join(titles)})]
    return no_result(state, state.intent)


@handler("news")
def _news(state: DialogueState, ctx: SkillContext) -> list[DialogueState]:
    items = sorted(ctx.kb.news, key=lambda n: n.date, reverse=True)
    if state.intent == "give-news-about":
        topic = state.slot_surface("NEWS_TOPIC") or ""
        needle = " ".join(tokenize(topic))
        items = [
            n
            for n in items
            if any(needle == " ".join(tokenize(t)) for t in n.topics)
            or needle in " ".join(tokenize(n.headline))
            or needle in " ".join(tokenize(n.body))
        ]
        if not items:
            return no_result(state, f"news about {topic}")
        echo = {"NEWS_TOPIC": topic}
    else:
        if not items:
            return no_result(state, "news")
        echo = {}
    listed = " ; ".join(f"{n.headline} ({n.date.isoformat()})" for n in items[:LATEST_NEWS_COUNT])
    return [_respond(state, {**echo, "ANSWER": listed})]
