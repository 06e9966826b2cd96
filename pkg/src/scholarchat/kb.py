"""Knowledge-base snapshots: record schemas, loading, refresh, entity lookup.

A snapshot is an immutable, timestamped local copy of the external sources
(papers, people, conferences, events, news), one structured-text file per
record type with a schema-version header. Refreshing swaps the whole
snapshot atomically; readers only ever see a complete old or new copy.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import yaml

from .core import tokenize

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

RECORD_FILES = {
    "papers": "papers.yaml",
    "people": "people.yaml",
    "conferences": "conferences.yaml",
    "events": "events.yaml",
    "news": "news.yaml",
}

EVENT_KINDS = ("keynote", "tutorial", "social", "session", "oral")

DEFAULT_REFRESH_DAYS = 30


class SnapshotError(ValueError):
    pass


def _parse_date(value) -> date | None:
    if value in (None, ""):
        return None
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    return date.fromisoformat(str(value))


def _parse_datetime(value) -> datetime | None:
    if value in (None, ""):
        return None
    if isinstance(value, datetime):
        return value if value.tzinfo else value.replace(tzinfo=timezone.utc)
    text = str(value).replace("Z", "+00:00")
    parsed = datetime.fromisoformat(text)
    return parsed if parsed.tzinfo else parsed.replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class PaperRecord:
    id: str
    title: str
    authors: tuple[str, ...]
    year: int
    venue: str
    abstract: str
    url: str
    bib: str = ""
    conclusion: str | None = None
    citations: int | None = None
    figures: tuple[str, ...] = ()
    sections: dict[str, str] = field(default_factory=dict)

    def problems(self) -> list[str]:
        out = []
        if not self.title:
            out.append("paper title is empty")
        if not 1950 <= self.year <= 2100:
            out.append(f"implausible year {self.year}")
        return out


@dataclass(frozen=True)
class PersonRecord:
    name: str
    affiliation: str | None = None
    h_index: int | None = None
    paper_ids: tuple[str, ...] = ()

    def problems(self) -> list[str]:
        out = []
        if not self.name:
            out.append("person name is empty")
        if self.h_index is not None and self.h_index < 0:
            out.append(f"negative h-index {self.h_index}")
        return out


@dataclass(frozen=True)
class Deadline:
    kind: str
    due: date


@dataclass(frozen=True)
class ConferenceRecord:
    name: str
    year: int
    deadlines: tuple[Deadline, ...] = ()
    start: date | None = None
    end: date | None = None
    venue: str | None = None

    @property
    def display(self) -> str:
        return f"{self.name} {self.year}"

    def problems(self) -> list[str]:
        out = []
        if not self.name:
            out.append("conference name is empty")
        if not 1950 <= self.year <= 2100:
            out.append(f"implausible year {self.year}")
        if self.start and self.end and self.end < self.start:
            out.append("end date before start date")
        if self.start:
            for deadline in self.deadlines:
                if deadline.due > self.start:
                    out.append(f"{deadline.kind} deadline after conference start")
        return out


@dataclass(frozen=True)
class EventRecord:
    conference: str
    kind: str
    title: str
    speakers: tuple[str, ...] = ()
    start: datetime | None = None
    end: datetime | None = None
    location: str | None = None

    def problems(self) -> list[str]:
        out = []
        if self.kind not in EVENT_KINDS:
            out.append(f"unknown event kind {self.kind}")
        if not self.title:
            out.append("event title is empty")
        if self.start and self.end and self.end < self.start:
            out.append("event ends before it starts")
        return out


@dataclass(frozen=True)
class NewsItem:
    date: date
    headline: str
    body: str = ""
    topics: tuple[str, ...] = ()
    url: str = ""

    def problems(self) -> list[str]:
        return [] if self.headline else ["news headline is empty"]


@dataclass(frozen=True)
class KbSnapshot:
    papers: tuple[PaperRecord, ...] = ()
    people: tuple[PersonRecord, ...] = ()
    conferences: tuple[ConferenceRecord, ...] = ()
    events: tuple[EventRecord, ...] = ()
    news: tuple[NewsItem, ...] = ()
    fetched_at: datetime = datetime(1970, 1, 1, tzinfo=timezone.utc)
    source: str = "unknown"
    refresh_interval_days: int = DEFAULT_REFRESH_DAYS
    diagnostics: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not (self.papers or self.people or self.conferences or self.events or self.news)


_RECORD_PARSERS = {
    "papers": lambda raw: PaperRecord(
        id=str(raw["id"]),
        title=str(raw.get("title", "")),
        authors=tuple(raw.get("authors", ())),
        year=int(raw.get("year", 0)),
        venue=str(raw.get("venue", "")),
        abstract=str(raw.get("abstract", "")),
        url=str(raw.get("url", "")),
        bib=str(raw.get("bib", "")),
        conclusion=raw.get("conclusion"),
        citations=raw.get("citations"),
        figures=tuple(raw.get("figures", ())),
        sections={str(k).lower(): str(v) for k, v in (raw.get("sections") or {}).items()},
    ),
    "people": lambda raw: PersonRecord(
        name=str(raw.get("name", "")),
        affiliation=raw.get("affiliation"),
        h_index=raw.get("h_index"),
        paper_ids=tuple(raw.get("paper_ids", ())),
    ),
    "conferences": lambda raw: ConferenceRecord(
        name=str(raw.get("name", "")),
        year=int(raw.get("year", 0)),
        deadlines=tuple(
            Deadline(kind=str(d["kind"]), due=_parse_date(d["due"]))
            for d in raw.get("deadlines", ())
        ),
        start=_parse_date(raw.get("start")),
        end=_parse_date(raw.get("end")),
        venue=raw.get("venue"),
    ),
    "events": lambda raw: EventRecord(
        conference=str(raw.get("conference", "")),
        kind=str(raw.get("kind", "")),
        title=str(raw.get("title", "")),
        speakers=tuple(raw.get("speakers", ())),
        start=_parse_datetime(raw.get("start")),
        end=_parse_datetime(raw.get("end")),
        location=raw.get("location"),
    ),
    "news": lambda raw: NewsItem(
        date=_parse_date(raw.get("date")),
        headline=str(raw.get("headline", "")),
        body=str(raw.get("body", "")),
        topics=tuple(raw.get("topics", ())),
        url=str(raw.get("url", "")),
    ),
}


def load_snapshot(path: str | Path) -> KbSnapshot:
    """Load a snapshot directory (one file per record type).

    Missing files mean no records of that type. Invalid records are dropped
    with per-record diagnostics kept on the snapshot; a schema-version
    mismatch is an error.
    """
    path = Path(path)
    if not path.is_dir():
        raise SnapshotError(f"snapshot directory {path} does not exist")
    records: dict[str, list] = {key: [] for key in RECORD_FILES}
    diagnostics: list[str] = []
    fetched_ats: list[datetime] = []
    sources: list[str] = []
    intervals: list[int] = []
    for record_type, filename in RECORD_FILES.items():
        file_path = path / filename
        if not file_path.exists():
            continue
        raw = yaml.safe_load(file_path.read_text(encoding="utf-8")) or {}
        version = raw.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SnapshotError(
                f"{filename}: schema version {version!r}, expected {SCHEMA_VERSION}"
            )
        if raw.get("fetched_at"):
            fetched_ats.append(_parse_datetime(raw["fetched_at"]))
        if raw.get("source"):
            sources.append(str(raw["source"]))
        if raw.get("refresh_interval_days"):
            intervals.append(int(raw["refresh_interval_days"]))
        parser = _RECORD_PARSERS[record_type]
        for index, entry in enumerate(raw.get("records") or ()):
            try:
                record = parser(entry)
            except (KeyError, TypeError, ValueError) as exc:
                diagnostics.append(f"{filename}[{index}]: unparseable record ({exc})")
                continue
            problems = record.problems()
            if problems:
                diagnostics.append(f"{filename}[{index}]: {'; '.join(problems)}")
                continue
            records[record_type].append(record)
    for message in diagnostics:
        logger.warning("rejected snapshot record: %s", message)
    return KbSnapshot(
        papers=tuple(records["papers"]),
        people=tuple(records["people"]),
        conferences=tuple(records["conferences"]),
        events=tuple(records["events"]),
        news=tuple(records["news"]),
        fetched_at=min(fetched_ats) if fetched_ats else datetime(1970, 1, 1, tzinfo=timezone.utc),
        source=",".join(dict.fromkeys(sources)) or "unknown",
        refresh_interval_days=min(intervals) if intervals else DEFAULT_REFRESH_DAYS,
        diagnostics=tuple(diagnostics),
    )


class Connector(Protocol):
    """A data-source connector.

    Two modes exist: `fetch_bulk` downloads everything on the refresh
    cadence; `fetch_instant` answers a single query against sources too big
    to mirror.
    """

    source_id: str

    def fetch_bulk(self) -> KbSnapshot: ...

    def fetch_instant(self, slot_type: str, surface: str): ...


class FileConnector:
    """Bulk connector over a snapshot directory maintained by external means."""

    def __init__(self, directory: str | Path, source_id: str = "file"):
        self.directory = Path(directory)
        self.source_id = source_id

    def fetch_bulk(self) -> KbSnapshot:
        return load_snapshot(self.directory)

    def fetch_instant(self, slot_type: str, surface: str):
        return resolve_entity(self.fetch_bulk(), slot_type, surface)


class ReplayConnector:
    """Replays recorded fetch responses from a fixture file.

    The fixture maps request URLs to snapshot-shaped payloads, which is
    enough to exercise refresh plumbing without touching the network.
    """

    def __init__(self, fixture: str | Path, source_id: str = "replay"):
        self.fixture = Path(fixture)
        self.source_id = source_id

    def fetch_bulk(self) -> KbSnapshot:
        raw = yaml.safe_load(self.fixture.read_text(encoding="utf-8"))
        responses = raw.get("responses") or {}
        merged: dict[str, list] = {key: [] for key in RECORD_FILES}
        fetched_at = _parse_datetime(raw.get("fetched_at")) or datetime.now(timezone.utc)
        for url in sorted(responses):
            payload = responses[url] or {}
            record_type = payload.get("record_type")
            if record_type not in merged:
                raise SnapshotError(f"{self.fixture.name}: {url}: bad record_type")
            parser = _RECORD_PARSERS[record_type]
            for entry in payload.get("records") or ():
                record = parser(entry)
                if not record.problems():
                    merged[record_type].append(record)
        return KbSnapshot(
            papers=tuple(merged["papers"]),
            people=tuple(merged["people"]),
            conferences=tuple(merged["conferences"]),
            events=tuple(merged["events"]),
            news=tuple(merged["news"]),
            fetched_at=fetched_at,
            source=self.source_id,
        )

    def fetch_instant(self, slot_type: str, surface: str):
        return resolve_entity(self.fetch_bulk(), slot_type, surface)


def refresh_snapshot(
    connector: Connector, snapshot: KbSnapshot, now: datetime | None = None
) -> KbSnapshot:
    """Fetch a new snapshot when the refresh interval has elapsed.

    Returns the input unchanged while it is still fresh, and keeps the old
    snapshot (with a log line) when the connector fails. The caller swaps
    the returned reference in one assignment, so readers never observe a
    partial update.
    """
    now = now or datetime.now(timezone.utc)
    age = now - snapshot.fetched_at
    if age < timedelta(days=snapshot.refresh_interval_days):
        return snapshot
    try:
        fresh = connector.fetch_bulk()
    except Exception:
        logger.exception("connector %s failed; keeping stale snapshot", connector.source_id)
        return snapshot
    return fresh


@dataclass(frozen=True)
class EntityRef:
    canonical: str
    display: str
    year: int | None
    record: object


def _candidates(kb: KbSnapshot, slot_type: str) -> list[EntityRef]:
    if slot_type == "CONF_NAME":
        return [
            EntityRef(f"conf:{c.name.lower()}-{c.year}", c.display, c.year, c)
            for c in kb.conferences
        ]
    if slot_type == "PAPER_TITLE":
        return [EntityRef(f"paper:{p.id}", p.title, p.year, p) for p in kb.papers]
    if slot_type == "PERSON_NAME":
        return [EntityRef(f"person:{p.name.lower()}", p.name, None, p) for p in kb.people]
    if slot_type in ("TUTORIAL_TITLE", "KEYNOTE_TITLE", "EVENT_NAME"):
        kinds = {
            "TUTORIAL_TITLE": ("tutorial",),
            "KEYNOTE_TITLE": ("keynote",),
            "EVENT_NAME": EVENT_KINDS,
        }[slot_type]
        return [
            EntityRef(
                f"event:{e.conference.lower()}:{e.title.lower()}",
                e.title,
                e.start.year if e.start else None,
                e,
            )
            for e in kb.events
            if e.kind in kinds
        ]
    return []


def _contains(inner: tuple[str, ...], outer: tuple[str, ...]) -> bool:
    if len(inner) > len(outer):
        return False
    return any(outer[i : i + len(inner)] == inner for i in range(len(outer) - len(inner) + 1))


def resolve_entity(kb: KbSnapshot, slot_type: str, surface: str) -> EntityRef | None:
    """Entity linking: case-insensitive exact match, then normalized-token
    containment either way round; ties go to the most recent year."""
    candidates = _candidates(kb, slot_type)
    surface_lower = " ".join(tokenize(surface))
    exact = [c for c in candidates if " ".join(tokenize(c.display)) == surface_lower]
    pool = exact
    if not pool:
        surface_tokens = tokenize(surface)
        pool = [
            c
            for c in candidates
            if _contains(surface_tokens, tokenize(c.display))
            or _contains(tokenize(c.display), surface_tokens)
        ]
    if not pool:
        return None
    return min(pool, key=lambda c: (-(c.year if c.year is not None else -1), c.canonical))


def lookup_entity(kb: KbSnapshot, slot_type: str, surface: str) -> str | None:
    ref = resolve_entity(kb, slot_type, surface)
    return ref.canonical if ref else None


def save_snapshot(snapshot: KbSnapshot, path: str | Path) -> None:
    """Write a snapshot back out in the directory format (fixture tooling)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    def dump(filename: str, records: Iterable[dict]) -> None:
        document = {
            "schema_version": SCHEMA_VERSION,
            "fetched_at": snapshot.fetched_at.isoformat(),
            "source": snapshot.source,
            "refresh_interval_days": snapshot.refresh_interval_days,
            "records": list(records),
        }
        (path / filename).write_text(yaml.safe_dump(document, sort_keys=False), "utf-8")

    dump(
        RECORD_FILES["papers"],
        (
            {
                "id": p.id,
                "title": p.title,
                "authors": list(p.authors),
                "year": p.year,
                "venue": p.venue,
                "abstract": p.abstract,
                "url": p.url,
                "bib": p.bib,
                "conclusion": p.conclusion,
                "citations": p.citations,
                "figures": list(p.figures),
                "sections": dict(p.sections),
            }
            for p in snapshot.papers
        ),
    )
    dump(
        RECORD_FILES["people"],
        (
            {
                "name": p.name,
                "affiliation": p.affiliation,
                "h_index": p.h_index,
                "paper_ids": list(p.paper_ids),
            }
            for p in snapshot.people
        ),
    )
    dump(
        RECORD_FILES["conferences"],
        (
            {
                "name": c.name,
                "year": c.year,
                "deadlines": [{"kind": d.kind, "due": d.due.isoformat()} for d in c.deadlines],
                "start": c.start.isoformat() if c.start else None,
                "end": c.end.isoformat() if c.end else None,
                "venue": c.venue,
            }
            for c in snapshot.conferences
        ),
    )
    dump(
        RECORD_FILES["events"],
        (
            {
                "conference": e.conference,
                "kind": e.kind,
                "title": e.title,
                "speakers": list(e.speakers),
                "start": e.start.isoformat() if e.start else None,
                "end": e.end.isoformat() if e.end else None,
                "location": e.location,
            }
            for e in snapshot.events
        ),
    )
    dump(
        RECORD_FILES["news"],
        (
            {
                "date": n.date.isoformat(),
                "headline": n.headline,
                "body": n.body,
                "topics": list(n.topics),
                "url": n.url,
            }
            for n in snapshot.news
        ),
    )
