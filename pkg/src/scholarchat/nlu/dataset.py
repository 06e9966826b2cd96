"""Labeled NLU instances: tokens, an intent label, and per-token BIO tags."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence


class DatasetError(ValueError):
    pass


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class Instance:
    tokens: tuple[str, ...]
    intent: str
    tags: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise DatasetError(
                f"{len(self.tags)} tags for {len(self.tokens)} tokens: {self.tokens}"
            )
        problems = bio_violations(self.tags)
        if problems:
            raise DatasetError(f"ill-formed BIO tags {self.tags}: {problems[0]}")


@dataclass(frozen=True)
class NluDataset:
    instances: tuple[Instance, ...]
    split: Split
    build_id: str = ""

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def intents(self) -> tuple[str, ...]:
        return tuple(sorted({i.intent for i in self.instances}))

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(sorted({t for i in self.instances for t in i.tags}))


def bio_violations(tags: Sequence[str]) -> list[str]:
    """Return BIO well-formedness problems (I-X must follow B-X or I-X)."""
    problems = []
    previous = "O"
    for position, tag in enumerate(tags):
        if tag != "O" and not (tag.startswith("B-") or tag.startswith("I-")):
            problems.append(f"position {position}: bad tag {tag}")
        elif tag.startswith("I-") and previous not in (f"B-{tag[2:]}", tag):
            problems.append(f"position {position}: {tag} after {previous}")
        previous = tag
    return problems


def bio_repair(tags: Sequence[str]) -> tuple[str, ...]:
    """Turn any I-X that does not continue an X span into B-X."""
    repaired: list[str] = []
    previous = "O"
    for tag in tags:
        if tag.startswith("I-") and previous not in (f"B-{tag[2:]}", tag):
            tag = "B-" + tag[2:]
        repaired.append(tag)
        previous = tag
    return tuple(repaired)


def bio_spans(tags: Sequence[str]) -> list[tuple[str, int, int]]:
    """Contiguous (slot, start, end-exclusive) spans of a BIO sequence."""
    spans: list[tuple[str, int, int]] = []
    start, current = None, None
    for position, tag in enumerate(tags):
        if tag.startswith("B-"):
            if current is not None:
                spans.append((current, start, position))
            current, start = tag[2:], position
        elif tag.startswith("I-") and current == tag[2:]:
            continue
        else:
            if current is not None:
                spans.append((current, start, position))
            current, start = None, None
    if current is not None:
        spans.append((current, start, len(tags)))
    return spans


def tags_for_span_layout(lengths: Sequence[tuple[str | None, int]]) -> tuple[str, ...]:
    """Build BIO tags from (slot-or-None, token-count) chunks."""
    tags: list[str] = []
    for slot, count in lengths:
        if slot is None:
            tags.extend(["O"] * count)
        elif count > 0:
            tags.append(f"B-{slot}")
            tags.extend([f"I-{slot}"] * (count - 1))
    return tuple(tags)


def write_dataset(dataset: NluDataset, path: str | Path) -> None:
    """One record per line: `intent <TAB> token/TAG token/TAG ...`."""
    lines = [f"# split: {dataset.split.value}", f"# build_id: {dataset.build_id}"]
    for instance in dataset.instances:
        pairs = " ".join(f"{tok}/{tag}" for tok, tag in zip(instance.tokens, instance.tags))
        lines.append(f"{instance.intent}\t{pairs}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dataset(path: str | Path, split: Split | None = None) -> NluDataset:
    path = Path(path)
    build_id = ""
    found_split = split
    instances: list[Instance] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if body.startswith("split:"):
                found_split = Split(body.split(":", 1)[1].strip())
            elif body.startswith("build_id:"):
                build_id = body.split(":", 1)[1].strip()
            continue
        try:
            intent, rest = stripped.split("\t", 1)
            tokens, tags = [], []
            for pair in rest.split():
                token, tag = pair.rsplit("/", 1)
                tokens.append(token)
                tags.append(tag)
            instances.append(Instance(tuple(tokens), intent, tuple(tags)))
        except (ValueError, DatasetError) as exc:
            raise DatasetError(f"{path.name}:{lineno}: {exc}") from exc
    if found_split is None:
        raise DatasetError(f"{path.name}: no split header and none given")
    return NluDataset(tuple(instances), found_split, build_id)
