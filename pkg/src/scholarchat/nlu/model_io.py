"""Model file serialization: JSON with a magic header and format version."""
from __future__ import annotations

import json
from pathlib import Path

MAGIC = "scholarchat-model"
VERSION = 1


class ModelFileError(ValueError):
    pass


def save_model(path: str | Path, kind: str, payload: dict, build_id: str = "") -> None:
    document = {"magic": MAGIC, "version": VERSION, "kind": kind, "build_id": build_id}
    document.update(payload)
    Path(path).write_text(
        json.dumps(document, sort_keys=True, separators=(",", ":")), encoding="utf-8"
    )


def load_model(path: str | Path, kind: str) -> dict:
    path = Path(path)
    document = json.loads(path.read_text(encoding="utf-8"))
    if document.get("magic") != MAGIC:
        raise ModelFileError(f"{path.name}: not a model file")
    if document.get("version") != VERSION:
        raise ModelFileError(f"{path.name}: unsupported version {document.get('version')}")
    if document.get("kind") != kind:
        raise ModelFileError(f"{path.name}: expected {kind}, found {document.get('kind')}")
    return document
