"""The dialogue master: per-turn orchestration and session management.

One turn runs normalize -> NLU -> follow-up resolution -> routing -> skill
-> NLG -> memory push, recording every intermediate artifact for the debug
view. Sessions are processed under per-session locks; distinct sessions may
run concurrently against the shared read-only models and snapshot.
"""
from __future__ import annotations

import json
import logging
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import yaml

from .core import (
    DialogueState,
    EmptyUtteranceError,
    SchemaRegistry,
    StateKind,
    UnresolvedSlotsError,
    load_schema,
    normalize_utterance,
)
from .kb import Connector, FileConnector, KbSnapshot, load_snapshot, refresh_snapshot
from .manager import (
    ActivePath,
    MemoryStack,
    Session,
    SkillTree,
    build_tree,
    push_memory,
    resolve_followup,
    route,
    register_skill,
)
from .nlg import NlgRegistry, NoFillableTemplateError, generate_response
from .nlu.embeddings import EmbeddingTable
from .nlu.pipeline import DEFAULT_CONFIDENCE_THRESHOLD, MlModels, NluPipeline
from .skills import SkillContext, clarification, known_handlers, prompt_for_input, skill_handle
from .templates import Direction, load_template_file

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent / "data"

DEFAULT_SEED = 13
DEFAULT_IDLE_MINUTES = 60


@dataclass
class EngineConfig:
    schema: Path = DATA_DIR / "schema.yaml"
    nlu_templates: Path = DATA_DIR / "templates" / "nlu_seed.txt"
    nlg_templates: Path = DATA_DIR / "templates" / "nlg_seed.txt"
    snapshot_dir: Path = DATA_DIR / "snapshot"
    embeddings: Path = DATA_DIR / "embeddings" / "fixture_300d.txt"
    models_dir: Path | None = None
    seed: int = DEFAULT_SEED
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    memory_capacity: int = 50
    session_idle_minutes: float = DEFAULT_IDLE_MINUTES
    transcript_dir: Path | None = None

    @classmethod
    def load(cls, path: str | Path) -> "EngineConfig":
        path = Path(path)
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        base = path.parent

        def resolve(key: str, default: Path | None) -> Path | None:
            value = raw.get(key)
            if value is None:
                return default
            candidate = Path(value)
            return candidate if candidate.is_absolute() else base / candidate

        return cls(
            schema=resolve("schema", cls.schema),
            nlu_templates=resolve("nlu_templates", cls.nlu_templates),
            nlg_templates=resolve("nlg_templates", cls.nlg_templates),
            snapshot_dir=resolve("snapshot_dir", cls.snapshot_dir),
            embeddings=resolve("embeddings", cls.embeddings),
            models_dir=resolve("models_dir", None),
            seed=int(raw.get("seed", DEFAULT_SEED)),
            confidence_threshold=float(
                raw.get("confidence_threshold", DEFAULT_CONFIDENCE_THRESHOLD)
            ),
            memory_capacity=int(raw.get("memory_capacity", 50)),
            session_idle_minutes=float(raw.get("session_idle_minutes", DEFAULT_IDLE_MINUTES)),
            transcript_dir=resolve("transcript_dir", None),
        )


@dataclass(frozen=True)
class TurnResult:
    session_id: str
    user_text: str
    input_state: DialogueState | None
    resolved_state: DialogueState | None
    response_states: tuple[DialogueState, ...]
    replies: tuple[str, ...]
    template_ids: tuple[str, ...]
    routed_path: tuple[str, ...] | None
    active_path: tuple[str, ...] | None
    latency_ms: float
    turn_index: int

    @property
    def reply(self) -> str:
        return "\n".join(self.replies)

    def debug_dict(self) -> dict:
        def state_dict(state: DialogueState | None):
            if state is None:
                return None
            return {
                "kind": state.kind.value,
                "domain_path": list(state.domain_path),
                "intent": state.intent,
                "slots": {k: v.surface for k, v in sorted(state.slots.items())},
                "confidence": round(state.confidence, 4),
                "turn_index": state.turn_index,
            }

        return {
            "input_state": state_dict(self.input_state),
            "resolved_state": state_dict(self.resolved_state),
            "response_states": [state_dict(s) for s in self.response_states],
            "template_ids": list(self.template_ids),
            "routed_path": list(self.routed_path) if self.routed_path else None,
            "active_path": list(self.active_path) if self.active_path else None,
            "latency_ms": self.latency_ms,
            "turn_index": self.turn_index,
        }


class DialogueEngine:
    """Owns the models, tree, snapshot, and all live sessions."""

    def __init__(self, config: EngineConfig | None = None, clock: Callable[[], float] = time.time):
        self.config = config or EngineConfig()
        self.clock = clock
        self.registry: SchemaRegistry = load_schema(self.config.schema)
        self.tree: SkillTree = build_tree(self.registry, known_handlers())
        slots = self.registry.registered_slots
        self.nlu_templates = [
            t
            for t in load_template_file(self.config.nlu_templates, slots)
            if t.direction is Direction.NLU
        ]
        self.nlg = NlgRegistry(load_template_file(self.config.nlg_templates, slots))
        self.snapshot: KbSnapshot = load_snapshot(self.config.snapshot_dir)
        self.models = self._load_models()
        self.pipeline = NluPipeline(
            self.nlu_templates,
            self.registry,
            models=self.models,
            threshold=self.config.confidence_threshold,
        )
        self._sessions: dict[str, Session] = {}
        self._session_rngs: dict[str, random.Random] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._store_lock = threading.Lock()
        if self.config.transcript_dir:
            Path(self.config.transcript_dir).mkdir(parents=True, exist_ok=True)

    def _load_models(self) -> MlModels | None:
        models_dir = self.config.models_dir
        if not models_dir or not Path(models_dir).exists():
            return None
        try:
            table = EmbeddingTable.load(self.config.embeddings)
            return MlModels.load(models_dir, table)
        except FileNotFoundError:
            logger.warning("models directory %s incomplete; running rules-only", models_dir)
            return None

    # -- sessions -----------------------------------------------------------

    def new_session_id(self) -> str:
        return uuid.uuid4().hex[:12]

    def _session(self, session_id: str) -> tuple[Session, threading.Lock]:
        now = self.clock()
        with self._store_lock:
            self._prune(now)
            session = self._sessions.get(session_id)
            if session is None:
                session = Session(
                    id=session_id,
                    memory=MemoryStack(self.config.memory_capacity),
                    created=now,
                    last_active=now,
                )
                self._sessions[session_id] = session
                self._session_rngs[session_id] = random.Random(
                    f"{self.config.seed}:{session_id}"
                )
                self._session_locks[session_id] = threading.Lock()
            return session, self._session_locks[session_id]

    def _prune(self, now: float) -> None:
        idle_limit = self.config.session_idle_minutes * 60.0
        expired = [
            sid for sid, s in self._sessions.items() if now - s.last_active > idle_limit
        ]
        for sid in expired:
            del self._sessions[sid]
            del self._session_rngs[sid]
            del self._session_locks[sid]

    def session_count(self) -> int:
        with self._store_lock:
            return len(self._sessions)

    # -- turn processing ----------------------------------------------------

    def process_turn(self, session_id: str, text: str) -> TurnResult:
        started = time.perf_counter()
        session, lock = self._session(session_id)
        with lock:
            session.last_active = self.clock()
            turn = session.turn_counter
            session.turn_counter += 1
            try:
                result = self._run_turn(session, text, turn)
            except Exception:
                logger.exception("turn failed; replying with fallback apology")
                result = self._apology(session, text, turn)
        latency = (time.perf_counter() - started) * 1000.0
        final = TurnResult(
            session_id=session_id,
            user_text=text,
            input_state=result.input_state,
            resolved_state=result.resolved_state,
            response_states=result.response_states,
            replies=result.replies,
            template_ids=result.template_ids,
            routed_path=result.routed_path,
            active_path=result.active_path,
            latency_ms=latency,
            turn_index=turn,
        )
        self._persist(final)
        return final

    def _run_turn(self, session: Session, text: str, turn: int) -> TurnResult:
        rng = self._session_rngs[session.id]

        try:
            utterance = normalize_utterance(text, turn)
        except EmptyUtteranceError:
            anchor = DialogueState(
                kind=StateKind.INPUT,
                domain_path=self.tree.fallback_path,
                intent="fallback",
                turn_index=turn,
            )
            responses = [prompt_for_input(anchor)]
            replies, template_ids = self._render_all(session, responses, rng)
            return self._result(session, text, turn, None, None, responses, replies, template_ids, None)

        input_state = self.pipeline.parse(utterance)
        try:
            resolved = resolve_followup(session, input_state, self.registry)
        except UnresolvedSlotsError as unresolved:
            resolved = unresolved.state
            responses = [clarification(resolved, unresolved.missing)]
            replies, template_ids = self._render_all(session, responses, rng)
            push_memory(session, resolved, responses)
            return self._result(
                session, text, turn, input_state, resolved, responses, replies, template_ids, None
            )

        routed_path, new_active = route(session, resolved, self.tree)
        session.active_path = new_active
        handler_id = self.tree.handlers[routed_path]
        ctx = SkillContext(
            kb=self.snapshot,
            registry=self.registry,
            memory=session.memory.recent(),
            active_path=new_active.nodes if new_active else None,
        )
        try:
            responses = skill_handle(handler_id, resolved, ctx)
        except Exception:
            logger.exception("skill %s failed", handler_id)
            responses = [
                DialogueState(
                    kind=StateKind.RESPONSE,
                    domain_path=self.tree.fallback_path,
                    intent="fallback",
                    turn_index=turn,
                )
            ]
        replies, template_ids = self._render_all(session, responses, rng)
        push_memory(session, resolved, responses)
        return self._result(
            session, text, turn, input_state, resolved, responses, replies, template_ids, routed_path
        )

    def _render_all(self, session: Session, responses, rng) -> tuple[tuple[str, ...], tuple[str, ...]]:
        replies: list[str] = []
        template_ids: list[str] = []
        for response in responses:
            try:
                reply, template_id = generate_response(
                    response, self.nlg.candidates_for(response), rng, session.last_template_id
                )
            except NoFillableTemplateError:
                logger.exception("no nlg template for %s", response.intent)
                reply, template_id = "sorry , i could not phrase an answer .", "builtin:apology"
            session.last_template_id = template_id
            replies.append(reply)
            template_ids.append(template_id)
        return tuple(replies), tuple(template_ids)

    def _apology(self, session: Session, text: str, turn: int) -> TurnResult:
        anchor = DialogueState(
            kind=StateKind.RESPONSE,
            domain_path=self.tree.fallback_path,
            intent="fallback",
            turn_index=turn,
        )
        rng = self._session_rngs[session.id]
        replies, template_ids = self._render_all(session, [anchor], rng)
        return self._result(session, text, turn, None, None, [anchor], replies, template_ids, None)

    def _result(
        self, session, text, turn, input_state, resolved, responses, replies, template_ids, routed
    ) -> TurnResult:
        return TurnResult(
            session_id=session.id,
            user_text=text,
            input_state=input_state,
            resolved_state=resolved,
            response_states=tuple(responses),
            replies=replies,
            template_ids=template_ids,
            routed_path=routed,
            active_path=session.active_path.nodes if session.active_path else None,
            latency_ms=0.0,
            turn_index=turn,
        )

    def _persist(self, result: TurnResult) -> None:
        if not self.config.transcript_dir:
            return
        path = Path(self.config.transcript_dir) / f"{result.session_id}.jsonl"
        record = {
            "turn": result.turn_index,
            "user": result.user_text,
            "reply": result.reply,
        }
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")

    # -- maintenance --------------------------------------------------------

    def maybe_refresh(self, connector: Connector | None = None, now=None) -> bool:
        """Run the refresh policy; swap the snapshot atomically on success."""
        connector = connector or FileConnector(self.config.snapshot_dir)
        fresh = refresh_snapshot(connector, self.snapshot, now=now)
        changed = fresh is not self.snapshot
        if changed:
            self.snapshot = fresh  # single reference assignment: atomic swap
        return changed

    def add_skill(
        self,
        parent_name: str,
        node_name: str,
        nlu_template_file: str | Path,
        nlg_template_file: str | Path,
        handler_id: str,
        extra_handler=None,
    ) -> None:
        """Register a new skill from its manifest (tree entry + two template
        files); it becomes routable immediately."""
        from . import skills as skills_module

        if extra_handler is not None:
            skills_module._HANDLERS.setdefault(handler_id, extra_handler)
        slots = self.registry.registered_slots
        nlu = load_template_file(nlu_template_file, slots)
        nlg = load_template_file(nlg_template_file, slots)
        tree, registry = register_skill(
            self.tree,
            self.registry,
            parent_name,
            node_name,
            [t for t in nlu if t.direction is Direction.NLU],
            [t for t in nlg if t.direction is Direction.NLG],
            handler_id,
            known_handlers(),
        )
        self.registry = registry
        self.tree = tree
        self.nlu_templates = self.nlu_templates + [
            t for t in nlu if t.direction is Direction.NLU
        ]
        self.nlg.add(nlg)
        self.pipeline = NluPipeline(
            self.nlu_templates,
            self.registry,
            models=self.models,
            threshold=self.config.confidence_threshold,
        )

    def schema_summary(self) -> dict:
        def node_dict(node):
            return {
                "name": node.name,
                "intents": list(node.intents),
                "children": [node_dict(c) for c in node.children],
            }

        return {
            "domains": node_dict(self.registry.root),
            "intents": {
                name: {
                    "domain_path": list(schema.domain_path),
                    "required": list(schema.required),
                    "optional": list(schema.optional),
                }
                for name, schema in sorted(self.registry.intents.items())
            },
            "slots": sorted(self.registry.slot_inventory),
        }
