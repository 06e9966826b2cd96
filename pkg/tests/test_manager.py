from __future__ import annotations

import pytest

from scholarchat.core import (
    DialogueState,
    SchemaRegistry,
    SlotValue,
    StateKind,
    UnresolvedSlotsError,
)
from scholarchat.manager import (
    ActivePath,
    MemoryStack,
    Session,
    TreeError,
    build_tree,
    push_memory,
    register_skill,
    resolve_followup,
    route,
)
from scholarchat.skills import known_handlers
from scholarchat.templates import Direction, compile_template

FIGURE_TREE = {
    "Master": ["General", "Task"],
    "General": ["Context", "Exit", "Fallback", "Feedback", "Greeting", "Identity", "Menu"],
    "Exit": ["Survey"],
    "Task": ["Paper", "Conference", "People", "NLPnews"],
    "Paper": ["Meta-data", "Discourse"],
    "Conference": ["Dates", "Events", "Program"],
    "Dates": ["Deadlines"],
    "Events": ["Keynotes", "Social_events", "Tutorials"],
}


def state(intent, path, slots=None, kind=StateKind.INPUT, turn=0):
    return DialogueState(
        kind=kind,
        domain_path=tuple(path),
        intent=intent,
        slots={k: SlotValue(k, v) for k, v in (slots or {}).items()},
        turn_index=turn,
    )


@pytest.fixture(scope="module")
def tree(registry):
    return build_tree(registry, known_handlers())


class TestBuildTree:
    def test_shipped_topology(self, registry):
        nodes = {n.name: [c.name for c in n.children] for n in registry.iter_nodes()}
        for parent, children in FIGURE_TREE.items():
            assert nodes[parent] == children, parent

    def test_every_intent_owned_once(self, tree, registry):
        assert set(tree.owner) == set(registry.intents)

    def test_duplicate_ownership_rejected(self, registry):
        from scholarchat.core import DomainNode

        root = DomainNode(
            name="Root",
            children=(
                DomainNode(name="A", intents=("greet",), handler="greeting"),
                DomainNode(name="B", intents=("greet",), handler="greeting"),
            ),
        )
        bad = SchemaRegistry(root=root, intents={}, slot_inventory=["X"])
        with pytest.raises(TreeError, match="owned by two nodes"):
            build_tree(bad, known_handlers())

    def test_unknown_handler_rejected(self, registry):
        from scholarchat.core import DomainNode

        root = DomainNode(name="Root", intents=("greet",), handler="nope")
        bad = SchemaRegistry(root=root, intents={}, slot_inventory=["X"])
        with pytest.raises(TreeError, match="unknown handler"):
            build_tree(bad, known_handlers())

    def test_single_node_tree_valid(self):
        from scholarchat.core import DomainNode

        root = DomainNode(name="Solo", intents=("greet",), handler="greeting")
        solo = SchemaRegistry(root=root, intents={}, slot_inventory=["X"])
        tree = build_tree(solo, known_handlers())
        assert tree.owner["greet"] == ("Solo",)


class TestRoute:
    META = ("Master", "Task", "Paper", "Meta-data")
    DISCOURSE = ("Master", "Task", "Paper", "Discourse")
    DEADLINES = ("Master", "Task", "Conference", "Dates", "Deadlines")

    def test_first_task_turn_activates_path(self, tree):
        session = Session(id="s")
        target, active = route(session, state("give-title", self.META), tree)
        assert target == self.META
        assert active == ActivePath(self.META, 0)

    def test_followup_on_sibling_leaf_switches_within_topic(self, tree):
        session = Session(id="s", active_path=ActivePath(self.META, 0))
        target, active = route(session, state("give-abstract", self.DISCOURSE, turn=1), tree)
        assert target == self.DISCOURSE
        assert active == ActivePath(self.DISCOURSE, 1)

    def test_intent_owned_by_path_terminal_keeps_path(self, tree):
        session = Session(id="s", active_path=ActivePath(self.DEADLINES, 0))
        target, active = route(session, state("give-deadlines", self.DEADLINES, turn=3), tree)
        assert target == self.DEADLINES
        assert active == ActivePath(self.DEADLINES, 0)

    def test_intent_owned_by_ancestor_on_path_dispatches_there(self, tree):
        session = Session(id="s", active_path=ActivePath(self.DEADLINES, 0))
        dates = ("Master", "Task", "Conference", "Dates")
        target, active = route(session, state("give-conference-dates", dates, turn=1), tree)
        assert target == dates
        assert active == ActivePath(self.DEADLINES, 0)  # path survives

    def test_topic_switch_deactivates_and_reactivates(self, tree):
        session = Session(id="s", active_path=ActivePath(self.META, 0))
        target, active = route(session, state("give-deadlines", self.DEADLINES, turn=5), tree)
        assert target == self.DEADLINES
        assert active == ActivePath(self.DEADLINES, 5)

    def test_general_intent_is_one_shot_keeping_task_path(self, tree):
        session = Session(id="s", active_path=ActivePath(self.DEADLINES, 2))
        greeting = ("Master", "General", "Greeting")
        target, active = route(session, state("greet", greeting, turn=4), tree)
        assert target == greeting
        assert active == ActivePath(self.DEADLINES, 2)

    def test_unroutable_intent_goes_to_fallback(self, tree):
        session = Session(id="s")
        target, active = route(session, state("made-up-intent", ("Master",), turn=0), tree)
        assert target == tree.fallback_path
        assert active is None

    def test_owned_intents_never_route_to_fallback(self, tree, registry):
        for intent in registry.intents:
            if intent == "fallback":
                continue
            session = Session(id="s")
            target, _ = route(
                session, state(intent, registry.domain_path_of(intent)), tree
            )
            assert target != tree.fallback_path, intent

    def test_routing_is_deterministic(self, tree):
        for _ in range(5):
            session = Session(id="s", active_path=ActivePath(self.META, 0))
            assert route(session, state("give-abstract", self.DISCOURSE), tree) == route(
                Session(id="s", active_path=ActivePath(self.META, 0)),
                state("give-abstract", self.DISCOURSE),
                tree,
            )


class TestMemory:
    def test_push_input_then_responses(self):
        session = Session(id="s", memory=MemoryStack(capacity=10))
        inp = state("give-deadlines", TestRoute.DEADLINES, turn=0)
        responses = [
            state("give-deadlines", TestRoute.DEADLINES, kind=StateKind.RESPONSE, turn=0),
            state("survey-prompt", TestRoute.DEADLINES, kind=StateKind.RESPONSE, turn=0),
        ]
        push_memory(session, inp, responses)
        assert len(session.memory) == 3
        assert session.memory.recent()[0] is responses[-1]

    def test_capacity_evicts_oldest(self):
        session = Session(id="s", memory=MemoryStack(capacity=50))
        for turn in range(51):
            push_memory(session, state("greet", ("Master", "General", "Greeting"), turn=turn), [])
        assert len(session.memory) == 50
        assert session.memory.recent()[-1].turn_index == 1  # turn 0 evicted

    def test_scripted_three_turn_stack_order(self):
        session = Session(id="s", memory=MemoryStack(capacity=50))
        expected = []
        for turn in range(3):
            inp = state("greet", ("Master", "General", "Greeting"), turn=turn)
            rsp = state(
                "greet", ("Master", "General", "Greeting"), kind=StateKind.RESPONSE, turn=turn
            )
            push_memory(session, inp, [rsp])
            expected.extend([inp, rsp])
        assert list(session.memory) == expected
        turns = [s.turn_index for s in session.memory]
        assert turns == sorted(turns)

    def test_resolve_followup_uses_session_memory(self, registry):
        session = Session(id="s", memory=MemoryStack())
        past = state(
            "give-abstract",
            ("Master", "Task", "Paper", "Discourse"),
            {"PAPER_TITLE": "X"},
            kind=StateKind.RESPONSE,
        )
        push_memory(session, past, [])
        current = state("give-authors", ("Master", "Task", "Paper", "Meta-data"))
        merged = resolve_followup(session, current, registry)
        assert merged.slot_surface("PAPER_TITLE") == "X"

    def test_resolve_followup_unresolved_raises(self, registry):
        session = Session(id="s", memory=MemoryStack())
        current = state("give-authors", ("Master", "Task", "Paper", "Meta-data"))
        with pytest.raises(UnresolvedSlotsError):
            resolve_followup(session, current, registry)


class TestRegisterSkill:
    def workshops_templates(self, registry, path):
        slots = registry.registered_slots
        nlu = [
            compile_template(
                "which workshops are at {CONF_NAME}",
                direction=Direction.NLU,
                domain_path=path,
                intent="give-workshops",
                slots=slots,
            ),
            compile_template(
                "list the workshops of {CONF_NAME}",
                direction=Direction.NLU,
                domain_path=path,
                intent="give-workshops",
                slots=slots,
            ),
        ]
        nlg = [
            compile_template(
                "workshops at {CONF_NAME} : {ANSWER}",
                direction=Direction.NLG,
                domain_path=path,
                intent="give-workshops",
                slots=slots,
            )
        ]
        return nlu, nlg

    def test_registered_skill_is_routable(self, registry, tree):
        path = ("Master", "Task", "Conference", "Events", "Workshops")
        nlu, nlg = self.workshops_templates(registry, path)
        new_tree, new_registry = register_skill(
            tree, registry, "Events", "Workshops", nlu, nlg, "program", known_handlers()
        )
        assert new_tree.owner["give-workshops"] == path
        schema = new_registry.intent_schema("give-workshops")
        assert schema.required == ("CONF_NAME",)
        assert schema.answers == ("ANSWER",)
        session = Session(id="s")
        target, active = route(session, state("give-workshops", path), new_tree)
        assert target == path
        # the original tree is untouched
        assert "give-workshops" not in tree.owner

    def test_zero_nlg_templates_rejected(self, registry, tree):
        path = ("Master", "Task", "Conference", "Events", "Workshops")
        nlu, _ = self.workshops_templates(registry, path)
        with pytest.raises(TreeError, match="no nlg templates"):
            register_skill(
                tree, registry, "Events", "Workshops", nlu, [], "program", known_handlers()
            )

    def test_duplicate_name_under_same_parent_rejected(self, registry, tree):
        path = ("Master", "Task", "Conference", "Events", "Tutorials")
        _, nlg = self.workshops_templates(registry, path)
        with pytest.raises(TreeError, match="already registered"):
            register_skill(
                tree, registry, "Events", "Tutorials", [], nlg, "program", known_handlers()
            )

    def test_conflicting_intent_rejected(self, registry, tree):
        path = ("Master", "Task", "Conference", "Events", "Workshops")
        slots = registry.registered_slots
        nlg = [
            compile_template(
                "deadlines again : {ANSWER}",
                direction=Direction.NLG,
                domain_path=path,
                intent="give-deadlines",
                slots=slots,
            )
        ]
        with pytest.raises(TreeError, match="owned by two nodes"):
            register_skill(
                tree, registry, "Events", "Workshops", [], nlg, "program", known_handlers()
            )

    def test_missing_parent_rejected(self, registry, tree):
        path = ("Master", "Task", "Nowhere", "Workshops")
        _, nlg = self.workshops_templates(registry, path)
        with pytest.raises(TreeError, match="does not exist"):
            register_skill(
                tree, registry, "Nowhere", "Workshops", [], nlg, "program", known_handlers()
            )
