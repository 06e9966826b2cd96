from __future__ import annotations

import pytest

from conftest import DATA_DIR
from scholarchat.core import DialogueState, SlotValue, StateKind, validate_state
from scholarchat.kb import load_snapshot
from scholarchat.skills import SkillContext, skill_handle
from scholarchat.templates import load_template_file


@pytest.fixture(scope="module")
def kb():
    return load_snapshot(DATA_DIR / "snapshot")


@pytest.fixture(scope="module")
def nlg_placeholders(registry):
    templates = load_template_file(
        DATA_DIR / "templates" / "nlg_seed.txt", registry.registered_slots
    )
    by_intent: dict[str, set] = {}
    for t in templates:
        by_intent.setdefault(t.intent, set()).update(t.placeholders)
    return by_intent


def ask(registry, kb, intent, slots, memory=(), active_path=None):
    schema = registry.intent_schema(intent)
    state = DialogueState(
        kind=StateKind.INPUT,
        domain_path=schema.domain_path,
        intent=intent,
        slots={k: SlotValue(k, v) for k, v in slots.items()},
    )
    tree_handler = {
        node.name: node.handler
        for node in registry.iter_nodes()
        if node.handler is not None
    }
    handler_id = tree_handler[schema.domain_path[-1]]
    ctx = SkillContext(kb=kb, registry=registry, memory=tuple(memory), active_path=active_path)
    return skill_handle(handler_id, state, ctx)


class TestConferenceSkills:
    def test_deadline_from_fixture(self, registry, kb):
        (response,) = ask(registry, kb, "give-deadlines", {"CONF_NAME": "acl 2020"})
        assert response.intent == "give-deadlines"
        assert response.slot_surface("CONF_NAME") == "ACL 2020"
        assert response.slot_surface("DATE") == "2019-12-09"
        assert response.slot_surface("ANSWER") == "submission"

    def test_conference_dates_both_ends(self, registry, kb):
        (response,) = ask(registry, kb, "give-conference-dates", {"CONF_NAME": "emnlp 2019"})
        assert response.slot_surface("DATE") == "2019-11-03"
        assert response.slot_surface("DATE_END") == "2019-11-07"

    def test_keynote_time(self, registry, kb):
        (response,) = ask(
            registry,
            kb,
            "give-keynote-time",
            {"KEYNOTE_TITLE": "language understanding beyond benchmarks"},
        )
        assert response.slot_surface("DATE") == "2019-06-03 09:00"
        assert response.slot_surface("CONF_NAME") == "NAACL 2019"

    def test_unknown_conference_is_no_result(self, registry, kb):
        (response,) = ask(registry, kb, "give-deadlines", {"CONF_NAME": "popl 1999"})
        assert response.intent == "no-result"
        assert "popl" in response.slot_surface("ANSWER")

    def test_deadline_listing_with_year_filter(self, registry, kb):
        (response,) = ask(registry, kb, "list-upcoming-deadlines", {"YEAR": "2019"})
        answer = response.slot_surface("ANSWER")
        assert "EMNLP 2019 submission on 2019-05-21" in answer
        assert "2020-10-07" not in answer


class TestPaperSkills:
    def test_authors(self, registry, kb):
        (response,) = ask(
            registry, kb, "give-authors", {"PAPER_TITLE": "robust slot filling under noise"}
        )
        assert response.slot_surface("PERSON_NAME") == "Priya Raman and Mira Kovac"

    def test_abstract_for_unknown_title_is_no_result(self, registry, kb):
        (response,) = ask(registry, kb, "give-abstract", {"PAPER_TITLE": "made up title"})
        assert response.intent == "no-result"

    def test_section_lookup(self, registry, kb):
        (response,) = ask(
            registry,
            kb,
            "give-section",
            {
                "PAPER_TITLE": "attention patterns in long documents",
                "SECTION_NAME": "results",
            },
        )
        assert "Entropy collapses" in response.slot_surface("ANSWER")

    def test_title_by_author_picks_most_recent(self, registry, kb):
        (response,) = ask(registry, kb, "give-title", {"PERSON_NAME": "annika larsen"})
        assert response.slot_surface("PAPER_TITLE") == "Emergent Lexicons in Multi Agent Games"
        assert response.slot_surface("YEAR") == "2023"

    def test_title_by_author_with_year_filter(self, registry, kb):
        (response,) = ask(
            registry, kb, "give-title", {"PERSON_NAME": "annika larsen", "YEAR": "2020"}
        )
        assert response.slot_surface("PAPER_TITLE") == "Measuring Paraphrase Diversity at Scale"


class TestPeopleSkill:
    def test_h_index_for_every_fixture_person(self, registry, kb):
        # the live system answered all examined h-index probes; the fixture
        # agent must answer every stored person
        for person in kb.people:
            (response,) = ask(registry, kb, "give-h-index", {"PERSON_NAME": person.name})
            assert response.intent == "give-h-index"
            assert response.slot_surface("COUNT") == str(person.h_index)

    def test_paper_count(self, registry, kb):
        (response,) = ask(registry, kb, "give-paper-count", {"PERSON_NAME": "priya raman"})
        assert response.slot_surface("COUNT") == "4"


class TestNewsSkill:
    def test_latest_news_most_recent_first(self, registry, kb):
        (response,) = ask(registry, kb, "give-latest-news", {})
        answer = response.slot_surface("ANSWER")
        assert answer.index("2026-07-28") < answer.index("2026-07-14")

    def test_topic_filter(self, registry, kb):
        (response,) = ask(registry, kb, "give-news-about", {"NEWS_TOPIC": "transformers"})
        assert "transformer" in response.slot_surface("ANSWER").lower()

    def test_unknown_topic_no_result(self, registry, kb):
        (response,) = ask(registry, kb, "give-news-about", {"NEWS_TOPIC": "zeppelins"})
        assert response.intent == "no-result"


class TestGeneralSkills:
    def test_exit_emits_goodbye_then_survey_prompt(self, registry, kb):
        responses = ask(registry, kb, "end-conversation", {})
        assert [r.intent for r in responses] == ["end-conversation", "survey-prompt"]
        assert responses[1].domain_path[-1] == "Survey"

    def test_context_echoes_memory(self, registry, kb):
        past = DialogueState(
            kind=StateKind.INPUT,
            domain_path=("Master", "Task", "Conference", "Dates", "Deadlines"),
            intent="give-deadlines",
            slots={"CONF_NAME": SlotValue("CONF_NAME", "acl 2020")},
        )
        (response,) = ask(registry, kb, "show-context", {}, memory=[past])
        assert "give-deadlines" in response.slot_surface("ANSWER")
        assert "acl 2020" in response.slot_surface("ANSWER")

    def test_active_topic(self, registry, kb):
        (response,) = ask(
            registry,
            kb,
            "show-active-topic",
            {},
            active_path=("Master", "Task", "People"),
        )
        assert response.slot_surface("ANSWER") == "Master > Task > People"


class TestResponseContracts:
    """Every skill response must validate and stay renderable."""

    CASES = [
        ("give-deadlines", {"CONF_NAME": "acl 2020"}),
        ("give-conference-dates", {"CONF_NAME": "acl 2020"}),
        ("give-conference-start", {"CONF_NAME": "coling 2020"}),
        ("give-conference-venue", {"CONF_NAME": "naacl 2019"}),
        ("list-upcoming-deadlines", {}),
        ("give-keynotes", {"CONF_NAME": "naacl 2019"}),
        ("give-keynote-speaker", {"KEYNOTE_TITLE": "conversational machines in the wild"}),
        ("give-tutorials", {"CONF_NAME": "naacl 2019"}),
        ("give-tutorial-time", {"TUTORIAL_TITLE": "building scholarly knowledge graphs"}),
        ("give-tutorial-location", {"TUTORIAL_TITLE": "deep adversarial learning for nlp"}),
        ("give-social-events", {"CONF_NAME": "naacl 2019"}),
        ("give-social-event-time", {"EVENT_NAME": "welcome reception"}),
        ("give-program", {"CONF_NAME": "acl 2020"}),
        ("give-event-time", {"EVENT_NAME": "best paper orals"}),
        ("give-event-location", {"EVENT_NAME": "session 2b information extraction"}),
        ("give-title", {"PERSON_NAME": "jun park"}),
        ("give-authors", {"PAPER_TITLE": "neural parsing with tiny treebanks"}),
        ("give-year", {"PAPER_TITLE": "a graph view of citation networks"}),
        ("give-venue", {"PAPER_TITLE": "low resource summarization with retrieval"}),
        ("give-bib", {"PAPER_TITLE": "calibrating confidence in text classifiers"}),
        ("give-citations", {"PAPER_TITLE": "deep adversarial learning for nlp"}),
        ("give-url", {"PAPER_TITLE": "sparse attention for efficient decoding"}),
        ("give-abstract", {"PAPER_TITLE": "benchmarking scholarly question answering"}),
        ("give-conclusion", {"PAPER_TITLE": "curriculum learning for dialogue agents"}),
        ("give-figures", {"PAPER_TITLE": "attention patterns in long documents"}),
        ("give-h-index", {"PERSON_NAME": "mira kovac"}),
        ("give-affiliation", {"PERSON_NAME": "tomas lindt"}),
        ("give-person-papers", {"PERSON_NAME": "daniel reyes"}),
        ("give-news-about", {"NEWS_TOPIC": "evaluation"}),
        ("give-latest-news", {}),
        ("greet", {}),
        ("ask-menu", {}),
        ("give-feedback-positive", {}),
    ]

    @pytest.mark.parametrize("intent,slots", CASES, ids=[c[0] for c in CASES])
    def test_response_validates_and_is_consumable(
        self, registry, kb, nlg_placeholders, intent, slots
    ):
        responses = ask(registry, kb, intent, slots)
        assert responses
        for response in responses:
            assert validate_state(response, registry) == [], response
            allowed = nlg_placeholders.get(response.intent, set())
            assert set(response.slots) <= allowed, (response.intent, response.slots)

    def test_purity_same_inputs_same_responses(self, registry, kb):
        one = ask(registry, kb, "give-deadlines", {"CONF_NAME": "acl 2020"})
        two = ask(registry, kb, "give-deadlines", {"CONF_NAME": "acl 2020"})
        assert one == two
