from __future__ import annotations

import random

import pytest

from oracles import oracle_match
from scholarchat.core import DialogueState, SlotValue, StateKind, normalize_utterance
from scholarchat.templates import (
    Direction,
    MissingSlotError,
    SegmentKind,
    TemplateSource,
    TemplateSyntaxError,
    compile_template,
    load_template_file,
    match_utterance,
    render_template,
)

SLOTS = frozenset(
    ["CONF_NAME", "PAPER_TITLE", "PERSON_NAME", "TUTORIAL_TITLE", "DATE", "YEAR"]
)
DEADLINE_PATH = ("Master", "Task", "Conference", "Dates", "Deadlines")


def nlu(pattern, intent="give-deadlines", path=DEADLINE_PATH):
    return compile_template(
        pattern, direction=Direction.NLU, domain_path=path, intent=intent, slots=SLOTS
    )


def nlg(pattern, intent="give-deadlines", path=DEADLINE_PATH):
    return compile_template(
        pattern, direction=Direction.NLG, domain_path=path, intent=intent, slots=SLOTS
    )


def response(intent, slots, path=DEADLINE_PATH):
    return DialogueState(
        kind=StateKind.RESPONSE,
        domain_path=path,
        intent=intent,
        slots={k: SlotValue(k, v) for k, v in slots.items()},
    )


class TestCompile:
    def test_literals_and_placeholder(self):
        t = nlu("when is the deadline for {CONF_NAME}")
        assert t.literal_count == 5
        assert t.placeholders == ("CONF_NAME",)
        assert t.wildcard_count == 0

    def test_wildcard(self):
        t = nlu("when does ... start ?")
        assert t.literal_count == 4
        assert t.wildcard_count == 1
        assert t.placeholders == ()

    def test_adjacent_placeholders_rejected(self):
        with pytest.raises(TemplateSyntaxError, match="adjacent"):
            nlu("{CONF_NAME}{YEAR} oops")
        with pytest.raises(TemplateSyntaxError, match="adjacent"):
            nlu("tell me {CONF_NAME} ...")

    def test_unknown_slot_rejected(self):
        with pytest.raises(TemplateSyntaxError, match="unknown slot"):
            nlu("the deadline for {NOPE}")

    def test_unbalanced_braces_rejected(self):
        with pytest.raises(TemplateSyntaxError):
            nlu("the deadline for {CONF_NAME")

    def test_nlu_requires_a_literal(self):
        with pytest.raises(TemplateSyntaxError, match="literal"):
            nlu("{CONF_NAME}")

    def test_nlg_rejects_wildcards(self):
        with pytest.raises(TemplateSyntaxError, match="wildcard"):
            nlg("the deadline is ...")

    def test_literals_normalized_like_utterances(self):
        t = nlu("When IS the   Deadline?")
        assert [s.value for s in t.segments] == ["when", "is", "the", "deadline", "?"]

    def test_id_stable_under_recompile(self):
        assert nlu("a deadline for {CONF_NAME}").id == nlu("a deadline for {CONF_NAME}").id


class TestMatch:
    def test_deadline_capture(self):
        t = nlu("when is the deadline for {CONF_NAME}")
        hit = match_utterance([t], normalize_utterance("when is the deadline for acl 2020"))
        assert hit is not None
        result, state = hit
        assert result.captured == {"CONF_NAME": "acl 2020"}
        assert state.intent == "give-deadlines"
        assert state.domain_path == DEADLINE_PATH
        assert state.confidence == 1.0
        assert state.slots["CONF_NAME"].surface == "acl 2020"

    def test_no_match_is_none(self):
        t = nlu("when is the deadline for {CONF_NAME}")
        assert match_utterance([t], normalize_utterance("hello")) is None

    def test_wildcard_consumes_zero_or_more(self):
        t = nlu("when does ... start ?")
        assert match_utterance([t], normalize_utterance("when does acl 2020 start ?"))
        assert match_utterance([t], normalize_utterance("when does start ?"))
        assert match_utterance([t], normalize_utterance("when does it all start ?"))

    def test_equal_rank_breaks_on_template_id(self):
        conference = nlu("when does {CONF_NAME} start", intent="give-conference-start")
        tutorial = nlu(
            "when does {TUTORIAL_TITLE} start",
            intent="give-tutorial-time",
            path=("Master", "Task", "Conference", "Events", "Tutorials"),
        )
        utterance = normalize_utterance("when does deep adversarial learning for nlp start")
        hit = match_utterance([conference, tutorial], utterance)
        assert hit is not None
        result, state = hit
        expected = oracle_match([conference, tutorial], utterance.tokens)
        assert (result.template_id, result.captured) == expected
        winner = min([conference, tutorial], key=lambda t: t.id)
        assert result.template_id == winner.id
        assert state.intent == winner.intent

    def test_more_literals_beat_fewer(self):
        short = nlu("when does {CONF_NAME} start", intent="give-conference-start")
        long = nlu(
            "when does the tutorial {TUTORIAL_TITLE} start",
            intent="give-tutorial-time",
        )
        u = normalize_utterance("when does the tutorial neural parsing start")
        hit = match_utterance([short, long], u)
        assert hit is not None
        assert hit[0].template_id == long.id
        assert hit[0].captured == {"TUTORIAL_TITLE": "neural parsing"}

    def test_fewer_wildcards_beat_more_at_equal_literals(self):
        with_wild = nlu("when does ... start ? ...", intent="give-conference-start")
        without = nlu("when does {CONF_NAME} start ? hm", intent="give-deadlines")
        u = normalize_utterance("when does acl start ? hm")
        hit = match_utterance([with_wild, without], u)
        assert hit is not None
        assert hit[0].template_id == without.id

    def test_permutation_invariance(self):
        templates = [
            nlu("when does {CONF_NAME} start", intent="give-conference-start"),
            nlu("when does {TUTORIAL_TITLE} start", intent="give-tutorial-time"),
            nlu("when does ... start", intent="give-deadlines"),
        ]
        u = normalize_utterance("when does acl 2020 start")
        baseline = match_utterance(templates, u)
        assert baseline is not None
        rng = random.Random(7)
        for _ in range(10):
            shuffled = templates[:]
            rng.shuffle(shuffled)
            again = match_utterance(shuffled, u)
            assert again is not None
            assert again[0] == baseline[0]


class TestRender:
    def test_fills_placeholders(self):
        t = nlg("the deadline for {CONF_NAME} is {DATE}")
        state = response("give-deadlines", {"CONF_NAME": "ACL 2020", "DATE": "2019-12-09"})
        assert render_template(t, state) == "the deadline for ACL 2020 is 2019-12-09"

    def test_zero_placeholder_template_verbatim(self):
        t = nlg("hello there !")
        assert render_template(t, response("give-deadlines", {})) == "hello there !"

    def test_missing_slot_named_in_error(self):
        t = nlg("the deadline for {CONF_NAME} is {DATE}")
        state = response("give-deadlines", {"CONF_NAME": "ACL 2020"})
        with pytest.raises(MissingSlotError) as err:
            render_template(t, state)
        assert err.value.slot == "DATE"

    def test_braces_stripped_from_surfaces(self):
        t = nlg("i heard about {CONF_NAME}")
        state = response("give-deadlines", {"CONF_NAME": "evil {brace} conf"})
        out = render_template(t, state)
        assert "{" not in out and "}" not in out


class TestLoadFile:
    def test_round_trips_a_small_file(self, tmp_path):
        f = tmp_path / "templates.txt"
        f.write_text(
            "# seed\n"
            "nlu\tMaster.Task.Conference.Dates.Deadlines\tgive-deadlines\t"
            "when is the deadline for {CONF_NAME}\n"
            "nlg\tMaster.Task.Conference.Dates.Deadlines\tgive-deadlines\t"
            "the deadline for {CONF_NAME} is {DATE}\n",
            encoding="utf-8",
        )
        templates = load_template_file(f, SLOTS)
        assert len(templates) == 2
        assert templates[0].direction is Direction.NLU
        assert templates[0].source is TemplateSource.HUMAN
        assert templates[1].direction is Direction.NLG

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.txt"
        f.write_text("")
        assert load_template_file(f, SLOTS) == []

    def test_malformed_line_reports_line_number(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("nlu\tMaster\tgreet\thello\nbroken line\n")
        with pytest.raises(TemplateSyntaxError, match="bad.txt:2"):
            load_template_file(f, SLOTS)

    def test_duplicate_rejected(self, tmp_path):
        f = tmp_path / "dup.txt"
        line = "nlu\tMaster\tgreet\thello there\n"
        f.write_text(line + line)
        with pytest.raises(TemplateSyntaxError, match="duplicate"):
            load_template_file(f, SLOTS)


class TestOracleEquivalence:
    """Randomized cross-check against exhaustive span search."""

    def test_matcher_equals_brute_force(self):
        from oracles import random_nlu_template, random_tokens

        rng = random.Random(20240611)
        for round_no in range(300):
            templates = [random_nlu_template(rng, i) for i in range(rng.randint(1, 5))]
            tokens = random_tokens(rng, templates)
            if not tokens:
                continue
            utterance = normalize_utterance(" ".join(tokens))
            got = match_utterance(templates, utterance)
            expected = oracle_match(templates, utterance.tokens)
            if expected is None:
                assert got is None, (round_no, utterance.tokens)
            else:
                assert got is not None, (round_no, utterance.tokens)
                assert (got[0].template_id, got[0].captured) == expected, (
                    round_no,
                    utterance.tokens,
                )
