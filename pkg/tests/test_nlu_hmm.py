from __future__ import annotations

import random

import numpy as np
import pytest

from oracles import oracle_best_tag_path
from scholarchat.nlu import HmmSlotTagger, Instance, NluDataset, Split, bio_repair

FIVE_SENTENCES = [
    ("acl 2020 deadline", "B-CONF_NAME I-CONF_NAME O"),
    ("deadline for acl", "O O B-CONF_NAME"),
    ("acl is great", "B-CONF_NAME O O"),
    ("when is acl 2020", "O O B-CONF_NAME I-CONF_NAME"),
    ("tell me about acl", "O O O B-CONF_NAME"),
]


def make_dataset(rows, split=Split.TRAIN):
    instances = tuple(
        Instance(tuple(text.split()), "give-deadlines", tuple(tags.split()))
        for text, tags in rows
    )
    return NluDataset(instances, split)


@pytest.fixture(scope="module")
def tagger():
    return HmmSlotTagger.train(make_dataset(FIVE_SENTENCES))


class TestTraining:
    def test_emission_of_acl_dominates_its_state_row(self, tagger):
        b_conf = tagger.states.index("B-CONF_NAME")
        acl = tagger.vocabulary["acl"]
        row = tagger.emission[b_conf]
        assert row[acl] == row.max()
        # hand count: "acl" emitted 5 times from B-CONF_NAME, 10 distinct
        # tokens in the vocabulary, add-one smoothing plus the unknown cell
        assert len(tagger.vocabulary) == 10
        assert row[acl] == pytest.approx((5 + 1) / (5 + 10 + 1))

    def test_single_o_sentence_concentrates_on_o(self):
        single = HmmSlotTagger.train(make_dataset([("a", "O")]))
        assert single.states == ("O",)
        assert single.transition.shape == (1, 1)
        assert single.transition[0, 0] == pytest.approx(1.0)

    def test_probability_rows_sum_to_one(self, tagger):
        assert tagger.start.sum() == pytest.approx(1.0, abs=1e-9)
        for row in tagger.transition:
            assert row.sum() == pytest.approx(1.0, abs=1e-9)
        for row in tagger.emission:
            assert row.sum() == pytest.approx(1.0, abs=1e-9)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            HmmSlotTagger.train(NluDataset((), Split.TRAIN))

    def test_training_is_deterministic(self, tmp_path, tagger):
        again = HmmSlotTagger.train(make_dataset(FIVE_SENTENCES))
        tagger.save(tmp_path / "one.json")
        again.save(tmp_path / "two.json")
        assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()


class TestDecoding:
    def test_o_only_training_yields_all_o(self):
        model = HmmSlotTagger.train(make_dataset([("a b c", "O O O"), ("b c", "O O")]))
        assert model.tag(("a", "c", "b")) == ("O", "O", "O")

    def test_deadline_question_tagged_by_oracle_agreement(self, tagger):
        tokens = ("when", "is", "the", "deadline", "for", "acl", "2020")
        observations = tagger.observation_indices(tokens)
        expected = oracle_best_tag_path(
            np.log(tagger.start), np.log(tagger.transition), np.log(tagger.emission), observations
        )
        assert tagger.viterbi_path(tokens) == tuple(tagger.states[i] for i in expected)
        assert tagger.tag(tokens)[5:] == ("B-CONF_NAME", "I-CONF_NAME")

    def test_viterbi_equals_exhaustive_search_on_random_inputs(self, tagger):
        rng = random.Random(42)
        words = list(tagger.vocabulary) + ["zzz", "qqq"]
        for _ in range(100):
            tokens = tuple(rng.choices(words, k=rng.randint(1, 6)))
            observations = tagger.observation_indices(tokens)
            expected = oracle_best_tag_path(
                np.log(tagger.start),
                np.log(tagger.transition),
                np.log(tagger.emission),
                observations,
            )
            got = tagger.viterbi_path(tokens)
            assert got == tuple(tagger.states[i] for i in expected), tokens


class TestBioRepair:
    def test_inside_after_o_becomes_begin(self):
        assert bio_repair(("O", "I-CONF_NAME", "I-CONF_NAME")) == (
            "O",
            "B-CONF_NAME",
            "I-CONF_NAME",
        )

    def test_inside_after_other_slot_becomes_begin(self):
        assert bio_repair(("B-PERSON_NAME", "I-CONF_NAME")) == (
            "B-PERSON_NAME",
            "B-CONF_NAME",
        )

    def test_well_formed_untouched(self):
        tags = ("B-CONF_NAME", "I-CONF_NAME", "O")
        assert bio_repair(tags) == tags
