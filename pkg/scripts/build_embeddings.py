#!/usr/bin/env python3
"""Build the fixture word-embedding table.

A stand-in for large pretrained vectors at desk scale. Every word gets a
deterministic hash-seeded unit direction; words in the same lexical synonym
cluster (deadline/due/submission, start/begin, ...) share most of their
direction, mirroring the topical geometry real distributional vectors
provide. 300 dimensions keep unrelated words near-orthogonal, which a
50-dimensional random projection cannot do at this vocabulary size.

Deterministic end to end: the committed file regenerates byte-identically.
A tail of common out-of-domain words with small vectors rounds the table
out to roughly 2k entries so lookups beyond the fixture data stay
realistic.

Usage: python scripts/build_embeddings.py [output-path]
"""
from __future__ import annotations

import hashlib
import random
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from scholarchat.augment import load_slot_vocabulary  # noqa: E402
from scholarchat.core import load_schema, tokenize  # noqa: E402
from scholarchat.nlu.embeddings import EmbeddingTable  # noqa: E402
from scholarchat.templates import Direction, SegmentKind, load_template_file  # noqa: E402

DATA = ROOT / "src" / "scholarchat" / "data"
DIM = 300
SAMPLES_PER_TEMPLATE = 6
TOPIC_WEIGHT = 0.8  # share of a clustered word's direction from its cluster

# Lexical synonym clusters: a small domain thesaurus, the role large
# pretrained vectors would otherwise play.
CLUSTERS = [
    ["deadline", "deadlines", "due", "submit", "submission", "submissions"],
    ["program", "schedule", "agenda"],
    ["abstract", "summary", "summarize"],
    ["conclusion", "conclusions", "conclude", "concluded"],
    ["author", "authors", "wrote", "write", "written", "researchers"],
    ["published", "publish", "publication", "publications", "appeared", "appear", "released"],
    ["citations", "cited", "citation"],
    ["bib", "bibtex", "cite"],
    ["figure", "figures"],
    ["start", "starts", "begin", "begins", "began"],
    ["date", "dates", "day", "days"],
    ["keynote", "keynotes"],
    ["tutorial", "tutorials"],
    ["social", "party", "parties", "banquet", "reception"],
    ["session", "sessions", "event", "events"],
    ["location", "located", "room", "hall", "city", "held", "hosts", "venue"],
    ["affiliation", "affiliated", "university", "institution", "work", "works", "based"],
    ["link", "url", "read", "download"],
    ["news", "headlines"],
    ["many", "number", "count"],
    ["conference", "conferences"],
    ["topic", "topics", "context"],
]

PAD_WORDS = """
able above accept across action actually afraid afternoon again against age ago agree
air almost alone along already although always among amount angry animal another answer
anyone anything appear apple area arm around arrive art as ask attention aunt autumn
away baby back bad bag ball bank base basket bath beach bear beautiful bed been before
behind believe bell belong best better big bird birthday bit black blue board boat body
book born both bottle bottom box boy bread break bridge bring broken brother brown build
burn bus business busy buy cake call came camp cap car card care careful carry case cat
catch caught chair chance change cheap check chicken child children choose class clean
clear clever climb close cloth cloud coat cold collect college combine come comfort
coming common complete cook cool copy corner correct cost cotton could country course
cover cow cross crowd cry cup cut dance dark dead dear decide desk did die different
dinner dish dog done door down draw dream dress drink drive drop dry duck each ear early
earn east easy eat edge egg eight either else empty enjoy enough enter equal even evening
ever exact except excited exercise expect eye face fact fall false far farm fast fat
father fear feed feel feet fell felt few field fight fill film final find fine finger
finish fire fish fit five fix floor fly food foot force forest forget form forward four
free fresh friend from front fruit full fun funny game garden gate gave get gift girl
glad glass goes gold gone good got grass gray green ground group grow hair half hand
hang happen happy hard hat hate head hear heard heavy held hello her here hers high hill
hit hold hole holiday home hope horse hot hour house how huge hundred hungry hurry hurt
ice idea if important inside into iron island job join juice jump just keep kept key
kill kind king kitchen knee knew knife know lady lake land large last late laugh lay
lazy lead leaf learn least leave left leg lend less lesson let letter library lie life
lift light like line lion lip listen little live long look lose lost loud love low lucky
lunch made mail main make man map march mark market matter may meal mean meat meet men
middle might mile milk mind mine minute miss mix moment money monkey month moon more
most mother mountain mouse mouth much music must nail narrow near neck need never new
next nice night nine nobody noise none north nose note nothing notice now obey ocean
off offer office old once one only open or orange order other our out outside over page
paid pain paint pair pan part pass past path pay pen pencil people per perfect person
pick picture piece pig pin pink place plan plane plant plate play please pocket point
poor post pot pour power press pretty price print prize problem pull push put queen
question quick quiet quite rabbit race radio rain raise ran rang reach ready real red
remember rest rice rich ride right ring rise road rock roll roof round rule run rush
sad safe said sail salt same sand sat save saw say school sea seat second see seem seen
sell send seven shade shall shape share sharp she sheep shine ship shirt shoe shop short
shout side sign silver since sing sit six size skirt sky sleep slow small smile smoke
snow so soap sock soft some song soon sorry sound soup south space speak spend spoon
sport spring stamp stand star station stay step stick still stone stop store storm story
straight strange street strong such sudden sugar summer sun sure sweet swim table tail
take talk tall taste taxi tea teach team tear ten tent test than thank that their them
then there these they thin thing think third this those though three through throw thus
ticket tie till to today toe together told tomorrow tonight too took tool top touch
towel town toy train tree trip trouble true try turn twice two under understand until
up use useful usual very village visit voice wait wake walk wall want warm was wash
watch water wave way weak wear week well went were wet what wheel when where white who
whose why wide wife will win wind window wine winter wish with without woman wonder
wood word wore worse wrong yard year yellow yes yet you your zero zone
""".split()


def training_sentences() -> list[list[str]]:
    """Text the fixture vocabulary is drawn from: the stand-in corpora plus
    instantiated seed templates."""
    sentences: list[list[str]] = []
    for corpus in sorted((DATA / "corpora").glob("*.txt")):
        for line in corpus.read_text(encoding="utf-8").splitlines():
            if line.strip():
                sentences.append(list(tokenize(line)))

    registry = load_schema(DATA / "schema.yaml")
    vocabulary = load_slot_vocabulary(DATA / "slot_vocab.yaml")
    templates = load_template_file(
        DATA / "templates" / "nlu_seed.txt", registry.registered_slots
    )
    for template in templates:
        if template.direction is not Direction.NLU:
            continue
        rng = random.Random(f"embed:{template.id}")
        for _ in range(SAMPLES_PER_TEMPLATE):
            tokens: list[str] = []
            for segment in template.segments:
                if segment.kind is SegmentKind.LITERAL:
                    tokens.append(segment.value)
                elif segment.kind is SegmentKind.PLACEHOLDER:
                    tokens.extend(tokenize(rng.choice(vocabulary[segment.value])))
            sentences.append(tokens)
    return sentences


def _unit(seed: str) -> np.ndarray:
    digest = hashlib.sha256(seed.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    vector = rng.standard_normal(DIM)
    return vector / np.linalg.norm(vector)


def build_table() -> EmbeddingTable:
    words = sorted({t for s in training_sentences() for t in s})
    cluster_of = {w: members[0] for members in CLUSTERS for w in members}

    vectors: dict[str, np.ndarray] = {}
    for word in words:
        own = _unit(f"word:{word}")
        topic = cluster_of.get(word)
        if topic is not None:
            direction = TOPIC_WEIGHT * _unit(f"topic:{topic}") + (1 - TOPIC_WEIGHT) * own
            direction = direction / np.linalg.norm(direction)
        else:
            direction = own
        vectors[word] = np.round(direction, 4)

    for word in PAD_WORDS:
        if word not in vectors:
            vectors[word] = np.round(_unit(f"word:{word}") * 0.05, 4)
    return EmbeddingTable(DIM, vectors)


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else DATA / "embeddings" / "fixture_50d.txt"
    table = build_table()
    table.save(out)
    print(f"wrote {len(table)} vectors of dim {table.dim} to {out}")


if __name__ == "__main__":
    main()
