#!/usr/bin/env python3
"""Regenerate the bundled toy corpora under data/.

Everything is deterministic so the committed files can be reproduced:

    python3 scripts/generate_toy_data.py

Outputs: sample_lexicon.tsv (1000 form/lemma pairs over inflectional
paradigms, casing oddities, suppletive pairs), toy_train.conllu (50 fully
annotated template sentences), toy_ner.conllu + toy_ner_entities.txt
(30 sentences with flat person/city/institution spans), toy_dict.tsv.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from morphkit.util import stream_rng

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data")

FEM_STEMS = [
    "žen", "kočk", "ryb", "lamp", "knih", "cest", "hlav", "škol", "vod", "trav",
    "síl", "zim", "louk", "váz", "růž", "dám", "bárk", "vran", "líp", "břízk",
    "mís", "pil", "kos", "lod", "brán", "střech", "zahrad", "jahod", "borůvk", "malin",
    "houb", "mouch", "včel", "oves", "lžíc", "vidličk", "taš", "bot", "čepic", "sukn",
]
MASC_STEMS = [
    "hrad", "les", "stol", "dvor", "mlýn", "kopc", "strom", "kámen", "potok", "vrch",
    "dub", "buk", "plot", "most", "rybník", "sklep", "komín", "krb", "sud", "vůz",
    "pytel", "koš", "talíř", "hrnec", "džbán",
]
VERB_STEMS = [
    "děl", "hled", "zpív", "létaj", "čekáv", "snídan", "mách", "koup",
    "plav", "skák", "říkáv", "vol", "pad", "nech", "potkáv", "schov", "zvedáv", "hrab",
]
ADJ_STEMS = [
    "nov", "star", "mal", "velk", "zelen", "modr", "tich", "rychl",
    "pomal", "tmav", "světl", "hlubok", "vysok", "nízk", "tepl", "studen",
    "měkk", "tvrd", "čist", "špinav",
]
PROPER_STEMS = [
    "Prah", "Brn", "Plzn", "Ostrav", "Olomouc", "Opav", "Jihlav",
    "Vltav", "Moravk", "Šumav", "Otav", "Sázav", "Břeclav", "Čáslav", "Zbraslav",
]

FEM_SUFFIXES = ["a", "y", "e", "u", "ou", "ám", "ách", "ami"]
MASC_SUFFIXES = ["", "u", "em", "y", "ů", "ům", "ech"]
VERB_SUFFIXES = ["at", "ám", "áš", "á", "áme", "áte", "ají", "al", "ala", "alo", "ali"]
ADJ_SUFFIXES = ["ý", "ého", "ému", "ým", "á", "é", "ou", "í", "ých", "ými"]
PROPER_SUFFIXES = ["a", "y", "e", "u", "ou"]

IRREGULAR = [
    ("jsem", "být"), ("jsi", "být"), ("je", "být"), ("jsme", "být"),
    ("jste", "být"), ("jsou", "být"), ("byl", "být"), ("byla", "být"),
    ("šel", "jít"), ("šla", "jít"), ("šli", "jít"),
    ("lidé", "člověk"), ("lidi", "člověk"), ("lidem", "člověk"),
    ("mě", "já"), ("mně", "já"), ("mnou", "já"),
    ("lepší", "dobrý"), ("nejlepší", "dobrý"),
    ("koček", "kočka"), ("žen", "žena"), ("knih", "kniha"),
    ("psa", "pes"), ("psem", "pes"), ("psi", "pes"),
    ("USA", "USA"), ("NATO", "NATO"), ("OSN", "OSN"),
    ("iPhonu", "iPhone"), ("iPhonem", "iPhone"), ("iPady", "iPad"),
    ("stát", "stát-1"), ("stát", "stát-2"), ("statek", "statek-1"),
    ("TřeBoň", "Třeboň"), ("McDonaldu", "McDonald"),
]


def build_lexicon():
    pairs = []
    for stem in FEM_STEMS:
        for suffix in FEM_SUFFIXES:
            pairs.append((stem + suffix, stem + "a"))
    for stem in MASC_STEMS:
        for suffix in MASC_SUFFIXES:
            pairs.append((stem + suffix, stem))
    for stem in VERB_STEMS:
        for suffix in VERB_SUFFIXES:
            pairs.append((stem + suffix, stem + "at"))
    for stem in ADJ_STEMS:
        for suffix in ADJ_SUFFIXES:
            pairs.append((stem + suffix, stem + "ý"))
    for stem in PROPER_STEMS:
        for suffix in PROPER_SUFFIXES:
            pairs.append((stem + suffix, stem + "a"))
    pairs.extend(IRREGULAR)
    seen = set()
    unique = []
    for pair in pairs:
        if pair not in seen:
            seen.add(pair)
            unique.append(pair)
    unique.sort(key=lambda p: (p[1], p[0]))
    assert len(unique) >= 1000, len(unique)
    return unique[:1000]


NOUNS = [
    # (nom, acc, lemma, xpos_base, gender)
    ("kočka", "kočku", "kočka", "NNF", "Fem"),
    ("ryba", "rybu", "ryba", "NNF", "Fem"),
    ("žena", "ženu", "žena", "NNF", "Fem"),
    ("kniha", "knihu", "kniha", "NNF", "Fem"),
    ("voda", "vodu", "voda", "NNF", "Fem"),
    ("škola", "školu", "škola", "NNF", "Fem"),
    ("cesta", "cestu", "cesta", "NNF", "Fem"),
    ("hlava", "hlavu", "hlava", "NNF", "Fem"),
]
VERBS = [
    ("vidí", "vidět"), ("hledá", "hledat"), ("má", "mít"),
    ("miluje", "milovat"), ("nese", "nést"), ("čte", "číst"),
]
ADJS = [("velká", "velkou", "velký"), ("malá", "malou", "malý"),
        ("nová", "novou", "nový"), ("stará", "starou", "starý")]
ADVS = [("rychle",), ("často",), ("dnes",), ("ráda",)]


def _token(idx, form, lemma, upos, xpos, feats, head, deprel):
    return "\t".join([str(idx), form, lemma, upos, xpos, feats, str(head), deprel, "_", "_"])


def build_toy_sentence(rng):
    lines = []
    tokens = []  # (form, lemma, upos, xpos, feats, deprel_slot)
    subj_adj = rng.random() < 0.5
    obj_adj = rng.random() < 0.4
    adverb = rng.random() < 0.4
    subj = NOUNS[rng.integers(len(NOUNS))]
    obj = NOUNS[rng.integers(len(NOUNS))]
    verb = VERBS[rng.integers(len(VERBS))]
    positions = {}
    if subj_adj:
        adj = ADJS[rng.integers(len(ADJS))]
        tokens.append((adj[0], adj[2], "ADJ", "AAF1", "Case=Nom|Gender=Fem", "amod_subj"))
    tokens.append((subj[0], subj[2], "NOUN", subj[3] + "1", f"Case=Nom|Gender={subj[4]}", "nsubj"))
    tokens.append((verb[0], verb[1], "VERB", "VB3", "Person=3|Tense=Pres", "root"))
    if adverb:
        adv = ADVS[rng.integers(len(ADVS))]
        tokens.append((adv[0], adv[0], "ADV", "Db", "_", "advmod"))
    if obj_adj:
        adj = ADJS[rng.integers(len(ADJS))]
        tokens.append((adj[1], adj[2], "ADJ", "AAF4", "Case=Acc|Gender=Fem", "amod_obj"))
    tokens.append((obj[1], obj[2], "NOUN", obj[3] + "4", f"Case=Acc|Gender={obj[4]}", "obj"))
    tokens.append((".", ".", "PUNCT", "Z:", "_", "punct"))
    for i, tok in enumerate(tokens, start=1):
        positions[tok[5]] = i
    heads = {}
    root_pos = positions["root"]
    for i, tok in enumerate(tokens, start=1):
        slot = tok[5]
        if slot == "root":
            heads[i] = (0, "root")
        elif slot == "nsubj":
            heads[i] = (root_pos, "nsubj")
        elif slot == "obj":
            heads[i] = (root_pos, "obj")
        elif slot == "advmod":
            heads[i] = (root_pos, "advmod")
        elif slot == "punct":
            heads[i] = (root_pos, "punct")
        elif slot == "amod_subj":
            heads[i] = (positions["nsubj"], "amod")
        elif slot == "amod_obj":
            heads[i] = (positions["obj"], "amod")
    for i, tok in enumerate(tokens, start=1):
        head, deprel = heads[i]
        lines.append(_token(i, tok[0], tok[1], tok[2], tok[3], tok[4], head, deprel))
    return lines


FIRST_NAMES = ["Jan", "Petr", "Eva", "Anna", "Karel", "Marie"]
LAST_NAMES = ["Novák", "Svoboda", "Dvořák", "Černá", "Veselý"]
CITIES = ["Praha", "Brno", "Ostrava", "Plzeň"]
INSTITUTIONS = [("Univerzita", "Karlova"), ("Akademie", "věd")]
NER_VERBS = [("navštívil", "navštívit"), ("opustil", "opustit"), ("založil", "založit")]


def build_ner_sentence(rng):
    kind = int(rng.integers(3))
    tokens = []
    spans = []
    verb = NER_VERBS[rng.integers(len(NER_VERBS))]
    if kind == 0:
        first = FIRST_NAMES[rng.integers(len(FIRST_NAMES))]
        last = LAST_NAMES[rng.integers(len(LAST_NAMES))]
        city = CITIES[rng.integers(len(CITIES))]
        tokens = [
            (first, first, "PROPN"), (last, last, "PROPN"),
            (verb[0], verb[1], "VERB"), (city, city, "PROPN"), (".", ".", "PUNCT"),
        ]
        spans = [(1, 2, "P"), (4, 4, "gu")]
    elif kind == 1:
        inst = INSTITUTIONS[rng.integers(len(INSTITUTIONS))]
        last = LAST_NAMES[rng.integers(len(LAST_NAMES))]
        tokens = [
            (inst[0], inst[0], "NOUN"), (inst[1], inst[1], "PROPN"),
            (verb[0], verb[1], "VERB"), (last, last, "PROPN"), (".", ".", "PUNCT"),
        ]
        spans = [(1, 2, "if"), (4, 4, "P")]
    else:
        noun = NOUNS[rng.integers(len(NOUNS))]
        tokens = [
            ("Ta", "ten", "DET"), (noun[0], noun[2], "NOUN"),
            (verb[0], verb[1], "VERB"), (".", ".", "PUNCT"),
        ]
        spans = []
    lines = []
    for i, (form, lemma, upos) in enumerate(tokens, start=1):
        head = 0 if upos == "VERB" else 3
        deprel = "root" if upos == "VERB" else "dep"
        lines.append(_token(i, form, lemma, upos, upos[:2], "_", head, deprel))
    return lines, spans


def main():
    os.makedirs(DATA_DIR, exist_ok=True)

    lexicon = build_lexicon()
    with open(os.path.join(DATA_DIR, "sample_lexicon.tsv"), "w", encoding="utf-8", newline="") as f:
        for form, lemma in lexicon:
            f.write(f"{form}\t{lemma}\n")

    rng = stream_rng(20240815, "toy_train")
    with open(os.path.join(DATA_DIR, "toy_train.conllu"), "w", encoding="utf-8", newline="") as f:
        for i in range(50):
            f.write(f"# sent_id = toy-{i + 1}\n")
            f.write("\n".join(build_toy_sentence(rng)))
            f.write("\n\n")

    rng = stream_rng(20240815, "toy_ner")
    conllu_lines = []
    entity_lines = []
    for i in range(30):
        lines, spans = build_ner_sentence(rng)
        conllu_lines.append(f"# sent_id = ner-{i + 1}\n" + "\n".join(lines) + "\n\n")
        entity_lines.append("".join(f"{s} {e} {t}\n" for s, e, t in spans) + "\n")
    with open(os.path.join(DATA_DIR, "toy_ner.conllu"), "w", encoding="utf-8", newline="") as f:
        f.write("".join(conllu_lines))
    with open(os.path.join(DATA_DIR, "toy_ner_entities.txt"), "w", encoding="utf-8", newline="") as f:
        f.write("".join(entity_lines))

    with open(os.path.join(DATA_DIR, "toy_dict.tsv"), "w", encoding="utf-8", newline="") as f:
        for noun in NOUNS:
            f.write(f"{noun[0]}\t{noun[2]}\t{noun[3]}1\n")
            f.write(f"{noun[1]}\t{noun[2]}\t{noun[3]}4\n")
        for verb in VERBS:
            f.write(f"{verb[0]}\t{verb[1]}\tVB3\n")
        # an ambiguous form with two analyses
        f.write("žena\tžena\tNNF1\n")
        f.write("žena\thnát\tVeA\n")
        f.write("tři\ttři-1\tCl\n")
        f.write("tři\ttřít-2\tVi\n")

    print(f"wrote data files to {os.path.abspath(DATA_DIR)}")


if __name__ == "__main__":
    main()
