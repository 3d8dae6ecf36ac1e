#!/usr/bin/env python3
"""End-to-end demo on the bundled toy corpora.

Trains a small joint tagger+parser on data/toy_train.conllu, predicts and
scores it, then does the same for the nested-NER model.  Everything runs
through the CLI entry points, so this doubles as a smoke test of the
command surface:

    python3 scripts/toy_pipeline.py [workdir]
"""

import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from morphkit.cli import main

DATA = os.path.join(os.path.dirname(__file__), "..", "data")


def run(argv):
    print("$ morphkit " + " ".join(argv))
    code = main(argv)
    if code != 0:
        sys.exit(code)


def pipeline(workdir: str) -> None:
    toy = os.path.join(DATA, "toy_train.conllu")
    model = os.path.join(workdir, "toy_joint.model")
    predicted = os.path.join(workdir, "toy_predicted.conllu")
    run([
        "train", "--mode", "joint", "--train", toy, "--out", model,
        "--epochs", "120", "--seed", "7", "--learning-rate", "0.002",
        "--word-embed-dim", "48", "--char-embed-dim", "24", "--char-gru-dim", "24",
        "--lstm-dim", "64", "--arc-mlp-dim", "64", "--label-mlp-dim", "32",
        "--dropout", "0.1", "--word-dropout", "0",
    ])
    run(["predict", "--model", model, "--input", toy, "--output", predicted,
         "--dict", os.path.join(DATA, "toy_dict.tsv")])
    run(["eval", "--gold", toy, "--system", predicted])

    ner_toy = os.path.join(DATA, "toy_ner.conllu")
    ner_entities = os.path.join(DATA, "toy_ner_entities.txt")
    ner_model = os.path.join(workdir, "toy_ner.model")
    ner_out = os.path.join(workdir, "toy_ner_predicted.txt")
    run([
        "ner", "train", "--train", ner_toy, "--entities", ner_entities,
        "--out", ner_model, "--epochs", "30", "--seed", "0",
        "--learning-rate", "0.002", "--form-embed-dim", "32", "--lemma-embed-dim", "32",
        "--char-embed-dim", "16", "--char-gru-dim", "16", "--encoder-dim", "32",
        "--decoder-dim", "32", "--label-embed-dim", "16",
        "--dropout", "0.1", "--word-dropout", "0",
    ])
    run(["ner", "predict", "--model", ner_model, "--input", ner_toy, "--output", ner_out])
    run(["ner", "eval", "--gold", ner_entities, "--system", ner_out])
    run(["ner", "eval", "--gold", ner_entities, "--system", ner_out, "--level", "supertypes"])


if __name__ == "__main__":
    if len(sys.argv) > 1:
        os.makedirs(sys.argv[1], exist_ok=True)
        pipeline(sys.argv[1])
    else:
        with tempfile.TemporaryDirectory() as tmp:
            pipeline(tmp)
