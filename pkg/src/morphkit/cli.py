"""Command line entry point: train, predict, eval, rules, ner.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training or numeric
error.  Diagnostics go to stderr; results go to stdout or to --out files.
A flat key=value config file (# comments) can stand in for flags; explicit
flags win.  All randomness flows from --seed.  MORPHKIT_LOG selects the log
level (error, info, debug).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import ner as ner_mod
from .conllu import Document, read_conllu_file, write_conllu_file
from .dictionary import load_dictionary
from .embeddings import load_word_embeddings, read_contextual_vectors
from .errors import DataError, MorphkitError, TrainingError
from .evaluation import evaluate
from .lemma_rules import build_rule
from .ner_model import (
    NerConfig,
    NerExternalInputs,
    NerModel,
    NerTrainingParams,
    train_ner,
)
from .tagger import (
    ExternalInputs,
    TaggerParserConfig,
    TaggerParserModel,
    TrainingParams,
    train_tagger_parser,
)

log = logging.getLogger("morphkit")

MODE_ALIASES = {
    "tag": "tag_only",
    "parse": "parse_only",
    "parse-predicted": "parse_with_predicted_tags",
    "joint": "joint",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, raw in enumerate(f, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise DataError(f"{path}: line {lineno}: expected key=value")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return values


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _resolve(args: argparse.Namespace, key: str, default, cast=str):
    """CLI flag if given, else config-file value, else the default."""
    cli_value = getattr(args, key, None)
    if cli_value is not None:
        return cli_value
    config = getattr(args, "_config_values", {})
    if key in config:
        raw = config[key]
        if cast is bool:
            low = raw.lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise DataError(f"config value {key}={raw!r} is not a boolean")
        try:
            return cast(raw)
        except ValueError:
            raise DataError(f"config value {key}={raw!r} is not a valid {cast.__name__}") from None
    return default


def _require_file(path: str | None, what: str) -> str:
    if path is None:
        raise _UsageError(f"missing required option: {what}")
    if not os.path.isfile(path):
        raise DataError(f"{what}: no such file: {path}")
    return path


class _StderrHandler(logging.StreamHandler):
    """Resolves sys.stderr at emit time so redirection always works."""

    def __init__(self):
        super().__init__(sys.stderr)

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def _setup_logging() -> None:
    level_name = os.environ.get("MORPHKIT_LOG", "info").lower()
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.INFO
    )
    root = logging.getLogger()
    root.setLevel(level)
    if not any(isinstance(h, _StderrHandler) for h in root.handlers):
        handler = _StderrHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)


def _load_cvecs(paths: list[str] | None, doc: Document):
    cvecs = []
    for path in paths or []:
        _require_file(path, "--cvec")
        cvecs.append(read_contextual_vectors(path, doc))
    if len(cvecs) > 2:
        raise _UsageError("at most two --cvec files are supported")
    return (cvecs[0] if len(cvecs) > 0 else None, cvecs[1] if len(cvecs) > 1 else None)


# ----- train ---------------------------------------------------------------


def _cmd_train(args: argparse.Namespace) -> int:
    mode_alias = _resolve(args, "mode", "joint")
    if mode_alias not in MODE_ALIASES:
        raise _UsageError(f"--mode must be one of {'/'.join(MODE_ALIASES)}")
    train_path = _require_file(_resolve(args, "train", None), "--train")
    out_path = _resolve(args, "out", None)
    if out_path is None:
        raise _UsageError("missing required option: --out")
    dev_path = _resolve(args, "dev", None)
    if dev_path is not None:
        _require_file(dev_path, "--dev")
    we_path = _resolve(args, "we", None)
    dict_path = _resolve(args, "dict", None)
    if dict_path is not None:
        _require_file(dict_path, "--dict")

    train_doc = read_conllu_file(train_path)
    train_doc.sentences = [s for s in train_doc.sentences if s.tokens]
    cvec_a, cvec_b = _load_cvecs(args.cvec, train_doc)
    pretrained = None
    if we_path is not None:
        _require_file(we_path, "--we")
        pretrained = load_word_embeddings(we_path)
    config = TaggerParserConfig(
        mode=MODE_ALIASES[mode_alias],
        word_embed_dim=_resolve(args, "word_embed_dim", 64, int),
        char_embed_dim=_resolve(args, "char_embed_dim", 64, int),
        char_gru_dim=_resolve(args, "char_gru_dim", 256, int),
        lstm_dim=_resolve(args, "lstm_dim", 256, int),
        arc_mlp_dim=_resolve(args, "arc_mlp_dim", 128, int),
        label_mlp_dim=_resolve(args, "label_mlp_dim", 64, int),
        tag_embed_dim=_resolve(args, "tag_embed_dim", 32, int),
        use_pretrained_we=pretrained is not None,
        use_contextual_a=cvec_a is not None,
        use_contextual_b=cvec_b is not None,
    )
    params = TrainingParams(
        epochs=_resolve(args, "epochs", 30, int),
        batch_size=_resolve(args, "batch_size", 16, int),
        learning_rate=_resolve(args, "learning_rate", 1e-3, float),
        dropout=_resolve(args, "dropout", 0.5, float),
        word_dropout=_resolve(args, "word_dropout", 0.2, float),
        seed=_resolve(args, "seed", 42, int),
    )
    dev_doc = read_conllu_file(dev_path) if dev_path else None
    dev_external = None
    if dev_doc is not None:
        dev_doc.sentences = [s for s in dev_doc.sentences if s.tokens]
        dev_external = ExternalInputs(pretrained=pretrained)
        if cvec_a is not None or cvec_b is not None:
            dev_cvecs = _load_cvecs(args.dev_cvec, dev_doc)
            dev_external.contextual_a, dev_external.contextual_b = dev_cvecs
            if (cvec_a is None) != (dev_external.contextual_a is None) or (
                cvec_b is None
            ) != (dev_external.contextual_b is None):
                raise _UsageError("--dev-cvec files must mirror the --cvec files")
    eval_mode = _resolve(args, "eval_mode", "ud")
    model = train_tagger_parser(
        train_doc,
        config,
        params,
        dev_doc=dev_doc,
        external=ExternalInputs(pretrained=pretrained, contextual_a=cvec_a, contextual_b=cvec_b),
        dev_external=dev_external,
        eval_mode=eval_mode,
    )
    model.save(out_path)
    log.info("model written to %s", out_path)
    return 0


# ----- predict ---------------------------------------------------------------


def _cmd_predict(args: argparse.Namespace) -> int:
    model_path = _require_file(args.model, "--model")
    input_path = _require_file(args.input, "--input")
    if args.output is None:
        raise _UsageError("missing required option: --output")
    model = TaggerParserModel.load(model_path)
    doc = read_conllu_file(input_path)
    cvec_a, cvec_b = _load_cvecs(args.cvec, doc)
    pretrained = None
    if args.we is not None:
        _require_file(args.we, "--we")
        pretrained = load_word_embeddings(args.we)
    dictionary = None
    if args.dict is not None:
        _require_file(args.dict, "--dict")
        dictionary = load_dictionary(args.dict)
    external = ExternalInputs(pretrained=pretrained, contextual_a=cvec_a, contextual_b=cvec_b)
    predicted = model.predict(doc, external, dictionary)
    write_conllu_file(args.output, predicted)
    log.info("predictions written to %s", args.output)
    return 0


# ----- eval ------------------------------------------------------------------


def _cmd_eval(args: argparse.Namespace) -> int:
    gold_path = _require_file(args.gold, "--gold")
    system_path = _require_file(args.system, "--system")
    mode = args.mode or "ud"
    gold = read_conllu_file(gold_path)
    system = read_conllu_file(system_path)
    report = evaluate(gold, system, mode)
    rows = report.as_dict()
    print(f"{'Metric':<8} {'Correct':>8} {'Total':>8} {'Value':>9}")
    for name in ("upos", "xpos", "ufeats", "lemmas", "uas", "las", "mlas", "blex"):
        value = rows[name]
        print(f"{name.upper():<8} {value.correct:>8} {value.total:>8} {100 * value.ratio:>8.2f}%")
    for name in ("upos", "xpos", "ufeats", "lemmas", "uas", "las", "mlas", "blex"):
        value = rows[name]
        print(f"{name}={value.ratio:.6f}")
    return 0


# ----- rules -----------------------------------------------------------------


def _cmd_rules_dump(args: argparse.Namespace) -> int:
    input_path = _require_file(args.input, "--input")
    doc = read_conllu_file(input_path)
    from .conllu import split_pdt_lemma

    for sent in doc.sentences:
        for tok in sent.tokens:
            lemma = tok.lemma
            if args.strip_pdt_suffix:
                lemma = split_pdt_lemma(lemma).text
            rule = build_rule(tok.form, lemma)
            print(f"{tok.form}\t{lemma}\t{rule.serialize()}")
    return 0


# ----- ner -------------------------------------------------------------------


def _cmd_ner_train(args: argparse.Namespace) -> int:
    train_path = _require_file(_resolve(args, "train", None), "--train")
    entities_path = _require_file(_resolve(args, "entities", None), "--entities")
    out_path = _resolve(args, "out", None)
    if out_path is None:
        raise _UsageError("missing required option: --out")
    train_doc = read_conllu_file(train_path)
    train_spans = ner_mod.read_entity_file(entities_path)
    cvec_a, cvec_b = _load_cvecs(args.cvec, train_doc)
    pretrained = None
    we_path = _resolve(args, "we", None)
    if we_path is not None:
        _require_file(we_path, "--we")
        pretrained = load_word_embeddings(we_path)
    config = NerConfig(
        form_embed_dim=_resolve(args, "form_embed_dim", 256, int),
        lemma_embed_dim=_resolve(args, "lemma_embed_dim", 256, int),
        char_embed_dim=_resolve(args, "char_embed_dim", 128, int),
        char_gru_dim=_resolve(args, "char_gru_dim", 128, int),
        encoder_dim=_resolve(args, "encoder_dim", 256, int),
        decoder_dim=_resolve(args, "decoder_dim", 256, int),
        label_embed_dim=_resolve(args, "label_embed_dim", 128, int),
        batch_size=_resolve(args, "batch_size", 8, int),
        dropout=_resolve(args, "dropout", 0.5, float),
        word_dropout=_resolve(args, "word_dropout", 0.2, float),
        use_pretrained_we=pretrained is not None,
        use_contextual_a=cvec_a is not None,
        use_contextual_b=cvec_b is not None,
    )
    params = NerTrainingParams(
        epochs=_resolve(args, "epochs", 30, int),
        learning_rate=_resolve(args, "learning_rate", 1e-3, float),
        seed=_resolve(args, "seed", 42, int),
    )
    dev_doc = dev_spans = dev_external = None
    dev_path = _resolve(args, "dev", None)
    dev_entities = _resolve(args, "dev_entities", None)
    if dev_path is not None:
        _require_file(dev_path, "--dev")
        if dev_entities is None:
            raise _UsageError("--dev requires --dev-entities")
        _require_file(dev_entities, "--dev-entities")
        dev_doc = read_conllu_file(dev_path)
        dev_spans = ner_mod.read_entity_file(dev_entities)
        dev_cvec_a, dev_cvec_b = _load_cvecs(args.dev_cvec, dev_doc)
        dev_external = NerExternalInputs(
            pretrained=pretrained, contextual_a=dev_cvec_a, contextual_b=dev_cvec_b
        )
    model = train_ner(
        train_doc,
        train_spans,
        config,
        params,
        dev_doc=dev_doc,
        dev_spans=dev_spans,
        external=NerExternalInputs(pretrained=pretrained, contextual_a=cvec_a, contextual_b=cvec_b),
        dev_external=dev_external,
    )
    model.save(out_path)
    log.info("model written to %s", out_path)
    return 0


def _cmd_ner_predict(args: argparse.Namespace) -> int:
    model_path = _require_file(args.model, "--model")
    input_path = _require_file(args.input, "--input")
    if args.output is None:
        raise _UsageError("missing required option: --output")
    model = NerModel.load(model_path)
    doc = read_conllu_file(input_path)
    cvec_a, cvec_b = _load_cvecs(args.cvec, doc)
    pretrained = None
    if args.we is not None:
        _require_file(args.we, "--we")
        pretrained = load_word_embeddings(args.we)
    spans = model.predict(
        doc, NerExternalInputs(pretrained=pretrained, contextual_a=cvec_a, contextual_b=cvec_b)
    )
    ner_mod.write_entity_file(args.output, spans)
    log.info("entities written to %s", args.output)
    return 0


def _cmd_ner_eval(args: argparse.Namespace) -> int:
    gold_path = _require_file(args.gold, "--gold")
    system_path = _require_file(args.system, "--system")
    gold = ner_mod.read_entity_file(gold_path)
    system = ner_mod.read_entity_file(system_path)
    class_filter = None
    if args.classes is not None:
        _require_file(args.classes, "--classes")
        with open(args.classes, encoding="utf-8") as f:
            class_filter = {line.strip() for line in f if line.strip()}
    supertype_map = None
    if args.supertype_map is not None:
        _require_file(args.supertype_map, "--supertype-map")
        supertype_map = {}
        with open(args.supertype_map, encoding="utf-8") as f:
            for line in f:
                parts = line.split()
                if len(parts) == 2:
                    supertype_map[parts[0]] = parts[1]
    fine = ner_mod.cnec_f1(gold, system, "types", class_filter, supertype_map)
    coarse = ner_mod.cnec_f1(gold, system, "supertypes", class_filter, supertype_map)
    # coarsening merges classes, so it can only help
    assert coarse.f1 >= fine.f1 - 1e-9, "supertype F1 fell below type F1"
    chosen = fine if (args.level or "types") == "types" else coarse
    level = args.level or "types"
    print(f"level={level}")
    print(f"precision={chosen.precision:.2f}")
    print(f"recall={chosen.recall:.2f}")
    print(f"f1={chosen.f1:.2f}")
    return 0


# ----- wiring ----------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="morphkit", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file; flags override it")
        p.add_argument("--seed", type=int, help="master random seed (default 42)")

    train = sub.add_parser("train", help="train a tagger/parser model")
    train.add_argument("--mode", choices=sorted(MODE_ALIASES), help="model mode (default joint)")
    train.add_argument("--train", help="training CoNLL-U file")
    train.add_argument("--dev", help="development CoNLL-U file for per-epoch metrics")
    train.add_argument("--we", help="pretrained word embeddings (text format)")
    train.add_argument("--cvec", action="append", help="contextual vectors for --train (repeat for a second set)")
    train.add_argument("--dev-cvec", dest="dev_cvec", action="append", help="contextual vectors for --dev")
    train.add_argument("--dict", help="morphological dictionary TSV used for dev decoding")
    train.add_argument("--out", help="output model path")
    train.add_argument("--epochs", type=int)
    train.add_argument("--batch-size", dest="batch_size", type=int)
    train.add_argument("--learning-rate", dest="learning_rate", type=float)
    train.add_argument("--dropout", type=float)
    train.add_argument("--word-dropout", dest="word_dropout", type=float)
    train.add_argument("--word-embed-dim", dest="word_embed_dim", type=int)
    train.add_argument("--char-embed-dim", dest="char_embed_dim", type=int)
    train.add_argument("--char-gru-dim", dest="char_gru_dim", type=int)
    train.add_argument("--lstm-dim", dest="lstm_dim", type=int)
    train.add_argument("--arc-mlp-dim", dest="arc_mlp_dim", type=int)
    train.add_argument("--label-mlp-dim", dest="label_mlp_dim", type=int)
    train.add_argument("--tag-embed-dim", dest="tag_embed_dim", type=int)
    train.add_argument("--eval-mode", dest="eval_mode", choices=("ud", "pdt"))
    add_common(train)
    train.set_defaults(func=_cmd_train)

    predict = sub.add_parser("predict", help="annotate a CoNLL-U file with a trained model")
    predict.add_argument("--model")
    predict.add_argument("--input")
    predict.add_argument("--output")
    predict.add_argument("--dict", help="morphological dictionary TSV for constrained decoding")
    predict.add_argument("--we", help="pretrained embeddings (required if the model uses them)")
    predict.add_argument("--cvec", action="append", help="contextual vectors for --input")
    add_common(predict)
    predict.set_defaults(func=_cmd_predict)

    evalp = sub.add_parser("eval", help="score a system CoNLL-U file against gold")
    evalp.add_argument("--gold")
    evalp.add_argument("--system")
    evalp.add_argument("--mode", choices=("ud", "pdt"), help="lemma comparison mode (default ud)")
    add_common(evalp)
    evalp.set_defaults(func=_cmd_eval)

    rules = sub.add_parser("rules", help="lemma rule utilities")
    rules_sub = rules.add_subparsers(dest="rules_command")
    dump = rules_sub.add_parser("dump", help="emit form<TAB>lemma<TAB>rule for a corpus")
    dump.add_argument("--input")
    dump.add_argument("--strip-pdt-suffix", dest="strip_pdt_suffix", action="store_true",
                      help="strip numeric lemma suffixes before building rules")
    add_common(dump)
    dump.set_defaults(func=_cmd_rules_dump)

    ner = sub.add_parser("ner", help="nested named entity recognition")
    ner_sub = ner.add_subparsers(dest="ner_command")

    ner_train = ner_sub.add_parser("train", help="train an NER model")
    ner_train.add_argument("--train")
    ner_train.add_argument("--entities")
    ner_train.add_argument("--dev")
    ner_train.add_argument("--dev-entities", dest="dev_entities")
    ner_train.add_argument("--dev-cvec", dest="dev_cvec", action="append")
    ner_train.add_argument("--we")
    ner_train.add_argument("--cvec", action="append")
    ner_train.add_argument("--out")
    ner_train.add_argument("--epochs", type=int)
    ner_train.add_argument("--batch-size", dest="batch_size", type=int)
    ner_train.add_argument("--learning-rate", dest="learning_rate", type=float)
    ner_train.add_argument("--dropout", type=float)
    ner_train.add_argument("--word-dropout", dest="word_dropout", type=float)
    ner_train.add_argument("--form-embed-dim", dest="form_embed_dim", type=int)
    ner_train.add_argument("--lemma-embed-dim", dest="lemma_embed_dim", type=int)
    ner_train.add_argument("--char-embed-dim", dest="char_embed_dim", type=int)
    ner_train.add_argument("--char-gru-dim", dest="char_gru_dim", type=int)
    ner_train.add_argument("--encoder-dim", dest="encoder_dim", type=int)
    ner_train.add_argument("--decoder-dim", dest="decoder_dim", type=int)
    ner_train.add_argument("--label-embed-dim", dest="label_embed_dim", type=int)
    add_common(ner_train)
    ner_train.set_defaults(func=_cmd_ner_train)

    ner_predict = ner_sub.add_parser("predict", help="predict entity spans")
    ner_predict.add_argument("--model")
    ner_predict.add_argument("--input")
    ner_predict.add_argument("--output")
    ner_predict.add_argument("--we")
    ner_predict.add_argument("--cvec", action="append")
    add_common(ner_predict)
    ner_predict.set_defaults(func=_cmd_ner_predict)

    ner_eval = ner_sub.add_parser("eval", help="score predicted entity spans")
    ner_eval.add_argument("--gold")
    ner_eval.add_argument("--system")
    ner_eval.add_argument("--level", choices=("types", "supertypes"))
    ner_eval.add_argument("--classes", help="file listing entity types to keep; others are dropped from both sides")
    ner_eval.add_argument("--supertype-map", dest="supertype_map",
                          help="file of 'type supertype' overrides for the first-character rule")
    add_common(ner_eval)
    ner_eval.set_defaults(func=_cmd_ner_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help exits 0 through here
        return 0 if exc.code in (0, None) else 1
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 1
    if getattr(args, "config", None):
        try:
            args._config_values = _read_config_file(args.config)
        except DataError as exc:
            log.error("%s", exc)
            return 2
    else:
        args._config_values = {}
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TrainingError as exc:
        log.error("training failed: %s", exc)
        return 3
    except DataError as exc:
        log.error("%s", exc)
        return 2
    except MorphkitError as exc:
        log.error("%s", exc)
        return 2


def entry() -> None:
    sys.exit(main())
