"""Tagging, lemmatization and attachment metrics over gold tokenization.

All metrics assume the gold and system documents are tokenized identically;
raw-text alignment is out of scope.  Counts are kept as integers so callers
can compare ratios exactly.  MLAS and BLEX follow the shared-task content
word definitions restricted to gold tokenization: a word is content-bearing
unless its deprel is punct or one of the functional relations, MLAS
additionally requires matching UPOS, matching universal-subset features and
matching functional children (as a (deprel, UPOS) multiset), and BLEX
additionally requires a matching lemma.  Deprels are compared as exact
strings throughout.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .conllu import Document, Sentence, split_pdt_lemma
from .errors import DataError

FUNCTIONAL_DEPRELS = frozenset({"aux", "cop", "mark", "det", "clf", "case", "cc"})

# universal morphological feature names used by the MLAS feature subset
UNIVERSAL_FEATURES = frozenset(
    {
        "PronType", "NumType", "Poss", "Reflex", "Foreign", "Abbr",
        "Gender", "Animacy", "Number", "Case", "Definite", "Degree",
        "VerbForm", "Mood", "Tense", "Aspect", "Voice", "Evident",
        "Polarity", "Person", "Polite", "Clusivity",
    }
)

TAG_FIELDS = ("upos", "xpos", "ufeats", "lemmas")


@dataclass(frozen=True)
class MetricValue:
    correct: int
    total: int

    @property
    def ratio(self) -> float:
        return self.correct / self.total

    def exact(self) -> Fraction:
        return Fraction(self.correct, self.total)


@dataclass(frozen=True)
class MetricReport:
    upos: MetricValue
    xpos: MetricValue
    ufeats: MetricValue
    lemmas: MetricValue
    uas: MetricValue
    las: MetricValue
    mlas: MetricValue
    blex: MetricValue

    def as_dict(self) -> dict[str, MetricValue]:
        return {
            "upos": self.upos,
            "xpos": self.xpos,
            "ufeats": self.ufeats,
            "lemmas": self.lemmas,
            "uas": self.uas,
            "las": self.las,
            "mlas": self.mlas,
            "blex": self.blex,
        }


def _check_alignment(gold: Document, system: Document) -> None:
    if not gold.sentences:
        raise DataError("evaluation requires a non-empty gold document")
    if len(gold.sentences) != len(system.sentences):
        raise DataError(
            f"gold has {len(gold.sentences)} sentences, system has {len(system.sentences)}"
        )
    for i, (g, s) in enumerate(zip(gold.sentences, system.sentences)):
        if len(g.tokens) != len(s.tokens):
            raise DataError(
                f"sentence {i + 1}: gold has {len(g.tokens)} tokens, "
                f"system has {len(s.tokens)}"
            )


def _lemma_key(lemma: str, mode: str) -> str:
    if mode == "pdt":
        return lemma
    return split_pdt_lemma(lemma).text if lemma else lemma


def tagging_accuracy(gold: Document, system: Document, field: str, mode: str = "ud") -> MetricValue:
    """Exact-match accuracy of one annotation field.

    Features compare as sets of key=value pairs; in "ud" mode the PDT numeric
    lemma suffix is stripped before comparison, in "pdt" mode it counts.
    """
    if field not in TAG_FIELDS:
        raise ValueError(f"field must be one of {TAG_FIELDS}, got {field!r}")
    _check_alignment(gold, system)
    correct = 0
    total = 0
    for g_sent, s_sent in zip(gold.sentences, system.sentences):
        for g, s in zip(g_sent.tokens, s_sent.tokens):
            total += 1
            if field == "upos":
                correct += g.upos == s.upos
            elif field == "xpos":
                correct += g.xpos == s.xpos
            elif field == "ufeats":
                correct += set(g.feats) == set(s.feats)
            else:
                correct += _lemma_key(g.lemma, mode) == _lemma_key(s.lemma, mode)
    if total == 0:
        raise DataError("evaluation requires at least one token")
    return MetricValue(correct, total)


def attachment_scores(gold: Document, system: Document) -> tuple[MetricValue, MetricValue]:
    """UAS: correct head; LAS: correct head and deprel."""
    _check_alignment(gold, system)
    uas = las = total = 0
    for i, (g_sent, s_sent) in enumerate(zip(gold.sentences, system.sentences)):
        for g, s in zip(g_sent.tokens, s_sent.tokens):
            if g.head is None or s.head is None:
                raise DataError(f"sentence {i + 1}: token {g.id} is missing a head")
            total += 1
            if g.head == s.head:
                uas += 1
                if g.deprel == s.deprel:
                    las += 1
    if total == 0:
        raise DataError("evaluation requires at least one token")
    return MetricValue(uas, total), MetricValue(las, total)


def _is_content(token) -> bool:
    return token.deprel != "punct" and token.deprel not in FUNCTIONAL_DEPRELS


def _functional_children(sent: Sentence, head_id: int) -> Counter:
    return Counter(
        (tok.deprel, tok.upos)
        for tok in sent.tokens
        if tok.head == head_id and tok.deprel in FUNCTIONAL_DEPRELS
    )


def _feature_subset(feats, subset: frozenset[str]) -> frozenset:
    return frozenset((k, v) for k, v in feats if k in subset)


def mlas_blex(
    gold: Document,
    system: Document,
    mode: str = "ud",
    feature_subset: frozenset[str] = UNIVERSAL_FEATURES,
) -> tuple[MetricValue, MetricValue]:
    """Content-word attachment scores with morphology (MLAS) or lemmas (BLEX).

    Denominators count gold content words; a word scores when the system
    annotation matches gold on head and deprel plus the metric's extra
    conditions (matching deprel makes the system word content too).
    """
    _check_alignment(gold, system)
    mlas_correct = blex_correct = total = 0
    for i, (g_sent, s_sent) in enumerate(zip(gold.sentences, system.sentences)):
        for g, s in zip(g_sent.tokens, s_sent.tokens):
            if g.head is None or s.head is None:
                raise DataError(f"sentence {i + 1}: token {g.id} is missing a head")
            if not _is_content(g):
                continue
            total += 1
            if g.head != s.head or g.deprel != s.deprel:
                continue
            if (
                g.upos == s.upos
                and _feature_subset(g.feats, feature_subset)
                == _feature_subset(s.feats, feature_subset)
                and _functional_children(g_sent, g.id) == _functional_children(s_sent, s.id)
            ):
                mlas_correct += 1
            if _lemma_key(g.lemma, mode) == _lemma_key(s.lemma, mode):
                blex_correct += 1
    if total == 0:
        raise DataError("evaluation requires at least one gold content word")
    return MetricValue(mlas_correct, total), MetricValue(blex_correct, total)


def evaluate(gold: Document, system: Document, mode: str = "ud") -> MetricReport:
    uas, las = attachment_scores(gold, system)
    mlas, blex = mlas_blex(gold, system, mode)
    return MetricReport(
        upos=tagging_accuracy(gold, system, "upos", mode),
        xpos=tagging_accuracy(gold, system, "xpos", mode),
        ufeats=tagging_accuracy(gold, system, "ufeats", mode),
        lemmas=tagging_accuracy(gold, system, "lemmas", mode),
        uas=uas,
        las=las,
        mlas=mlas,
        blex=blex,
    )
