"""Morphological dictionary and dictionary-constrained tag/lemma decoding.

The dictionary file is TSV with one analysis per line: form<TAB>lemma<TAB>tag.
When a form has analyses, decoding picks the (tag, lemma) pair maximizing
p_tag(tag) * p_lemma(lemma | form), where the lemma probability marginalizes
the rule distribution over every rule whose application to the form yields
that lemma.  Forms without analyses fall back to the unconstrained argmaxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DataError, RuleApplicationError
from .lemma_rules import LemmaRule, apply_rule


@dataclass
class MorphDictionary:
    # form -> deduplicated (tag, lemma) analyses in file order
    analyses: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def add(self, form: str, tag: str, lemma: str) -> None:
        entries = self.analyses.setdefault(form, [])
        if (tag, lemma) not in entries:
            entries.append((tag, lemma))

    def get(self, form: str) -> list[tuple[str, str]]:
        return self.analyses.get(form, [])

    def __len__(self) -> int:
        return len(self.analyses)


def load_dictionary(path: str) -> MorphDictionary:
    dictionary = MorphDictionary()
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                cols = line.split("\t")
                if len(cols) != 3:
                    raise DataError(
                        f"{path}: line {lineno}: expected form<TAB>lemma<TAB>tag, "
                        f"got {len(cols)} columns"
                    )
                dictionary.add(cols[0], tag=cols[2], lemma=cols[1])
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return dictionary


def lemma_distribution(
    rule_probs: list[tuple[LemmaRule, float]], form: str
) -> dict[str, float]:
    """p(lemma | form): rule probabilities summed by the lemma they produce."""
    out: dict[str, float] = {}
    for rule, prob in rule_probs:
        try:
            lemma = apply_rule(rule, form)
        except RuleApplicationError:
            continue
        out[lemma] = out.get(lemma, 0.0) + prob
    return out


def constrained_decode(
    tag_probs: dict[str, float],
    rule_probs: list[tuple[LemmaRule, float]],
    form: str,
    dictionary: MorphDictionary | None,
) -> tuple[str, str]:
    """Best (tag, lemma) pair, restricted to dictionary analyses when any exist.

    tag_probs maps each tag to its probability in vocabulary order (dicts
    preserve insertion order, which fixes argmax tie-breaking); rule_probs
    pairs every rule with its probability, also in vocabulary order.
    """
    analyses = dictionary.get(form) if dictionary is not None else []
    if not analyses:
        best_tag = max(tag_probs, key=lambda t: tag_probs[t])
        return best_tag, _argmax_applicable_lemma(rule_probs, form)
    lemma_probs = lemma_distribution(rule_probs, form)
    best_pair = analyses[0]
    best_score = -1.0
    for tag, lemma in analyses:
        score = tag_probs.get(tag, 0.0) * lemma_probs.get(lemma, 0.0)
        if score > best_score:
            best_score = score
            best_pair = (tag, lemma)
    return best_pair


def _argmax_applicable_lemma(rule_probs: list[tuple[LemmaRule, float]], form: str) -> str:
    """Lemma of the best applicable rule; the form itself when none applies."""
    for rule, _ in sorted(rule_probs, key=lambda rp: -rp[1]):
        try:
            return apply_rule(rule, form)
        except RuleApplicationError:
            continue
    return form
