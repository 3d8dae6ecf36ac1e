"""Nested entity spans, their per-token label-sequence encoding, and scoring.

Spans within a sentence must be disjoint or properly nested.  Encoding gives
each token the ordered list of labels of its covering spans (outermost
first), B-type at a span's first token, I-type after, and the single label
"O" on uncovered tokens.  Decoding is total: it matches continuations by
stack depth and type, and any malformed continuation simply opens a new span
there, so the output always satisfies the nesting invariant even for random
label sequences.

Entity files are blank-line separated blocks, one block per sentence, each
line "start end type" with 1-based inclusive token indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DataError


@dataclass(frozen=True, order=True)
class EntitySpan:
    start: int  # 1-based, inclusive
    end: int
    etype: str

    def __post_init__(self):
        if self.start < 1 or self.end < self.start:
            raise ValueError(f"bad span boundaries {self.start}..{self.end}")
        if not self.etype:
            raise ValueError("span type must be non-empty")


def _partially_overlap(a: EntitySpan, b: EntitySpan) -> bool:
    if a.end < b.start or b.end < a.start:
        return False  # disjoint
    if a.start <= b.start and b.end <= a.end:
        return False  # b nested in a
    if b.start <= a.start and a.end <= b.end:
        return False  # a nested in b
    return True


def check_nesting(spans: list[EntitySpan]) -> None:
    """Raise DataError when any two spans partially overlap."""
    for i, a in enumerate(spans):
        for b in spans[i + 1 :]:
            if _partially_overlap(a, b):
                raise DataError(f"spans {a} and {b} partially overlap")


def satisfies_nesting(spans: list[EntitySpan]) -> bool:
    try:
        check_nesting(spans)
        return True
    except DataError:
        return False


def _coverage_order(span: EntitySpan) -> tuple[int, int, str]:
    # outermost first: earlier start, then longer, then lexicographic type
    return (span.start, span.start - span.end, span.etype)


def encode_entities(sentence_length: int, spans: list[EntitySpan]) -> list[list[str]]:
    """Per-token ordered label lists ("B-t"/"I-t", or ["O"] when uncovered)."""
    for span in spans:
        if span.end > sentence_length:
            raise DataError(f"span {span} exceeds sentence length {sentence_length}")
    check_nesting(spans)
    ordered = sorted(spans, key=_coverage_order)
    labels: list[list[str]] = []
    for pos in range(1, sentence_length + 1):
        covering = [s for s in ordered if s.start <= pos <= s.end]
        if not covering:
            labels.append(["O"])
        else:
            labels.append(
                [("B-" if s.start == pos else "I-") + s.etype for s in covering]
            )
    return labels


def decode_entities(labels: list[list[str]]) -> list[EntitySpan]:
    """Total inverse of encode_entities with repair of malformed sequences."""
    open_spans: list[tuple[int, str]] = []  # (start, type), index = nesting depth
    done: list[EntitySpan] = []

    def close_from(depth: int, end_pos: int) -> None:
        while len(open_spans) > depth:
            start, etype = open_spans.pop()
            done.append(EntitySpan(start, end_pos, etype))

    for pos0, token_labels in enumerate(labels):
        pos = pos0 + 1
        effective: list[str] = []
        for lab in token_labels:
            if lab == "O" or (not lab.startswith("B-") and not lab.startswith("I-")):
                break  # treat anything unparseable as end of this token's list
            effective.append(lab)
        # first depth whose continuation breaks; everything deeper restarts
        restart = len(effective)
        for depth, lab in enumerate(effective):
            if lab.startswith("B-"):
                restart = depth
                break
            if depth >= len(open_spans) or open_spans[depth][1] != lab[2:]:
                restart = depth
                break
        close_from(restart, pos - 1)
        for lab in effective[restart:]:
            open_spans.append((pos, lab[2:]))
    close_from(0, len(labels))
    return sorted(done, key=_coverage_order)


def parse_entity_blocks(text: str, path: str = "<entities>") -> list[list[EntitySpan]]:
    """Blank-line terminated blocks; an empty block is a lone blank line."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # artifact of the trailing newline, not a terminator
    blocks: list[list[EntitySpan]] = []
    current: list[EntitySpan] = []
    pending = False
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped == "":
            blocks.append(current)
            current = []
            pending = False
            continue
        pending = True
        parts = stripped.split()
        if len(parts) != 3:
            raise DataError(f"{path}: line {lineno}: expected 'start end type'")
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-integer span boundary") from None
        try:
            current.append(EntitySpan(start, end, parts[2]))
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
    if pending:
        blocks.append(current)
    return blocks


def read_entity_file(path: str) -> list[list[EntitySpan]]:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return parse_entity_blocks(text, path)


def write_entity_blocks(blocks: list[list[EntitySpan]]) -> str:
    out: list[str] = []
    for spans in blocks:
        for span in sorted(spans, key=_coverage_order):
            out.append(f"{span.start} {span.end} {span.etype}")
        out.append("")
    if not out:
        return ""
    return "\n".join(out) + "\n"


def write_entity_file(path: str, blocks: list[list[EntitySpan]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(write_entity_blocks(blocks))


@dataclass(frozen=True)
class NerScore:
    matched: int
    system_total: int
    gold_total: int

    @property
    def precision(self) -> float:
        return 100.0 * self.matched / self.system_total if self.system_total else 0.0

    @property
    def recall(self) -> float:
        return 100.0 * self.matched / self.gold_total if self.gold_total else 0.0

    @property
    def f1(self) -> float:
        denom = self.system_total + self.gold_total
        return 200.0 * self.matched / denom if denom else 0.0

    def exact_f1(self) -> Fraction:
        denom = self.system_total + self.gold_total
        return Fraction(200 * self.matched, denom) if denom else Fraction(0)


def _project(
    blocks: list[list[EntitySpan]],
    level: str,
    class_filter: set[str] | None,
    supertype_map: dict[str, str] | None,
) -> set[tuple[int, int, int, str]]:
    out = set()
    for i, spans in enumerate(blocks):
        for span in spans:
            if class_filter is not None and span.etype not in class_filter:
                continue
            etype = span.etype
            if level == "supertypes":
                if supertype_map is not None:
                    etype = supertype_map.get(etype, etype[0])
                else:
                    etype = etype[0]
            out.add((i, span.start, span.end, etype))
    return out


def cnec_f1(
    gold: list[list[EntitySpan]],
    predicted: list[list[EntitySpan]],
    level: str = "types",
    class_filter: set[str] | None = None,
    supertype_map: dict[str, str] | None = None,
) -> NerScore:
    """Exact span+label match scoring at the fine (types) or coarse level.

    The supertype of a type is its first character unless an explicit map is
    given.  class_filter drops gold and predicted spans with types outside
    the set before scoring, for corpora evaluated on a restricted class
    inventory.
    """
    if level not in ("types", "supertypes"):
        raise ValueError(f"level must be 'types' or 'supertypes', got {level!r}")
    if len(gold) != len(predicted):
        raise DataError(f"gold has {len(gold)} sentences, predictions have {len(predicted)}")
    g = _project(gold, level, class_filter, supertype_map)
    p = _project(predicted, level, class_filter, supertype_map)
    return NerScore(matched=len(g & p), system_total=len(p), gold_total=len(g))
