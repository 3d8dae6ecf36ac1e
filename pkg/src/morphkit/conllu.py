"""CoNLL-U data model with bit-exact reading and writing.

Sentences are 10-column tab-separated blocks separated by blank lines.
Multiword-token range lines (``x-y`` ids) are preserved verbatim so that
write(parse(text)) reproduces canonical input byte for byte, but they are
excluded from tokens and never seen by models or metrics.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import DataError

_RANGE_ID = re.compile(r"^\d+-\d+$")
_PDT_SUFFIX = re.compile(r"^(.+)-(\d+)$")


@dataclass
class Token:
    id: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: tuple[tuple[str, str], ...] = ()
    head: int | None = None
    deprel: str = "_"
    deps: str = "_"
    misc: str = "_"


@dataclass
class Sentence:
    tokens: list[Token] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)
    # (position in tokens before which the raw range line appears, raw line)
    ranges: tuple[tuple[int, str], ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Document:
    sentences: list[Sentence] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class PdtLemma:
    text: str
    suffix: int | None = None

    def unsplit(self) -> str:
        if self.suffix is None:
            return self.text
        return f"{self.text}-{self.suffix}"


def split_pdt_lemma(raw: str) -> PdtLemma:
    """Split one trailing "-digits" disambiguation group off a lemma.

    The split happens only when the remaining text is non-empty, so the
    returned text is never the empty string.
    """
    if not raw:
        raise ValueError("lemma must be non-empty")
    m = _PDT_SUFFIX.match(raw)
    if m is None:
        return PdtLemma(raw, None)
    return PdtLemma(m.group(1), int(m.group(2)))


def feats_from_string(s: str, lineno: int | None = None) -> tuple[tuple[str, str], ...]:
    if s == "_":
        return ()
    pairs = []
    seen = set()
    for item in s.split("|"):
        key, sep, value = item.partition("=")
        where = f" on line {lineno}" if lineno is not None else ""
        if not sep or not key:
            raise DataError(f"malformed feature {item!r}{where}")
        if key in seen:
            raise DataError(f"duplicate feature key {key!r}{where}")
        seen.add(key)
        pairs.append((key, value))
    return tuple(sorted(pairs))


def feats_to_string(feats: tuple[tuple[str, str], ...]) -> str:
    if not feats:
        return "_"
    return "|".join(f"{k}={v}" for k, v in sorted(feats))


def parse_conllu(text: str) -> Document:
    doc = Document()
    sent = Sentence()
    range_lines: list[tuple[int, str]] = []
    token_linenos: list[int] = []

    def flush() -> None:
        nonlocal sent, range_lines, token_linenos
        if not sent.tokens and not sent.comments and not range_lines:
            return
        for tok, tok_line in zip(sent.tokens, token_linenos):
            if tok.head is None:
                continue
            if tok.head < 0 or tok.head > len(sent.tokens):
                raise DataError(
                    f"line {tok_line}: head {tok.head} out of range for a "
                    f"{len(sent.tokens)}-token sentence"
                )
            if tok.head == tok.id:
                raise DataError(f"line {tok_line}: token {tok.id} is its own head")
        sent.ranges = tuple(range_lines)
        doc.sentences.append(sent)
        sent = Sentence()
        range_lines = []
        token_linenos = []

    for lineno, line in enumerate(text.split("\n"), start=1):
        if line == "":
            flush()
            continue
        if line.startswith("#"):
            sent.comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise DataError(f"line {lineno}: expected 10 columns, got {len(cols)}")
        if any(c == "" for c in cols):
            raise DataError(f"line {lineno}: empty column")
        if _RANGE_ID.match(cols[0]):
            range_lines.append((len(sent.tokens), line))
            continue
        try:
            tok_id = int(cols[0])
        except ValueError:
            raise DataError(f"line {lineno}: token id {cols[0]!r} is not an integer") from None
        if tok_id != len(sent.tokens) + 1:
            raise DataError(
                f"line {lineno}: token id {tok_id} not consecutive "
                f"(expected {len(sent.tokens) + 1})"
            )
        if cols[6] == "_":
            head: int | None = None
        else:
            try:
                head = int(cols[6])
            except ValueError:
                raise DataError(f"line {lineno}: head {cols[6]!r} is not an integer") from None
        sent.tokens.append(
            Token(
                id=tok_id,
                form=cols[1],
                lemma=cols[2],
                upos=cols[3],
                xpos=cols[4],
                feats=feats_from_string(cols[5], lineno),
                head=head,
                deprel=cols[7],
                deps=cols[8],
                misc=cols[9],
            )
        )
        token_linenos.append(lineno)
    flush()
    return doc


def write_conllu(doc: Document) -> str:
    out: list[str] = []
    for sent in doc.sentences:
        out.extend(sent.comments)
        by_pos: dict[int, list[str]] = {}
        for pos, raw in sent.ranges:
            by_pos.setdefault(pos, []).append(raw)
        for i, tok in enumerate(sent.tokens):
            out.extend(by_pos.get(i, ()))
            out.append(
                "\t".join(
                    (
                        str(tok.id),
                        tok.form,
                        tok.lemma,
                        tok.upos,
                        tok.xpos,
                        feats_to_string(tok.feats),
                        "_" if tok.head is None else str(tok.head),
                        tok.deprel,
                        tok.deps,
                        tok.misc,
                    )
                )
            )
        out.extend(by_pos.get(len(sent.tokens), ()))
        out.append("")
    if not out:
        return ""
    return "\n".join(out) + "\n"


def is_single_rooted_tree(sent: Sentence) -> bool:
    """Parser-facing validity check: heads form one tree rooted at 0."""
    n = len(sent.tokens)
    if n == 0:
        return True
    heads = [tok.head for tok in sent.tokens]
    if any(h is None for h in heads):
        return False
    if sum(1 for h in heads if h == 0) != 1:
        return False
    # every token must reach the root without cycles
    for start in range(1, n + 1):
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                return False
            seen.add(node)
            node = heads[node - 1]  # type: ignore[assignment]
    return True


def read_conllu_file(path: str) -> Document:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    try:
        return parse_conllu(text)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_conllu_file(path: str, doc: Document) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(write_conllu(doc))
