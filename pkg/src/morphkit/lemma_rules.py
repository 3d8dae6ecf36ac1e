"""Lemma generation rules: casing script plus prefix/suffix edit scripts.

A rule classifies the transformation from an inflected form to its lemma so
that lemmatization reduces to per-token classification.  Construction anchors
on the longest common substring of the case-folded form and lemma, derives
minimal insert/delete scripts for the material on either side, and encodes
the lemma's casing as segment marks.  When the form and lemma share no
character at all, the rule stores the lemma verbatim.

Serialized rule grammar (one printable line per rule):

    literal rule:  "=" lemma
    edit rule:     casing ";" prefix-program "|" suffix-program

    casing:        comma-separated marks [se]<offset>[lu]
                   (s = offset from start, e = offset from end of the lemma;
                    l/u = the segment starting there is lower/upper case)
    program:       sequence over ">" (copy one source char),
                   "-" (delete one source char), "+c" (insert char c; c is
                   taken verbatim, so "+|" inserts a pipe)

The number of source characters a program consumes (copies plus deletes)
fixes how many characters of an unseen form the prefix/suffix scripts claim;
the characters between the two regions are copied unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import RuleApplicationError

DELETE = "delete"
INSERT = "insert"

ANCHOR_START = "start"
ANCHOR_END = "end"
CASE_LOWER = "lower"
CASE_UPPER = "upper"


@dataclass(frozen=True)
class EditOp:
    kind: str  # DELETE or INSERT
    char: str | None = None  # exactly one character, INSERT only
    copy_before: int = 0  # source chars copied verbatim before this op


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...]
    src_len: int  # source chars consumed by the script, trailing copies included

    def apply(self, region: str) -> str:
        if len(region) != self.src_len:
            raise RuleApplicationError(
                f"script consumes {self.src_len} chars, region has {len(region)}"
            )
        out: list[str] = []
        pos = 0
        for op in self.ops:
            out.append(region[pos : pos + op.copy_before])
            pos += op.copy_before
            if op.kind == DELETE:
                if pos >= len(region):
                    raise RuleApplicationError("edit script refers past the end of the form")
                pos += 1
            else:
                out.append(op.char or "")
        out.append(region[pos:])
        return "".join(out)


@dataclass(frozen=True)
class CasingMark:
    anchor: str  # ANCHOR_START or ANCHOR_END
    offset: int
    case: str  # CASE_LOWER or CASE_UPPER


@dataclass(frozen=True)
class LemmaRule:
    kind: str  # "literal" or "edit"
    literal_lemma: str | None = None
    prefix: EditScript | None = None
    suffix: EditScript | None = None
    casing: tuple[CasingMark, ...] = ()

    def serialize(self) -> str:
        if self.kind == "literal":
            return "=" + (self.literal_lemma or "")
        marks = ",".join(
            f"{'s' if m.anchor == ANCHOR_START else 'e'}{m.offset}"
            f"{'l' if m.case == CASE_LOWER else 'u'}"
            for m in self.casing
        )
        assert self.prefix is not None and self.suffix is not None
        return f"{marks};{_script_to_str(self.prefix)}|{_script_to_str(self.suffix)}"


def parse_rule(text: str) -> LemmaRule:
    if text.startswith("="):
        return LemmaRule(kind="literal", literal_lemma=text[1:])
    marks_str, sep, rest = text.partition(";")
    if not sep:
        raise ValueError(f"not a serialized lemma rule: {text!r}")
    marks = []
    if marks_str:
        for item in marks_str.split(","):
            anchor = ANCHOR_START if item[0] == "s" else ANCHOR_END
            case = CASE_LOWER if item[-1] == "l" else CASE_UPPER
            marks.append(CasingMark(anchor, int(item[1:-1]), case))
    prefix, suffix = _split_programs(rest)
    return LemmaRule(
        kind="edit",
        prefix=_script_from_str(prefix),
        suffix=_script_from_str(suffix),
        casing=tuple(marks),
    )


def _script_to_str(script: EditScript) -> str:
    parts: list[str] = []
    consumed = 0
    for op in script.ops:
        parts.append(">" * op.copy_before)
        consumed += op.copy_before
        if op.kind == DELETE:
            parts.append("-")
            consumed += 1
        else:
            parts.append("+" + (op.char or ""))
    parts.append(">" * (script.src_len - consumed))
    return "".join(parts)


def _split_programs(text: str) -> tuple[str, str]:
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "+":
            i += 2
        elif ch == "|":
            return text[:i], text[i + 1 :]
        else:
            i += 1
    raise ValueError(f"serialized rule is missing the prefix/suffix separator: {text!r}")


def _script_from_str(text: str) -> EditScript:
    ops: list[EditOp] = []
    copies = 0
    src_len = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == ">":
            copies += 1
            src_len += 1
            i += 1
        elif ch == "-":
            ops.append(EditOp(DELETE, None, copies))
            copies = 0
            src_len += 1
            i += 1
        elif ch == "+":
            if i + 1 >= len(text):
                raise ValueError("dangling insert in serialized script")
            ops.append(EditOp(INSERT, text[i + 1], copies))
            copies = 0
            i += 2
        else:
            raise ValueError(f"bad script token {ch!r}")
    return EditScript(tuple(ops), src_len)


def fold_char(c: str) -> str:
    lc = c.lower()
    return lc if len(lc) == 1 else c


def fold(s: str) -> str:
    return "".join(fold_char(c) for c in s)


def _raise_char(c: str) -> str:
    uc = c.upper()
    return uc if len(uc) == 1 else c


def longest_common_substring(a: str, b: str) -> tuple[int, int, int] | None:
    """Maximal-length common contiguous substring of a and b.

    Ties go to the smallest start in a, then the smallest start in b.
    Returns None when the strings share no character.
    """
    best_len = 0
    best = None
    for i in range(len(a)):
        if len(a) - i <= best_len:
            break
        for j in range(len(b)):
            if a[i] != b[j]:
                continue
            length = 1
            while i + length < len(a) and j + length < len(b) and a[i + length] == b[j + length]:
                length += 1
            if length > best_len:
                best_len = length
                best = (i, j, length)
    return best


def shortest_edit_script(src: str, dst: str) -> list[EditOp]:
    """Minimal insert/delete script turning src into dst.

    Copies of matching characters are free and implicit: each returned op
    records how many source characters are copied immediately before it, and
    anything left after the last op is copied as well, so the list length is
    exactly the insert/delete edit distance.  Among minimal scripts, copies
    are taken greedily and deletes are emitted before inserts.
    """
    m, n = len(src), len(dst)
    # dist[i][j] = edit distance between src[i:] and dst[j:]
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for j in range(n - 1, -1, -1):
        dist[m][j] = n - j
    for i in range(m - 1, -1, -1):
        dist[i][n] = m - i
        row = dist[i]
        nxt = dist[i + 1]
        for j in range(n - 1, -1, -1):
            best = nxt[j] + 1
            ins = row[j + 1] + 1
            if ins < best:
                best = ins
            if src[i] == dst[j] and nxt[j + 1] < best:
                best = nxt[j + 1]
            row[j] = best
    ops: list[EditOp] = []
    copies = 0
    i = j = 0
    while i < m or j < n:
        if i < m and j < n and src[i] == dst[j] and dist[i][j] == dist[i + 1][j + 1]:
            copies += 1
            i += 1
            j += 1
        elif i < m and dist[i][j] == dist[i + 1][j] + 1:
            ops.append(EditOp(DELETE, None, copies))
            copies = 0
            i += 1
        else:
            ops.append(EditOp(INSERT, dst[j], copies))
            copies = 0
            j += 1
    return ops


def encode_casing(lemma: str) -> list[CasingMark]:
    """One mark per maximal same-case segment of the lemma.

    Caseless characters extend the segment they follow (or the first segment
    when leading).  Segment starts in the first half of the lemma are
    anchored to the start, the rest to the end.
    """
    if not lemma:
        raise ValueError("lemma must be non-empty")
    cases: list[str | None] = []
    for c in lemma:
        if c.islower():
            cases.append(CASE_LOWER)
        elif c.isupper():
            cases.append(CASE_UPPER)
        else:
            cases.append(None)
    # caseless positions inherit the previous cased character's case;
    # a caseless run at the start inherits from the first cased character
    current: str | None = None
    for i, c in enumerate(cases):
        if c is None:
            cases[i] = current
        else:
            current = c
    first = next((c for c in cases if c is not None), CASE_LOWER)
    for i, c in enumerate(cases):
        if c is None:
            cases[i] = first
        else:
            break
    half = (len(lemma) + 1) // 2
    marks: list[CasingMark] = []
    prev: str | None = None
    for i, case in enumerate(cases):
        if case == prev:
            continue
        prev = case
        if i < half:
            marks.append(CasingMark(ANCHOR_START, i, case))  # type: ignore[arg-type]
        else:
            marks.append(CasingMark(ANCHOR_END, len(lemma) - 1 - i, case))  # type: ignore[arg-type]
    return marks


def _apply_casing(marks: tuple[CasingMark, ...], text: str) -> str:
    if not text or not marks:
        return text
    n = len(text)
    located: list[tuple[int, str]] = []
    for m in marks:
        idx = m.offset if m.anchor == ANCHOR_START else n - 1 - m.offset
        if 0 <= idx < n:
            located.append((idx, m.case))
    located.sort(key=lambda pair: pair[0])
    chars = list(text)
    for k, (idx, case) in enumerate(located):
        end = located[k + 1][0] if k + 1 < len(located) else n
        for p in range(idx, end):
            chars[p] = _raise_char(chars[p]) if case == CASE_UPPER else fold_char(chars[p])
    return "".join(chars)


def build_rule(form: str, lemma: str) -> LemmaRule:
    """Construct the lemma generation rule mapping form to lemma."""
    if not form or not lemma:
        raise ValueError("form and lemma must be non-empty")
    f = fold(form)
    l = fold(lemma)
    anchor = longest_common_substring(f, l)
    if anchor is None:
        return LemmaRule(kind="literal", literal_lemma=lemma)
    fa, la, length = anchor
    prefix = EditScript(tuple(shortest_edit_script(f[:fa], l[:la])), fa)
    suffix = EditScript(
        tuple(shortest_edit_script(f[fa + length :], l[la + length :])),
        len(f) - fa - length,
    )
    rule = LemmaRule(
        kind="edit",
        prefix=prefix,
        suffix=suffix,
        casing=tuple(encode_casing(lemma)),
    )
    # characters without a 1:1 fold/raise pair (sharp s, Kelvin sign,
    # titlecase digraphs) defeat the casing script; fall back to a literal
    # class so construction + application always reproduces the lemma
    if apply_rule(rule, form) != lemma:
        return LemmaRule(kind="literal", literal_lemma=lemma)
    return rule


def apply_rule(rule: LemmaRule, form: str) -> str:
    """Apply a rule to a form; raises RuleApplicationError on a mismatch."""
    if rule.kind == "literal":
        return rule.literal_lemma or ""
    assert rule.prefix is not None and rule.suffix is not None
    f = fold(form)
    p, s = rule.prefix.src_len, rule.suffix.src_len
    if p + s > len(f):
        raise RuleApplicationError(
            f"rule consumes {p}+{s} chars but form {form!r} has only {len(f)}"
        )
    core = rule.prefix.apply(f[:p]) + f[p : len(f) - s] + rule.suffix.apply(f[len(f) - s :])
    return _apply_casing(rule.casing, core)
