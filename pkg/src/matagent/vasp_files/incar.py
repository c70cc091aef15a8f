"""INCAR documents: ordered ``TAG = value`` entries with lexical value typing.

Values are typed by their shape alone (no tag schema), so the parser accepts
tags it has never heard of; checking tags against a registry happens in the
simulated backend.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from matagent.errors import DuplicateTag, MalformedLine

BOOL, INT, REAL, INT_LIST, REAL_LIST, TEXT = "Bool", "Int", "Real", "IntList", "RealList", "Text"

_TRUE = {".TRUE.", ".T.", "T", "TRUE"}
_FALSE = {".FALSE.", ".F.", "F", "FALSE"}
_INT_RE = re.compile(r"[+-]?\d+\Z")
_REAL_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eEdD][+-]?\d+)?\Z")
_TAG_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


def _token_kind(token):
    if _INT_RE.match(token):
        return INT
    if _REAL_RE.match(token) and math.isfinite(_to_float(token)):
        return REAL
    return None


def _to_float(token):
    return float(token.replace("d", "e").replace("D", "e"))


def _format_real(x):
    text = repr(float(x))
    if _token_kind(text) != REAL:  # e.g. "1e+16" is fine, guard anything exotic
        raise ValueError(f"cannot serialize real {x!r}")
    return text


@dataclass(frozen=True)
class TagValue:
    kind: str
    value: Union[bool, int, float, tuple, str]

    def __post_init__(self):
        k, v = self.kind, self.value
        if k == BOOL:
            ok = isinstance(v, bool)
        elif k == INT:
            ok = isinstance(v, int) and not isinstance(v, bool)
        elif k == REAL:
            ok = isinstance(v, float) and math.isfinite(v)
        elif k == INT_LIST:
            ok = (isinstance(v, tuple) and len(v) >= 2
                  and all(isinstance(x, int) and not isinstance(x, bool) for x in v))
        elif k == REAL_LIST:
            ok = (isinstance(v, tuple) and len(v) >= 2
                  and all(isinstance(x, float) and math.isfinite(x) for x in v))
        elif k == TEXT:
            # text must stay text when re-read, otherwise write/parse is lossy
            ok = (isinstance(v, str) and v == v.strip() and v != ""
                  and not any(c in v for c in "#!;") and len(v.splitlines()) == 1
                  and _lexical(v)[0] == TEXT)
        else:
            raise ValueError(f"unknown tag value kind {k!r}")
        if not ok:
            raise ValueError(f"invalid {k} value {v!r}")

    @classmethod
    def of(cls, value) -> "TagValue":
        """Wrap a plain Python value."""
        if isinstance(value, TagValue):
            return value
        if isinstance(value, bool):
            return cls(BOOL, value)
        if isinstance(value, int):
            return cls(INT, value)
        if isinstance(value, float):
            return cls(REAL, value)
        if isinstance(value, (list, tuple)):
            if all(isinstance(x, int) and not isinstance(x, bool) for x in value):
                return cls(INT_LIST, tuple(value))
            return cls(REAL_LIST, tuple(float(x) for x in value))
        if isinstance(value, str):
            return cls(TEXT, value.strip())
        raise TypeError(f"unsupported INCAR value {value!r}")

    @property
    def python(self):
        if self.kind in (INT_LIST, REAL_LIST):
            return list(self.value)
        return self.value

    def is_numeric(self) -> bool:
        return self.kind in (INT, REAL)

    def as_float(self) -> float:
        if not self.is_numeric():
            raise TypeError(f"{self.kind} value is not a scalar number")
        return float(self.value)

    def serialize(self) -> str:
        k, v = self.kind, self.value
        if k == BOOL:
            return ".TRUE." if v else ".FALSE."
        if k == INT:
            return str(v)
        if k == REAL:
            return _format_real(v)
        if k == INT_LIST:
            return " ".join(str(x) for x in v)
        if k == REAL_LIST:
            return " ".join(_format_real(x) for x in v)
        return v


def _lexical(raw):
    if raw.upper() in _TRUE:
        return BOOL, True
    if raw.upper() in _FALSE:
        return BOOL, False
    tokens = raw.split()
    kinds = [_token_kind(t) for t in tokens]
    if len(tokens) == 1:
        if kinds[0] == INT:
            return INT, int(tokens[0])
        if kinds[0] == REAL:
            return REAL, _to_float(tokens[0])
    elif tokens and all(kinds):
        if all(k == INT for k in kinds):
            return INT_LIST, tuple(int(t) for t in tokens)
        return REAL_LIST, tuple(_to_float(t) for t in tokens)
    return TEXT, raw


def classify(raw: str) -> TagValue:
    """Type a raw value string by its lexical shape."""
    return TagValue(*_lexical(raw.strip()))


@dataclass(frozen=True)
class IncarEntry:
    tag: str
    value: TagValue
    source_line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class IncarDocument:
    entries: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for e in self.entries:
            if e.tag in seen:
                raise DuplicateTag(f"tag {e.tag} appears more than once", e.source_line or None)
            seen.add(e.tag)

    @classmethod
    def from_dict(cls, mapping) -> "IncarDocument":
        return cls(tuple(
            IncarEntry(tag.upper(), TagValue.of(v), i + 1)
            for i, (tag, v) in enumerate(mapping.items())
        ))

    def __contains__(self, tag) -> bool:
        return any(e.tag == tag.upper() for e in self.entries)

    def __iter__(self) -> Iterator[IncarEntry]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def entry(self, tag):
        tag = tag.upper()
        for e in self.entries:
            if e.tag == tag:
                return e
        return None

    def value(self, tag):
        """The :class:`TagValue` for ``tag`` or None."""
        e = self.entry(tag)
        return None if e is None else e.value

    def get(self, tag, default=None):
        """Plain Python value for ``tag``."""
        v = self.value(tag)
        return default if v is None else v.python

    def tags(self) -> list[str]:
        return [e.tag for e in self.entries]

    def to_dict(self) -> dict:
        return {e.tag: e.value.python for e in self.entries}

    def with_tag(self, tag, value) -> "IncarDocument":
        tag = tag.upper()
        value = TagValue.of(value)
        entries = [IncarEntry(e.tag, value if e.tag == tag else e.value, e.source_line)
                   for e in self.entries]
        if tag not in self:
            entries.append(IncarEntry(tag, value, len(entries) + 1))
        return IncarDocument(tuple(entries))

    def without(self, tag) -> "IncarDocument":
        tag = tag.upper()
        return IncarDocument(tuple(e for e in self.entries if e.tag != tag))


def _strip_comment(line):
    cut = len(line)
    for ch in "#!":
        pos = line.find(ch)
        if pos != -1:
            cut = min(cut, pos)
    return line[:cut]


def parse_incar(text: str) -> IncarDocument:
    entries = []
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line)
        for part in body.split(";"):
            if not part.strip():
                continue
            if "=" not in part:
                raise MalformedLine(f"expected 'TAG = value', got {part.strip()!r}", lineno)
            tag, _, raw = part.partition("=")
            tag = tag.strip()
            if not _TAG_RE.match(tag):
                raise MalformedLine(f"invalid tag name {tag!r}", lineno)
            if not raw.strip():
                raise MalformedLine(f"tag {tag.upper()} has no value", lineno)
            tag = tag.upper()
            if tag in seen:
                raise DuplicateTag(
                    f"tag {tag} already set on line {seen[tag]}", lineno
                )
            seen[tag] = lineno
            entries.append(IncarEntry(tag, classify(raw), lineno))
    return IncarDocument(tuple(entries))


def write_incar(doc: IncarDocument) -> str:
    if not doc.entries:
        return ""
    return "".join(f"{e.tag} = {e.value.serialize()}\n" for e in doc.entries)


def read_incar(path) -> IncarDocument:
    with open(path) as fh:
        return parse_incar(fh.read())
