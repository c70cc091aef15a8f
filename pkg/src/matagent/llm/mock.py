"""Scripted, deterministic stand-in for an LLM provider.

Script files are plain text split into blocks by header lines::

    === sr_params ===            every call of template sr_params
    === sr_params #1 ===         only its second call (indices start at 0)
    === Cu_vac/sr_params ===     calls made while running entry Cu_vac
    === default ===              anything not matched above

A block's answer is the text up to the next header, with leading and
trailing blank lines removed. Lines before the first header are ignored.
Lookup order for call ``k`` of template ``t`` in scope ``s``: ``s/t #k``,
``s/t``, ``t #k``, ``t``, ``default``.
"""

from __future__ import annotations

import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from matagent.errors import ProviderError
from matagent.llm.client import LlmRequest, LlmResponse

HEADER = re.compile(r"^===\s*(?:(?P<scope>[^/\s#]+)/)?(?P<tpl>[^\s#/]+)\s*(?:#\s*(?P<idx>\d+))?\s*===\s*$")
ANY = None


@dataclass(frozen=True)
class MockScript:
    # (scope or None, template_id, index or None) -> answer
    entries: dict = field(default_factory=dict)
    default_answer: Optional[str] = None

    @classmethod
    def parse(cls, text: str) -> "MockScript":
        entries = {}
        default = None
        key, body = None, []

        def flush():
            nonlocal default
            if key is None:
                return
            answer = "\n".join(body).strip("\n")
            if key == "default":
                default = answer
            elif key in entries:
                raise ValueError(f"duplicate mock script block {key}")
            else:
                entries[key] = answer

        for lineno, line in enumerate(text.splitlines(), start=1):
            if line.startswith("==="):
                m = HEADER.match(line)
                if m is None:
                    raise ValueError(f"mock script line {lineno}: malformed header {line!r}")
                flush()
                tpl, scope, idx = m.group("tpl"), m.group("scope"), m.group("idx")
                if tpl == "default" and scope is None and idx is None:
                    key = "default"
                else:
                    key = (scope, tpl, int(idx) if idx is not None else ANY)
                body = []
            else:
                body.append(line)
        flush()
        return cls(entries, default)

    @classmethod
    def from_file(cls, path) -> "MockScript":
        with open(path) as fh:
            return cls.parse(fh.read())

    def lookup(self, template_id: str, index: int, scope: str = "") -> str:
        scope = scope or None
        keys = []
        if scope:
            keys += [(scope, template_id, index), (scope, template_id, ANY)]
        keys += [(None, template_id, index), (None, template_id, ANY)]
        for k in keys:
            if k in self.entries:
                return self.entries[k]
        if self.default_answer is not None:
            return self.default_answer
        where = f" in scope {scope!r}" if scope else ""
        raise ProviderError(f"mock script has no answer for {template_id} #{index}{where}")


class MockClient:
    """Per-run scripted client; invocation counters are per template id."""

    def __init__(self, script: MockScript, scope: str = ""):
        self.script = script
        self.scope = scope
        self.counts = Counter()
        self.calls = []
        self._lock = threading.Lock()

    def for_run(self, scope: str) -> "MockClient":
        return MockClient(self.script, scope)

    def complete(self, req: LlmRequest) -> LlmResponse:
        scope = req.scope or self.scope
        with self._lock:
            index = self.counts[req.template_id]
            self.counts[req.template_id] += 1
            self.calls.append((req.template_id, index))
        text = self.script.lookup(req.template_id, index, scope)
        return LlmResponse(text, {"mock": True, "template_id": req.template_id, "index": index})
