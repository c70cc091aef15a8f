"""POTCAR handled as opaque metadata: element order plus a header digest.

No pseudopotential numerics are read. Element symbols come from the
``TITEL = PAW_PBE Si 05Jan2001`` header of each concatenated dataset.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from matagent.errors import ParseError

_TITEL_RE = re.compile(r"^\s*TITEL\s*=\s*(\S+)\s+(\S+)", re.MULTILINE)


@dataclass(frozen=True)
class PotcarInfo:
    elements: tuple
    titles: tuple
    header_sha256: str


def _element(symbol):
    # "Si_pv", "O_s", "H1.25" -> bare element symbol
    m = re.match(r"[A-Z][a-z]?", symbol)
    if not m:
        raise ParseError(f"cannot read an element from POTCAR title {symbol!r}")
    return m.group(0)


def parse_potcar(text: str) -> PotcarInfo:
    titles = [f"{m.group(1)} {m.group(2)}" for m in _TITEL_RE.finditer(text)]
    if not titles:
        raise ParseError("POTCAR contains no TITEL header lines")
    elements = tuple(_element(t.split()[1]) for t in titles)
    digest = hashlib.sha256("\n".join(titles).encode()).hexdigest()
    return PotcarInfo(elements, tuple(titles), digest)


def make_potcar_stub(elements, functional="PAW_PBE") -> str:
    """Header-only POTCAR text, enough for element-order checks."""
    blocks = []
    for el in elements:
        blocks.append(
            f"  {functional} {el} 00Jan0000\n"
            f"   TITEL  = {functional} {el} 00Jan0000\n"
            " End of Dataset\n"
        )
    return "".join(blocks)


def is_ordered_subsequence(species, elements) -> bool:
    """True when ``species`` appear in ``elements`` in the same relative order."""
    it = iter(elements)
    return all(any(sp == el for el in it) for sp in species)
