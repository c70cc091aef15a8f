"""Pattern-based extraction from OUTCAR-style output text.

Matching is line oriented and tolerant of unrelated lines; for repeated
numeric quantities the last occurrence (final ionic step) wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from matagent.errors import MissingRequiredQuantity, NoEigenvalues, ParseError

REAL, INT, TEXT, FLAG = "Real", "Int", "Text", "Flag"

FLOAT = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"

TOTEN_LINE = "  free  energy   TOTEN  =  {energy:18.8f} eV"
CONVERGED_LINE = " reached required accuracy - stopping structural energy minimisation"
FERMI_LINE = " E-fermi : {fermi:10.4f}     XC(G=0):  -0.0000     alpha+bet : -0.0000"


@dataclass(frozen=True)
class ExtractionPattern:
    name: str
    pattern: str
    capture_type: str = REAL
    required: bool = True

    def __post_init__(self):
        if self.capture_type not in (REAL, INT, TEXT, FLAG):
            raise ValueError(f"unknown capture type {self.capture_type!r}")
        compiled = re.compile(self.pattern, re.MULTILINE)
        if self.capture_type != FLAG and compiled.groups < 1:
            raise ValueError(f"pattern {self.name!r} needs a capture group")

    @property
    def regex(self):
        return re.compile(self.pattern, re.MULTILINE)

    def optional(self) -> "ExtractionPattern":
        return ExtractionPattern(self.name, self.pattern, self.capture_type, False)

    def find_all(self, text: str) -> list:
        if self.capture_type == FLAG:
            return [True for _ in self.regex.finditer(text)]
        out = []
        for m in self.regex.finditer(text):
            raw = m.group(1)
            if self.capture_type == REAL:
                out.append(float(raw))
            elif self.capture_type == INT:
                out.append(int(raw))
            else:
                out.append(raw.strip())
        return out


TOTEN = ExtractionPattern(
    "final_energy", rf"free\s+energy\s+TOTEN\s*=\s*({FLOAT})\s*eV", REAL
)
CONVERGED = ExtractionPattern(
    "converged", r"reached required accuracy - stopping structural energy minimisation", FLAG
)
EFERMI = ExtractionPattern("fermi_energy", rf"E-fermi\s*:\s*({FLOAT})", REAL, required=False)

DEFAULT_PATTERNS = (TOTEN, CONVERGED, EFERMI)
PATTERN_LIBRARY = {p.name: p for p in DEFAULT_PATTERNS}


def extract_quantities(text: str, patterns) -> dict:
    """Apply each pattern; last match wins.

    A required pattern without a match raises
    :class:`MissingRequiredQuantity`; an optional one is left out of the
    result.
    """
    found = {}
    for p in patterns:
        values = p.find_all(text)
        if values:
            found[p.name] = values[-1]
        elif p.required:
            raise MissingRequiredQuantity(p.name)
    return found


@dataclass
class OutcarSummary:
    final_energy_ev: float
    converged: bool
    n_ionic_steps: int
    max_force_ev_per_a: Optional[float] = None
    fermi_energy_ev: Optional[float] = None
    # rows of (kpoint_index, band_index, energy_ev, occupancy), 0-based indices
    eigenvalue_table: Optional[list] = None
    extras: dict = field(default_factory=dict)


_KPOINT_RE = re.compile(r"^\s*k-point\s+(\d+)\s*:")
_EIG_ROW_RE = re.compile(rf"^\s*(\d+)\s+({FLOAT})\s+({FLOAT})\s*$")
_FORCE_HEAD_RE = re.compile(r"POSITION\s+TOTAL-FORCE")
_DASHES_RE = re.compile(r"^\s*-{10,}\s*$")
_FORCE_ROW_RE = re.compile(rf"^\s*{FLOAT}\s+{FLOAT}\s+{FLOAT}\s+({FLOAT})\s+({FLOAT})\s+({FLOAT})\s*$")


def _eigenvalue_table(lines):
    table = None
    kpoint = None
    for line in lines:
        if EFERMI.regex.search(line):
            table, kpoint = [], None
            continue
        if table is None:
            continue
        m = _KPOINT_RE.match(line)
        if m:
            kpoint = int(m.group(1)) - 1
            continue
        m = _EIG_ROW_RE.match(line)
        if m and kpoint is not None:
            table.append((kpoint, int(m.group(1)) - 1, float(m.group(2)), float(m.group(3))))
    return table or None


def _last_max_force(lines):
    max_force = None
    state = None  # None -> outside, "head" -> saw header, "rows" -> inside block
    rows = []
    for line in lines:
        if _FORCE_HEAD_RE.search(line):
            state, rows = "head", []
            continue
        if state is None:
            continue
        if _DASHES_RE.match(line):
            if state == "head":
                state = "rows"
            else:
                if rows:
                    max_force = float(np.max(np.linalg.norm(np.array(rows), axis=1)))
                state = None
            continue
        if state == "rows":
            m = _FORCE_ROW_RE.match(line)
            if m:
                rows.append([float(g) for g in m.groups()])
    return max_force


def extract_outcar_summary(text: str, patterns=DEFAULT_PATTERNS) -> OutcarSummary:
    names = {p.name for p in patterns}
    if not {"final_energy", "converged"} <= names:
        raise ValueError("patterns must include 'final_energy' and 'converged'")
    energy_pattern = next(p for p in patterns if p.name == "final_energy")
    energies = energy_pattern.find_all(text)
    if not energies:
        raise MissingRequiredQuantity("final_energy", "no TOTEN line found: the run did not finish")

    others = [p.optional() for p in patterns if p.name != "final_energy"]
    found = extract_quantities(text, others)
    lines = text.splitlines()
    extras = {k: v for k, v in found.items() if k not in ("converged", "fermi_energy")}
    return OutcarSummary(
        final_energy_ev=energies[-1],
        converged=bool(found.get("converged", False)),
        n_ionic_steps=len(energies) - 1,
        max_force_ev_per_a=_last_max_force(lines),
        fermi_energy_ev=found.get("fermi_energy"),
        eigenvalue_table=_eigenvalue_table(lines),
        extras=extras,
    )


def band_gap_from_eigenvalues(summary: OutcarSummary, tol: float = 1e-9):
    """Return ``(gap_ev, direct)`` from the eigenvalue table.

    A band with states on both sides of the Fermi level makes the system a
    metal: ``(0.0, False)``.
    """
    table = summary.eigenvalue_table
    if not table:
        raise NoEigenvalues("OUTCAR has no eigenvalue table")
    if summary.fermi_energy_ev is None:
        raise NoEigenvalues("OUTCAR has no Fermi energy")
    ef = summary.fermi_energy_ev
    arr = np.array([(k, b, e) for k, b, e, _ in table], dtype=float)
    kidx, bidx, energy = arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2]

    for b in np.unique(bidx):
        e = energy[bidx == b]
        if e.min() <= ef < e.max():
            return 0.0, False

    occupied = energy <= ef
    if not occupied.any() or occupied.all():
        raise NoEigenvalues("cannot locate both valence and conduction states")
    vbm = energy[occupied].max()
    cbm = energy[~occupied].min()
    vbm_k = set(kidx[occupied & (energy >= vbm - tol)])
    cbm_k = set(kidx[~occupied & (energy <= cbm + tol)])
    gap = max(float(cbm - vbm), 0.0)
    return gap, bool(vbm_k & cbm_k)


@dataclass(frozen=True)
class NebSummary:
    energies: tuple
    forces: tuple

    @property
    def barrier_ev(self) -> float:
        return max(self.energies) - self.energies[0]

    @property
    def delta_e_ev(self) -> float:
        return self.energies[-1] - self.energies[0]


_NEBEF_ROW_RE = re.compile(rf"^\s*(\d+)\s+({FLOAT})\s+({FLOAT})\s+({FLOAT})\s*$")


def parse_nebef(text: str) -> NebSummary:
    """Read the per-image ``index force energy relative_energy`` table."""
    rows = []
    for line in text.splitlines():
        m = _NEBEF_ROW_RE.match(line)
        if m:
            rows.append((int(m.group(1)), float(m.group(2)), float(m.group(3))))
    if len(rows) < 2:
        raise ParseError("NEB energy table needs at least the two endpoints")
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ParseError("NEB energy table has missing or repeated images")
    return NebSummary(tuple(r[2] for r in rows), tuple(r[1] for r in rows))


def format_nebef(forces, energies) -> str:
    e0 = energies[0]
    return "".join(
        f"{i:4d} {f:16.8f} {e:16.8f} {e - e0:16.8f}\n"
        for i, (f, e) in enumerate(zip(forces, energies))
    )
