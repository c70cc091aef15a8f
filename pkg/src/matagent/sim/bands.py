"""Fixture-driven band structures.

A pair potential has no electrons, so band-structure runs read the reference
gap of the material from a fixture table and emit a consistent eigenvalue
table. A deck lacking the hybrid tags for a material whose reference needs
them gets the gap scaled by ``SEMILOCAL_GAP_FACTOR``. That factor is a
harness convention for separating good decks from bad ones, nothing more.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

SEMILOCAL_GAP_FACTOR = 0.6
VBM_ENERGY = 5.2  # eV, exactly representable at the printed precision
N_VALENCE = 4
N_CONDUCTION = 4
BAND_WIDTH = 0.8
BAND_SPACING = 1.3


@dataclass(frozen=True)
class BandFixture:
    id: str
    gap_ev: float
    direct: bool
    vbm_k: int
    cbm_k: int
    method: str = "hse"


def parse_band_fixtures(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (5, 6) or parts[2] not in ("direct", "indirect"):
            raise ValueError(f"band fixture line {lineno}: expected "
                             "'id gap direct|indirect vbm_k cbm_k [method]'")
        fx = BandFixture(parts[0], float(parts[1]), parts[2] == "direct",
                         int(parts[3]), int(parts[4]), parts[5] if len(parts) == 6 else "hse")
        out[fx.id] = fx
    return out


def load_band_fixtures(path=None) -> dict:
    if path is None:
        text = (resources.files("matagent.sim") / "data" / "bandgaps.dat").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return parse_band_fixtures(text)


def has_hybrid_tags(incar) -> bool:
    return incar.get("LHFCALC") is True and "AEXX" in incar


def effective_gap(fixture: BandFixture, incar) -> float:
    if fixture.method == "hse" and not has_hybrid_tags(incar):
        return fixture.gap_ev * SEMILOCAL_GAP_FACTOR
    return fixture.gap_ev


def eigenvalue_rows(fixture: BandFixture, gap: float, n_kpoints: int):
    """Rows of (k, band, energy, occupancy) with the band edges at the
    fixture's k indices (folded into range) and E-fermi at the VBM."""
    nk = max(int(n_kpoints), 1)
    vk = fixture.vbm_k % nk
    if fixture.direct:
        ck = vk
    else:
        ck = fixture.cbm_k % nk
        if ck == vk and nk > 1:
            ck = (vk + nk // 2) % nk

    def bump(k, k0):
        return BAND_WIDTH * (1 - math.cos(math.pi * (k - k0) / nk))

    rows = []
    cbm = VBM_ENERGY + gap
    for k in range(nk):
        for b in range(N_VALENCE):
            depth = (N_VALENCE - 1 - b) * BAND_SPACING
            rows.append((k, b, VBM_ENERGY - depth - bump(k, vk), 2.0))
        for j in range(N_CONDUCTION):
            rows.append((k, N_VALENCE + j, cbm + j * BAND_SPACING + bump(k, ck), 0.0))
    return rows, VBM_ENERGY
