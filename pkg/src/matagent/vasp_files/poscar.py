"""POSCAR / CONTCAR reading and writing (VASP 5 layout only)."""

from __future__ import annotations

import math

import numpy as np

from matagent.errors import (
    CountMismatch,
    InvalidStructure,
    MalformedLattice,
    MissingSpeciesLine,
    ParseError,
    UnknownCoordinateMode,
)
from matagent.vasp_files.structure import CARTESIAN, DIRECT, CrystalStructure

_FLAG_CHARS = {"T": True, "F": False}


def _float(token, exc, what, lineno):
    try:
        value = float(token)
    except ValueError:
        raise exc(f"{what}: cannot read {token!r} as a number", lineno) from None
    if not math.isfinite(value):
        raise exc(f"{what}: non-finite value {token!r}", lineno)
    return value


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_poscar(text: str) -> CrystalStructure:
    if not text or not text.strip():
        raise ParseError("empty POSCAR")
    lines = text.splitlines()
    if len(lines) < 8:
        raise MalformedLattice(f"POSCAR needs at least 8 lines, got {len(lines)}")

    comment = lines[0].strip()

    tokens = lines[1].split()
    if not tokens:
        raise MalformedLattice("missing scale factor", 2)
    scale = _float(tokens[0], MalformedLattice, "scale", 2)
    if scale <= 0:
        raise MalformedLattice("scale factor must be positive (volume form unsupported)", 2)

    lattice = []
    for lineno in (3, 4, 5):
        tokens = lines[lineno - 1].split()
        if len(tokens) < 3:
            raise MalformedLattice("lattice vector needs three components", lineno)
        lattice.append([_float(t, MalformedLattice, "lattice", lineno) for t in tokens[:3]])
    lattice = np.array(lattice)
    if abs(np.linalg.det(scale * lattice)) <= 1e-10:
        raise MalformedLattice("lattice vectors are linearly dependent")

    species = lines[5].split()
    if not species:
        raise MissingSpeciesLine("missing species line", 6)
    if _is_number(species[0]):
        raise MissingSpeciesLine(
            "species symbols missing (VASP 4 layout); add an element line before the counts", 6
        )

    count_tokens = lines[6].split()
    try:
        counts = [int(t) for t in count_tokens]
    except ValueError:
        raise CountMismatch(f"atom counts must be integers: {lines[6].strip()!r}", 7) from None
    if len(counts) != len(species):
        raise CountMismatch(f"{len(species)} species but {len(counts)} counts", 7)
    if any(c <= 0 for c in counts):
        raise CountMismatch("atom counts must be positive", 7)
    n_atoms = sum(counts)

    idx = 7
    selective = False
    if lines[idx].strip()[:1] in ("S", "s"):
        selective = True
        idx += 1
        if idx >= len(lines):
            raise UnknownCoordinateMode("missing coordinate mode line", idx + 1)
    mode_char = lines[idx].strip()[:1]
    if mode_char in ("D", "d"):
        mode = DIRECT
    elif mode_char in ("C", "c", "K", "k"):
        mode = CARTESIAN
    else:
        raise UnknownCoordinateMode(f"unknown coordinate mode {lines[idx].strip()!r}", idx + 1)
    idx += 1

    coord_lines = lines[idx:idx + n_atoms]
    if len(coord_lines) < n_atoms:
        raise CountMismatch(f"{n_atoms} atoms declared but {len(coord_lines)} coordinate rows")
    positions = np.empty((n_atoms, 3))
    flags = np.ones((n_atoms, 3), dtype=bool) if selective else None
    for i, line in enumerate(coord_lines):
        lineno = idx + i + 1
        tokens = line.split()
        if len(tokens) < 3:
            raise CountMismatch(f"{n_atoms} atoms declared but row {i + 1} is not a coordinate", lineno)
        positions[i] = [_float(t, ParseError, "coordinate", lineno) for t in tokens[:3]]
        if selective:
            if len(tokens) < 6 or any(t[:1].upper() not in _FLAG_CHARS for t in tokens[3:6]):
                raise ParseError("selective dynamics row needs three T/F flags", lineno)
            flags[i] = [_FLAG_CHARS[t[:1].upper()] for t in tokens[3:6]]

    try:
        return CrystalStructure(
            comment=comment,
            scale=scale,
            lattice=lattice,
            species=species,
            counts=counts,
            positions=positions,
            coordinate_mode=mode,
            selective_flags=flags,
        )
    except InvalidStructure as exc:
        raise ParseError(str(exc)) from None


def _row(values):
    return "".join(f"{v:22.16f}" for v in values)


def write_poscar(s: CrystalStructure) -> str:
    s.validate()
    width = max(len(sym) for sym in s.species)
    width = max(width, max(len(str(c)) for c in s.counts)) + 2
    out = [
        " ".join(s.comment.splitlines()) if s.comment else "",
        f"{s.scale:22.16f}",
        *(_row(vec) for vec in s.lattice),
        "".join(f"{sym:>{width}}" for sym in s.species),
        "".join(f"{c:>{width}d}" for c in s.counts),
    ]
    if s.selective_flags is not None:
        out.append("Selective dynamics")
    out.append(s.coordinate_mode)
    for i, pos in enumerate(s.positions):
        row = _row(pos)
        if s.selective_flags is not None:
            row += "".join("  T" if f else "  F" for f in s.selective_flags[i])
        out.append(row)
    return "\n".join(out) + "\n"


def read_poscar(path) -> CrystalStructure:
    with open(path) as fh:
        return parse_poscar(fh.read())
