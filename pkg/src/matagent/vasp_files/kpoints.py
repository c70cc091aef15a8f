from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from matagent.errors import MalformedMesh, ParseError, UnsupportedMode

GAMMA = "GammaCentered"
MONKHORST = "MonkhorstPack"
LINE = "ExplicitLine"


@dataclass(frozen=True)
class LabeledKpoint:
    coords: tuple
    label: str = ""


@dataclass(frozen=True)
class KpointsSpec:
    comment: str
    mode: str
    mesh: tuple = (1, 1, 1)
    shift: tuple = (0.0, 0.0, 0.0)
    line_path: Optional[tuple] = None
    points_per_segment: int = 0
    coord_system: str = "Reciprocal"

    def __post_init__(self):
        if self.mode in (GAMMA, MONKHORST):
            if len(self.mesh) != 3 or any(int(m) < 1 for m in self.mesh):
                raise ValueError(f"mesh components must be >= 1, got {self.mesh}")
        elif self.mode == LINE:
            if not self.line_path or len(self.line_path) < 2:
                raise ValueError("line mode needs at least two labeled points")
        else:
            raise ValueError(f"unknown k-point mode {self.mode!r}")

    @property
    def segments(self) -> list[tuple]:
        path = self.line_path or ()
        return [(path[i], path[i + 1]) for i in range(0, len(path) - 1, 2)]

    @property
    def n_kpoints(self) -> int:
        if self.mode == LINE:
            return self.points_per_segment * len(self.segments)
        return self.mesh[0] * self.mesh[1] * self.mesh[2]


def _floats(tokens, n, lineno, exc=MalformedMesh):
    if len(tokens) < n:
        raise exc(f"expected {n} numbers", lineno)
    out = []
    for t in tokens[:n]:
        try:
            v = float(t)
        except ValueError:
            raise exc(f"cannot read {t!r} as a number", lineno) from None
        if not math.isfinite(v):
            raise exc(f"non-finite value {t!r}", lineno)
        out.append(v)
    return tuple(out)


def _parse_labeled(line, lineno):
    body, bang, label = line.partition("!")
    tokens = body.split()
    coords = _floats(tokens, 3, lineno, ParseError)
    if bang:
        label = label.strip()
    else:
        label = " ".join(tokens[3:]).strip()
    return LabeledKpoint(coords, label)


def parse_kpoints(text: str) -> KpointsSpec:
    lines = text.splitlines()
    if len(lines) < 3:
        raise ParseError("KPOINTS needs at least three lines")
    comment = lines[0].strip()
    mode_line = lines[2].strip()
    first = mode_line[:1].upper()
    count_tokens = lines[1].split()

    if first in ("G", "M"):
        if count_tokens and count_tokens[0] != "0":
            raise UnsupportedMode("automatic mesh requires 0 on line 2", 2)
        if len(lines) < 4:
            raise MalformedMesh("missing mesh line", 4)
        tokens = lines[3].split()
        if len(tokens) < 3:
            raise MalformedMesh("mesh needs three integers", 4)
        try:
            mesh = tuple(int(t) for t in tokens[:3])
        except ValueError:
            raise MalformedMesh(f"mesh must be integers: {lines[3].strip()!r}", 4) from None
        if any(m < 1 for m in mesh):
            raise MalformedMesh("mesh components must be >= 1", 4)
        shift = (0.0, 0.0, 0.0)
        if len(lines) > 4 and lines[4].strip():
            shift = _floats(lines[4].split(), 3, 5)
        return KpointsSpec(comment, GAMMA if first == "G" else MONKHORST, mesh, shift)

    if first == "L":
        try:
            per_segment = int(count_tokens[0]) if count_tokens else 0
        except ValueError:
            raise MalformedMesh("line density must be an integer", 2) from None
        if per_segment < 1:
            raise MalformedMesh("line density must be >= 1", 2)
        if len(lines) < 4:
            raise ParseError("missing coordinate system line", 4)
        system = "Cartesian" if lines[3].strip()[:1].upper() in ("C", "K") else "Reciprocal"
        points = [
            _parse_labeled(line, i + 5)
            for i, line in enumerate(lines[4:])
            if line.strip()
        ]
        if len(points) < 2 or len(points) % 2:
            raise ParseError(f"line path needs pairs of points, got {len(points)}")
        return KpointsSpec(comment, LINE, line_path=tuple(points),
                           points_per_segment=per_segment, coord_system=system)

    raise UnsupportedMode(f"unsupported k-point mode {mode_line!r}", 3)


def write_kpoints(spec: KpointsSpec) -> str:
    comment = " ".join(spec.comment.splitlines())
    if spec.mode == LINE:
        out = [comment, str(spec.points_per_segment), "Line-mode", spec.coord_system]
        for a, b in spec.segments:
            for p in (a, b):
                row = " ".join(f"{c:.10f}" for c in p.coords)
                out.append(f"{row} ! {p.label}" if p.label else row)
            out.append("")
        return "\n".join(out[:-1]) + "\n"
    name = "Gamma" if spec.mode == GAMMA else "Monkhorst-Pack"
    return "\n".join([
        comment,
        "0",
        name,
        " ".join(str(m) for m in spec.mesh),
        " ".join(repr(float(s)) for s in spec.shift),
    ]) + "\n"
