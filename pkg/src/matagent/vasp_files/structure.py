from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from matagent.errors import InvalidStructure

DIRECT = "Direct"
CARTESIAN = "Cartesian"


@dataclass(eq=False)
class CrystalStructure:
    """Periodic cell with species and positions, as stored in a POSCAR.

    ``positions`` are interpreted according to ``coordinate_mode``: fractional
    for Direct, Cartesian Angstrom (before applying ``scale``) for Cartesian.
    Direct coordinates are kept exactly as given; use :meth:`wrapped` to fold
    them into [0, 1).
    """

    comment: str
    scale: float
    lattice: np.ndarray
    species: list[str]
    counts: list[int]
    positions: np.ndarray
    coordinate_mode: str = DIRECT
    selective_flags: Optional[np.ndarray] = None

    def __post_init__(self):
        self.lattice = np.array(self.lattice, dtype=float).reshape(3, 3)
        self.positions = np.array(self.positions, dtype=float).reshape(-1, 3)
        self.species = list(self.species)
        self.counts = [int(c) for c in self.counts]
        if self.selective_flags is not None:
            self.selective_flags = np.array(self.selective_flags, dtype=bool).reshape(-1, 3)
        self.validate()

    def validate(self):
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise InvalidStructure(f"scale must be positive, got {self.scale}")
        if not np.all(np.isfinite(self.lattice)):
            raise InvalidStructure("lattice contains non-finite values")
        if abs(np.linalg.det(self.cell)) <= 1e-10:
            raise InvalidStructure("lattice is singular")
        if len(self.species) != len(self.counts):
            raise InvalidStructure("species and counts differ in length")
        if any(c <= 0 for c in self.counts):
            raise InvalidStructure("atom counts must be positive")
        if len(self.positions) != sum(self.counts):
            raise InvalidStructure(
                f"{len(self.positions)} positions for {sum(self.counts)} atoms"
            )
        if not np.all(np.isfinite(self.positions)):
            raise InvalidStructure("positions contain non-finite values")
        if self.coordinate_mode not in (DIRECT, CARTESIAN):
            raise InvalidStructure(f"unknown coordinate mode {self.coordinate_mode!r}")
        if self.selective_flags is not None and self.selective_flags.shape != self.positions.shape:
            raise InvalidStructure("selective flags do not match positions")

    @property
    def n_atoms(self) -> int:
        return int(sum(self.counts))

    @property
    def cell(self) -> np.ndarray:
        """Lattice rows in Angstrom with the scale factor applied."""
        return self.scale * self.lattice

    @property
    def volume(self) -> float:
        return float(abs(np.linalg.det(self.cell)))

    @property
    def symbols(self) -> list[str]:
        out = []
        for sym, n in zip(self.species, self.counts):
            out.extend([sym] * n)
        return out

    def fractional(self) -> np.ndarray:
        if self.coordinate_mode == DIRECT:
            return self.positions.copy()
        return np.linalg.solve(self.cell.T, (self.scale * self.positions).T).T

    def cartesian(self) -> np.ndarray:
        if self.coordinate_mode == DIRECT:
            return self.positions @ self.cell
        return self.scale * self.positions

    def movable_mask(self) -> np.ndarray:
        """N x 3 booleans, True where a coordinate may move."""
        if self.selective_flags is None:
            return np.ones_like(self.positions, dtype=bool)
        return self.selective_flags.copy()

    def heights(self) -> np.ndarray:
        """Perpendicular distances between opposite cell faces."""
        cell = self.cell
        vol = abs(np.linalg.det(cell))
        return np.array([
            vol / np.linalg.norm(np.cross(cell[(i + 1) % 3], cell[(i + 2) % 3]))
            for i in range(3)
        ])

    def with_cartesian(self, cart) -> "CrystalStructure":
        """Copy with new Cartesian positions, stored in this structure's mode."""
        cart = np.asarray(cart, dtype=float).reshape(-1, 3)
        if self.coordinate_mode == DIRECT:
            pos = np.linalg.solve(self.cell.T, cart.T).T
        else:
            pos = cart / self.scale
        return replace(self, positions=pos, lattice=self.lattice.copy())

    def with_fractional(self, frac) -> "CrystalStructure":
        frac = np.asarray(frac, dtype=float).reshape(-1, 3)
        if self.coordinate_mode == DIRECT:
            return replace(self, positions=frac.copy(), lattice=self.lattice.copy())
        return self.with_cartesian(frac @ self.cell)

    def wrapped(self) -> "CrystalStructure":
        frac = self.fractional()
        frac = frac - np.floor(frac)
        frac[frac >= 1.0] -= 1.0
        return self.with_fractional(frac)

    def copy(self) -> "CrystalStructure":
        flags = None if self.selective_flags is None else self.selective_flags.copy()
        return replace(self, lattice=self.lattice.copy(), positions=self.positions.copy(),
                       selective_flags=flags)

    def reduced_formula(self) -> str:
        from math import gcd
        from functools import reduce

        totals: dict[str, int] = {}
        for sym, n in zip(self.species, self.counts):
            totals[sym] = totals.get(sym, 0) + n
        g = reduce(gcd, totals.values())
        return "".join(f"{s}{n // g if n // g > 1 else ''}" for s, n in totals.items())

    def equals(self, other: "CrystalStructure", atol: float = 0.0) -> bool:
        if not isinstance(other, CrystalStructure):
            return False
        if (self.comment, self.species, self.counts, self.coordinate_mode) != (
            other.comment, other.species, other.counts, other.coordinate_mode
        ):
            return False
        if (self.selective_flags is None) != (other.selective_flags is None):
            return False
        if self.selective_flags is not None and not np.array_equal(
            self.selective_flags, other.selective_flags
        ):
            return False
        return (
            abs(self.scale - other.scale) <= atol
            and np.allclose(self.lattice, other.lattice, rtol=0, atol=atol)
            and np.allclose(self.positions, other.positions, rtol=0, atol=atol)
        )
