"""Pairwise 12-6 potential with a smooth switch to zero at the cutoff.

The switch is a C2 quintic applied between ``switch_start * cutoff`` and
``cutoff``; inside that radius the bare Lennard-Jones form is untouched, so
the dimer minimum stays at 2**(1/6) * sigma as long as that lies below the
switching region.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import yaml

from matagent.errors import CellTooSmall, NumericalBlowup
from matagent.vasp_files.structure import CrystalStructure

_SHIFTS = np.array(list(itertools.product((-1, 0, 1), repeat=3)), dtype=float)


@dataclass(frozen=True)
class ToyPotentialParams:
    pair_epsilon: float = 0.1
    pair_sigma: float = 2.0
    cutoff: float = 5.0
    switch_start: float = 0.85
    # {("Cu", "Cu"): (epsilon, sigma)}; keys are stored sorted
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        fixed = {tuple(sorted(k)): (float(e), float(s)) for k, (e, s) in self.overrides.items()}
        object.__setattr__(self, "overrides", fixed)
        values = [self.pair_epsilon, self.pair_sigma, self.cutoff]
        values += [v for pair in fixed.values() for v in pair]
        if any(not np.isfinite(v) or v <= 0 for v in values):
            raise ValueError("potential parameters must be positive")
        sigmas = [self.pair_sigma] + [s for _, s in fixed.values()]
        if self.cutoff < max(sigmas):
            raise ValueError("cutoff must be at least sigma")
        if not 0 < self.switch_start < 1:
            raise ValueError("switch_start must lie in (0, 1)")

    def pair(self, a: str, b: str):
        return self.overrides.get(tuple(sorted((a, b))), (self.pair_epsilon, self.pair_sigma))

    @classmethod
    def from_yaml(cls, path) -> "ToyPotentialParams":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        overrides = {}
        for key, vals in (data.get("pairs") or {}).items():
            a, b = key.split("-")
            overrides[(a, b)] = (vals["epsilon"], vals["sigma"])
        return cls(
            pair_epsilon=data.get("epsilon", cls.pair_epsilon),
            pair_sigma=data.get("sigma", cls.pair_sigma),
            cutoff=data.get("cutoff", cls.cutoff),
            switch_start=data.get("switch_start", cls.switch_start),
            overrides=overrides,
        )


def _switch(r, r_on, r_c):
    width = r_c - r_on
    t = np.clip((r - r_on) / width, 0.0, 1.0)
    s = 1 - t**3 * (10 - 15 * t + 6 * t**2)
    ds = -30 * t**2 * (1 - t) ** 2 / width
    return s, ds


def _pair_tables(symbols, params):
    """Per-pair epsilon and sigma for the upper triangle i < j."""
    kinds = sorted(set(symbols))
    index = np.array([kinds.index(x) for x in symbols])
    eps_m = np.empty((len(kinds), len(kinds)))
    sig_m = np.empty_like(eps_m)
    for a, ka in enumerate(kinds):
        for b, kb in enumerate(kinds):
            eps_m[a, b], sig_m[a, b] = params.pair(ka, kb)
    iu, ju = np.triu_indices(len(symbols), k=1)
    return iu, ju, eps_m[index[iu], index[ju]], sig_m[index[iu], index[ju]]


def pair_vectors(cart, cell, iu, ju, cutoff):
    """Nearest-image displacement i -> j for each pair, its length, and a
    mask of pairs inside the cutoff."""
    frac = np.linalg.solve(cell.T, cart.T).T
    df = frac[ju] - frac[iu]
    df -= np.round(df)
    cand = (df[:, None, :] + _SHIFTS[None, :, :]) @ cell  # (P, 27, 3)
    dist = np.linalg.norm(cand, axis=2)
    best = np.argmin(dist, axis=1)
    d = cand[np.arange(len(best)), best]
    r = dist[np.arange(len(best)), best]
    inside = r < cutoff
    return d, r, inside


def check_cell(s: CrystalStructure, params: ToyPotentialParams):
    h = s.heights().min()
    if params.cutoff >= h / 2:
        raise CellTooSmall(
            f"cutoff {params.cutoff} A is not below half the smallest cell height ({h / 2:.3f} A)"
        )


def energy_forces_cartesian(cart, cell, symbols, params, with_virial=False):
    """Energy (eV), forces (N x 3, eV/A) and optionally the virial
    sum over pairs of d (x) dE/dd, for Cartesian positions in ``cell``."""
    cart = np.asarray(cart, dtype=float)
    n = len(cart)
    forces = np.zeros((n, 3))
    virial = np.zeros((3, 3))
    if n < 2:
        return (0.0, forces, virial) if with_virial else (0.0, forces)
    iu, ju, eps, sig = _pair_tables(symbols, params)
    d, r, inside = pair_vectors(cart, cell, iu, ju, params.cutoff)
    iu, ju, eps, sig, d, r = iu[inside], ju[inside], eps[inside], sig[inside], d[inside], r[inside]
    if len(r) == 0:
        return (0.0, forces, virial) if with_virial else (0.0, forces)
    if np.any(r <= 1e-8):
        raise NumericalBlowup("two atoms occupy the same position")

    sr6 = (sig / r) ** 6
    sr12 = sr6 * sr6
    v = 4 * eps * (sr12 - sr6)
    dv = 4 * eps * (-12 * sr12 + 6 * sr6) / r
    s, ds = _switch(r, params.switch_start * params.cutoff, params.cutoff)
    energy = float(np.sum(v * s))
    de_dr = dv * s + v * ds

    # dE/d(d) = de_dr * d / r; force on j is minus that, on i plus that
    g = (de_dr / r)[:, None] * d
    np.add.at(forces, ju, -g)
    np.add.at(forces, iu, g)
    if not (np.isfinite(energy) and np.all(np.isfinite(forces))):
        raise NumericalBlowup("non-finite energy or forces")
    if with_virial:
        virial = d.T @ g
        return energy, forces, virial
    return energy, forces


def toy_energy_forces(s: CrystalStructure, p: ToyPotentialParams):
    """Energy and Cartesian forces for a periodic structure."""
    check_cell(s, p)
    return energy_forces_cartesian(s.cartesian(), s.cell, s.symbols, p)


def pressure(s: CrystalStructure, p: ToyPotentialParams) -> float:
    """Virial pressure in eV/A^3 (positive means the cell wants to expand)."""
    check_cell(s, p)
    _, _, virial = energy_forces_cartesian(s.cartesian(), s.cell, s.symbols, p, with_virial=True)
    return float(-np.trace(virial) / (3 * s.volume))
