"""Ionic relaxation by damped steepest descent with backtracking.

Each accepted step moves atoms along the force scaled by the current step
factor (A^2/eV). A step that raises the energy is rejected and retried with
half the factor, so the energy trace never increases. After an accepted step
the factor grows by 10%, capped at four times its starting value.

IBRION=2 starts from ``step_size``; IBRION=1 starts from half of it. That is
the only difference between the two flavours here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from matagent.errors import NumericalBlowup
from matagent.sim.potential import ToyPotentialParams, check_cell, energy_forces_cartesian
from matagent.vasp_files.structure import CrystalStructure

MAX_DISPLACEMENT = 0.2  # A per atom per step
MIN_STEP = 1e-12


@dataclass(frozen=True)
class ConvergenceCriteria:
    force_tol: float = 0.05
    max_ionic_steps: int = 100
    step_size: float = 0.5
    ibrion: int = 2

    def __post_init__(self):
        if not self.force_tol > 0:
            raise ValueError("force_tol must be positive")
        if self.max_ionic_steps < 0:
            raise ValueError("max_ionic_steps must be >= 0")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")


@dataclass
class RelaxResult:
    structure: CrystalStructure
    trace: list
    converged: bool
    max_force: float
    forces: np.ndarray

    @property
    def energy(self) -> float:
        return self.trace[-1]


def max_force(forces, mask=None) -> float:
    if mask is not None:
        forces = np.where(mask, forces, 0.0)
    if len(forces) == 0:
        return 0.0
    return float(np.max(np.linalg.norm(forces, axis=1)))


def _cap(disp):
    norms = np.linalg.norm(disp, axis=1)
    biggest = norms.max() if len(norms) else 0.0
    if biggest > MAX_DISPLACEMENT:
        disp = disp * (MAX_DISPLACEMENT / biggest)
    return disp


def relax_structure(s: CrystalStructure, p: ToyPotentialParams, crit: ConvergenceCriteria) -> RelaxResult:
    check_cell(s, p)
    cell, symbols = s.cell, s.symbols
    mask = s.movable_mask()

    def evaluate(x):
        e, f = energy_forces_cartesian(x, cell, symbols, p)
        if not np.isfinite(e):
            raise NumericalBlowup("non-finite energy")
        return e, np.where(mask, f, 0.0)

    x = s.cartesian()
    energy, forces = evaluate(x)
    trace = [energy]
    start = crit.step_size * (0.5 if crit.ibrion == 1 else 1.0)
    alpha = start

    for _ in range(crit.max_ionic_steps):
        if max_force(forces) <= crit.force_tol:
            break
        while True:
            trial = x + _cap(alpha * forces)
            e_new, f_new = evaluate(trial)
            if e_new <= energy:
                break
            alpha *= 0.5
            if alpha < MIN_STEP:
                # no downhill step along the force; give up without moving
                final = s.copy() if len(trace) == 1 else s.with_cartesian(x)
                return RelaxResult(final, trace, False, max_force(forces), forces)
        x, energy, forces = trial, e_new, f_new
        trace.append(energy)
        alpha = min(alpha * 1.1, 4 * start)

    fmax = max_force(forces)
    final = s.copy() if len(trace) == 1 else s.with_cartesian(x)
    return RelaxResult(final, trace, fmax <= crit.force_tol, fmax, forces)
