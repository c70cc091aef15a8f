"""The simulated VASP: reads a run directory, validates the deck, runs the toy
physics and writes OUTCAR/CONTCAR in VASP layout.

Mode dispatch, first match wins:

* ``IMAGES > 0``: NEB over numbered image directories ``00 .. NN``
* ``ICHARG = 11`` or line-mode KPOINTS: band structure from fixtures
* ``NSW > 0`` with IBRION 1/2/3: ionic relaxation
* otherwise: single-point energy

Exit status is 0 exactly when the outcome is ``ConvergedOk``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from matagent.errors import (
    CellMismatch,
    CellTooSmall,
    MissingInputFile,
    NumericalBlowup,
    ParseError,
    SpeciesMismatch,
)
from matagent.sim import outcar_writer as ow
from matagent.sim.bands import effective_gap, eigenvalue_rows, load_band_fixtures
from matagent.sim.neb import check_compatible, run_neb
from matagent.sim.potential import ToyPotentialParams, check_cell, energy_forces_cartesian, pressure
from matagent.sim.registry import (
    NEB_CELL_CONSISTENCY,
    CrossStepContext,
    TagRegistry,
    Violation,
    effective_ibrion,
    validate_deck,
)
from matagent.sim.relax import ConvergenceCriteria, relax_structure
from matagent.vasp_files.incar import IncarDocument, parse_incar
from matagent.vasp_files.kpoints import LINE, parse_kpoints
from matagent.vasp_files.outcar import format_nebef
from matagent.vasp_files.poscar import parse_poscar, write_poscar
from matagent.vasp_files.potcar import is_ordered_subsequence, parse_potcar

log = logging.getLogger(__name__)

CONVERGED_OK = "ConvergedOk"
NOT_CONVERGED = "NotConverged"
VALIDATION_FAILED = "ValidationFailed"
CRASHED = "Crashed"

DEFAULT_FORCE_TOL = 0.05  # eV/A, used when EDIFFG is not a negative force criterion
DEFAULT_POTIM = 0.5
TOY_BULK_MODULUS = 1.0  # eV/A^3, sets the size of the ISIF>=3 cell step
MAX_CELL_STRAIN = 0.02


@dataclass
class SimOutcome:
    status: str
    mode: str = ""
    final_structure: Optional[object] = None
    energy_trace: list = field(default_factory=list)
    files_written: list = field(default_factory=list)
    rule_ids: list = field(default_factory=list)
    reason: str = ""
    notes: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.status == CONVERGED_OK else 1

    def summary(self) -> str:
        parts = [f"status: {self.status}", f"mode: {self.mode or '-'}"]
        if self.energy_trace:
            parts.append(f"final energy: {self.energy_trace[-1]:.8f} eV")
            parts.append(f"energy evaluations recorded: {len(self.energy_trace)}")
        if self.rule_ids:
            parts.append("violated rules: " + ", ".join(self.rule_ids))
        if self.reason:
            parts.append("reason: " + self.reason)
        parts += [f"note: {n}" for n in self.notes]
        return "\n".join(parts) + "\n"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "mode": self.mode,
            "final_energy": self.energy_trace[-1] if self.energy_trace else None,
            "n_energies": len(self.energy_trace),
            "files_written": list(self.files_written),
            "rule_ids": list(self.rule_ids),
            "reason": self.reason,
            "notes": list(self.notes),
        }


def default_potential() -> ToyPotentialParams:
    return ToyPotentialParams.from_yaml(resources.files("matagent.sim") / "data" / "toy_potential.yaml")


def _read(path: Path) -> str:
    if not path.is_file():
        raise MissingInputFile(f"{path.name} not found in {path.parent}")
    return path.read_text()


def criteria_from_incar(incar: IncarDocument) -> ConvergenceCriteria:
    ediffg = incar.get("EDIFFG")
    force_tol = -float(ediffg) if isinstance(ediffg, (int, float)) and ediffg < 0 else DEFAULT_FORCE_TOL
    nsw = incar.get("NSW", 0)
    potim = incar.get("POTIM", DEFAULT_POTIM)
    ib = effective_ibrion(incar)
    return ConvergenceCriteria(
        force_tol=force_tol,
        max_ionic_steps=max(int(nsw), 0) if isinstance(nsw, int) else 0,
        step_size=float(potim) if isinstance(potim, (int, float)) and potim > 0 else DEFAULT_POTIM,
        ibrion=ib if ib is not None else -1,
    )


class SimulatedBackend:
    def __init__(self, registry=None, potential=None, band_fixtures=None):
        self.registry = registry or TagRegistry.default()
        self.potential = potential or default_potential()
        self.band_fixtures = band_fixtures if band_fixtures is not None else load_band_fixtures()

    # -- entry point ------------------------------------------------------

    def run(self, working_dir) -> SimOutcome:
        wd = Path(working_dir)
        incar_text = _read(wd / "INCAR")
        try:
            incar = parse_incar(incar_text)
        except ParseError as exc:
            return self._reject(wd, None, None, [Violation("incar_syntax", None, str(exc))])

        images = incar.get("IMAGES", 0)
        if isinstance(images, int) and images > 0:
            return self._run_neb(wd, incar, images)

        poscar_text = _read(wd / "POSCAR")
        kpoints_text = _read(wd / "KPOINTS")
        potcar_text = _read(wd / "POTCAR")
        problems = []
        structure = kpoints = None
        try:
            structure = parse_poscar(poscar_text)
        except ParseError as exc:
            problems.append(Violation("poscar_syntax", None, str(exc)))
        try:
            kpoints = parse_kpoints(kpoints_text)
        except ParseError as exc:
            problems.append(Violation("kpoints_syntax", None, str(exc)))
        problems += self._potcar_problems(potcar_text, structure)
        report = validate_deck(incar, self.registry)
        problems = report.violations + problems
        if problems:
            return self._reject(wd, incar, structure, problems)

        try:
            check_cell(structure, self.potential)
            if incar.get("ICHARG") == 11 or kpoints.mode == LINE:
                return self._run_bands(wd, incar, structure, kpoints)
            crit = criteria_from_incar(incar)
            if crit.max_ionic_steps > 0 and crit.ibrion != -1:
                return self._run_relax(wd, incar, structure, crit)
            return self._run_static(wd, incar, structure)
        except (CellTooSmall, NumericalBlowup) as exc:
            return self._crash(wd, incar, structure, str(exc))

    # -- helpers ------------------------------------------------------------

    def _potcar_problems(self, text, structure):
        try:
            info = parse_potcar(text)
        except ParseError as exc:
            return [Violation("potcar_syntax", None, str(exc))]
        if structure is not None and not is_ordered_subsequence(structure.species, info.elements):
            return [Violation("potcar_order", None,
                              f"POSCAR species {structure.species} do not follow POTCAR order "
                              f"{list(info.elements)}")]
        return []

    def _write(self, wd: Path, name: str, text: str, outcome: SimOutcome):
        path = wd / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        outcome.files_written.append(name)

    def _reject(self, wd, incar, structure, violations):
        outcome = SimOutcome(VALIDATION_FAILED, mode="validation")
        outcome.rule_ids = []
        for v in violations:
            if v.rule_id not in outcome.rule_ids:
                outcome.rule_ids.append(v.rule_id)
        outcome.reason = "; ".join(
            f"[{v.rule_id}] {v.tag + ': ' if v.tag else ''}{v.message}" for v in violations
        )
        lines = ow.header(incar, structure) + ow.error("\n".join(
            f"[{v.rule_id}] {v.tag + ': ' if v.tag else ''}{v.message}" for v in violations))
        self._write(wd, "OUTCAR", ow.render(lines), outcome)
        return outcome

    def _crash(self, wd, incar, structure, reason):
        outcome = SimOutcome(CRASHED, reason=reason)
        lines = ow.header(incar, structure) + ow.error(reason)
        self._write(wd, "OUTCAR", ow.render(lines), outcome)
        return outcome

    def _energy_forces(self, structure):
        return energy_forces_cartesian(structure.cartesian(), structure.cell, structure.symbols,
                                       self.potential)

    # -- modes ----------------------------------------------------------------

    def _run_static(self, wd, incar, structure):
        outcome = SimOutcome(CONVERGED_OK, mode="static", final_structure=structure)
        energy, forces = self._energy_forces(structure)
        outcome.energy_trace = [energy]
        lines = ow.header(incar, structure, "static") + ow.ionic_step(1, structure.cartesian(), forces, energy)
        lines += ow.converged()
        self._write(wd, "OUTCAR", ow.render(lines), outcome)
        self._write(wd, "CONTCAR", write_poscar(structure), outcome)
        return outcome

    def _run_bands(self, wd, incar, structure, kpoints):
        key = structure.reduced_formula()
        fixture = self.band_fixtures.get(key) or self.band_fixtures.get(structure.comment.split()[0]
                                                                        if structure.comment else "")
        if fixture is None:
            return self._crash(wd, incar, structure, f"no band-structure fixture for {key}")
        outcome = SimOutcome(CONVERGED_OK, mode="bands", final_structure=structure)
        energy, forces = self._energy_forces(structure)
        outcome.energy_trace = [energy]
        gap = effective_gap(fixture, incar)
        if gap != fixture.gap_ev:
            outcome.notes.append("hybrid functional tags missing: semilocal gap model applied")
        rows, fermi = eigenvalue_rows(fixture, gap, kpoints.n_kpoints)
        lines = ow.header(incar, structure, "bands") + ow.ionic_step(1, structure.cartesian(), forces, energy)
        lines += ow.eigenvalues(rows, fermi) + ow.converged()
        self._write(wd, "OUTCAR", ow.render(lines), outcome)
        return outcome

    def _run_relax(self, wd, incar, structure, crit):
        if crit.ibrion not in (1, 2, 3):
            return self._crash(wd, incar, structure,
                               f"IBRION={crit.ibrion} is not supported by the simulated backend "
                               "(ionic relaxation needs IBRION 1, 2 or 3)")
        steps = []

        # record every accepted configuration for the OUTCAR
        result = relax_structure(structure, self.potential, crit)
        final = result.structure
        trace = list(result.trace)
        outcome = SimOutcome(CONVERGED_OK if result.converged else NOT_CONVERGED, mode="relax")
        if not result.converged:
            outcome.reason = (f"max force {result.max_force:.4f} eV/A above {crit.force_tol} "
                              f"after {len(trace) - 1} ionic steps")

        isif = incar.get("ISIF", 2)
        if isinstance(isif, int) and isif >= 3:
            p = pressure(final, self.potential)
            strain = float(np.clip(p / TOY_BULK_MODULUS, -MAX_CELL_STRAIN, MAX_CELL_STRAIN))
            final = final.copy()
            frac = final.fractional()
            final.lattice = final.lattice * (1.0 + strain)
            final = final.with_fractional(frac)
            outcome.notes.append(
                f"ISIF={isif}: ions relaxed with the toy relaxer; cell then rescaled once "
                f"by {1 + strain:.6f} from the virial pressure")
            energy, forces = self._energy_forces(final)
            trace.append(energy)
            steps.append((final.cartesian(), forces, energy))
        outcome.final_structure = final
        outcome.energy_trace = trace

        lines = ow.header(incar, structure, "relax")
        initial_e, initial_f = self._energy_forces(structure)
        lines += ow.ionic_step(1, structure.cartesian(), initial_f, initial_e)
        n = 1
        if len(result.trace) > 1:
            relaxed_e, relaxed_f = self._energy_forces(result.structure)
            # intermediate steps are summarised by their energies
            for e in result.trace[1:-1]:
                n += 1
                lines += ["", f"  step {n:5d}", ow.TOTEN_LINE.format(energy=e)]
            n += 1
            lines += ow.ionic_step(n, result.structure.cartesian(), relaxed_f, relaxed_e)
        for cart, forces, energy in steps:
            n += 1
            lines += ow.ionic_step(n, cart, forces, energy)
        if result.converged:
            lines += ow.converged()
        self._write(wd, "OUTCAR", ow.render(lines), outcome)
        self._write(wd, "CONTCAR", write_poscar(final), outcome)
        return outcome

    def _run_neb(self, wd, incar, n_images):
        names = [f"{i:02d}" for i in range(n_images + 2)]
        kpoints_text = _read(wd / "KPOINTS")
        potcar_text = _read(wd / "POTCAR")
        structures = []
        problems = []
        for name in names:
            try:
                structures.append(parse_poscar(_read(wd / name / "POSCAR")))
            except ParseError as exc:
                problems.append(Violation("poscar_syntax", None, f"{name}/POSCAR: {exc}"))
        try:
            parse_kpoints(kpoints_text)
        except ParseError as exc:
            problems.append(Violation("kpoints_syntax", None, str(exc)))
        problems += self._potcar_problems(potcar_text, structures[0] if structures else None)

        prior = []
        for name in (names[0], names[-1]):
            path = wd / name / "INCAR"
            if path.is_file():
                try:
                    prior.append(parse_incar(path.read_text()))
                except ParseError:
                    pass
        report = validate_deck(incar, self.registry, CrossStepContext(tuple(prior)))
        problems = report.violations + problems
        if not problems:
            try:
                for s in structures[1:]:
                    check_compatible(structures[0], s)
            except (CellMismatch, SpeciesMismatch) as exc:
                rule = NEB_CELL_CONSISTENCY if isinstance(exc, CellMismatch) else "neb_species"
                problems.append(Violation(rule, None, str(exc)))
        if problems:
            return self._reject(wd, incar, structures[0] if structures else None, problems)

        crit = criteria_from_incar(incar)
        if crit.ibrion not in (1, 2, 3):
            return self._crash(wd, incar, structures[0],
                               f"NEB needs an optimiser (IBRION 1, 2 or 3), got IBRION={crit.ibrion}")
        spring = abs(float(incar.get("SPRING", -5.0)))
        climb = incar.get("LCLIMB", False) is True
        try:
            result = run_neb(structures[1:-1], (structures[0], structures[-1]), self.potential, crit,
                             spring_const=spring, climb=climb)
        except (CellTooSmall, NumericalBlowup) as exc:
            return self._crash(wd, incar, structures[0], str(exc))

        outcome = SimOutcome(CONVERGED_OK if result.converged else NOT_CONVERGED, mode="neb")
        if not result.converged:
            outcome.reason = f"band not converged after {result.n_steps} steps"
        outcome.energy_trace = [e for _, e in result.band]
        top = int(np.argmax(outcome.energy_trace[1:-1])) + 1
        outcome.final_structure = result.band[top][0]
        for name, (s, energy) in zip(names, result.band):
            _, true_forces = self._energy_forces(s)
            lines = ow.header(incar, s, "neb image " + name)
            lines += ow.ionic_step(1, s.cartesian(), true_forces, energy)
            if result.converged:
                lines += ow.converged()
            self._write(wd, f"{name}/OUTCAR", ow.render(lines), outcome)
            if name not in (names[0], names[-1]):
                self._write(wd, f"{name}/CONTCAR", write_poscar(s), outcome)
        self._write(wd, "nebef.dat", format_nebef(result.image_forces, outcome.energy_trace), outcome)
        outcome.notes.append(f"NEB: {result.n_steps} steps, barrier {result.barrier_ev:.6f} eV, "
                             f"climbing image {result.climbing_index}")
        return outcome


def run_simulation(working_dir, registry=None, potential=None, band_fixtures=None) -> SimOutcome:
    return SimulatedBackend(registry, potential, band_fixtures).run(working_dir)
