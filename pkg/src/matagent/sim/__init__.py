"""Deterministic stand-in for VASP: deck validation, toy pair-potential
physics and OUTCAR/CONTCAR emission."""

from matagent.sim.backend import (
    CONVERGED_OK,
    CRASHED,
    NOT_CONVERGED,
    VALIDATION_FAILED,
    SimOutcome,
    SimulatedBackend,
    run_simulation,
)
from matagent.sim.neb import NebResult, check_compatible, neb_interpolate, run_neb
from matagent.sim.potential import ToyPotentialParams, toy_energy_forces
from matagent.sim.registry import CrossStepContext, TagRegistry, ValidationReport, Violation, validate_deck
from matagent.sim.relax import ConvergenceCriteria, RelaxResult, relax_structure

__all__ = [
    "CONVERGED_OK",
    "CRASHED",
    "NOT_CONVERGED",
    "VALIDATION_FAILED",
    "ConvergenceCriteria",
    "CrossStepContext",
    "NebResult",
    "RelaxResult",
    "SimOutcome",
    "SimulatedBackend",
    "TagRegistry",
    "ToyPotentialParams",
    "ValidationReport",
    "Violation",
    "check_compatible",
    "neb_interpolate",
    "relax_structure",
    "run_neb",
    "run_simulation",
    "toy_energy_forces",
    "validate_deck",
]
