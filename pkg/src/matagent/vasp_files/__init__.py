"""Readers and writers for VASP-convention input and output files."""

from matagent.vasp_files.incar import IncarDocument, IncarEntry, TagValue, parse_incar, write_incar
from matagent.vasp_files.kpoints import KpointsSpec, LabeledKpoint, parse_kpoints, write_kpoints
from matagent.vasp_files.outcar import (
    DEFAULT_PATTERNS,
    ExtractionPattern,
    NebSummary,
    OutcarSummary,
    band_gap_from_eigenvalues,
    extract_outcar_summary,
    extract_quantities,
    parse_nebef,
)
from matagent.vasp_files.poscar import parse_poscar, read_poscar, write_poscar
from matagent.vasp_files.potcar import PotcarInfo, parse_potcar
from matagent.vasp_files.structure import CrystalStructure

__all__ = [
    "CrystalStructure",
    "DEFAULT_PATTERNS",
    "ExtractionPattern",
    "IncarDocument",
    "IncarEntry",
    "KpointsSpec",
    "LabeledKpoint",
    "NebSummary",
    "OutcarSummary",
    "PotcarInfo",
    "TagValue",
    "band_gap_from_eigenvalues",
    "extract_outcar_summary",
    "extract_quantities",
    "parse_incar",
    "parse_kpoints",
    "parse_nebef",
    "parse_poscar",
    "parse_potcar",
    "read_poscar",
    "write_incar",
    "write_kpoints",
    "write_poscar",
]
