"""Benchmark entries on disk.

Each entry is a directory holding ``entry.yaml`` and the input files::

    id: si_bulk
    task_type: SR
    request: Relax bulk silicon.
    inputs: {POSCAR: POSCAR, KPOINTS: KPOINTS, POTCAR: POTCAR}   # role -> file
    labels: {reference: POSCAR_ref}

Labels by task type: SR ``reference`` (file with the reference structure),
BS ``band_gap``, AE ``e_ads``, TS ``delta_e`` and ``barrier`` (all eV).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from matagent.errors import EmptyBenchmark, ManifestParseError, ParseError
from matagent.scoring.tasks import AE, BS, SR, TASK_TYPES, TS
from matagent.vasp_files.poscar import parse_poscar

log = logging.getLogger(__name__)

ENTRY_FILE = "entry.yaml"
REQUIRED_ROLES = {
    SR: ("POSCAR", "KPOINTS", "POTCAR"),
    BS: ("POSCAR", "KPOINTS", "POTCAR"),
    AE: ("POSCAR_gas", "POSCAR_surface", "POSCAR_adsorbate", "KPOINTS", "POTCAR"),
    TS: ("POSCAR_initial", "POSCAR_final", "KPOINTS", "POTCAR"),
}
LABEL_KEYS = {SR: ("reference",), BS: ("band_gap",), AE: ("e_ads",), TS: ("delta_e", "barrier")}


@dataclass(frozen=True)
class BenchEntry:
    id: str
    task_type: str
    request: str
    inputs: dict  # role -> file content
    labels: dict  # SR: reference POSCAR text; others: floats

    def reference(self) -> dict:
        return dict(self.labels)


def _read_input(base: Path, name: str, what: str) -> str:
    path = (base / str(name)).resolve()
    if base.resolve() not in path.parents:
        raise ManifestParseError(f"{what} {name!r} points outside the entry directory")
    if not path.is_file():
        raise ManifestParseError(f"{what} file {name!r} not found")
    return path.read_text()


def load_entry(directory) -> BenchEntry:
    base = Path(directory)
    try:
        data = yaml.safe_load((base / ENTRY_FILE).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ManifestParseError(f"{base.name}: cannot read {ENTRY_FILE}: {exc}") from None
    if not isinstance(data, dict):
        raise ManifestParseError(f"{base.name}: {ENTRY_FILE} is not a mapping")
    try:
        entry_id, task_type = str(data["id"]), data["task_type"]
        request, inputs, labels = str(data["request"]), data["inputs"], data["labels"]
    except KeyError as exc:
        raise ManifestParseError(f"{base.name}: missing field {exc}") from None
    if task_type not in TASK_TYPES:
        raise ManifestParseError(f"{entry_id}: task_type must be one of {TASK_TYPES}, got {task_type!r}")
    if not isinstance(inputs, dict) or not isinstance(labels, dict):
        raise ManifestParseError(f"{entry_id}: inputs and labels must be mappings")
    missing = [r for r in REQUIRED_ROLES[task_type] if r not in inputs]
    if missing:
        raise ManifestParseError(f"{entry_id}: inputs lack roles {missing}")
    files = {role: _read_input(base, name, "input") for role, name in inputs.items()}

    parsed = {}
    for key in LABEL_KEYS[task_type]:
        if key not in labels:
            raise ManifestParseError(f"{entry_id}: labels lack {key!r}")
        if task_type == SR:
            text = _read_input(base, labels[key], "reference")
            try:
                parse_poscar(text)
            except ParseError as exc:
                raise ManifestParseError(f"{entry_id}: reference structure unreadable: {exc}") from None
            parsed[key] = text
        else:
            try:
                value = float(labels[key])
            except (TypeError, ValueError):
                raise ManifestParseError(f"{entry_id}: label {key!r} is not a number") from None
            if not math.isfinite(value):
                raise ManifestParseError(f"{entry_id}: label {key!r} is not finite")
            parsed[key] = value
    return BenchEntry(entry_id, task_type, request, files, parsed)


def load_benchmark(directory, tasks=TASK_TYPES) -> tuple:
    """Entries of the requested task types, sorted by id, plus skip notices.

    A malformed entry is skipped with a warning; a benchmark with no usable
    entry raises :class:`EmptyBenchmark`.
    """
    root = Path(directory)
    if not root.is_dir():
        raise EmptyBenchmark(f"benchmark directory {root} does not exist")
    entries, skipped = [], []
    for sub in sorted(p for p in root.iterdir() if (p / ENTRY_FILE).is_file()):
        try:
            entry = load_entry(sub)
        except ManifestParseError as exc:
            log.warning("skipping benchmark entry: %s", exc)
            skipped.append(f"{sub.name}: {exc}")
            continue
        if entry.task_type in tasks:
            entries.append(entry)
    ids = [e.id for e in entries]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ManifestParseError(f"duplicate entry ids {dupes}")
    if not entries:
        raise EmptyBenchmark(f"no usable entries for tasks {list(tasks)} in {root}")
    return sorted(entries, key=lambda e: e.id), skipped


def bundled_data():
    """Root of the fixtures shipped with the package (toy benchmark, mock scripts)."""
    return Path(str(resources.files("matagent") / "data"))
